"""Seeded, tabular reproductions of the gadget experiments.

Each ``run_*`` function takes an :class:`ExperimentSpec` and returns an
:class:`ExperimentResult` whose tables are plain column lists. Results are
deterministic functions of the spec (including its seed); wall time is kept
on the result object but never written into the checksummed outputs.
"""

from __future__ import annotations

import hashlib
import io
import json
import math
import os
import re
import tempfile
import time
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, replace
from enum import Enum
from importlib import resources
from pathlib import Path
from typing import Any, Callable, Mapping, Sequence

import numpy as np
import yaml
from scipy.optimize import minimize_scalar

from . import __version__
from .encoding import (
    EncodingBundle,
    analyze_defects,
    build_encoding,
    logical_overlap,
    sine_transform,
)
from .gadgets import (
    Driver,
    GadgetConfig,
    NoiseDraw,
    build_gadget,
    build_minor_embedding_system,
    data_x_drive,
)
from .metrics import LogicalDynamics
from .pauli import (
    MINUS,
    PLUS,
    ConfigurationError,
    OperatorSum,
    Spectral,
    X,
    apply,
    index_of,
    uniform_state,
)

SCHEMA = "gadgetsim.experiment/1"


class Kind(str, Enum):
    GHZ = "ghz"
    PERTURBED_X = "perturbed-x"
    BIT_FLIP = "bit-flip"
    INFIDELITY_SWEEP = "infidelity-sweep"
    MINOR_EMBEDDING = "minor-embedding"


class SpecError(ConfigurationError):
    """Experiment spec failed to parse or validate; ``field`` names the culprit."""

    def __init__(self, field_name: str, message: str):
        super().__init__(f"{field_name}: {message}")
        self.field = field_name


@dataclass(frozen=True)
class ExperimentSpec:
    kind: Kind
    config: GadgetConfig
    time_grid: tuple[float, ...]
    gamma_grid: tuple[float, ...] | None = None
    eta_grid: tuple[float, ...] | None = None
    repetitions: int = 1
    seed: int = 0
    drive_qubit: int = 0
    corrected_drive: bool = False
    plateau_window: tuple[float, float] = (5.0, 10.0)
    ideal: bool = False

    def __post_init__(self):
        object.__setattr__(self, "kind", Kind(self.kind))
        if not self.time_grid:
            raise SpecError("time_grid", "must be non-empty")
        if any(b <= a for a, b in zip(self.time_grid, self.time_grid[1:])):
            raise SpecError("time_grid", "must be strictly increasing")
        if min(self.time_grid) < 0:
            raise SpecError("time_grid", "times must be non-negative")
        for name in ("gamma_grid", "eta_grid"):
            grid = getattr(self, name)
            if grid is not None and len(grid) == 0:
                raise SpecError(name, "must be non-empty when given")
        if self.repetitions < 1:
            raise SpecError("repetitions", "must be >= 1")
        if not 0 <= self.drive_qubit < self.config.n_d:
            raise SpecError("drive_qubit", f"must lie in [0, {self.config.n_d})")
        lo, hi = self.plateau_window
        if not lo < hi:
            raise SpecError("plateau_window", "needs start < stop")
        if self.kind is Kind.MINOR_EMBEDDING and self.eta_grid is None:
            raise SpecError("eta_grid", "required for minor-embedding runs")

    @property
    def gammas(self) -> tuple[float, ...]:
        return self.gamma_grid if self.gamma_grid is not None else (self.config.gamma,)

    def to_dict(self) -> dict:
        cfg = self.config
        out = {
            "schema": SCHEMA,
            "kind": self.kind.value,
            "config": {
                "n_d": cfg.n_d,
                "kinked": cfg.kinked,
                "gamma": cfg.gamma,
                "alpha": cfg.alpha,
                "driver": cfg.driver.value,
            },
            "time_grid": list(self.time_grid),
            "repetitions": self.repetitions,
            "seed": self.seed,
            "drive_qubit": self.drive_qubit,
            "corrected_drive": self.corrected_drive,
            "plateau_window": list(self.plateau_window),
            "ideal": self.ideal,
        }
        if self.gamma_grid is not None:
            out["gamma_grid"] = list(self.gamma_grid)
        if self.eta_grid is not None:
            out["eta_grid"] = list(self.eta_grid)
        return out


@dataclass(frozen=True)
class Table:
    columns: tuple[str, ...]
    rows: tuple[tuple[float, ...], ...]

    def column(self, name: str) -> np.ndarray:
        k = self.columns.index(name)
        return np.array([r[k] for r in self.rows], dtype=float)

    def where(self, **match: float) -> "Table":
        keys = [(self.columns.index(k), v) for k, v in match.items()]
        rows = tuple(r for r in self.rows if all(r[k] == v for k, v in keys))
        return Table(self.columns, rows)

    def to_csv(self) -> str:
        buf = io.StringIO()
        buf.write(",".join(self.columns) + "\n")
        for row in self.rows:
            buf.write(",".join(_fmt(v) for v in row) + "\n")
        return buf.getvalue()


def _fmt(v: Any) -> str:
    if isinstance(v, (bool, np.bool_)):
        return str(int(v))
    if isinstance(v, (int, np.integer)):
        return str(int(v))
    v = float(v)
    if v == 0.0:
        return "0"
    return f"{v:.12g}"


@dataclass
class ExperimentResult:
    spec: ExperimentSpec
    tables: dict[str, Table]
    wall_time: float = 0.0

    def table(self, name: str) -> Table:
        return self.tables[name]

    def files(self) -> dict[str, bytes]:
        return {f"{name}.csv": t.to_csv().encode() for name, t in sorted(self.tables.items())}

    def manifest(self) -> dict:
        files = self.files()
        return {
            "schema": SCHEMA,
            "version": __version__,
            "seed": self.spec.seed,
            "spec": self.spec.to_dict(),
            "files": {name: hashlib.sha256(data).hexdigest() for name, data in files.items()},
        }


# -- spec files ---------------------------------------------------------------

_TOP_FIELDS = {
    "schema", "kind", "config", "time_grid", "gamma_grid", "eta_grid", "repetitions",
    "seed", "drive_qubit", "corrected_drive", "plateau_window", "ideal",
}
_CONFIG_FIELDS = {"n_d", "kinked", "gamma", "alpha", "driver"}
_GRID_FIELDS = {"start", "stop", "num"}
_LOG_GRID_FIELDS = {"logspace", "start", "stop", "num"}
_PI_EXPR = re.compile(r"^\s*([+-]?\d*\.?\d*)\s*\*?\s*pi\s*(?:/\s*(\d+(?:\.\d*)?))?\s*$")

_DEFAULT_REPETITIONS = {Kind.MINOR_EMBEDDING: 10}


def _number(value: Any, where: str) -> float:
    if isinstance(value, bool):
        raise SpecError(where, "expected a number, got a boolean")
    if isinstance(value, (int, float)):
        out = float(value)
    elif isinstance(value, str):
        m = _PI_EXPR.match(value)
        if m is None:
            try:
                out = float(value)
            except ValueError:
                raise SpecError(where, f"cannot read {value!r} as a number") from None
        else:
            scale = m.group(1)
            scale = 1.0 if scale in ("", "+") else -1.0 if scale == "-" else float(scale)
            out = scale * math.pi / (float(m.group(2)) if m.group(2) else 1.0)
    else:
        raise SpecError(where, f"expected a number, got {type(value).__name__}")
    if not math.isfinite(out):
        raise SpecError(where, "must be finite")
    return out


def _grid(value: Any, where: str) -> tuple[float, ...]:
    if isinstance(value, Mapping):
        keys = set(value)
        if "logspace" in keys:
            _check_keys(value, _LOG_GRID_FIELDS, where, required=_LOG_GRID_FIELDS)
            if value["logspace"] is not True:
                raise SpecError(f"{where}.logspace", "must be true when present")
            start = _number(value["start"], f"{where}.start")
            stop = _number(value["stop"], f"{where}.stop")
            if start <= 0 or stop <= 0:
                raise SpecError(where, "logspace bounds must be positive")
            pts = np.geomspace(start, stop, _count(value["num"], f"{where}.num"))
        else:
            _check_keys(value, _GRID_FIELDS, where, required=_GRID_FIELDS)
            pts = np.linspace(
                _number(value["start"], f"{where}.start"),
                _number(value["stop"], f"{where}.stop"),
                _count(value["num"], f"{where}.num"),
            )
        return tuple(float(p) for p in pts)
    if isinstance(value, (list, tuple)):
        return tuple(_number(v, f"{where}[{k}]") for k, v in enumerate(value))
    raise SpecError(where, "expected a list or a {start, stop, num} mapping")


def _count(value: Any, where: str) -> int:
    if isinstance(value, bool) or not isinstance(value, int) or value < 1:
        raise SpecError(where, "expected a positive integer")
    return value


def _check_keys(data: Mapping, allowed: set, where: str, required: set = frozenset()):
    unknown = sorted(set(data) - allowed)
    if unknown:
        raise SpecError(f"{where}.{unknown[0]}" if where else unknown[0], "unknown field")
    missing = sorted(required - set(data))
    if missing:
        raise SpecError(f"{where}.{missing[0]}" if where else missing[0], "missing required field")


def _bool(value: Any, where: str) -> bool:
    if not isinstance(value, bool):
        raise SpecError(where, "expected true or false")
    return value


def spec_from_dict(data: Mapping) -> ExperimentSpec:
    """Validate a parsed spec document (fail-closed on unknown fields)."""
    if not isinstance(data, Mapping):
        raise SpecError("<root>", "spec must be a mapping")
    _check_keys(data, _TOP_FIELDS, "", required={"schema", "kind", "config", "time_grid"})
    if data["schema"] != SCHEMA:
        raise SpecError("schema", f"expected {SCHEMA!r}, got {data['schema']!r}")
    try:
        kind = Kind(data["kind"])
    except ValueError:
        raise SpecError("kind", f"unknown experiment kind {data['kind']!r}") from None

    raw_cfg = data["config"]
    if not isinstance(raw_cfg, Mapping):
        raise SpecError("config", "expected a mapping")
    _check_keys(raw_cfg, _CONFIG_FIELDS, "config", required={"n_d"})
    n_d = raw_cfg["n_d"]
    if isinstance(n_d, bool) or not isinstance(n_d, int):
        raise SpecError("config.n_d", "expected an integer")
    try:
        driver = Driver(raw_cfg.get("driver", Driver.FIVE_BODY.value))
    except ValueError:
        raise SpecError("config.driver", f"unknown driver {raw_cfg['driver']!r}") from None
    try:
        config = GadgetConfig(
            n_d=n_d,
            kinked=_bool(raw_cfg.get("kinked", False), "config.kinked"),
            gamma=_number(raw_cfg.get("gamma", 8.0), "config.gamma"),
            alpha=_number(raw_cfg.get("alpha", 1.0), "config.alpha"),
            driver=driver,
        )
    except SpecError:
        raise
    except ConfigurationError as exc:
        raise SpecError("config", str(exc)) from None

    kwargs: dict[str, Any] = {
        "kind": kind,
        "config": config,
        "time_grid": _grid(data["time_grid"], "time_grid"),
        "repetitions": _DEFAULT_REPETITIONS.get(kind, 1),
    }
    for name in ("gamma_grid", "eta_grid"):
        if name in data:
            kwargs[name] = _grid(data[name], name)
    if "repetitions" in data:
        kwargs["repetitions"] = _count(data["repetitions"], "repetitions")
    if "seed" in data:
        seed = data["seed"]
        if isinstance(seed, bool) or not isinstance(seed, int) or seed < 0:
            raise SpecError("seed", "expected a non-negative integer")
        kwargs["seed"] = seed
    if "drive_qubit" in data:
        dq = data["drive_qubit"]
        if isinstance(dq, bool) or not isinstance(dq, int):
            raise SpecError("drive_qubit", "expected an integer")
        kwargs["drive_qubit"] = dq
    for name in ("corrected_drive", "ideal"):
        if name in data:
            kwargs[name] = _bool(data[name], name)
    if "plateau_window" in data:
        win = _grid(data["plateau_window"], "plateau_window")
        if len(win) != 2:
            raise SpecError("plateau_window", "expected [start, stop]")
        kwargs["plateau_window"] = win
    try:
        spec = ExperimentSpec(**kwargs)
    except SpecError:
        raise
    except ConfigurationError as exc:
        raise SpecError("config", str(exc)) from None
    _validate_kind(spec)
    return spec


def _validate_kind(spec: ExperimentSpec) -> None:
    cfg = spec.config
    if not cfg.driver.is_subspace:
        raise SpecError("config.driver", "experiments need a five-body or three-body driver")
    for g in spec.gammas:
        if g < 0:
            raise SpecError("gamma_grid", "confinement strengths must be non-negative")
        # unconfined bit-flip runs (gamma = 0) skip the gadget entirely
        if spec.kind is Kind.BIT_FLIP and g == 0:
            continue
        if not g > cfg.alpha:
            raise SpecError(
                "gamma_grid" if spec.gamma_grid is not None else "config.gamma",
                f"gamma={g} must exceed alpha={cfg.alpha} for a calibrated gadget",
            )
    if spec.eta_grid is not None and min(spec.eta_grid) < 0:
        raise SpecError("eta_grid", "noise scales must be non-negative")


def load_spec(path: str | os.PathLike, seed: int | None = None) -> ExperimentSpec:
    text = Path(path).read_text()
    try:
        data = yaml.safe_load(text)
    except yaml.YAMLError as exc:
        raise SpecError("<file>", f"YAML parse error: {exc}") from None
    spec = spec_from_dict(data)
    if seed is not None:
        spec = replace(spec, seed=seed)
    return spec


def default_spec_path(kind: Kind | str) -> Path:
    name = Kind(kind).value.replace("-", "_") + ".yaml"
    return Path(str(resources.files("gadgetsim") / "specs" / name))


def default_spec(kind: Kind | str, **overrides) -> ExperimentSpec:
    spec = load_spec(default_spec_path(kind))
    return replace(spec, **overrides) if overrides else spec


# -- shared helpers -------------------------------------------------------------


def _bundle(config: GadgetConfig, gamma: float) -> EncodingBundle:
    return build_encoding(config.with_(gamma=gamma))


def _rotated(bundle: EncodingBundle, state: np.ndarray) -> np.ndarray:
    na = bundle.n_anc_states
    blocks = state.reshape(-1, na)
    return np.einsum("zba,zb->za", bundle.blocks.conj(), blocks).reshape(-1)


def dressed_x_expectations(bundle: EncodingBundle, state: np.ndarray) -> np.ndarray:
    """Dressed ``<X_i>`` (``U_enc X_i U_enc^dagger``) for every data qubit."""
    rot = _rotated(bundle, state)
    reg = bundle.register
    return np.array([np.vdot(rot, apply(X(i), rot, reg)).real for i in range(bundle.config.n_d)])


def ghz_fidelity(data_amplitudes_plus: complex, data_amplitudes_minus: complex) -> float:
    """Fidelity with the best-phased GHZ state ``(|+...+> + e^{i phi}|-...->)/sqrt 2``."""
    return 0.5 * (abs(data_amplitudes_plus) + abs(data_amplitudes_minus)) ** 2


def analytic_ghz_fidelity(alpha: float, t: float) -> float:
    """GHZ fidelity of ``|+>^n`` under ``(alpha/2)(1 - Z^n)``: ``(1 + |sin(alpha t)|) / 2``."""
    return 0.5 * (1.0 + abs(math.sin(alpha * t)))


def _map(fn: Callable, items: Sequence, workers: int) -> list:
    if workers <= 1:
        return [fn(x) for x in items]
    with ThreadPoolExecutor(max_workers=workers) as pool:
        return list(pool.map(fn, items))


# -- experiments ------------------------------------------------------------------


def run_ghz(spec: ExperimentSpec) -> ExperimentResult:
    """Dressed ``|+>^n`` under the bare gadget: GHZ fidelity and logical ``<X_i>``."""
    _require(spec, Kind.GHZ)
    start = time.perf_counter()
    cfg = spec.config
    n = cfg.n_d
    plus = uniform_state(PLUS, n)
    minus = uniform_state(MINUS, n)
    cols = ("gamma", "t", "f_ghz") + tuple(f"x{i}" for i in range(n))
    rows = []
    for gamma in spec.gammas:
        bundle = _bundle(cfg, gamma)
        if spec.ideal:
            prop = Spectral(LogicalDynamics(build_gadget(bundle.config), bundle).h_eff)
            for t in spec.time_grid:
                psi = prop.evolve(plus, t)
                f = ghz_fidelity(np.vdot(plus, psi), np.vdot(minus, psi))
                xs = [np.vdot(psi, apply(X(i), psi, n)).real for i in range(n)]
                rows.append((gamma, t, f, *xs))
            continue
        prop = Spectral(build_gadget(bundle.config), bundle.register)
        psi0 = bundle.encode(plus)
        tgt_plus, tgt_minus = psi0, bundle.encode(minus)
        for t in spec.time_grid:
            psi = prop.evolve(psi0, t)
            f = ghz_fidelity(np.vdot(tgt_plus, psi), np.vdot(tgt_minus, psi))
            rows.append((gamma, t, f, *dressed_x_expectations(bundle, psi)))
    return ExperimentResult(spec, {"ghz": Table(cols, tuple(rows))}, time.perf_counter() - start)


def two_level_x_trace(overlap: float, alpha: float, times: Sequence[float]) -> np.ndarray:
    """Logical ``<X>`` of the pseudo-spin model ``overlap * sz + (alpha/2)(1 - sx)`` from ``|up>``.

    ``sz`` is the common eigenvalue of every ``X_i`` on ``|+>^n``/``|->^n``
    and ``sx`` is the data parity, which swaps the two.
    """
    sz = np.diag([1.0, -1.0])
    sx = np.array([[0.0, 1.0], [1.0, 0.0]])
    h = overlap * sz + 0.5 * alpha * (np.eye(2) - sx)
    prop = Spectral(h)
    up = np.array([1, 0], dtype=complex)
    return np.array([np.vdot(psi, sz @ psi).real for psi in (prop.evolve(up, t) for t in times)])


def run_perturbed_x(spec: ExperimentSpec) -> ExperimentResult:
    """Gadget plus a unit physical ``X`` on one data qubit, at each confinement."""
    _require(spec, Kind.PERTURBED_X)
    start = time.perf_counter()
    cfg = spec.config
    n = cfg.n_d
    q = spec.drive_qubit
    overlap = float(sine_transform(n).ground[q])
    model = two_level_x_trace(overlap, cfg.alpha, spec.time_grid)
    plus = uniform_state(PLUS, n)
    cols = ("gamma", "t") + tuple(f"x{i}" for i in range(n)) + ("heterogeneity", "model_x")
    rows, summary = [], []
    for gamma in spec.gammas:
        bundle = _bundle(cfg, gamma)
        h = build_gadget(bundle.config) + X(q)
        prop = Spectral(h, bundle.register)
        psi0 = bundle.encode(plus)
        het, dev = [], []
        for t, m in zip(spec.time_grid, model):
            xs = dressed_x_expectations(bundle, prop.evolve(psi0, t))
            spread = float(xs.max() - xs.min())
            het.append(spread)
            dev.append(abs(xs[q] - m))
            rows.append((gamma, t, *xs, spread, m))
        summary.append((gamma, float(np.mean(het)), float(np.max(dev)), overlap))
    tables = {
        "perturbed_x": Table(cols, tuple(rows)),
        "perturbed_x_summary": Table(
            ("gamma", "mean_heterogeneity", "max_model_deviation", "logical_overlap"), tuple(summary)
        ),
    }
    return ExperimentResult(spec, tables, time.perf_counter() - start)


def _bit_flip_target(cfg: GadgetConfig, q: int) -> tuple[int, int]:
    z1 = 0
    z2 = 1 << (cfg.n_d - 1 - q)
    return z1, z2


class _BlockTrace:
    """Amplitudes of one data-word block of ``exp(-i t H) psi0``, cheap to sample."""

    def __init__(self, prop: Spectral, psi0: np.ndarray, rows: slice):
        self._energies = prop.energies
        self._weights = prop.vectors[rows, :] * (prop.vectors.conj().T @ psi0)

    def amplitudes(self, t: float) -> np.ndarray:
        return self._weights @ np.exp(-1j * t * self._energies)

    def population(self, t: float) -> float:
        return float(np.sum(np.abs(self.amplitudes(t)) ** 2))

    def populations(self, ts: np.ndarray) -> np.ndarray:
        amps = self._weights @ np.exp(-1j * np.outer(self._energies, ts))
        return np.sum(np.abs(amps) ** 2, axis=0)


def _first_peak(trace: _BlockTrace, t_max: float, samples: int = 2001) -> float:
    """First local maximum above 0.1 on a grid, refined by bounded scalar search."""
    ts = np.linspace(0.0, t_max, samples)
    ps = trace.populations(ts)
    for k in range(1, samples - 1):
        if ps[k] >= ps[k - 1] and ps[k] >= ps[k + 1] and ps[k] > 0.1:
            res = minimize_scalar(
                lambda t: -trace.population(t), bounds=(ts[k - 1], ts[k + 1]), method="bounded",
                options={"xatol": 1e-12},
            )
            return float(res.x)
    raise ConfigurationError("no population maximum found; extend the time grid")


def run_bit_flip(spec: ExperimentSpec) -> ExperimentResult:
    """Single physical ``X`` on a data qubit starting from logical ``|0...0>``.

    ``gamma = 0`` is the unconfined reference (a bare Rabi flip). For each
    confined run the first maximum of the flipped-word population is located
    and the ancilla state of that word is recorded there, normalized and
    phased so its largest amplitude is real and positive.
    """
    _require(spec, Kind.BIT_FLIP)
    start = time.perf_counter()
    cfg = spec.config
    q = spec.drive_qubit
    na = 1 << cfg.n_a
    z1, z2 = _bit_flip_target(cfg, q)
    words = analyze_defects(z2, cfg).ground_ancillae
    word_idx = [index_of(w) for w in words]
    word_names = ["a" + "".join(map(str, w)) for w in words]
    strength = 1.0
    if spec.corrected_drive:
        strength = 1.0 / logical_overlap(z1, z2, q, cfg)

    psi0 = np.zeros(1 << cfg.register.total, dtype=complex)
    psi0[z1 * na] = 1.0

    def hamiltonian(gamma: float) -> OperatorSum:
        drive = X(q, strength)
        if gamma == 0:
            return OperatorSum([drive])
        return build_gadget(cfg.with_(gamma=gamma)) + drive

    rows_z2 = slice(z2 * na, (z2 + 1) * na)

    def conditional(trace: _BlockTrace, t: float) -> np.ndarray:
        amp = trace.amplitudes(t)
        amp = amp / np.linalg.norm(amp)
        lead = int(np.argmax(np.abs(amp)))
        return amp * (abs(amp[lead]) / amp[lead])

    ref = _BlockTrace(Spectral(OperatorSum([X(q)]), cfg.register), psi0, rows_z2)
    t_ref = _first_peak(ref, math.pi)

    cols = ("gamma", "t", "pop_z1", "pop_z2", "dressed_pop_z1", "dressed_pop_z2") + tuple(word_names)
    rows, summary = [], []
    for gamma in spec.gammas:
        prop = Spectral(hamiltonian(gamma), cfg.register)
        bundle = _bundle(cfg, gamma) if gamma > 0 else None
        w1 = bundle.encode(_unit(1 << cfg.n_d, z1)) if bundle else psi0
        w2 = bundle.encode(_unit(1 << cfg.n_d, z2)) if bundle else _unit(len(psi0), z2 * na)
        for t in spec.time_grid:
            psi = prop.evolve(psi0, t)
            blocks = psi.reshape(-1, na)
            amp = blocks[z2]
            nrm = np.linalg.norm(amp)
            cond = amp / nrm if nrm > 1e-12 else np.zeros_like(amp)
            rows.append((
                gamma, t,
                float(np.sum(np.abs(blocks[z1]) ** 2)),
                float(nrm**2),
                float(abs(np.vdot(w1, psi)) ** 2),
                float(abs(np.vdot(w2, psi)) ** 2),
                *(float(abs(cond[k])) for k in word_idx),
            ))
        t_max = 3.0 * math.pi * strength_scale(strength)
        trace = _BlockTrace(prop, psi0, rows_z2)
        t_peak = _first_peak(trace, t_max)
        amps = conditional(trace, t_peak)
        summary.append((
            gamma, t_peak, trace.population(t_peak), t_peak / t_ref,
            *(float(amps[k].real) for k in word_idx),
            *(float(amps[k].imag) for k in word_idx),
        ))
    sum_cols = ("gamma", "t_peak", "peak_pop_z2", "period_ratio") + tuple(
        f"re_{w}" for w in word_names
    ) + tuple(f"im_{w}" for w in word_names)
    tables = {"bit_flip": Table(cols, tuple(rows)), "bit_flip_summary": Table(sum_cols, tuple(summary))}
    return ExperimentResult(spec, tables, time.perf_counter() - start)


def strength_scale(strength: float) -> float:
    """Search horizon multiplier for slower (weaker) effective drives."""
    return max(1.0, 1.0 / strength)


def _unit(dim: int, k: int) -> np.ndarray:
    v = np.zeros(dim, dtype=complex)
    v[k] = 1.0
    return v


def run_infidelity_sweep(spec: ExperimentSpec, workers: int = 1) -> ExperimentResult:
    """Leakage / conditional / absolute fidelity with unit X driving on every data qubit."""
    _require(spec, Kind.INFIDELITY_SWEEP)
    start = time.perf_counter()
    cfg = spec.config
    lo, hi = spec.plateau_window

    def one(gamma: float):
        bundle = _bundle(cfg, gamma)
        dyn = LogicalDynamics(build_gadget(bundle.config) + data_x_drive(bundle.config), bundle)
        pts = [dyn.point(t) for t in spec.time_grid]
        window = [p.leakage for p in pts if lo <= p.t <= hi]
        plateau = float(np.mean(window)) if window else float("nan")
        return gamma, pts, plateau

    rows, summary = [], []
    for gamma, pts, plateau in _map(one, spec.gammas, workers):
        for p in pts:
            rows.append((gamma, p.t, p.p_surv, p.leakage, p.f_cond, p.infidelity, p.f_abs))
        summary.append((gamma, plateau))
    cols = ("gamma", "t", "p_surv", "leakage", "f_cond", "infidelity", "f_abs")
    tables = {
        "infidelity_sweep": Table(cols, tuple(rows)),
        "infidelity_summary": Table(("gamma", "mean_plateau_leakage"), tuple(summary)),
    }
    return ExperimentResult(spec, tables, time.perf_counter() - start)


def noise_seed(base: int, eta_index: int, rep: int) -> tuple[int, int, int]:
    """RNG entropy for one noise draw; shared across gamma so sweeps compare like with like."""
    return (int(base), int(eta_index), int(rep))


def minor_embedding_fidelity(bundle: EncodingBundle, noise: NoiseDraw, duration: float = math.pi) -> float:
    """Overlap of ``exp(+i T H_system)`` applied to dressed ``|+>^n`` with dressed ``|->^n``."""
    cfg = bundle.config
    n = cfg.n_d
    h = build_minor_embedding_system(cfg, noise)
    psi = Spectral(h, bundle.register).evolve(bundle.encode(uniform_state(PLUS, n)), duration, sign=+1)
    return float(abs(np.vdot(bundle.encode(uniform_state(MINUS, n)), psi)) ** 2)


def run_minor_embedding(spec: ExperimentSpec, workers: int = 1) -> ExperimentResult:
    """Noisy whole-chain flip: mean and standard error of the flip fidelity on a (gamma, eta) grid.

    The pulse length is the last entry of the time grid.
    """
    _require(spec, Kind.MINOR_EMBEDDING)
    start = time.perf_counter()
    cfg = spec.config
    n = cfg.n_d
    duration = spec.time_grid[-1]
    reps = spec.repetitions

    def one(task):
        gi, ei, rep = task
        bundle = bundles[gi]
        noise = NoiseDraw.draw(n, spec.eta_grid[ei], noise_seed(spec.seed, ei, rep))
        return task, noise, minor_embedding_fidelity(bundle, noise, duration)

    bundles = [_bundle(cfg, g) for g in spec.gammas]
    tasks = [
        (gi, ei, rep)
        for gi in range(len(spec.gammas))
        for ei in range(len(spec.eta_grid))
        for rep in range(reps)
    ]
    results = sorted(_map(one, tasks, workers), key=lambda r: r[0])
    per_rep, grid = [], []
    fids: dict[tuple[int, int], list[float]] = {}
    for (gi, ei, rep), noise, f in results:
        per_rep.append((spec.gammas[gi], spec.eta_grid[ei], rep, f, *noise.g))
        fids.setdefault((gi, ei), []).append(f)
    for (gi, ei), fs in sorted(fids.items()):
        arr = np.array(fs)
        stderr = float(arr.std(ddof=1) / math.sqrt(len(arr))) if len(arr) > 1 else 0.0
        mean = float(arr.mean())
        grid.append((spec.gammas[gi], spec.eta_grid[ei], mean, stderr, 1.0 - mean, len(arr)))
    tables = {
        "minor_embedding": Table(
            ("gamma", "eta", "mean_f", "stderr_f", "mean_infidelity", "repetitions"), tuple(grid)
        ),
        "minor_embedding_reps": Table(
            ("gamma", "eta", "rep", "f") + tuple(f"g{i}" for i in range(n)), tuple(per_rep)
        ),
    }
    return ExperimentResult(spec, tables, time.perf_counter() - start)


_RUNNERS: dict[Kind, Callable[..., ExperimentResult]] = {
    Kind.GHZ: run_ghz,
    Kind.PERTURBED_X: run_perturbed_x,
    Kind.BIT_FLIP: run_bit_flip,
    Kind.INFIDELITY_SWEEP: run_infidelity_sweep,
    Kind.MINOR_EMBEDDING: run_minor_embedding,
}


def run(spec: ExperimentSpec, workers: int = 1) -> ExperimentResult:
    runner = _RUNNERS[spec.kind]
    if spec.kind in (Kind.INFIDELITY_SWEEP, Kind.MINOR_EMBEDDING):
        return runner(spec, workers=workers)
    return runner(spec)


def _require(spec: ExperimentSpec, kind: Kind) -> None:
    if spec.kind is not kind:
        raise SpecError("kind", f"expected {kind.value!r}, got {spec.kind.value!r}")


# -- output -----------------------------------------------------------------------


def write_result(result: ExperimentResult, out_dir: str | os.PathLike) -> dict:
    """Write CSVs and ``manifest.json`` atomically; returns the manifest.

    Files are staged in a temporary directory inside ``out_dir`` and renamed
    into place only once all of them are written.
    """
    out = Path(out_dir)
    out.mkdir(parents=True, exist_ok=True)
    files = result.files()
    manifest = result.manifest()
    files["manifest.json"] = (json.dumps(manifest, indent=2, sort_keys=True) + "\n").encode()
    with tempfile.TemporaryDirectory(dir=out, prefix=".staging-") as stage:
        for name, data in files.items():
            (Path(stage) / name).write_bytes(data)
        for name in files:
            os.replace(Path(stage) / name, out / name)
    return manifest
