"""Command-line front end: ``gadgetsim <subcommand> [flags]``.

Every subcommand writes to ``--out`` (atomically) or to stdout. Invalid
configurations exit with status 2 and a one-line message on stderr.
"""

from __future__ import annotations

import argparse
import json
import math
import os
import sys
import tempfile
from dataclasses import replace
from pathlib import Path

import numpy as np

from . import __version__
from . import experiments as ex
from .encoding import analyze_defects, build_encoding, logical_basis_label, sector_block, sine_transform
from .gadgets import Driver, GadgetConfig, build_chain, build_gadget, build_single_x_driver, data_x_drive
from .metrics import LogicalDynamics, UndefinedMetricError
from .pauli import GadgetSimError, OperatorSum, bits_of

EXIT_USAGE = 2


def _fmt(v: float) -> str:
    return "0" if v == 0 else f"{float(v):.12g}"


def atomic_write(path: str | os.PathLike, text: str) -> None:
    """Write ``text`` to ``path`` through a temp file in the same directory."""
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    fd, tmp = tempfile.mkstemp(dir=path.parent, prefix=f".{path.name}.")
    try:
        with os.fdopen(fd, "w") as fh:
            fh.write(text)
        os.replace(tmp, path)
    except BaseException:
        if os.path.exists(tmp):
            os.unlink(tmp)
        raise


def _emit(text: str, out: str | None) -> None:
    if out:
        atomic_write(out, text)
    else:
        sys.stdout.write(text)


def _config(args) -> GadgetConfig:
    return GadgetConfig(
        n_d=args.nd,
        kinked=args.kinked,
        gamma=args.gamma,
        alpha=args.alpha,
        driver=Driver(args.driver),
        beta_x=1.0 if args.beta is None else args.beta,
    )


def _hamiltonian(cfg: GadgetConfig) -> OperatorSum:
    if cfg.driver is Driver.SINGLE_X:
        return cfg.gamma * build_chain(cfg) + build_single_x_driver(cfg)
    return build_gadget(cfg)


def _config_record(cfg: GadgetConfig) -> dict:
    return {
        "n_d": cfg.n_d,
        "n_a": cfg.n_a,
        "kinked": cfg.kinked,
        "gamma": cfg.gamma,
        "alpha": cfg.alpha,
        "driver": cfg.driver.value,
        "beta": cfg.beta,
    }


def _dump(obj) -> str:
    return json.dumps(obj, indent=2, sort_keys=True) + "\n"


def cmd_build(args) -> int:
    cfg = _config(args)
    h = _hamiltonian(cfg)
    _emit(_dump({"config": _config_record(cfg), "terms": h.to_records()}), args.out)
    return 0


def sector_spectrum(cfg: GadgetConfig) -> tuple[list[tuple[int, int, float]], float]:
    """All ``(z, rank, energy)`` rows and the parity splitting between sector ground energies."""
    h = _hamiltonian(cfg)
    rows = []
    ground = {True: [], False: []}
    for z in range(1 << cfg.n_d):
        energies = np.linalg.eigvalsh(sector_block(h, cfg, z))
        rows.extend((z, r, float(e)) for r, e in enumerate(energies))
        ground[analyze_defects(z, cfg).satisfiable].append(energies[0])
    splitting = float(min(ground[False]) - min(ground[True]))
    return rows, splitting


def cmd_spectrum(args) -> int:
    cfg = _config(args)
    rows, splitting = sector_spectrum(cfg)
    lines = ["z,rank,energy"]
    lines += [f"{logical_basis_label(z, cfg.n_d)},{r},{_fmt(e)}" for z, r, e in rows]
    lines.append(f"# parity_splitting,{_fmt(splitting)}")
    _emit("\n".join(lines) + "\n", args.out)
    return 0


def cmd_encode(args) -> int:
    cfg = _config(args)
    bundle = build_encoding(cfg)
    sectors = []
    for z in range(1 << cfg.n_d):
        ground = bundle.ground_state(z)
        amps = {
            "".join(map(str, bits_of(a, cfg.n_a))): [_round(ground[a].real), _round(ground[a].imag)]
            for a in np.flatnonzero(np.abs(ground) > 1e-12)
        }
        sectors.append({
            "z": logical_basis_label(z, cfg.n_d),
            "satisfiable": analyze_defects(z, cfg).satisfiable,
            "ground_energy": _round(bundle.energies[z, 0]),
            "ground_state": amps,
        })
    payload = {
        "config": _config_record(cfg),
        "logical_overlaps": [_round(v) for v in sine_transform(cfg.n_d).ground],
        "sectors": sectors,
    }
    _emit(_dump(payload), args.out)
    return 0


def _round(v: float) -> float:
    return float(f"{float(v):.12g}") if v != 0 else 0.0


def _times(args) -> list[float]:
    if args.times:
        return [ex._number(t, "--times") for t in args.times.split(",")]
    return [float(t) for t in np.linspace(0.0, args.tmax, args.num)]


def cmd_metrics(args) -> int:
    cfg = _config(args)
    bundle = build_encoding(cfg)
    qubits = None if args.drive is None else [int(q) for q in args.drive.split(",")]
    dyn = LogicalDynamics(build_gadget(cfg) + data_x_drive(cfg, qubits, args.strength), bundle)
    lines = ["t,p_surv,leakage,f_cond,infidelity,f_abs"]
    for t in _times(args):
        p = dyn.point(t)
        lines.append(",".join(_fmt(v) for v in (p.t, p.p_surv, p.leakage, p.f_cond, p.infidelity, p.f_abs)))
    _emit("\n".join(lines) + "\n", args.out)
    return 0


def _run_and_write(spec: ex.ExperimentSpec, args) -> int:
    result = ex.run(spec, workers=args.workers)
    if args.out:
        manifest = ex.write_result(result, args.out)
        # wall time lives outside the manifest so checksums stay reproducible
        atomic_write(Path(args.out) / "timing.json", _dump({"wall_time_s": round(result.wall_time, 3)}))
    else:
        manifest = result.manifest()
    sys.stdout.write(_dump(manifest) if not args.out else f"wrote {len(manifest['files'])} tables to {args.out}\n")
    return 0


def cmd_experiment(args) -> int:
    spec = ex.load_spec(args.spec, seed=args.seed)
    return _run_and_write(spec, args)


def _grid_flag(text: str | None, name: str):
    if text is None:
        return None
    return tuple(ex._number(v, name) for v in text.split(","))


def cmd_sweep(args) -> int:
    spec = ex.load_spec(args.spec, seed=args.seed)
    changes = {}
    gammas = _grid_flag(args.gamma_grid, "--gamma-grid")
    etas = _grid_flag(args.eta_grid, "--eta-grid")
    if gammas is not None:
        changes["gamma_grid"] = gammas
    if etas is not None:
        changes["eta_grid"] = etas
    if args.repetitions is not None:
        changes["repetitions"] = args.repetitions
    spec = replace(spec, **changes)
    ex._validate_kind(spec)
    return _run_and_write(spec, args)


def _add_config_flags(p: argparse.ArgumentParser) -> None:
    p.add_argument("--nd", type=int, required=True, help="number of data qubits (>= 2)")
    p.add_argument("--kinked", action="store_true", help="right virtual ancilla at -1")
    p.add_argument("--gamma", type=float, default=8.0, help="chain (confinement) strength")
    p.add_argument("--alpha", type=float, default=1.0, help="target parity splitting")
    p.add_argument(
        "--driver", choices=[d.value for d in Driver if d is not Driver.NONE], default="five-body"
    )
    p.add_argument("--beta", type=float, default=None, help="single-x driver strength (default 1)")
    p.add_argument("--out", default=None, help="output file (default: stdout)")


def _add_run_flags(p: argparse.ArgumentParser) -> None:
    p.add_argument("--spec", required=True, help="experiment spec (YAML)")
    p.add_argument("--seed", type=int, default=None, help="override the spec's base seed")
    p.add_argument("--out", default=None, help="output directory for CSVs and manifest.json")
    p.add_argument("--workers", type=int, default=1, help="parallel parameter points")


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="gadgetsim", description=__doc__.splitlines()[0])
    parser.add_argument("--version", action="version", version=f"%(prog)s {__version__}")
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("build", help="dump the gadget Hamiltonian as a Pauli term list")
    _add_config_flags(p)
    p.set_defaults(func=cmd_build)

    p = sub.add_parser("spectrum", help="per-sector energies and the parity splitting")
    _add_config_flags(p)
    p.set_defaults(func=cmd_spectrum)

    p = sub.add_parser("encode", help="sector ground states of the encoding")
    _add_config_flags(p)
    p.set_defaults(func=cmd_encode)

    p = sub.add_parser("metrics", help="leakage and fidelity under data-qubit X driving")
    _add_config_flags(p)
    p.add_argument("--times", default=None, help="comma-separated times (pi expressions allowed)")
    p.add_argument("--tmax", type=float, default=4 * math.pi)
    p.add_argument("--num", type=int, default=200)
    p.add_argument("--drive", default=None, help="comma-separated data qubits (default: all)")
    p.add_argument("--strength", type=float, default=1.0)
    p.set_defaults(func=cmd_metrics)

    p = sub.add_parser("experiment", help="run an experiment spec")
    _add_run_flags(p)
    p.set_defaults(func=cmd_experiment)

    p = sub.add_parser("sweep", help="run an experiment spec with overridden sweep axes")
    _add_run_flags(p)
    p.add_argument("--gamma-grid", default=None, help="comma-separated confinement strengths")
    p.add_argument("--eta-grid", default=None, help="comma-separated noise scales")
    p.add_argument("--repetitions", type=int, default=None)
    p.set_defaults(func=cmd_sweep)
    return parser


def main(argv: list[str] | None = None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        return args.func(args)
    except (GadgetSimError, UndefinedMetricError, OSError) as exc:
        print(f"gadgetsim {args.command}: error: {exc}", file=sys.stderr)
        return EXIT_USAGE


if __name__ == "__main__":
    sys.exit(main())
