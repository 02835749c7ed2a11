"""Hamiltonian constructors for domain-wall chain gadgets.

Every constructor takes a :class:`GadgetConfig` and returns an
:class:`~gadgetsim.pauli.OperatorSum` on the chain register
(``n_d`` data qubits followed by ``n_d - 1`` ancillae). Virtual boundary
ancillae are substituted when the terms are built, so boundary clauses come
out with reduced weight.

The subspace drivers are normalized so that, inside a one-defect sector of
fixed data word, they act as ``-(|j><j+1| + |j+1><j|)`` on defect positions.
That makes the one-defect ground energy ``-2 cos(pi / (n_d + 1))`` per unit
``beta``, which is what :func:`calibrate_beta` assumes.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from enum import Enum

import numpy as np

from .pauli import (
    ConfigurationError,
    OperatorSum,
    QubitRegister,
    X,
    Z,
    identity,
)


class Driver(str, Enum):
    NONE = "none"
    SINGLE_X = "single-x"
    FIVE_BODY = "five-body"
    THREE_BODY = "three-body"

    @property
    def is_subspace(self) -> bool:
        return self in (Driver.FIVE_BODY, Driver.THREE_BODY)


class CalibrationError(ConfigurationError):
    """Requested gadget strength cannot be reached (needs gamma > alpha)."""


@dataclass(frozen=True)
class VirtualBoundary:
    """Fixed Z values of the two virtual ancillae (indices -1 and n_d - 1)."""

    left: int = 1
    right: int = 1

    def __post_init__(self):
        if self.left != 1:
            raise ConfigurationError("the left virtual ancilla is always +1")
        if self.right not in (1, -1):
            raise ConfigurationError(f"right virtual ancilla must be +1 or -1, got {self.right}")


@dataclass(frozen=True)
class GadgetConfig:
    """Single source of truth for a gadget instance.

    ``alpha`` is the parity splitting the calibrated gadget produces: the
    satisfiable parity sector sits at energy 0 and the other at ``alpha``.
    ``beta_x`` is only used by the single-X driver.
    """

    n_d: int
    kinked: bool = False
    gamma: float = 8.0
    alpha: float = 1.0
    driver: Driver = Driver.FIVE_BODY
    beta_x: float = 1.0

    def __post_init__(self):
        object.__setattr__(self, "driver", Driver(self.driver))
        if int(self.n_d) != self.n_d or self.n_d < 2:
            raise ConfigurationError(f"n_d must be an integer >= 2, got {self.n_d}")
        for name in ("gamma", "alpha", "beta_x"):
            val = getattr(self, name)
            if not math.isfinite(val):
                raise ConfigurationError(f"{name} must be finite, got {val}")
        if self.gamma < 0 or self.alpha < 0:
            raise ConfigurationError("gamma and alpha must be non-negative")
        # fail early on the cap rather than deep inside a realization
        QubitRegister.chain(self.n_d)

    @property
    def n_a(self) -> int:
        return self.n_d - 1

    @property
    def register(self) -> QubitRegister:
        return QubitRegister.chain(self.n_d)

    @property
    def boundary(self) -> VirtualBoundary:
        return VirtualBoundary(1, -1 if self.kinked else 1)

    @property
    def satisfiable_parity(self) -> int:
        """Data parity (0 even, 1 odd) whose clauses can all be satisfied."""
        return 1 if self.kinked else 0

    @property
    def beta(self) -> float:
        """Subspace-driver strength; calibrated from gamma and alpha."""
        if self.driver.is_subspace:
            return calibrate_beta(self.gamma, self.alpha, self.n_d)
        if self.driver is Driver.SINGLE_X:
            return self.beta_x
        return 0.0

    def with_(self, **changes) -> "GadgetConfig":
        fields = dict(
            n_d=self.n_d,
            kinked=self.kinked,
            gamma=self.gamma,
            alpha=self.alpha,
            driver=self.driver,
            beta_x=self.beta_x,
        )
        fields.update(changes)
        return GadgetConfig(**fields)


@dataclass(frozen=True)
class NoiseDraw:
    """Static Z-noise weights ``g_i ~ N(0, eta)`` on the data qubits.

    ``seed`` may be an int or a tuple of ints; it is handed to
    :class:`numpy.random.SeedSequence`, so the draw is a pure function of it.
    """

    g: tuple[float, ...]
    eta: float
    seed: int | tuple[int, ...] | None = None

    @classmethod
    def draw(cls, n_d: int, eta: float, seed: int | tuple[int, ...]) -> "NoiseDraw":
        if eta < 0:
            raise ConfigurationError(f"noise scale must be non-negative, got {eta}")
        rng = np.random.default_rng(np.random.SeedSequence(seed))
        xi = rng.standard_normal(n_d)
        return cls(tuple(float(v) for v in eta * xi), float(eta), seed)

    @classmethod
    def zero(cls, n_d: int) -> "NoiseDraw":
        return cls((0.0,) * n_d, 0.0, None)


def calibrate_beta(gamma: float, alpha: float, n_d: int) -> float:
    """Driver strength giving parity splitting ``alpha`` on a chain of strength ``gamma``."""
    if not gamma > alpha:
        raise CalibrationError(
            f"calibration needs gamma > alpha (got gamma={gamma}, alpha={alpha}); "
            "otherwise the defect sector drops below the satisfiable one"
        )
    return (gamma - alpha) / (2.0 * math.cos(math.pi / (n_d + 1)))


def _ancilla_z(config: GadgetConfig, k: int) -> OperatorSum:
    """Z of ancilla ``k``, with the virtual ends replaced by their fixed values."""
    if k == -1:
        return OperatorSum([identity(config.boundary.left)])
    if k == config.n_d - 1:
        return OperatorSum([identity(config.boundary.right)])
    return OperatorSum([Z(config.register.ancilla(k))])


def clause(config: GadgetConfig, i: int) -> OperatorSum:
    """Parity check of clause ``i``: ``Z_i Z^a_{i-1} Z^a_i`` (+1 when satisfied)."""
    if not 0 <= i < config.n_d:
        raise ConfigurationError(f"clause index {i} out of range")
    return Z(i) * _ancilla_z(config, i - 1) * _ancilla_z(config, i)


def build_chain(config: GadgetConfig) -> OperatorSum:
    """Domain-wall chain: one unit of energy per broken parity clause."""
    terms = OperatorSum()
    for i in range(config.n_d):
        terms = terms + 0.5 * (1 - clause(config, i))
    return terms


def build_single_x_driver(config: GadgetConfig, beta: float | None = None) -> OperatorSum:
    beta = config.beta_x if beta is None else beta
    reg = config.register
    return OperatorSum(X(reg.ancilla(i), -beta) for i in range(reg.n_a))


def _defect_hop_check(config: GadgetConfig, i: int) -> OperatorSum:
    """``Z_i Z_{i+1} Z^a_{i-1} Z^a_{i+1}``: -1 iff exactly one of clauses i, i+1 is broken."""
    return Z(i) * Z(i + 1) * _ancilla_z(config, i - 1) * _ancilla_z(config, i + 1)


def build_five_body_driver(config: GadgetConfig) -> OperatorSum:
    """Defect-hopping driver ``-1/2 sum_i X^a_i (1 - Z_i Z_{i+1} Z^a_{i-1} Z^a_{i+1})``."""
    reg = config.register
    terms = OperatorSum()
    for i in range(config.n_d - 1):
        terms = terms + (-0.5) * X(reg.ancilla(i)) * (1 - _defect_hop_check(config, i))
    return terms


def build_three_body_driver(config: GadgetConfig) -> OperatorSum:
    """Gauge-equivalent hopping driver ``-1/2 sum_i X^a_i (Z_i Z_{i+1} - Z^a_{i-1} Z^a_{i+1})``.

    Equal to the five-body driver multiplied by ``Z_i Z_{i+1}`` term by term,
    so its one-defect hopping amplitudes carry the sign of ``Z_j Z_{j+1}``.
    """
    reg = config.register
    terms = OperatorSum()
    for i in range(config.n_d - 1):
        bracket = Z(i) * Z(i + 1) - _ancilla_z(config, i - 1) * _ancilla_z(config, i + 1)
        terms = terms + (-0.5) * X(reg.ancilla(i)) * bracket
    return terms


def build_driver(config: GadgetConfig) -> OperatorSum:
    """The driver selected by ``config.driver``, without its strength."""
    if config.driver is Driver.FIVE_BODY:
        return build_five_body_driver(config)
    if config.driver is Driver.THREE_BODY:
        return build_three_body_driver(config)
    if config.driver is Driver.SINGLE_X:
        return build_single_x_driver(config, 1.0)
    return OperatorSum()


def build_gadget(config: GadgetConfig) -> OperatorSum:
    """Calibrated gadget ``gamma * chain + beta * subspace driver``."""
    if not config.driver.is_subspace:
        raise ConfigurationError(
            f"a calibrated gadget needs a subspace driver, got {config.driver.value!r}"
        )
    return config.gamma * build_chain(config) + config.beta * build_driver(config)


def build_logical_xx(config: GadgetConfig, i: int) -> OperatorSum:
    """Three-body string ``X_i X_{i+1} X^a_i`` acting as logical ``X_i X_{i+1}``."""
    if not 0 <= i <= config.n_d - 2:
        raise ConfigurationError(f"logical XX index {i} out of range for n_d={config.n_d}")
    return OperatorSum([X(i) * X(i + 1) * X(config.register.ancilla(i))])


def build_minor_embedding_system(config: GadgetConfig, noise: NoiseDraw) -> OperatorSum:
    """Gadget plus static data-qubit Z noise plus ``gamma``-strength logical XX locks."""
    if len(noise.g) != config.n_d:
        raise ConfigurationError(f"noise draw has {len(noise.g)} weights, expected {config.n_d}")
    h = build_gadget(config)
    h = h + OperatorSum(Z(i, g) for i, g in enumerate(noise.g))
    for i in range(config.n_d - 1):
        h = h + config.gamma * build_logical_xx(config, i)
    return h


def data_x_drive(config: GadgetConfig, qubits=None, strength: float = 1.0) -> OperatorSum:
    """Physical ``strength * X_i`` on the given data qubits (all of them by default)."""
    qubits = range(config.n_d) if qubits is None else qubits
    return OperatorSum(X(config.register.data(q), strength) for q in qubits)


def logical_parity(config: GadgetConfig) -> OperatorSum:
    """``Z^{(x) n_d}`` on the data qubits."""
    op = OperatorSum([identity()])
    for i in range(config.n_d):
        op = op * Z(i)
    return op
