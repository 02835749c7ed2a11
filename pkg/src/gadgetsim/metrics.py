"""Leakage and process-fidelity metrics for a gadget under a physical Hamiltonian.

All metrics are taken in the encoded frame: the physical propagator is
conjugated by ``U_enc`` first, so the bare ancilla projector ``P`` selects the
logical (dressed) subspace.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Sequence

import numpy as np

from .encoding import EncodingBundle, effective_operator
from .pauli import GadgetSimError, NumericalError, OperatorSum, PauliString, Spectral, realize

SURVIVAL_CUTOFF = 1e-12
BOUND_TOL = 1e-10


class UndefinedMetricError(GadgetSimError, ValueError):
    """Conditional fidelity requested where essentially nothing survives."""


def _unit_interval(name: str, value: float) -> float:
    if value < -BOUND_TOL or value > 1 + BOUND_TOL:
        raise NumericalError(f"{name} = {value!r} is outside [0, 1]")
    return min(1.0, max(0.0, float(value)))


class LogicalDynamics:
    """Spectral data of one physical Hamiltonian seen through an encoding.

    Only the rows of the encoded-frame eigenvectors that belong to the
    logical subspace are kept, which is all the metrics need.
    """

    def __init__(self, h_physical, bundle: EncodingBundle):
        if isinstance(h_physical, (OperatorSum, PauliString)):
            mat = realize(h_physical, bundle.register)
        else:
            mat = np.asarray(h_physical, dtype=complex)
        self.bundle = bundle
        rot = bundle.to_encoded_frame(mat)
        self._spec = Spectral(rot)
        logical = np.arange(0, bundle.register.dim, bundle.n_anc_states)
        self._rows = self._spec.vectors[logical, :]
        self.h_eff = effective_operator(mat, bundle)
        self._ideal = Spectral(self.h_eff)
        self.n_logical = len(logical)

    def logical_block(self, t: float) -> np.ndarray:
        """``P O_rot(t) P`` restricted to the logical indices."""
        phases = np.exp(-1j * t * self._spec.energies)
        return (self._rows * phases) @ self._rows.conj().T

    def ideal(self, t: float) -> np.ndarray:
        return self._ideal.unitary(t)

    def survival(self, t: float) -> float:
        block = self.logical_block(t)
        return _unit_interval("p_surv", np.sum(np.abs(block) ** 2) / self.n_logical)

    def point(self, t: float) -> "MetricPoint":
        block = self.logical_block(t)
        p = _unit_interval("p_surv", np.sum(np.abs(block) ** 2) / self.n_logical)
        if p <= SURVIVAL_CUTOFF:
            raise UndefinedMetricError(f"survival probability {p:.3e} too small at t={t}")
        overlap = np.trace(self.ideal(t).conj().T @ block) / np.sqrt(p)
        f = _unit_interval("F_cond", abs(overlap) ** 2 / self.n_logical**2)
        return MetricPoint(float(t), p, 1.0 - p, f, p * f)


@dataclass(frozen=True)
class MetricPoint:
    t: float
    p_surv: float
    leakage: float
    f_cond: float
    f_abs: float

    @property
    def infidelity(self) -> float:
        return 1.0 - self.f_cond


@dataclass(frozen=True)
class MetricSeries:
    gamma: float
    points: tuple[MetricPoint, ...] = field(default_factory=tuple)

    def __post_init__(self):
        ts = [p.t for p in self.points]
        if any(b <= a for a, b in zip(ts, ts[1:])):
            raise ValueError("metric series times must be strictly increasing")

    def column(self, name: str) -> np.ndarray:
        return np.array([getattr(p, name) for p in self.points])


def _dynamics(h_physical, bundle: EncodingBundle) -> LogicalDynamics:
    if isinstance(h_physical, LogicalDynamics):
        return h_physical
    return LogicalDynamics(h_physical, bundle)


def survival_probability(h_physical, bundle: EncodingBundle, t: float) -> float:
    """``Tr[P O_rot^dagger(t) P O_rot(t)] / 2**n_d``."""
    return _dynamics(h_physical, bundle).survival(t)


def ideal_propagator(bundle: EncodingBundle, h_physical, t: float) -> np.ndarray:
    """``exp(-i t H_eff)`` with ``H_eff`` the logical block of ``h_physical``."""
    return _dynamics(h_physical, bundle).ideal(t)


def conditional_fidelity(h_physical, bundle: EncodingBundle, t: float) -> float:
    """Process fidelity of the leakage-renormalized logical block against the ideal one."""
    return _dynamics(h_physical, bundle).point(t).f_cond


def absolute_fidelity(point: MetricPoint) -> float:
    return point.p_surv * point.f_cond


def metric_point(h_physical, bundle: EncodingBundle, t: float) -> MetricPoint:
    return _dynamics(h_physical, bundle).point(t)


def metric_series(h_physical, bundle: EncodingBundle, times: Sequence[float]) -> MetricSeries:
    dyn = _dynamics(h_physical, bundle)
    return MetricSeries(bundle.config.gamma, tuple(dyn.point(t) for t in times))
