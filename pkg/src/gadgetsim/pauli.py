"""Pauli-string algebra, dense realization and exact propagation.

Basis convention
----------------
Computational basis index ``b`` of an ``n``-qubit register encodes qubit 0 as
the most significant bit: qubit ``q`` is bit ``n - 1 - q`` of ``b``. Bit value
0 is the ``Z = +1`` eigenstate. Data qubits occupy global indices
``0 .. n_d - 1`` and ancilla ``i`` sits at global index ``n_d + i``, so a basis
index splits as ``b = z * 2**n_a + a`` with ``z`` the data word and ``a`` the
ancilla word (both read MSB-first).

States and dense operators are plain :class:`numpy.ndarray` objects
(``complex128``); operators built from Pauli strings are :class:`OperatorSum`.
"""

from __future__ import annotations

import os
from dataclasses import dataclass
from functools import cached_property
from typing import Iterable, Mapping

import numpy as np

DEFAULT_MAX_QUBITS = 14
DROP_TOL = 1e-14
HERMITIAN_TOL = 1e-12
NORM_TOL = 1e-10

_PAULIS = ("X", "Y", "Z")

# single-site products: (a, b) -> (phase, result) with result None for identity
_PRODUCT = {
    ("X", "X"): (1, None),
    ("Y", "Y"): (1, None),
    ("Z", "Z"): (1, None),
    ("X", "Y"): (1j, "Z"),
    ("Y", "X"): (-1j, "Z"),
    ("Y", "Z"): (1j, "X"),
    ("Z", "Y"): (-1j, "X"),
    ("Z", "X"): (1j, "Y"),
    ("X", "Z"): (-1j, "Y"),
}


class GadgetSimError(Exception):
    """Base class for errors raised by this package."""


class ConfigurationError(GadgetSimError, ValueError):
    """Invalid register, index or gadget parameters."""


class ContractError(GadgetSimError, ValueError):
    """An operation was called outside its precondition."""


class NumericalError(GadgetSimError, RuntimeError):
    """A numerical invariant (norm, unitarity, cross-check) was violated."""


def max_qubits() -> int:
    """Dense-simulation cap, overridable with ``GADGETSIM_MAX_QUBITS``."""
    raw = os.environ.get("GADGETSIM_MAX_QUBITS")
    if raw is None:
        return DEFAULT_MAX_QUBITS
    try:
        cap = int(raw)
    except ValueError as exc:
        raise ConfigurationError(f"GADGETSIM_MAX_QUBITS must be an integer, got {raw!r}") from exc
    if cap < 1:
        raise ConfigurationError("GADGETSIM_MAX_QUBITS must be positive")
    return cap


@dataclass(frozen=True)
class QubitRegister:
    """Data + ancilla register layout.

    Chain gadgets use :meth:`chain`, which enforces ``n_a = n_d - 1`` and
    ``n_d >= 2``. The bare constructor is looser so that small generic
    registers (one or two plain qubits) can be described too.
    """

    n_d: int
    n_a: int = 0

    def __post_init__(self):
        if self.n_d < 1 or self.n_a < 0:
            raise ConfigurationError(f"invalid register sizes n_d={self.n_d}, n_a={self.n_a}")
        cap = max_qubits()
        if self.total > cap:
            raise ConfigurationError(
                f"register of {self.total} qubits exceeds the dense cap of {cap} "
                "(set GADGETSIM_MAX_QUBITS to raise it)"
            )

    @classmethod
    def chain(cls, n_d: int) -> "QubitRegister":
        if n_d < 2:
            raise ConfigurationError(f"chain gadgets need n_d >= 2, got {n_d}")
        return cls(n_d, n_d - 1)

    @property
    def total(self) -> int:
        return self.n_d + self.n_a

    @property
    def dim(self) -> int:
        return 1 << self.total

    def ancilla(self, i: int) -> int:
        """Global index of ancilla ``i``."""
        if not 0 <= i < self.n_a:
            raise ConfigurationError(f"ancilla index {i} out of range for n_a={self.n_a}")
        return self.n_d + i

    def data(self, i: int) -> int:
        if not 0 <= i < self.n_d:
            raise ConfigurationError(f"data index {i} out of range for n_d={self.n_d}")
        return i


def _as_register(reg: QubitRegister | int) -> QubitRegister:
    return reg if isinstance(reg, QubitRegister) else QubitRegister(int(reg))


@dataclass(frozen=True)
class PauliString:
    """``coeff`` times a tensor product of single-qubit Paulis.

    ``factors`` is stored as a tuple of ``(index, label)`` pairs sorted by
    index; an empty tuple is a scaled identity.
    """

    coeff: complex = 1.0
    factors: tuple[tuple[int, str], ...] = ()

    def __post_init__(self):
        items = self.factors.items() if isinstance(self.factors, Mapping) else self.factors
        seen: dict[int, str] = {}
        for idx, label in items:
            idx = int(idx)
            label = str(label).upper()
            if label not in _PAULIS:
                raise ConfigurationError(f"unknown Pauli label {label!r}")
            if idx < 0:
                raise ConfigurationError(f"negative qubit index {idx}")
            if idx in seen:
                raise ConfigurationError(f"qubit {idx} appears twice in a Pauli string")
            seen[idx] = label
        object.__setattr__(self, "factors", tuple(sorted(seen.items())))
        object.__setattr__(self, "coeff", complex(self.coeff))

    @property
    def key(self) -> tuple[tuple[int, str], ...]:
        return self.factors

    @property
    def weight(self) -> int:
        return len(self.factors)

    @property
    def max_index(self) -> int:
        return max((i for i, _ in self.factors), default=-1)

    def __mul__(self, other):
        if isinstance(other, PauliString):
            return _multiply_strings(self, other)
        if isinstance(other, OperatorSum):
            return OperatorSum([self]) * other
        if np.isscalar(other):
            return PauliString(self.coeff * other, self.factors)
        return NotImplemented

    def __rmul__(self, other):
        if np.isscalar(other):
            return PauliString(self.coeff * other, self.factors)
        return NotImplemented

    def __neg__(self):
        return PauliString(-self.coeff, self.factors)

    def __add__(self, other):
        return OperatorSum([self]) + other

    def __radd__(self, other):
        return OperatorSum([self]) + other

    def __sub__(self, other):
        return OperatorSum([self]) - other

    def __rsub__(self, other):
        return (-OperatorSum([self])) + other

    def label(self) -> str:
        return " ".join(f"{p}{i}" for i, p in self.factors) or "I"


def _multiply_strings(a: PauliString, b: PauliString) -> PauliString:
    phase: complex = a.coeff * b.coeff
    out = dict(a.factors)
    for idx, pb in b.factors:
        pa = out.pop(idx, None)
        if pa is None:
            out[idx] = pb
            continue
        ph, res = _PRODUCT[(pa, pb)]
        phase *= ph
        if res is not None:
            out[idx] = res
    return PauliString(phase, tuple(out.items()))


def X(i: int, coeff: complex = 1.0) -> PauliString:
    return PauliString(coeff, ((i, "X"),))


def Y(i: int, coeff: complex = 1.0) -> PauliString:
    return PauliString(coeff, ((i, "Y"),))


def Z(i: int, coeff: complex = 1.0) -> PauliString:
    return PauliString(coeff, ((i, "Z"),))


def identity(coeff: complex = 1.0) -> PauliString:
    return PauliString(coeff, ())


def pauli(spec: str, coeff: complex = 1.0) -> PauliString:
    """Parse ``"X0 Z3 Y4"`` into a :class:`PauliString`."""
    factors = []
    for tok in spec.split():
        if tok.upper() == "I":
            continue
        factors.append((int(tok[1:]), tok[0]))
    return PauliString(coeff, tuple(factors))


class OperatorSum:
    """Canonical weighted sum of Pauli strings.

    Duplicate factor maps are merged on construction and terms with
    ``|coeff| < 1e-14`` are dropped. Terms are kept sorted by factor map, so
    equal operators compare and serialize identically.
    """

    def __init__(self, terms: Iterable[PauliString] = ()):
        merged: dict[tuple, complex] = {}
        for t in terms:
            if isinstance(t, OperatorSum):
                for u in t.terms:
                    merged[u.key] = merged.get(u.key, 0) + u.coeff
                continue
            merged[t.key] = merged.get(t.key, 0) + t.coeff
        self._terms = tuple(
            PauliString(c, k) for k, c in sorted(merged.items(), key=_sort_key) if abs(c) >= DROP_TOL
        )

    @property
    def terms(self) -> tuple[PauliString, ...]:
        return self._terms

    def __len__(self):
        return len(self._terms)

    def __iter__(self):
        return iter(self._terms)

    def __repr__(self):
        body = " + ".join(f"({_fmt_coeff(t.coeff)}) {t.label()}" for t in self._terms)
        return f"OperatorSum({body or '0'})"

    def __eq__(self, other):
        if not isinstance(other, OperatorSum):
            return NotImplemented
        diff = self - other
        return len(diff) == 0

    __hash__ = None

    @staticmethod
    def _coerce(other) -> "OperatorSum":
        if isinstance(other, OperatorSum):
            return other
        if isinstance(other, PauliString):
            return OperatorSum([other])
        if np.isscalar(other):
            return OperatorSum([identity(other)])
        raise TypeError(f"cannot combine OperatorSum with {type(other).__name__}")

    def __add__(self, other):
        try:
            other = self._coerce(other)
        except TypeError:
            return NotImplemented
        return OperatorSum(self._terms + other._terms)

    __radd__ = __add__

    def __neg__(self):
        return OperatorSum(-t for t in self._terms)

    def __sub__(self, other):
        try:
            other = self._coerce(other)
        except TypeError:
            return NotImplemented
        return self + (-other)

    def __rsub__(self, other):
        return (-self) + other

    def __mul__(self, other):
        if np.isscalar(other):
            return OperatorSum(t * other for t in self._terms)
        try:
            other = self._coerce(other)
        except TypeError:
            return NotImplemented
        return OperatorSum(a * b for a in self._terms for b in other._terms)

    def __rmul__(self, other):
        if np.isscalar(other):
            return self * other
        try:
            other = self._coerce(other)
        except TypeError:
            return NotImplemented
        return other * self

    @cached_property
    def max_index(self) -> int:
        return max((t.max_index for t in self._terms), default=-1)

    def is_hermitian(self, tol: float = HERMITIAN_TOL) -> bool:
        # canonical strings are Hermitian, so the sum is iff every weight is real
        return all(abs(t.coeff.imag) <= tol for t in self._terms)

    def to_records(self) -> list[dict]:
        """JSON-friendly term list in canonical order."""
        out = []
        for t in self._terms:
            rec = {"coeff": [t.coeff.real, t.coeff.imag] if t.coeff.imag else t.coeff.real}
            rec["factors"] = {str(i): p for i, p in t.factors}
            out.append(rec)
        return out

    @classmethod
    def from_records(cls, records: Iterable[Mapping]) -> "OperatorSum":
        terms = []
        for rec in records:
            c = rec["coeff"]
            coeff = complex(c[0], c[1]) if isinstance(c, (list, tuple)) else complex(c)
            terms.append(PauliString(coeff, tuple((int(i), p) for i, p in rec["factors"].items())))
        return cls(terms)


def _sort_key(item):
    key, _ = item
    return (len(key), key)


def _fmt_coeff(c: complex) -> str:
    if c.imag == 0:
        return f"{c.real:.12g}"
    return f"{c:.12g}"


def _bits(reg_total: int, dim: int) -> np.ndarray:
    """``(total, dim)`` array: row ``q`` holds qubit ``q``'s bit of each basis index."""
    idx = np.arange(dim)
    shifts = reg_total - 1 - np.arange(reg_total)
    return (idx[None, :] >> shifts[:, None]) & 1


def _string_action(term: PauliString, total: int, bits: np.ndarray) -> tuple[int, np.ndarray]:
    """Flip mask and per-column phase so that ``P|c> = phase[c] |c ^ mask>``."""
    mask = 0
    phase = np.ones(bits.shape[1], dtype=complex)
    for q, p in term.factors:
        b = bits[q]
        sign = 1 - 2 * b
        if p == "X":
            mask |= 1 << (total - 1 - q)
        elif p == "Z":
            phase *= sign
        else:
            mask |= 1 << (total - 1 - q)
            phase *= 1j * sign
    return mask, phase


def realize(op: OperatorSum | PauliString, reg: QubitRegister | int) -> np.ndarray:
    """Dense ``2**total x 2**total`` matrix of ``op`` under the module's bit order."""
    reg = _as_register(reg)
    op = OperatorSum._coerce(op)
    if op.max_index >= reg.total:
        raise ConfigurationError(
            f"operator acts on qubit {op.max_index} but the register has {reg.total} qubits"
        )
    dim = reg.dim
    bits = _bits(reg.total, dim)
    cols = np.arange(dim)
    mat = np.zeros((dim, dim), dtype=complex)
    for term in op.terms:
        mask, phase = _string_action(term, reg.total, bits)
        mat[cols ^ mask, cols] += term.coeff * phase
    return mat


def apply(op: OperatorSum | PauliString, state: np.ndarray, reg: QubitRegister | int) -> np.ndarray:
    """Matrix-free ``op @ state``."""
    reg = _as_register(reg)
    op = OperatorSum._coerce(op)
    state = np.asarray(state, dtype=complex)
    if state.shape != (reg.dim,):
        raise ConfigurationError(f"state has shape {state.shape}, expected ({reg.dim},)")
    bits = _bits(reg.total, reg.dim)
    cols = np.arange(reg.dim)
    out = np.zeros_like(state)
    for term in op.terms:
        mask, phase = _string_action(term, reg.total, bits)
        out[cols ^ mask] += term.coeff * phase * state
    return out


def _hermitian_residual(mat: np.ndarray) -> float:
    return float(np.max(np.abs(mat - mat.conj().T))) if mat.size else 0.0


def _as_matrix(op, reg: QubitRegister | int | None) -> np.ndarray:
    if isinstance(op, (OperatorSum, PauliString)):
        if reg is None:
            raise ConfigurationError("a register is required to realize an OperatorSum")
        return realize(op, reg)
    return np.asarray(op, dtype=complex)


def _register_for_state(state: np.ndarray) -> QubitRegister:
    dim = state.shape[0]
    n = dim.bit_length() - 1
    if dim < 2 or 1 << n != dim:
        raise ConfigurationError(f"state length {dim} is not a power of two")
    return QubitRegister(n)


def expectation(state: np.ndarray, op, reg: QubitRegister | int | None = None) -> float:
    """``<psi|O|psi>`` for Hermitian ``O``; the imaginary residue is discarded."""
    state = np.asarray(state, dtype=complex)
    if reg is None and isinstance(op, (OperatorSum, PauliString)):
        reg = _register_for_state(state)
    if isinstance(op, (OperatorSum, PauliString)):
        op = OperatorSum._coerce(op)
        if not op.is_hermitian():
            raise ContractError("expectation requires a Hermitian operator")
        val = np.vdot(state, apply(op, state, reg))
    else:
        mat = _as_matrix(op, reg)
        if _hermitian_residual(mat) > HERMITIAN_TOL:
            raise ContractError("expectation requires a Hermitian operator")
        val = np.vdot(state, mat @ state)
    if abs(val.imag) > NORM_TOL:
        raise NumericalError(f"expectation has imaginary part {val.imag:.3e}")
    return float(val.real)


class Spectral:
    """Cached eigendecomposition of a Hermitian matrix for repeated propagation.

    ``sign=-1`` gives the usual ``exp(-i t H)``; ``sign=+1`` gives
    ``exp(+i t H)``.
    """

    def __init__(self, h, reg: QubitRegister | int | None = None):
        mat = _as_matrix(h, reg)
        if mat.ndim != 2 or mat.shape[0] != mat.shape[1]:
            raise ConfigurationError(f"Hamiltonian must be square, got shape {mat.shape}")
        if _hermitian_residual(mat) > HERMITIAN_TOL * max(1.0, np.max(np.abs(mat), initial=0.0)):
            raise ContractError("Hamiltonian is not Hermitian")
        mat = 0.5 * (mat + mat.conj().T)
        if not np.any(mat.imag):
            # real symmetric input: the real solver is several times faster
            energies, vectors = np.linalg.eigh(mat.real)
            self.energies, self.vectors = energies, vectors.astype(complex)
        else:
            self.energies, self.vectors = np.linalg.eigh(mat)

    @property
    def dim(self) -> int:
        return self.energies.shape[0]

    def _phases(self, t: float, sign: int) -> np.ndarray:
        if sign not in (-1, 1):
            raise ConfigurationError(f"sign must be +1 or -1, got {sign}")
        if not np.isfinite(t):
            raise ConfigurationError(f"time must be finite, got {t}")
        return np.exp(sign * 1j * t * self.energies)

    def evolve(self, state: np.ndarray, t: float, sign: int = -1) -> np.ndarray:
        state = np.asarray(state, dtype=complex)
        v = self.vectors
        out = v @ (self._phases(t, sign) * (v.conj().T @ state))
        drift = abs(np.linalg.norm(out) - np.linalg.norm(state))
        if drift > NORM_TOL:
            raise NumericalError(f"norm drifted by {drift:.3e} during evolution")
        return out

    def unitary(self, t: float, sign: int = -1) -> np.ndarray:
        v = self.vectors
        u = (v * self._phases(t, sign)) @ v.conj().T
        err = np.max(np.abs(u.conj().T @ u - np.eye(self.dim)))
        if err > NORM_TOL:
            raise NumericalError(f"propagator deviates from unitarity by {err:.3e}")
        return u


def evolve(state: np.ndarray, h, t: float, sign: int = -1, reg: QubitRegister | int | None = None) -> np.ndarray:
    """Exact ``exp(sign * i * t * H) |psi>`` by eigendecomposition."""
    state = np.asarray(state, dtype=complex)
    if reg is None and isinstance(h, (OperatorSum, PauliString)):
        reg = _register_for_state(state)
    return Spectral(h, reg).evolve(state, t, sign)


def propagator(h, t: float, sign: int = -1, reg: QubitRegister | int | None = None) -> np.ndarray:
    """Full unitary ``exp(sign * i * t * H)``."""
    if reg is None and isinstance(h, (OperatorSum, PauliString)):
        reg = QubitRegister(max(1, OperatorSum._coerce(h).max_index + 1))
    return Spectral(h, reg).unitary(t, sign)


def basis_state(bits: Iterable[int] | str, dtype=complex) -> np.ndarray:
    """Computational basis ket; ``bits[0]`` is qubit 0."""
    bits = [int(b) for b in bits]
    idx = 0
    for b in bits:
        idx = (idx << 1) | b
    psi = np.zeros(1 << len(bits), dtype=dtype)
    psi[idx] = 1
    return psi


def product_state(*kets: np.ndarray) -> np.ndarray:
    """Kronecker product of single- or multi-qubit kets, qubit 0 leftmost."""
    out = np.ones(1, dtype=complex)
    for k in kets:
        out = np.kron(out, np.asarray(k, dtype=complex))
    return out


PLUS = np.array([1, 1], dtype=complex) / np.sqrt(2)
MINUS = np.array([1, -1], dtype=complex) / np.sqrt(2)
ZERO = np.array([1, 0], dtype=complex)
ONE = np.array([0, 1], dtype=complex)


def uniform_state(ket: np.ndarray, n: int) -> np.ndarray:
    """``ket`` tensored with itself ``n`` times."""
    return product_state(*([ket] * n))


def bits_of(index: int, n: int) -> tuple[int, ...]:
    """Bits of ``index`` as an ``n``-tuple, qubit 0 first."""
    return tuple((index >> (n - 1 - q)) & 1 for q in range(n))


def index_of(bits: Iterable[int]) -> int:
    idx = 0
    for b in bits:
        idx = (idx << 1) | int(b)
    return idx
