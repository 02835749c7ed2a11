"""Encoded-subspace machinery: defects, sine transform, U_enc and projections.

Data words ``z`` and ancilla words ``a`` are tuples of bits with qubit 0 first;
ints are accepted wherever a word is and are read MSB-first (so ``0b00100``
with ``n_d = 5`` flips data qubit 2).
"""

from __future__ import annotations

from dataclasses import dataclass
from functools import cached_property
from typing import Iterable, Sequence

import numpy as np

from .gadgets import Driver, GadgetConfig, build_gadget
from .pauli import (
    ConfigurationError,
    ContractError,
    NumericalError,
    OperatorSum,
    PauliString,
    QubitRegister,
    bits_of,
    index_of,
    realize,
)

CROSS_CHECK_TOL = 1e-9
DEGENERACY_TOL = 1e-9

Bits = tuple[int, ...]


def as_bits(word: int | str | Iterable[int], n: int) -> Bits:
    """Normalize a data or ancilla word to an ``n``-tuple of bits."""
    if isinstance(word, (int, np.integer)):
        if not 0 <= word < (1 << n):
            raise ConfigurationError(f"word {word} does not fit in {n} bits")
        return bits_of(int(word), n)
    bits = tuple(int(b) for b in word)
    if len(bits) != n or any(b not in (0, 1) for b in bits):
        raise ConfigurationError(f"expected {n} bits, got {word!r}")
    return bits


def _zval(bit: int) -> int:
    return 1 - 2 * bit


def clause_values(z, a, config: GadgetConfig) -> list[int]:
    """Evaluate every chain clause on a basis state: +1 satisfied, -1 broken.

    This is a direct term-by-term evaluation and serves as the brute-force
    reference for the closed-form ancilla rules below.
    """
    z = as_bits(z, config.n_d)
    a = as_bits(a, config.n_a)
    bound = config.boundary
    za = [bound.left] + [_zval(b) for b in a] + [bound.right]  # za[k + 1] is ancilla k
    return [_zval(z[i]) * za[i] * za[i + 1] for i in range(config.n_d)]


def defect_positions(z, a, config: GadgetConfig) -> list[int]:
    """Indices of broken clauses for the basis state ``|z, a>``."""
    return [i for i, v in enumerate(clause_values(z, a, config)) if v < 0]


def cumulative_parity(z, config: GadgetConfig, defect: int | None = None) -> Bits:
    """Ancilla word carrying the running parity of ``z``, kinked after ``defect``.

    With ``defect = j`` the parity is inverted from ancilla ``j`` onwards,
    which places the single broken clause at position ``j``.
    """
    z = as_bits(z, config.n_d)
    out = []
    acc = 0
    for i in range(config.n_a):
        acc ^= z[i]
        out.append(acc ^ int(defect is not None and i >= defect))
    return tuple(out)


@dataclass(frozen=True)
class DefectProfile:
    """Low-energy ancilla structure of one data word.

    ``ground_ancillae`` holds a single word when ``z`` is satisfiable and the
    ``n_d`` one-defect words (indexed by defect position) otherwise.
    """

    z: Bits
    satisfiable: bool
    defect_parity: int
    ground_ancillae: tuple[Bits, ...]


def data_parity(z) -> int:
    return sum(z) % 2


def analyze_defects(z, config: GadgetConfig) -> DefectProfile:
    z = as_bits(z, config.n_d)
    if data_parity(z) == config.satisfiable_parity:
        return DefectProfile(z, True, 0, (cumulative_parity(z, config),))
    words = tuple(cumulative_parity(z, config, j) for j in range(config.n_d))
    return DefectProfile(z, False, 1, words)


@dataclass(frozen=True)
class SineTransform:
    """Orthogonal transform diagonalizing unit defect hopping on ``n`` sites.

    Row ``k`` of ``matrix`` is the ``k``-th eigenvector of the tridiagonal
    matrix with ``-1`` off-diagonals; ``eigenvalues[k] = -2 cos(pi (k+1)/(n+1))``.
    """

    n: int
    matrix: np.ndarray
    eigenvalues: np.ndarray

    @property
    def ground(self) -> np.ndarray:
        return self.matrix[0]


def sine_transform(n: int) -> SineTransform:
    if n < 1:
        raise ConfigurationError(f"sine transform needs n >= 1, got {n}")
    k = np.arange(1, n + 1)
    s = np.sqrt(2.0 / (n + 1)) * np.sin(np.pi * np.outer(k, k) / (n + 1))
    lam = -2.0 * np.cos(np.pi * k / (n + 1))
    return SineTransform(n, s, lam)


def hopping_matrix(n: int) -> np.ndarray:
    """Tridiagonal Toeplitz matrix with ``-1`` on both off-diagonals."""
    return -(np.eye(n, k=1) + np.eye(n, k=-1))


def sector_block(op: OperatorSum, config: GadgetConfig, z) -> np.ndarray:
    """Ancilla-space block ``<z| op |z>`` of an operator that is diagonal on the data.

    Raises :class:`ContractError` if any term carries X or Y on a data qubit.
    """
    z = as_bits(z, config.n_d)
    n_d = config.n_d
    reduced = []
    for t in op.terms:
        coeff = t.coeff
        anc = []
        for q, p in t.factors:
            if q < n_d:
                if p != "Z":
                    raise ContractError("operator does not conserve the data word")
                coeff *= _zval(z[q])
            else:
                anc.append((q - n_d, p))
        reduced.append(PauliString(coeff, tuple(anc)))
    return realize(OperatorSum(reduced), QubitRegister(config.n_a))


def canonical_eigh(block: np.ndarray, tol: float = DEGENERACY_TOL) -> tuple[np.ndarray, np.ndarray]:
    """Eigendecomposition with a deterministic basis inside degenerate clusters.

    Eigenvalues ascend. Within each cluster the basis is the Gram-Schmidt
    orthonormalization of the cluster projector's columns taken in index
    order, then sorted by the index of each vector's largest entry. Every
    vector is phased so that entry is real and positive.
    """
    energies, vecs = np.linalg.eigh(block)
    dim = len(energies)
    out = np.empty_like(vecs, dtype=complex)
    start = 0
    while start < dim:
        stop = start + 1
        scale = max(1.0, abs(energies[start]))
        while stop < dim and energies[stop] - energies[stop - 1] <= tol * scale:
            stop += 1
        cluster = vecs[:, start:stop]
        if stop - start > 1:
            cluster = _canonical_cluster(cluster)
        keys = [_lead_index(cluster[:, c]) for c in range(cluster.shape[1])]
        order = np.argsort(keys, kind="stable")
        for slot, c in enumerate(order):
            v = cluster[:, c]
            lead = keys[c]
            out[:, start + slot] = v * (abs(v[lead]) / v[lead])
        start = stop
    return energies, out


def _lead_index(v: np.ndarray) -> int:
    mag = np.abs(v)
    return int(np.flatnonzero(mag >= mag.max() - 1e-9)[0])


def _canonical_cluster(cluster: np.ndarray) -> np.ndarray:
    d = cluster.shape[1]
    proj = cluster @ cluster.conj().T
    basis: list[np.ndarray] = []
    for col in range(proj.shape[0]):
        v = proj[:, col].copy()
        for b in basis:
            v -= np.vdot(b, v) * b
        nrm = np.linalg.norm(v)
        if nrm > 1e-6:
            basis.append(v / nrm)
            if len(basis) == d:
                break
    if len(basis) != d:
        raise NumericalError("could not build a canonical basis for a degenerate eigenspace")
    return np.column_stack(basis)


@dataclass(frozen=True)
class EncodingBundle:
    """Encoding unitary and the projectors derived from it.

    ``blocks[z]`` holds the ancilla eigenvectors of data sector ``z`` as
    columns (ascending energy), ``energies[z, r]`` the matching energies. Full
    register index of column ``(z, r)`` is ``z * 2**n_a + r``.
    """

    config: GadgetConfig
    blocks: np.ndarray
    energies: np.ndarray

    @property
    def register(self) -> QubitRegister:
        return self.config.register

    @property
    def n_anc_states(self) -> int:
        return 1 << self.config.n_a

    def column(self, z, rank: int = 0) -> int:
        z = as_bits(z, self.config.n_d)
        return index_of(z) * self.n_anc_states + rank

    @cached_property
    def u_enc(self) -> np.ndarray:
        nz, na, _ = self.blocks.shape
        u = np.zeros((nz * na, nz * na), dtype=complex)
        for z in range(nz):
            u[z * na:(z + 1) * na, z * na:(z + 1) * na] = self.blocks[z]
        return u

    @cached_property
    def logical_columns(self) -> np.ndarray:
        """``U_enc P`` restricted to its non-zero columns: one dressed ket per data word."""
        nz, na, _ = self.blocks.shape
        w = np.zeros((nz * na, nz), dtype=complex)
        for z in range(nz):
            w[z * na:(z + 1) * na, z] = self.blocks[z][:, 0]
        return w

    @cached_property
    def projector(self) -> np.ndarray:
        """Bare projector onto ancillae in ``|0...0>``."""
        diag = np.zeros(self.register.dim)
        diag[:: self.n_anc_states] = 1.0
        return np.diag(diag).astype(complex)

    @cached_property
    def dressed_projector(self) -> np.ndarray:
        w = self.logical_columns
        return w @ w.conj().T

    @cached_property
    def gauge(self) -> np.ndarray:
        return gauge_transform(self.config)

    def ground_state(self, z) -> np.ndarray:
        """Ancilla ground state of data sector ``z``."""
        return self.blocks[index_of(as_bits(z, self.config.n_d))][:, 0]

    def encode(self, data_state: np.ndarray) -> np.ndarray:
        """Dressed state ``U_enc (|data> (x) |0...0>)``."""
        data_state = np.asarray(data_state, dtype=complex)
        if data_state.shape != (1 << self.config.n_d,):
            raise ConfigurationError(f"data state has shape {data_state.shape}")
        return self.logical_columns @ data_state

    def to_encoded_frame(self, mat: np.ndarray) -> np.ndarray:
        """``U_enc^dagger M U_enc`` using the block structure."""
        nz, na, _ = self.blocks.shape
        out = np.empty_like(mat, dtype=complex)
        left = np.empty_like(mat, dtype=complex)
        for z in range(nz):
            rows = slice(z * na, (z + 1) * na)
            left[rows, :] = self.blocks[z].conj().T @ mat[rows, :]
        for z in range(nz):
            cols = slice(z * na, (z + 1) * na)
            out[:, cols] = left[:, cols] @ self.blocks[z]
        return out


def build_encoding(config: GadgetConfig, check: bool = True) -> EncodingBundle:
    """Diagonalize the calibrated gadget sector by sector.

    With ``check`` on, every sector ground state is compared with its closed
    form: the cumulative-parity word for satisfiable ``z`` and the sine
    ground row over one-defect words otherwise (sign-gauged by ``(-1)^{z_j}``
    for the three-body driver).
    """
    if not config.driver.is_subspace:
        raise ConfigurationError("encoding needs a five-body or three-body subspace driver")
    h = build_gadget(config)
    nz = 1 << config.n_d
    na = 1 << config.n_a
    blocks = np.empty((nz, na, na), dtype=complex)
    energies = np.empty((nz, na))
    for z in range(nz):
        e, v = canonical_eigh(sector_block(h, config, z))
        blocks[z] = v
        energies[z] = e
    bundle = EncodingBundle(config, blocks, energies)
    if check:
        for z in range(nz):
            err = _cross_check(bundle, z)
            if err > CROSS_CHECK_TOL:
                raise NumericalError(
                    f"sector z={bits_of(z, config.n_d)} ground state deviates from the "
                    f"closed form by {err:.3e}"
                )
    return bundle


def analytic_ground_state(z, config: GadgetConfig) -> np.ndarray:
    """Closed-form ancilla ground state of data sector ``z``."""
    prof = analyze_defects(z, config)
    psi = np.zeros(1 << config.n_a, dtype=complex)
    if prof.satisfiable:
        psi[index_of(prof.ground_ancillae[0])] = 1.0
        return psi
    row = sine_transform(config.n_d).ground
    for j, word in enumerate(prof.ground_ancillae):
        sign = _zval(prof.z[j]) if config.driver is Driver.THREE_BODY else 1
        psi[index_of(word)] = sign * row[j]
    return psi


def _cross_check(bundle: EncodingBundle, z: int) -> float:
    expected = analytic_ground_state(z, bundle.config)
    got = bundle.blocks[z][:, 0]
    phase = np.vdot(expected, got)
    if abs(phase) < 1e-12:
        return float("inf")
    got = got * (abs(phase) / phase)
    return float(np.max(np.abs(got - expected)))


def effective_operator(op, bundle: EncodingBundle) -> np.ndarray:
    """Logical block ``P U_enc^dagger O U_enc P`` as a ``2**n_d`` square matrix."""
    w = bundle.logical_columns
    if isinstance(op, (OperatorSum, PauliString)):
        mat = realize(op, bundle.register)
    else:
        mat = np.asarray(op, dtype=complex)
    return w.conj().T @ (mat @ w)


def logical_overlap(z1, z2, i: int, config: GadgetConfig) -> float:
    """Closed-form overlap of the sector ground states of ``z1`` and ``z2 = z1 ^ e_i``.

    Equals ``S_{0i} = sqrt(2/(n_d+1)) sin(pi (i+1)/(n_d+1))`` for the
    five-body driver; the three-body driver multiplies it by a gauge sign,
    see :func:`overlap_from_bundle`.
    """
    z1 = as_bits(z1, config.n_d)
    z2 = as_bits(z2, config.n_d)
    diff = [q for q in range(config.n_d) if z1[q] != z2[q]]
    if len(diff) != 1:
        raise ContractError(f"data words must differ in exactly one bit, they differ in {len(diff)}")
    if diff[0] != i:
        raise ContractError(f"words differ at bit {diff[0]}, not at the stated bit {i}")
    return float(sine_transform(config.n_d).ground[i])


def overlap_from_bundle(bundle: EncodingBundle, z1, z2) -> complex:
    """Numerical ``<psi_{z1,0}|psi_{z2,0}>`` from the encoding bundle."""
    return complex(np.vdot(bundle.ground_state(z1), bundle.ground_state(z2)))


def gauge_transform(config: GadgetConfig) -> np.ndarray:
    """Diagonal of the gauge unitary: ``(-1)^{z_j}`` on one-defect states, +1 elsewhere."""
    nz = 1 << config.n_d
    na = 1 << config.n_a
    diag = np.ones(nz * na)
    for z in range(nz):
        zb = bits_of(z, config.n_d)
        for a in range(na):
            pos = defect_positions(zb, bits_of(a, config.n_a), config)
            if len(pos) == 1:
                diag[z * na + a] = _zval(zb[pos[0]])
    return diag


def one_defect_block(op: OperatorSum, config: GadgetConfig, z) -> np.ndarray:
    """Matrix of ``op`` on the one-defect words of an unsatisfiable sector, indexed by defect position."""
    prof = analyze_defects(z, config)
    if prof.satisfiable:
        raise ContractError("satisfiable data words have no one-defect ground manifold")
    block = sector_block(op, config, prof.z)
    idx = [index_of(w) for w in prof.ground_ancillae]
    return block[np.ix_(idx, idx)]


def logical_basis_label(z: int | Sequence[int], n_d: int) -> str:
    return "".join(str(b) for b in as_bits(z, n_d))
