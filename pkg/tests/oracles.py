"""Independent reference implementations used as test oracles.

Nothing here imports the package's operator algebra: matrices are built with
explicit Kronecker products of 2x2 Paulis, clauses are evaluated from bit
lists, and propagators come from ``scipy.linalg.expm``.
"""

from __future__ import annotations

import itertools
import math

import numpy as np
from scipy.linalg import expm

I2 = np.eye(2, dtype=complex)
PX = np.array([[0, 1], [1, 0]], dtype=complex)
PY = np.array([[0, -1j], [1j, 0]], dtype=complex)
PZ = np.array([[1, 0], [0, -1]], dtype=complex)
PAULI = {"I": I2, "X": PX, "Y": PY, "Z": PZ}


def kron_op(n: int, factors: dict[int, str]) -> np.ndarray:
    """Tensor product with qubit 0 leftmost (most significant)."""
    out = np.ones((1, 1), dtype=complex)
    for q in range(n):
        out = np.kron(out, PAULI[factors.get(q, "I")])
    return out


class ChainOracle:
    """Chain gadget matrices written straight from the clause formulas."""

    def __init__(self, n_d: int, kinked: bool = False):
        self.n_d = n_d
        self.n_a = n_d - 1
        self.n = 2 * n_d - 1
        self.right = -1.0 if kinked else 1.0
        self.eye = np.eye(1 << self.n, dtype=complex)

    def z(self, q: int) -> np.ndarray:
        return kron_op(self.n, {q: "Z"})

    def x(self, q: int) -> np.ndarray:
        return kron_op(self.n, {q: "X"})

    def za(self, k: int) -> np.ndarray:
        if k == -1:
            return self.eye
        if k == self.n_d - 1:
            return self.right * self.eye
        return self.z(self.n_d + k)

    def xa(self, k: int) -> np.ndarray:
        return self.x(self.n_d + k)

    def chain(self) -> np.ndarray:
        return sum(
            0.5 * (self.eye - self.z(i) @ self.za(i - 1) @ self.za(i)) for i in range(self.n_d)
        )

    def five_body(self) -> np.ndarray:
        out = np.zeros_like(self.eye)
        for i in range(self.n_d - 1):
            check = self.z(i) @ self.z(i + 1) @ self.za(i - 1) @ self.za(i + 1)
            out += -0.5 * self.xa(i) @ (self.eye - check)
        return out

    def three_body(self) -> np.ndarray:
        out = np.zeros_like(self.eye)
        for i in range(self.n_d - 1):
            bracket = self.z(i) @ self.z(i + 1) - self.za(i - 1) @ self.za(i + 1)
            out += -0.5 * self.xa(i) @ bracket
        return out

    def beta(self, gamma: float, alpha: float) -> float:
        return (gamma - alpha) / (2 * math.cos(math.pi / (self.n_d + 1)))

    def gadget(self, gamma: float, alpha: float, driver: str = "five-body") -> np.ndarray:
        drv = self.five_body() if driver == "five-body" else self.three_body()
        return gamma * self.chain() + self.beta(gamma, alpha) * drv

    def index(self, z, a) -> int:
        idx = 0
        for b in list(z) + list(a):
            idx = 2 * idx + int(b)
        return idx


def broken_clauses(z, a, kinked: bool) -> list[int]:
    """Clause i is broken when z_i XOR a_{i-1} XOR a_i (with virtual ends) is odd."""
    n_d = len(z)
    ext = [0] + list(a) + [1 if kinked else 0]
    return [i for i in range(n_d) if (z[i] + ext[i] + ext[i + 1]) % 2]


def all_bits(n: int):
    return itertools.product((0, 1), repeat=n)


def sine_rows(n: int) -> np.ndarray:
    s = np.empty((n, n))
    for k in range(n):
        for j in range(n):
            s[k, j] = math.sqrt(2 / (n + 1)) * math.sin(math.pi * (k + 1) * (j + 1) / (n + 1))
    return s


def evolve_expm(h: np.ndarray, psi: np.ndarray, t: float, sign: int = -1) -> np.ndarray:
    return expm(sign * 1j * t * h) @ psi


def sector_ground(h: np.ndarray, n_d: int, z: int) -> tuple[float, np.ndarray]:
    """Ground energy and vector of the data-word block ``z`` (ancilla space)."""
    na = 1 << (n_d - 1)
    blk = h[z * na:(z + 1) * na, z * na:(z + 1) * na]
    e, v = np.linalg.eigh(blk)
    return float(e[0]), v[:, 0]


def dressed_frame(h_gadget: np.ndarray, n_d: int) -> np.ndarray:
    """Block-diagonal eigenbasis of a data-diagonal gadget (no degeneracy handling)."""
    na = 1 << (n_d - 1)
    nz = 1 << n_d
    u = np.zeros_like(h_gadget)
    for z in range(nz):
        blk = h_gadget[z * na:(z + 1) * na, z * na:(z + 1) * na]
        _, v = np.linalg.eigh(blk)
        u[z * na:(z + 1) * na, z * na:(z + 1) * na] = v
    return u


def logical_columns(h_gadget: np.ndarray, n_d: int) -> np.ndarray:
    """Sector ground states with the largest entry made real positive."""
    na = 1 << (n_d - 1)
    nz = 1 << n_d
    w = np.zeros((nz * na, nz), dtype=complex)
    for z in range(nz):
        _, v = sector_ground(h_gadget, n_d, z)
        k = int(np.argmax(np.abs(v)))
        w[z * na:(z + 1) * na, z] = v * (abs(v[k]) / v[k])
    return w
