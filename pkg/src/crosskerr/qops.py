"""Operator algebra on small truncated tensor-product spaces.

Everything is stored as dense complex numpy arrays. Superoperators use
column-stacking: ``vec(A @ rho @ B) = kron(B.T, A) @ vec(rho)`` with
``vec(rho) = rho.reshape(-1, order="F")``.
"""
from __future__ import annotations

from dataclasses import dataclass, field
from typing import Iterable, Sequence

import numpy as np

# Numerical tolerances, overridable at run time (see config).
TOLERANCES = {
    "hermitian": 1e-9,
    "trace": 1e-9,
    "positivity": -1e-8,
    "eig_residual": 1e-8,
    "ket_norm": 1e-9,
}


@dataclass(frozen=True)
class ModeSpec:
    name: str
    dim: int

    def __post_init__(self):
        if int(self.dim) < 2:
            raise ValueError(f"mode '{self.name}' needs dim >= 2, got {self.dim}")


@dataclass(frozen=True)
class HilbertSpace:
    """Ordered tensor product of truncated modes."""

    modes: tuple

    def __post_init__(self):
        modes = tuple(m if isinstance(m, ModeSpec) else ModeSpec(*m) for m in self.modes)
        names = [m.name for m in modes]
        if len(set(names)) != len(names):
            raise ValueError(f"duplicate mode labels: {names}")
        object.__setattr__(self, "modes", modes)

    @classmethod
    def from_dims(cls, **dims) -> "HilbertSpace":
        return cls(tuple(ModeSpec(k, int(v)) for k, v in dims.items()))

    @property
    def dims(self) -> tuple:
        return tuple(m.dim for m in self.modes)

    @property
    def names(self) -> tuple:
        return tuple(m.name for m in self.modes)

    @property
    def total_dim(self) -> int:
        return int(np.prod(self.dims))

    def index(self, mode: str) -> int:
        try:
            return self.names.index(mode)
        except ValueError:
            raise KeyError(f"unknown mode '{mode}' (have {self.names})") from None

    def basis_index(self, occupations: Sequence[int]) -> int:
        return int(np.ravel_multi_index(tuple(occupations), self.dims))

    def basis_labels(self) -> np.ndarray:
        """Occupation tuple of every basis vector, shape (total_dim, n_modes)."""
        return np.array(np.unravel_index(np.arange(self.total_dim), self.dims)).T


@dataclass(frozen=True)
class Operator:
    space: HilbertSpace
    matrix: np.ndarray = field(repr=False)

    def __post_init__(self):
        m = np.asarray(self.matrix, dtype=complex)
        n = self.space.total_dim
        if m.shape != (n, n):
            raise ValueError(f"operator shape {m.shape} does not match space dim {n}")
        object.__setattr__(self, "matrix", m)

    def dag(self) -> "Operator":
        return Operator(self.space, self.matrix.conj().T)

    def _other(self, other):
        if isinstance(other, Operator):
            if other.space.dims != self.space.dims:
                raise ValueError("operators live on different spaces")
            return other.matrix
        return other

    def __add__(self, other):
        if np.isscalar(other):
            return Operator(self.space, self.matrix + other * np.eye(self.space.total_dim))
        return Operator(self.space, self.matrix + self._other(other))

    __radd__ = __add__

    def __sub__(self, other):
        return self + (-1) * other

    def __rsub__(self, other):
        return (-1) * self + other

    def __mul__(self, c):
        if isinstance(c, Operator):
            raise TypeError("use @ for operator products")
        return Operator(self.space, self.matrix * c)

    __rmul__ = __mul__

    def __neg__(self):
        return self * -1

    def __matmul__(self, other):
        if isinstance(other, Operator):
            return Operator(self.space, self.matrix @ self._other(other))
        return self.matrix @ other

    def is_hermitian(self, tol: float | None = None) -> bool:
        return hermiticity_error(self.matrix) <= (TOLERANCES["hermitian"] if tol is None else tol)


def hermiticity_error(m: np.ndarray) -> float:
    """Relative norm of the anti-hermitian part."""
    m = np.asarray(m)
    scale = max(np.linalg.norm(m), 1e-300)
    return float(np.linalg.norm(m - m.conj().T) / scale)


@dataclass(frozen=True)
class QuantumState:
    kind: str  # "ket" or "dm"
    data: np.ndarray = field(repr=False)
    space: HilbertSpace | None = None

    def __post_init__(self):
        d = np.asarray(self.data, dtype=complex)
        object.__setattr__(self, "data", d)
        if self.kind not in ("ket", "dm"):
            raise ValueError("kind must be 'ket' or 'dm'")
        n = d.shape[0]
        if self.space is not None and n != self.space.total_dim:
            raise ValueError("state dimension does not match space")
        if self.kind == "ket":
            if d.ndim != 1:
                raise ValueError("ket must be a vector")
            if abs(np.linalg.norm(d) - 1) > TOLERANCES["ket_norm"]:
                raise ValueError(f"ket not normalised (norm {np.linalg.norm(d):.3g})")
        else:
            check_density_matrix(d)

    def dm(self) -> np.ndarray:
        if self.kind == "dm":
            return self.data
        return np.outer(self.data, self.data.conj())

    def expect(self, op) -> complex:
        m = op.matrix if isinstance(op, Operator) else np.asarray(op)
        if self.kind == "ket":
            return complex(self.data.conj() @ m @ self.data)
        return complex(np.trace(m @ self.data))


def check_density_matrix(rho: np.ndarray) -> dict:
    """Raise if rho is not a valid density matrix; return the diagnostics."""
    herm = float(np.max(np.abs(rho - rho.conj().T))) if rho.size else 0.0
    tr = complex(np.trace(rho))
    lam_min = float(np.linalg.eigvalsh(0.5 * (rho + rho.conj().T))[0])
    diag = {"hermiticity": herm, "trace_error": abs(tr - 1), "min_eig": lam_min}
    if herm > TOLERANCES["hermitian"]:
        raise ValueError(f"density matrix not hermitian ({herm:.3g})")
    if abs(tr - 1) > TOLERANCES["trace"]:
        raise ValueError(f"density matrix trace {tr:.12g} != 1")
    if lam_min < TOLERANCES["positivity"]:
        raise ValueError(f"density matrix has negative eigenvalue {lam_min:.3g}")
    return diag


def destroy(dim: int) -> np.ndarray:
    """Single-mode annihilation matrix with <n-1|a|n> = sqrt(n)."""
    return np.diag(np.sqrt(np.arange(1, dim)), 1).astype(complex)


def embed(space: HilbertSpace, mode: str, local: np.ndarray) -> Operator:
    """Place a single-mode matrix on ``mode``, identities elsewhere."""
    k = space.index(mode)
    local = np.asarray(local, dtype=complex)
    if local.shape != (space.dims[k], space.dims[k]):
        raise ValueError(f"local operator shape {local.shape} does not fit mode '{mode}'")
    out = np.ones((1, 1), dtype=complex)
    for i, d in enumerate(space.dims):
        out = np.kron(out, local if i == k else np.eye(d))
    return Operator(space, out)


def identity(space: HilbertSpace) -> Operator:
    return Operator(space, np.eye(space.total_dim))


def ladder(space: HilbertSpace, mode: str) -> Operator:
    """Annihilation operator of ``mode`` embedded in ``space``."""
    k = space.index(mode)
    return embed(space, mode, destroy(space.dims[k]))


def phase_number_local(dim: int, E_C: float, E_J_eff: float):
    """Single-mode (phi, n) matrices in the oscillator basis."""
    if E_C <= 0 or E_J_eff <= 0:
        raise ValueError("E_C and E_J_eff must be positive")
    a = destroy(dim)
    phi = (8 * E_C / E_J_eff) ** 0.25 * (a + a.conj().T) / np.sqrt(2)
    n = -1j * (E_J_eff / (8 * E_C)) ** 0.25 * (a - a.conj().T) / np.sqrt(2)
    return phi, n


def number_and_phase(space: HilbertSpace, mode: str, E_C: float, E_J_eff: float):
    """Return ``(phi, n)`` for a transmon-like mode.

    ``phi = (8 E_C / E_J)^(1/4) (x + x^dag)/sqrt(2)`` and
    ``n = -i (E_J / 8 E_C)^(1/4) (x - x^dag)/sqrt(2)``.
    """
    k = space.index(mode)
    phi, n = phase_number_local(space.dims[k], E_C, E_J_eff)
    return embed(space, mode, phi), embed(space, mode, n)


def eig_hermitian(op):
    """Ascending eigenvalues and orthonormal eigenvectors of a hermitian operator."""
    m = op.matrix if isinstance(op, Operator) else np.asarray(op, dtype=complex)
    if m.ndim != 2 or m.shape[0] != m.shape[1]:
        raise ValueError("need a square matrix")
    err = hermiticity_error(m)
    if err > TOLERANCES["hermitian"]:
        raise ValueError(f"operator is not hermitian (relative error {err:.3g})")
    m = 0.5 * (m + m.conj().T)
    if np.allclose(m.imag, 0.0):
        w, v = np.linalg.eigh(m.real)
        v = v.astype(complex)
    else:
        w, v = np.linalg.eigh(m)
    return w, v


def matrix_function(m: np.ndarray, f) -> np.ndarray:
    """f(M) for hermitian M via eigendecomposition."""
    w, v = np.linalg.eigh(m)
    return (v * f(w)) @ v.conj().T


def spre(a: np.ndarray) -> np.ndarray:
    """Left multiplication rho -> A rho, column-stacked."""
    return np.kron(np.eye(a.shape[0]), a)


def spost(b: np.ndarray) -> np.ndarray:
    """Right multiplication rho -> rho B, column-stacked."""
    return np.kron(b.T, np.eye(b.shape[0]))


def vec(rho: np.ndarray) -> np.ndarray:
    return np.asarray(rho).reshape(-1, order="F")


def unvec(v: np.ndarray, dim: int | None = None) -> np.ndarray:
    if dim is None:
        dim = int(round(np.sqrt(v.size)))
    return np.asarray(v).reshape((dim, dim), order="F")


def liouvillian(H, jump_ops: Iterable = ()) -> np.ndarray:
    """Lindblad generator with dρ/dt = L vec(ρ).

    Parameters
    ----------
    H : Operator or ndarray
        Hamiltonian in angular-frequency units (hbar = 1).
    jump_ops : iterable of (operator, rate)
        Each pair contributes ``rate * D[x]`` with
        ``D[x]ρ = xρx† - (x†xρ + ρx†x)/2``.
    """
    h = H.matrix if isinstance(H, Operator) else np.asarray(H, dtype=complex)
    d = h.shape[0]
    if h.shape != (d, d):
        raise ValueError("Hamiltonian must be square")
    L = -1j * (spre(h) - spost(h))
    for x, rate in jump_ops:
        x = x.matrix if isinstance(x, Operator) else np.asarray(x, dtype=complex)
        if x.shape != (d, d):
            raise ValueError(f"jump operator shape {x.shape} != {(d, d)}")
        if rate < 0:
            raise ValueError(f"negative rate {rate}")
        if rate == 0:
            continue
        xdx = x.conj().T @ x
        L = L + rate * (np.kron(x.conj(), x) - 0.5 * spre(xdx) - 0.5 * spost(xdx))
    return L
