"""Truncated Fock-space operators and states.

Basis ordering: modes are laid out in declaration order and the Fock index of
the *last* declared mode varies fastest, i.e. the global basis index of
``|n_0, n_1, ..., n_{k-1}>`` is ``np.ravel_multi_index((n_0, ..., n_{k-1}), dims)``.
This is the ordering produced by ``np.kron(A_0, np.kron(A_1, ...))``.
"""

from __future__ import annotations

from dataclasses import dataclass
from functools import reduce
from typing import Sequence

import numpy as np
import scipy.linalg
import scipy.sparse as sp

from .errors import PhysicsDomainError

DIPOLE = "dipole"


def _frozen(matrix) -> np.ndarray:
    arr = np.array(matrix, dtype=complex)
    arr.setflags(write=False)
    return arr


@dataclass(frozen=True)
class ModeSpace:
    """Product of truncated single-mode spaces.

    Args:
        dims: truncation dimension of each mode (each >= 2).
        labels: unique mode labels, e.g. ``("dipole", "motion", "cav1", "cav2")``.
    """

    dims: tuple[int, ...]
    labels: tuple[str, ...]

    def __post_init__(self):
        dims = tuple(int(d) for d in self.dims)
        labels = tuple(str(x) for x in self.labels)
        object.__setattr__(self, "dims", dims)
        object.__setattr__(self, "labels", labels)
        if len(dims) != len(labels):
            raise ValueError("dims and labels must have the same length")
        if not dims:
            raise ValueError("a ModeSpace needs at least one mode")
        if any(d < 2 for d in dims):
            raise ValueError(f"every truncation dimension must be >= 2, got {dims}")
        if len(set(labels)) != len(labels):
            raise ValueError(f"mode labels must be unique, got {labels}")
        if DIPOLE in labels and dims[labels.index(DIPOLE)] != 2:
            raise ValueError("the dipole mode must have dimension 2")

    @classmethod
    def from_pairs(cls, pairs: Sequence[tuple[str, int]]) -> "ModeSpace":
        labels, dims = zip(*pairs)
        return cls(tuple(dims), tuple(labels))

    @property
    def total(self) -> int:
        return int(np.prod(self.dims))

    def index(self, label: str) -> int:
        try:
            return self.labels.index(label)
        except ValueError:
            raise KeyError(f"unknown mode label {label!r}; space has {self.labels}") from None

    def dim(self, label: str) -> int:
        return self.dims[self.index(label)]

    def single(self, label: str) -> "ModeSpace":
        return ModeSpace((self.dim(label),), (label,))

    def subspace(self, labels: Sequence[str]) -> "ModeSpace":
        labels = [lab for lab in self.labels if lab in set(labels)]
        return ModeSpace(tuple(self.dim(lab) for lab in labels), tuple(labels))

    def __contains__(self, label) -> bool:
        return label in self.labels


@dataclass(frozen=True, eq=False)
class Operator:
    space: ModeSpace
    matrix: np.ndarray

    def __post_init__(self):
        mat = _frozen(self.matrix)
        if mat.shape != (self.space.total, self.space.total):
            raise ValueError(
                f"operator shape {mat.shape} does not match space dimension {self.space.total}"
            )
        object.__setattr__(self, "matrix", mat)

    def _check(self, other: "Operator"):
        if other.space != self.space:
            raise ValueError("operators live on different spaces")

    def __add__(self, other):
        if isinstance(other, Operator):
            self._check(other)
            return Operator(self.space, self.matrix + other.matrix)
        return NotImplemented

    def __sub__(self, other):
        if isinstance(other, Operator):
            self._check(other)
            return Operator(self.space, self.matrix - other.matrix)
        return NotImplemented

    def __neg__(self):
        return Operator(self.space, -self.matrix)

    def __mul__(self, scalar):
        if np.isscalar(scalar):
            return Operator(self.space, scalar * self.matrix)
        return NotImplemented

    __rmul__ = __mul__

    def __matmul__(self, other):
        if isinstance(other, Operator):
            self._check(other)
            return Operator(self.space, self.matrix @ other.matrix)
        return NotImplemented

    def dag(self) -> "Operator":
        return Operator(self.space, self.matrix.conj().T)

    def commutator(self, other: "Operator") -> "Operator":
        return self @ other - other @ self

    def norm(self) -> float:
        return float(np.linalg.norm(self.matrix, 2))

    def is_hermitian(self, atol: float = 1e-12) -> bool:
        return bool(np.max(np.abs(self.matrix - self.matrix.conj().T), initial=0.0) <= atol)


@dataclass(frozen=True, eq=False)
class DensityState:
    """Normalized, Hermitian, positive semidefinite density matrix.

    Pass ``check=False`` to skip the eigenvalue test for large spaces.
    """

    space: ModeSpace
    matrix: np.ndarray
    check: bool = True

    def __post_init__(self):
        mat = _frozen(self.matrix)
        if mat.shape != (self.space.total, self.space.total):
            raise ValueError("density matrix does not match space dimension")
        object.__setattr__(self, "matrix", mat)
        if self.check:
            tr = np.trace(mat)
            if abs(tr - 1.0) > 1e-10:
                raise ValueError(f"density matrix trace is {tr}, expected 1")
            if np.max(np.abs(mat - mat.conj().T)) > 1e-10:
                raise ValueError("density matrix is not Hermitian")
            lam = np.linalg.eigvalsh(0.5 * (mat + mat.conj().T))
            if lam[0] < -1e-8:
                raise ValueError(f"density matrix has negative eigenvalue {lam[0]:.3e}")

    @classmethod
    def from_ket(cls, space: ModeSpace, psi) -> "DensityState":
        psi = np.asarray(psi, dtype=complex)
        psi = psi / np.linalg.norm(psi)
        return cls(space, np.outer(psi, psi.conj()))

    def trace(self) -> complex:
        return complex(np.trace(self.matrix))

    def purity(self) -> float:
        return float(np.real(np.vdot(self.matrix.conj().T, self.matrix)))


# --- single-mode building blocks -------------------------------------------


def ladder_matrix(dim: int) -> np.ndarray:
    """Truncated annihilation matrix: ``a|n> = sqrt(n)|n-1>``."""
    return np.diag(np.sqrt(np.arange(1, dim, dtype=float)), k=1).astype(complex)


def _embed_matrix(single: np.ndarray, space: ModeSpace, mode: str) -> np.ndarray:
    k = space.index(mode)
    factors = [np.eye(d, dtype=complex) for d in space.dims]
    factors[k] = single
    return reduce(np.kron, factors)


def embed_sparse(single, space: ModeSpace, mode: str) -> sp.csr_matrix:
    """Sparse Kronecker embedding of a single-mode matrix (identity elsewhere)."""
    k = space.index(mode)
    left = int(np.prod(space.dims[:k]))
    right = int(np.prod(space.dims[k + 1:]))
    out = sp.kron(sp.identity(left, dtype=complex, format="csr"), sp.csr_matrix(single))
    return sp.kron(out, sp.identity(right, dtype=complex, format="csr"), format="csr")


def identity(space: ModeSpace) -> Operator:
    return Operator(space, np.eye(space.total, dtype=complex))


def tensor_embed(op: Operator, space: ModeSpace, mode: str) -> Operator:
    """Embed a single-mode operator into ``space`` on ``mode`` (identity elsewhere)."""
    k = space.index(mode)
    if op.matrix.shape[0] != space.dims[k]:
        raise ValueError(
            f"operator dimension {op.matrix.shape[0]} does not match mode {mode!r} "
            f"(dim {space.dims[k]})"
        )
    return Operator(space, _embed_matrix(op.matrix, space, mode))


def annihilation(space: ModeSpace, mode: str) -> Operator:
    k = space.index(mode)
    return Operator(space, _embed_matrix(ladder_matrix(space.dims[k]), space, mode))


def creation(space: ModeSpace, mode: str) -> Operator:
    return annihilation(space, mode).dag()


def number(space: ModeSpace, mode: str) -> Operator:
    k = space.index(mode)
    n = np.diag(np.arange(space.dims[k], dtype=complex))
    return Operator(space, _embed_matrix(n, space, mode))


def position(space: ModeSpace, mode: str) -> Operator:
    """Dimensionless position ``b + b^dagger``."""
    a = annihilation(space, mode)
    return a + a.dag()


def sigma_minus(space: ModeSpace) -> Operator:
    """Dipole lowering ``|g><e|`` with ``|g> = index 0``, ``|e> = index 1``."""
    if DIPOLE not in space:
        raise KeyError("space has no dipole mode")
    return annihilation(space, DIPOLE)


def expectation(state: DensityState, op: Operator) -> complex:
    if state.space != op.space:
        raise ValueError("state and operator live on different spaces")
    # tr(rho O) without forming the product
    return complex(np.sum(state.matrix.T * op.matrix))


def ket_expectation(psi: np.ndarray, op) -> complex:
    """``<psi|O|psi>`` for a dense or sparse matrix ``O`` (or an :class:`Operator`)."""
    mat = op.matrix if isinstance(op, Operator) else op
    return complex(np.vdot(psi, mat @ psi))


def sparse_annihilation(space: ModeSpace, mode: str) -> sp.csr_matrix:
    return embed_sparse(ladder_matrix(space.dim(mode)), space, mode)


# --- states ------------------------------------------------------------------


def fock_ket(space: ModeSpace, occupations: dict[str, int] | None = None) -> np.ndarray:
    occupations = occupations or {}
    idx = []
    for label, d in zip(space.labels, space.dims):
        n = int(occupations.get(label, 0))
        if not 0 <= n < d:
            raise ValueError(f"occupation {n} out of range for mode {label!r} (dim {d})")
        idx.append(n)
    psi = np.zeros(space.total, dtype=complex)
    psi[np.ravel_multi_index(tuple(idx), space.dims)] = 1.0
    return psi


def fock_state(space: ModeSpace, occupations: dict[str, int] | None = None) -> DensityState:
    return DensityState.from_ket(space, fock_ket(space, occupations))


def vacuum(space: ModeSpace) -> DensityState:
    return fock_state(space)


def thermal_populations(dim: int, nbar: float) -> np.ndarray:
    """Geometric populations ``p_n ∝ (nbar/(1+nbar))^n`` truncated and renormalized."""
    if nbar < 0:
        raise PhysicsDomainError(f"mean occupation must be non-negative, got {nbar}")
    p = np.zeros(dim)
    if nbar == 0:
        p[0] = 1.0
        return p
    ratio = nbar / (1.0 + nbar)
    p = ratio ** np.arange(dim)
    return p / p.sum()


def thermal_state(space: ModeSpace, mode: str, nbar: float) -> DensityState:
    """Thermal state on ``mode`` with all other modes in their ground state."""
    k = space.index(mode)
    factors = [np.zeros((d, d), dtype=complex) for d in space.dims]
    for i, f in enumerate(factors):
        f[0, 0] = 1.0
    factors[k] = np.diag(thermal_populations(space.dims[k], nbar)).astype(complex)
    return DensityState(space, reduce(np.kron, factors))


# --- reductions and diagnostics -------------------------------------------------


def partial_trace_matrix(matrix: np.ndarray, space: ModeSpace, keep: Sequence[str]) -> np.ndarray:
    keep_idx = sorted(space.index(lab) for lab in keep)
    n = len(space.dims)
    rho = np.asarray(matrix).reshape(space.dims + space.dims)
    trace_idx = [i for i in range(n) if i not in keep_idx]
    # move traced modes to the end and contract them
    row = keep_idx + trace_idx
    col = [n + i for i in keep_idx] + [n + i for i in trace_idx]
    rho = rho.transpose(row + col)
    dk = int(np.prod([space.dims[i] for i in keep_idx]))
    dt = int(np.prod([space.dims[i] for i in trace_idx])) if trace_idx else 1
    rho = rho.reshape(dk, dt, dk, dt)
    return np.einsum("ijkj->ik", rho)


def partial_trace(state: DensityState, keep: Sequence[str]) -> DensityState:
    sub = state.space.subspace(keep)
    return DensityState(sub, partial_trace_matrix(state.matrix, state.space, keep), check=False)


def reduced_from_ket(psi: np.ndarray, space: ModeSpace, keep: Sequence[str]) -> np.ndarray:
    """Reduced density matrix of a pure state without forming the full projector."""
    keep_idx = sorted(space.index(lab) for lab in keep)
    trace_idx = [i for i in range(len(space.dims)) if i not in keep_idx]
    t = np.asarray(psi).reshape(space.dims).transpose(keep_idx + trace_idx)
    dk = int(np.prod([space.dims[i] for i in keep_idx]))
    t = t.reshape(dk, -1)
    return t @ t.conj().T


def top_level_populations(state_or_matrix, space: ModeSpace | None = None) -> dict[str, float]:
    """Population of the highest retained Fock level of every non-dipole mode."""
    if isinstance(state_or_matrix, DensityState):
        space = state_or_matrix.space
        diag = np.real(np.diag(state_or_matrix.matrix))
    else:
        arr = np.asarray(state_or_matrix)
        diag = np.abs(arr) ** 2 if arr.ndim == 1 else np.real(np.diag(arr))
    probs = diag.reshape(space.dims)
    out = {}
    for k, (label, d) in enumerate(zip(space.labels, space.dims)):
        if label == DIPOLE:
            continue
        axes = tuple(i for i in range(len(space.dims)) if i != k)
        out[label] = float(probs.sum(axis=axes)[d - 1])
    return out


def fidelity(rho: DensityState | np.ndarray, sigma: DensityState | np.ndarray) -> float:
    """Uhlmann fidelity ``(tr sqrt(sqrt(rho) sigma sqrt(rho)))^2``."""
    a = rho.matrix if isinstance(rho, DensityState) else np.asarray(rho)
    b = sigma.matrix if isinstance(sigma, DensityState) else np.asarray(sigma)
    w, v = np.linalg.eigh(0.5 * (a + a.conj().T))
    sqrt_a = (v * np.sqrt(np.clip(w, 0, None))) @ v.conj().T
    m = sqrt_a @ b @ sqrt_a
    lam = np.linalg.eigvalsh(0.5 * (m + m.conj().T))
    return float(np.sum(np.sqrt(np.clip(lam, 0, None))) ** 2)


def matrix_function_hermitian(matrix: np.ndarray, func) -> np.ndarray:
    """Apply ``func`` to a Hermitian matrix through its eigendecomposition."""
    w, v = scipy.linalg.eigh(matrix)
    return (v * func(w)) @ v.conj().T
