"""Gaussian-state engine for quadratic dynamics.

Quadratures per mode are ``x = a + a^dagger`` and ``p = -i (a - a^dagger)``, ordered
``(x_1, p_1, x_2, p_2, ...)``. The vacuum covariance is the identity, so
``[x, p] = 2i`` and the phase-rotated quadrature ``q(theta) = a e^{i theta} + h.c.``
equals ``x cos(theta) - p sin(theta)``.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Sequence

import numpy as np

from .effective import BogoliubovMap
from .errors import PhysicsDomainError

# (a, a^dagger) = _A2Q^-1 (x, p);  (x, p) = _A2Q (a, a^dagger)
_A2Q = np.array([[1.0, 1.0], [-1j, 1j]])


def symplectic_form(n_modes: int) -> np.ndarray:
    return np.kron(np.eye(n_modes), np.array([[0.0, 1.0], [-1.0, 0.0]]))


@dataclass(frozen=True, eq=False)
class GaussianState:
    """Mean vector and covariance ``V_ij = <{dQ_i, dQ_j}>/2`` of an ``n_modes`` state."""

    mean: np.ndarray
    cov: np.ndarray
    modes: tuple[str, ...]

    def __post_init__(self):
        mean = np.array(self.mean, dtype=float)
        cov = np.array(self.cov, dtype=float)
        modes = tuple(self.modes)
        n = 2 * len(modes)
        if mean.shape != (n,) or cov.shape != (n, n):
            raise ValueError(f"mean/cov shapes {mean.shape}, {cov.shape} do not fit {len(modes)} modes")
        if not np.allclose(cov, cov.T, atol=1e-10 * max(1.0, np.abs(cov).max())):
            raise PhysicsDomainError("covariance is not symmetric")
        cov = 0.5 * (cov + cov.T)
        mean.setflags(write=False)
        cov.setflags(write=False)
        object.__setattr__(self, "mean", mean)
        object.__setattr__(self, "cov", cov)
        object.__setattr__(self, "modes", modes)

    @property
    def n_modes(self) -> int:
        return len(self.modes)

    def index(self, mode: str) -> int:
        return self.modes.index(mode)

    def uncertainty_min_eig(self) -> float:
        """Smallest eigenvalue of ``V + i Omega``; non-negative for physical states."""
        m = self.cov + 1j * symplectic_form(self.n_modes)
        return float(np.linalg.eigvalsh(m).min())

    def is_physical(self, tol: float = 1e-8) -> bool:
        return self.uncertainty_min_eig() >= -tol * max(1.0, np.abs(self.cov).max())

    def purity(self) -> float:
        """``1/sqrt(det V)`` in vacuum-unit covariance."""
        return float(1.0 / math.sqrt(np.linalg.det(self.cov)))

    def reduced(self, modes: Sequence[str]) -> "GaussianState":
        idx = []
        for m in modes:
            k = self.index(m)
            idx += [2 * k, 2 * k + 1]
        return GaussianState(self.mean[idx], self.cov[np.ix_(idx, idx)], tuple(modes))


def vacuum(modes: int | Sequence[str]) -> GaussianState:
    if isinstance(modes, int):
        if modes < 1:
            raise PhysicsDomainError("need at least one mode")
        modes = tuple(f"m{k}" for k in range(modes))
    n = 2 * len(modes)
    return GaussianState(np.zeros(n), np.eye(n), tuple(modes))


def thermal(modes: Sequence[str], nbar: Sequence[float]) -> GaussianState:
    """Product of thermal states with occupations ``nbar``."""
    nbar = np.asarray(nbar, dtype=float)
    if len(nbar) != len(modes) or np.any(nbar < 0):
        raise PhysicsDomainError("need one non-negative occupation per mode")
    return GaussianState(np.zeros(2 * len(modes)), np.diag(np.repeat(2 * nbar + 1, 2)), tuple(modes))


def quadrature_matrix(bmap: BogoliubovMap) -> np.ndarray:
    """Real matrix ``S`` with ``Q(t) = S Q(0)`` for the quadrature vector ``Q``."""
    n = len(bmap.modes)
    to_q = np.kron(np.eye(n), _A2Q)
    s = to_q @ bmap.matrix @ np.linalg.inv(to_q)
    if np.abs(s.imag).max() > 1e-10 * max(1.0, np.abs(s).max()):
        raise PhysicsDomainError("map does not respect the a / a^dagger conjugation structure")
    return s.real


def apply_bogoliubov(state: GaussianState, bmap: BogoliubovMap, tol: float = 1e-10) -> GaussianState:
    """Propagate ``state`` through the Heisenberg map ``bmap``."""
    if bmap.modes != state.modes:
        raise PhysicsDomainError(f"map modes {bmap.modes} do not match state modes {state.modes}")
    scale = max(1.0, np.abs(bmap.matrix).max() ** 2)
    if bmap.symplectic_error() > tol * scale or bmap.conjugation_error() > tol * scale:
        raise PhysicsDomainError("map is not symplectic")
    s = quadrature_matrix(bmap)
    return GaussianState(s @ state.mean, s @ state.cov @ s.T, state.modes)


def cavity_decay(state: GaussianState, rates: dict[str, float] | Sequence[float], t: float) -> GaussianState:
    """Damp each mode toward vacuum: ``a -> e^{-kappa t} a + vacuum noise``."""
    if t < 0:
        raise PhysicsDomainError("decay time must be non-negative")
    if isinstance(rates, dict):
        kap = np.array([rates.get(m, 0.0) for m in state.modes], dtype=float)
    else:
        kap = np.asarray(rates, dtype=float)
    if kap.shape != (state.n_modes,) or np.any(kap < 0):
        raise PhysicsDomainError("need one non-negative rate per mode")
    damp = np.repeat(np.exp(-kap * t), 2)
    noise = np.diag(1 - damp**2)
    return GaussianState(damp * state.mean, np.outer(damp, damp) * state.cov + noise, state.modes)


# --- moments -----------------------------------------------------------------


def _quad_vector(state: GaussianState, mode: str, theta: float) -> np.ndarray:
    u = np.zeros(2 * state.n_modes)
    k = state.index(mode)
    u[2 * k] = math.cos(theta)
    u[2 * k + 1] = -math.sin(theta)
    return u


def _ladder_vector(state: GaussianState, mode: str, dagger: bool = False) -> np.ndarray:
    u = np.zeros(2 * state.n_modes, dtype=complex)
    k = state.index(mode)
    u[2 * k] = 0.5
    u[2 * k + 1] = -0.5j if dagger else 0.5j
    return u


def moment(state: GaussianState, u: np.ndarray, w: np.ndarray) -> complex:
    """``<A B>`` for ``A = u.Q`` and ``B = w.Q`` (ordered product)."""
    second = state.cov + np.outer(state.mean, state.mean) + 1j * symplectic_form(state.n_modes)
    return complex(u @ second @ w)


def quadrature_second_moment(state: GaussianState, mode1: str, theta1: float,
                             mode2: str, theta2: float) -> float:
    """Symmetrized ``<q_1(theta_1) q_2(theta_2)>``."""
    u = _quad_vector(state, mode1, theta1)
    w = _quad_vector(state, mode2, theta2)
    return float(u @ (state.cov + np.outer(state.mean, state.mean)) @ w)


def occupation(state: GaussianState, mode: str) -> float:
    """``<m^dagger m>``."""
    u = _ladder_vector(state, mode, dagger=True)
    w = _ladder_vector(state, mode)
    return moment(state, u, w).real


def pair_moment(state: GaussianState, mode1: str, mode2: str) -> complex:
    """``<m_1 m_2>`` (anomalous moment)."""
    return moment(state, _ladder_vector(state, mode1), _ladder_vector(state, mode2))


def cross_moment(state: GaussianState, mode1: str, mode2: str) -> complex:
    """``<m_1^dagger m_2>``."""
    return moment(state, _ladder_vector(state, mode1, dagger=True), _ladder_vector(state, mode2))


def _variance(state: GaussianState, u: np.ndarray) -> float:
    return float(u @ state.cov @ u)


def epr_variance(state: GaussianState, theta1: float = 0.0, theta2: float = 0.0,
                 modes: tuple[str, str] | None = None) -> tuple[float, float]:
    """Variances of ``q_1(theta_1) - q_2(theta_2)`` and of the conjugate sum ``P_1 + P_2``.

    ``P_j = x_j sin(theta_j) + p_j cos(theta_j)``; both equal 2 for vacuum.
    """
    if state.n_modes < 2:
        raise PhysicsDomainError("EPR variances need two modes")
    m1, m2 = modes if modes is not None else state.modes[:2]
    diff = _quad_vector(state, m1, theta1) - _quad_vector(state, m2, theta2)
    # P_j = -q_j(theta_j + pi/2)
    conj = -_quad_vector(state, m1, theta1 + math.pi / 2) - _quad_vector(state, m2, theta2 + math.pi / 2)
    return _variance(state, diff), _variance(state, conj)


def single_mode_fidelity(s1: GaussianState, s2: GaussianState) -> float:
    """Fidelity of two single-mode Gaussian states (vacuum-unit covariances)."""
    if s1.n_modes != 1 or s2.n_modes != 1:
        raise PhysicsDomainError("single-mode states required")
    vsum = s1.cov + s2.cov
    big = np.linalg.det(vsum)
    small = (np.linalg.det(s1.cov) - 1) * (np.linalg.det(s2.cov) - 1)
    small = max(small, 0.0)
    d = s1.mean - s2.mean
    return float(2 / (math.sqrt(big + small) - math.sqrt(small))
                 * math.exp(-0.5 * d @ np.linalg.solve(vsum, d)))


def two_mode_fock_amplitudes(state: GaussianState, n_max: int, tol: float = 1e-8) -> np.ndarray:
    """Amplitudes on ``|n, n>`` of a pure two-mode squeezed vacuum.

    Raises when ``state`` is not of that form (non-zero mean, single-mode squeezing,
    cross-mode coherence or mixedness).
    """
    if state.n_modes != 2:
        raise PhysicsDomainError("two-mode state required")
    m1, m2 = state.modes
    scale = max(1.0, np.abs(state.cov).max())
    checks = [
        np.abs(state.mean).max(),
        abs(pair_moment(state, m1, m1)),
        abs(pair_moment(state, m2, m2)),
        abs(cross_moment(state, m1, m2)),
        abs(occupation(state, m1) - occupation(state, m2)),
        abs(np.linalg.det(state.cov) - 1),
    ]
    if max(checks) > tol * scale:
        raise PhysicsDomainError("state is not a pure two-mode squeezed vacuum")
    n = occupation(state, m1)
    lam = pair_moment(state, m1, m2) / (n + 1)
    return math.sqrt(1 - abs(lam) ** 2) * lam ** np.arange(n_max + 1)
