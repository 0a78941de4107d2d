"""Full atom + motion + cavity model in the frame rotating at the laser frequency.

Units: hbar = 1, all rates and frequencies in rad/s (or any consistent angular unit).
"""

from __future__ import annotations

import math
from dataclasses import asdict, dataclass, field, replace
from typing import Callable, Optional

import numpy as np
import scipy.integrate

from . import fock
from .errors import PhysicsDomainError
from .fock import DIPOLE, DensityState, ModeSpace, Operator

CAVITY_LABELS = ("cav1", "cav2")
MOTION = "motion"


@dataclass(frozen=True)
class SystemParams:
    """Every physical symbol of the single-atom cavity model.

    Frequencies are angular (rad/s). ``delta`` is the signed laser-atom detuning
    ``omega_L - omega_0``; ``delta1``/``delta2`` are the laser-cavity detunings
    ``omega_L - omega_j``. ``omega`` is the (complex) Rabi amplitude and the
    optional ``envelope`` a dimensionless pulse shape multiplying it.
    """

    nu: float
    delta: float
    omega: complex
    g1: complex
    g2: complex = 0.0
    delta1: float = 0.0
    delta2: float = 0.0
    phi1: float = 0.0
    phi2: float = 0.0
    theta_c: float = math.pi / 2
    theta_l: float = 0.0
    eta: float = 0.0
    gamma: float = 0.0
    kappa1: float = 0.0
    kappa2: float = 0.0
    envelope: Optional[Callable[[float], float]] = field(default=None, compare=False)

    def __post_init__(self):
        for name in ("nu", "delta", "delta1", "delta2", "phi1", "phi2", "theta_c",
                     "theta_l", "eta", "gamma", "kappa1", "kappa2"):
            value = getattr(self, name)
            if not np.isfinite(value) or np.iscomplexobj(value):
                raise PhysicsDomainError(f"{name} must be a finite real number, got {value!r}")
            object.__setattr__(self, name, float(value))
        for name in ("omega", "g1", "g2"):
            value = complex(getattr(self, name))
            if not (np.isfinite(value.real) and np.isfinite(value.imag)):
                raise PhysicsDomainError(f"{name} must be finite, got {value!r}")
            object.__setattr__(self, name, value)
        if self.nu <= 0:
            raise PhysicsDomainError(f"trap frequency nu must be positive, got {self.nu}")
        if self.gamma < 0 or self.kappa1 < 0 or self.kappa2 < 0:
            raise PhysicsDomainError("decay rates must be non-negative")
        if not 0 <= self.eta < 1:
            raise PhysicsDomainError(f"Lamb-Dicke parameter must lie in [0, 1), got {self.eta}")

    @classmethod
    def scheme1(cls, nu: float, delta: float, omega: complex, g1: complex,
                g2: complex | None = None, **kwargs) -> "SystemParams":
        """Bichromatic preset: cavity modes at the Stokes/anti-Stokes sidebands."""
        if "delta1" in kwargs or "delta2" in kwargs:
            raise PhysicsDomainError("the scheme-1 preset fixes delta1 = nu and delta2 = -nu")
        return cls(nu=nu, delta=delta, omega=omega, g1=g1, g2=g1 if g2 is None else g2,
                   delta1=nu, delta2=-nu, **kwargs)

    def replace(self, **changes) -> "SystemParams":
        return replace(self, **changes)

    def rabi(self, t: float) -> complex:
        if self.envelope is None:
            return self.omega
        return self.omega * float(self.envelope(t))

    def to_dict(self) -> dict:
        out = {}
        for key, value in asdict(self).items():
            if key == "envelope":
                continue
            if isinstance(value, complex):
                value = value.real if value.imag == 0 else [value.real, value.imag]
            out[key] = value
        return out

    @classmethod
    def from_dict(cls, data: dict) -> "SystemParams":
        kwargs = {}
        for key, value in data.items():
            if isinstance(value, (list, tuple)):
                value = complex(value[0], value[1])
            kwargs[key] = value
        return cls(**kwargs)


@dataclass(frozen=True)
class RecoilPattern:
    """Angular distribution N(u) of the recoil projection u in [-1, 1].

    Either a callable or a table ``(u, density)`` interpolated linearly.
    The default is the flat pattern N(u) = 1/2.
    """

    density: Optional[Callable[[np.ndarray], np.ndarray]] = None
    table: Optional[tuple[tuple[float, ...], tuple[float, ...]]] = None

    def __call__(self, u):
        u = np.asarray(u, dtype=float)
        if self.table is not None:
            return np.interp(u, self.table[0], self.table[1])
        if self.density is not None:
            return np.asarray(self.density(u), dtype=float) * np.ones_like(u)
        return 0.5 * np.ones_like(u)

    def check_normalized(self, tol: float = 1e-8) -> None:
        if self.table is not None:
            u, n = np.asarray(self.table[0]), np.asarray(self.table[1])
            total = scipy.integrate.trapezoid(n, u)
        else:
            total, _ = scipy.integrate.quad(lambda u: float(self(u)), -1.0, 1.0,
                                            epsabs=1e-13, epsrel=1e-13)
        if abs(total - 1.0) > tol:
            raise PhysicsDomainError(f"recoil pattern integrates to {total}, expected 1")

    def nodes(self, order: int) -> tuple[np.ndarray, np.ndarray]:
        """Gauss-Legendre nodes on [-1, 1] and weights including N(u)."""
        if order < 2:
            raise PhysicsDomainError("quadrature order must be >= 2")
        u, w = np.polynomial.legendre.leggauss(order)
        return u, w * self(u)


FLAT_PATTERN = RecoilPattern()


@dataclass(frozen=True)
class DissipatorSet:
    """Jump channels ``(operator, rate)``; the Lindblad jump is ``sqrt(rate) * operator``."""

    channels: tuple[tuple[Operator, float], ...]
    recoil: bool = False
    pattern: RecoilPattern = FLAT_PATTERN

    def __post_init__(self):
        if any(rate < 0 for _, rate in self.channels):
            raise PhysicsDomainError("dissipator rates must be non-negative")

    def jump_matrices(self) -> list[np.ndarray]:
        return [math.sqrt(rate) * op.matrix for op, rate in self.channels if rate > 0]


# --- Hamiltonian ---------------------------------------------------------------


def _require_space(space: ModeSpace) -> list[str]:
    if DIPOLE not in space:
        raise PhysicsDomainError("the full model needs a dipole mode (dim 2)")
    if MOTION not in space:
        raise PhysicsDomainError("the full model needs a motion mode")
    cavities = [lab for lab in CAVITY_LABELS if lab in space]
    if not cavities:
        raise PhysicsDomainError("the full model needs at least one cavity mode (cav1/cav2)")
    return cavities


def _mode_params(params: SystemParams, label: str):
    if label == "cav1":
        return params.g1, params.phi1, params.delta1
    return params.g2, params.phi2, params.delta2


def _motion_factors(params: SystemParams, dim: int, cavities, lamb_dicke: str):
    """Single-mode (motion) factors of the cavity and laser couplings.

    ``F_j ≈ cos(eta cos(theta_c) x + phi_j)`` and ``L ≈ exp(i eta cos(theta_l) x)``,
    expanded to second order in eta unless ``lamb_dicke == "exact"``.
    """
    b = fock.ladder_matrix(dim)
    x = b + b.conj().T
    one = np.eye(dim, dtype=complex)
    kc = params.eta * math.cos(params.theta_c)
    kl = params.eta * math.cos(params.theta_l)
    cav = {}
    if lamb_dicke == "second_order":
        x2 = x @ x
        for label in cavities:
            _, phi, _ = _mode_params(params, label)
            # cos(phi) (1 - tan(phi) kc x - kc^2 x^2 / 2) written without tan
            cav[label] = math.cos(phi) * (one - 0.5 * kc**2 * x2) - math.sin(phi) * kc * x
        laser = one + 1j * kl * x - 0.5 * kl**2 * x2
    elif lamb_dicke == "exact":
        for label in cavities:
            _, phi, _ = _mode_params(params, label)
            cav[label] = fock.matrix_function_hermitian(x, lambda w: np.cos(kc * w + phi))
        laser = fock.matrix_function_hermitian(x, lambda w: np.exp(1j * kl * w))
    else:
        raise ValueError(f"lamb_dicke must be 'second_order' or 'exact', got {lamb_dicke!r}")
    return cav, laser


def hamiltonian_parts(params: SystemParams, space: ModeSpace,
                      lamb_dicke: str = "second_order"):
    """Split ``H(t) = H_static + Omega(t) D + conj(Omega(t)) D^dagger``.

    Returns sparse CSR matrices ``(H_static, D)``.
    """
    cavities = _require_space(space)
    sm = fock.embed_sparse(fock.ladder_matrix(2), space, DIPOLE)
    sp_ = sm.conj().T.tocsr()
    cav_factor, laser_factor = _motion_factors(params, space.dim(MOTION), cavities, lamb_dicke)

    nb = fock.embed_sparse(np.diag(np.arange(space.dim(MOTION))), space, MOTION)
    h = -params.delta * (sp_ @ sm) + params.nu * nb
    for label in cavities:
        g, _, det = _mode_params(params, label)
        a = fock.embed_sparse(fock.ladder_matrix(space.dim(label)), space, label)
        # cavity mode j rotates at omega_j - omega_L = -delta_j in the laser frame
        h = h - det * (a.conj().T @ a)
        coupling = g * (a @ sp_ @ fock.embed_sparse(cav_factor[label], space, MOTION))
        h = h + coupling + coupling.conj().T
    drive = sp_ @ fock.embed_sparse(laser_factor, space, MOTION)
    return h.tocsr(), drive.tocsr()


def build_hamiltonian(params: SystemParams, space: ModeSpace, t: float = 0.0,
                      lamb_dicke: str = "second_order") -> Operator:
    """Full Hamiltonian (hbar = 1) at time ``t`` in the laser frame."""
    h, drive = hamiltonian_parts(params, space, lamb_dicke)
    om = params.rabi(t)
    return Operator(space, (h + om * drive + np.conj(om) * drive.conj().T).toarray())


# --- dissipation -----------------------------------------------------------------


def _recoil_unitaries(params: SystemParams, space: ModeSpace, u: np.ndarray) -> list[np.ndarray]:
    """Dense ``exp(-i eta u_k x)`` on the full space for every node."""
    b = fock.ladder_matrix(space.dim(MOTION))
    w, v = np.linalg.eigh(b + b.conj().T)
    out = []
    for uk in u:
        single = (v * np.exp(-1j * params.eta * uk * w)) @ v.conj().T
        out.append(fock.embed_sparse(single, space, MOTION).toarray())
    return out


def build_dissipators(params: SystemParams, space: ModeSpace, recoil: bool = True,
                      pattern: RecoilPattern = FLAT_PATTERN,
                      quadrature_order: int = 8) -> DissipatorSet:
    """Cavity decay (jump ``a_j`` at rate ``2 kappa_j``) and spontaneous emission.

    With recoil enabled and ``eta > 0`` the emission channel is split over
    quadrature nodes ``u_k``: jumps ``sigma exp(-i eta u_k x)`` at rate
    ``gamma w_k N(u_k)``. Their sum reproduces ``gamma sigma rho~ sigma^dagger``
    and keeps the generator in Lindblad form.
    """
    cavities = _require_space(space)
    channels: list[tuple[Operator, float]] = []
    for label in cavities:
        kappa = params.kappa1 if label == "cav1" else params.kappa2
        if kappa > 0:
            channels.append((fock.annihilation(space, label), 2.0 * kappa))
    use_recoil = recoil and params.eta > 0
    if params.gamma > 0:
        sm = fock.sigma_minus(space)
        if use_recoil:
            pattern.check_normalized()
            u, w = pattern.nodes(quadrature_order)
            for uk, wk, unitary in zip(u, w, _recoil_unitaries(params, space, u)):
                channels.append((Operator(space, sm.matrix @ unitary), params.gamma * wk))
        else:
            channels.append((sm, params.gamma))
    return DissipatorSet(tuple(channels), recoil=use_recoil, pattern=pattern)


def recoil_average(rho: DensityState, params: SystemParams, quadrature_order: int = 8,
                   pattern: RecoilPattern = FLAT_PATTERN) -> DensityState:
    """Average of ``exp(-i eta u x) rho exp(i eta u x)`` over the recoil pattern."""
    space = rho.space
    if MOTION not in space:
        raise PhysicsDomainError("recoil averaging needs a motion mode")
    pattern.check_normalized()
    if params.eta == 0:
        return rho
    u, w = pattern.nodes(quadrature_order)
    out = np.zeros_like(rho.matrix)
    for wk, unitary in zip(w, _recoil_unitaries(params, space, u)):
        out += wk * (unitary @ rho.matrix @ unitary.conj().T)
    return DensityState(space, out, check=False)
