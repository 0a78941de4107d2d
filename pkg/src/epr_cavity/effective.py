"""Adiabatically eliminated dynamics: couplings, Bogoliubov maps, two-mode state.

Operator vectors are doubled: for modes ``(m_1, ..., m_N)`` the vector is
``(m_1, m_1^dagger, ..., m_N, m_N^dagger)``. A :class:`BogoliubovMap` ``M`` gives the
Heisenberg-picture operators at time ``t`` as ``v(t) = M v(0)``.
The scheme-1 vector is ``(a1, a1^dagger, a2, a2^dagger, b, b^dagger)``.
"""

from __future__ import annotations

import cmath
import math
import warnings
from dataclasses import dataclass
from typing import Sequence

import numpy as np
import scipy.sparse as sp

from . import fock
from .errors import PhysicsDomainError, RegimeError, RegimeWarning
from .fock import ModeSpace
from .model import SystemParams

SCHEME1_MODES = ("cav1", "cav2", "motion")
SCHEME2_MODES = ("cav", "motion")


@dataclass(frozen=True)
class Couplings:
    """Effective couplings of the squeezing (``chi1``) and beam-splitter (``chi2``) terms."""

    chi1: complex
    chi2: complex

    def __post_init__(self):
        object.__setattr__(self, "chi1", complex(self.chi1))
        object.__setattr__(self, "chi2", complex(self.chi2))

    @classmethod
    def from_ratio(cls, r: float, chi1: float = 1.0, phi: float = 0.0) -> "Couplings":
        """Couplings with ``|chi2/chi1| = r``; the total phase ``phi`` sits on ``chi2``."""
        return cls(chi1, r * abs(chi1) * cmath.exp(1j * (phi - cmath.phase(chi1))))

    @property
    def r(self) -> float:
        if self.chi1 == 0:
            return math.inf if self.chi2 != 0 else math.nan
        return abs(self.chi2 / self.chi1)

    @property
    def phi(self) -> float:
        return cmath.phase(self.chi1) + cmath.phase(self.chi2)

    @property
    def periodic(self) -> bool:
        return abs(self.chi2) > abs(self.chi1)

    @property
    def theta(self) -> float:
        """Oscillation frequency ``sqrt(|chi2|^2 - |chi1|^2)``."""
        diff = abs(self.chi2) ** 2 - abs(self.chi1) ** 2
        if diff <= 0:
            raise RegimeError(
                f"periodic dynamics need |chi2| > |chi1| (r = {self.r:.6g}); got r <= 1"
            )
        return math.sqrt(diff)

    @property
    def half_period(self) -> float:
        return math.pi / self.theta

    def mean_photons(self) -> float:
        """Photons per cavity mode after a half period (vacuum input)."""
        return mean_photon_number(self.r)


def coupling_constants(params: SystemParams) -> Couplings:
    """Effective couplings for the bichromatic scheme, including the ``i gamma/2`` widths."""
    nu, delta, half_gamma = params.nu, params.delta, 0.5j * params.gamma
    for den in (delta - nu, delta + nu, delta):
        if abs(den) < 1e-9 * nu:
            raise PhysicsDomainError(
                f"singular coupling denominator: Delta = {delta} is resonant with a sideband"
            )
    om = params.rabi(0.0)
    cl = math.cos(params.theta_l)
    cc = math.cos(params.theta_c)

    def chi(g, phi, sideband):
        # cos(phi) * tan(phi) -> sin(phi) keeps phi = pi/2 finite
        return params.eta * np.conj(g) * om * (
            math.cos(phi) * cl / (delta + sideband + half_gamma)
            + 1j * math.sin(phi) * cc / (delta + half_gamma)
        )

    c = Couplings(chi(params.g1, params.phi1, -nu), chi(params.g2, params.phi2, nu))
    if (c.chi1 != 0 or c.chi2 != 0) and not c.periodic:
        warnings.warn(f"r = {c.r:.6g} <= 1: dynamics are not periodic", RegimeWarning,
                      stacklevel=2)
    return c


@dataclass(frozen=True, eq=False)
class BogoliubovMap:
    """Linear map on a doubled operator vector (see module docstring)."""

    matrix: np.ndarray
    modes: tuple[str, ...]
    time: float = 0.0

    def __post_init__(self):
        m = np.array(self.matrix, dtype=complex)
        m.setflags(write=False)
        object.__setattr__(self, "matrix", m)
        object.__setattr__(self, "modes", tuple(self.modes))
        if m.shape != (2 * len(self.modes),) * 2:
            raise ValueError(f"matrix shape {m.shape} does not match {len(self.modes)} modes")

    @property
    def metric(self) -> np.ndarray:
        """Commutator metric ``[v_i, v_j^dagger] = J_ij`` of the doubled basis."""
        return np.diag(np.tile([1.0, -1.0], len(self.modes)))

    def symplectic_error(self) -> float:
        """``max |M J M^dagger - J|``."""
        j = self.metric
        return float(np.max(np.abs(self.matrix @ j @ self.matrix.conj().T - j)))

    def conjugation_error(self) -> float:
        """Deviation of the dagger rows from the conjugated annihilation rows."""
        n = len(self.modes)
        swap = np.kron(np.eye(n), np.array([[0, 1], [1, 0]]))
        return float(np.max(np.abs(swap @ self.matrix.conj() @ swap - self.matrix)))

    def is_symplectic(self, tol: float = 1e-10) -> bool:
        return self.symplectic_error() <= tol and self.conjugation_error() <= tol

    def index(self, op: str) -> int:
        """Index of ``"a"`` or ``"a+"`` style labels, e.g. ``"cav1"`` or ``"motion+"``."""
        dag = op.endswith("+")
        mode = op[:-1] if dag else op
        return 2 * self.modes.index(mode) + int(dag)

    def coefficient(self, out: str, inp: str) -> complex:
        """Weight of input operator ``inp`` in output operator ``out``."""
        return complex(self.matrix[self.index(out), self.index(inp)])

    def then(self, later: "BogoliubovMap") -> "BogoliubovMap":
        """Compose: apply ``self`` first, then ``later`` (Heisenberg picture)."""
        if later.modes != self.modes:
            raise ValueError("maps act on different modes")
        # U1^+ U2^+ v U2 U1 = U1^+ (M2 v) U1 = M2 M1 v
        return BogoliubovMap(later.matrix @ self.matrix, self.modes, self.time + later.time)


def _from_annihilation_rows(rows: Sequence[Sequence[complex]], modes, t) -> BogoliubovMap:
    """Build the doubled matrix from the annihilation rows only."""
    n = len(modes)
    m = np.zeros((2 * n, 2 * n), dtype=complex)
    for k, row in enumerate(rows):
        row = np.asarray(row, dtype=complex)
        m[2 * k] = row
        # dagger row: conjugate coefficients with a <-> a^dagger swapped
        m[2 * k + 1, 0::2] = np.conj(row[1::2])
        m[2 * k + 1, 1::2] = np.conj(row[0::2])
    return BogoliubovMap(m, modes, t)


def identity_map(modes: Sequence[str]) -> BogoliubovMap:
    return BogoliubovMap(np.eye(2 * len(modes)), tuple(modes), 0.0)


def scheme1_propagator(c: Couplings, t: float) -> BogoliubovMap:
    """Closed-form Heisenberg solution for ``a1``, ``a2`` and ``b`` at time ``t``."""
    theta = c.theta
    x1, x2 = c.chi1, c.chi2
    s, co = math.sin(theta * t), math.cos(theta * t)
    th2 = theta**2
    a1 = np.zeros(6, dtype=complex)
    a1[0] = (abs(x2) ** 2 - abs(x1) ** 2 * co) / th2
    a1[3] = -x1 * x2 * (1 - co) / th2
    a1[5] = x1 * s / theta
    a2 = np.zeros(6, dtype=complex)
    a2[1] = x1 * x2 * (1 - co) / th2
    a2[2] = -(abs(x1) ** 2 - abs(x2) ** 2 * co) / th2
    a2[4] = x2 * s / theta
    b = np.zeros(6, dtype=complex)
    b[1] = x1 * s / theta
    b[2] = -np.conj(x2) * s / theta
    b[4] = co
    return _from_annihilation_rows([a1, a2, b], SCHEME1_MODES, t)


def half_period_map(c: Couplings) -> tuple[float, BogoliubovMap]:
    """Map at ``T_pi = pi/Theta``: cavity modes squeezed, motion sign-flipped."""
    theta = c.theta
    t_pi = math.pi / theta
    x1, x2 = c.chi1, c.chi2
    diag = (abs(x1) ** 2 + abs(x2) ** 2) / theta**2
    cross = 2 * x1 * x2 / theta**2
    a1 = [diag, 0, 0, -cross, 0, 0]
    a2 = [0, cross, -diag, 0, 0, 0]
    b = [0, 0, 0, 0, -1, 0]
    return t_pi, _from_annihilation_rows([a1, a2, b], SCHEME1_MODES, t_pi)


def mean_photon_number(r: float) -> float:
    """``4 r^2 / (1 - r^2)^2`` photons per mode of the two-mode squeezed state."""
    if r == 1:
        raise RegimeError("r = 1 gives a singular two-mode state")
    return 4 * r**2 / (1 - r**2) ** 2


@dataclass(frozen=True)
class TwoModeAmplitudes:
    amplitudes: np.ndarray
    norm: float

    @property
    def n_max(self) -> int:
        return len(self.amplitudes) - 1


def two_mode_state(r: float, phi: float, n_max: int) -> TwoModeAmplitudes:
    """Amplitudes ``c_n`` on ``|n, n>`` of the two-mode squeezed state, ``n <= n_max``.

    ``c_n = ((1 - r^2)/(1 + r^2)) (-2 r e^{i phi}/(1 + r^2))^n``; ``norm`` is the
    retained probability ``sum |c_n|^2``.
    """
    if r == 1:
        raise RegimeError("r = 1 gives a singular two-mode state")
    if r <= 0:
        raise PhysicsDomainError(f"r must be positive, got {r}")
    if n_max < 1:
        raise PhysicsDomainError("n_max must be >= 1")
    ratio = -2 * r * cmath.exp(1j * phi) / (1 + r**2)
    c = (1 - r**2) / (1 + r**2) * ratio ** np.arange(n_max + 1)
    return TwoModeAmplitudes(c, float(np.sum(np.abs(c) ** 2)))


def n_max_for_norm(r: float, target: float) -> int:
    """Smallest ``n_max`` whose retained norm reaches ``target``."""
    q = (2 * r / (1 + r**2)) ** 2
    # retained norm is 1 - q^(n_max + 1)
    return max(1, math.ceil(math.log(1 - target) / math.log(q) - 1))


# --- scheme 2 -----------------------------------------------------------------


def scheme2_coupling(params: SystemParams) -> complex:
    """Single-mode coupling in the far-detuned limit (cavity labelled ``cav1``)."""
    if params.delta == 0:
        raise PhysicsDomainError("Delta = 0 is singular for the scheme-2 coupling")
    return complex(
        params.eta * np.conj(params.g1) * params.rabi(0.0) / params.delta
        * (math.cos(params.phi1) * math.cos(params.theta_l)
           + 1j * math.sin(params.phi1) * math.cos(params.theta_c))
    )


def scheme2_squeeze(chi: complex, t1: float) -> BogoliubovMap:
    """Two-mode squeezing of cavity and motion by a pulse of length ``t1``."""
    if t1 < 0:
        raise PhysicsDomainError("pulse duration must be non-negative")
    x = abs(chi) * t1
    ph = cmath.exp(1j * cmath.phase(chi))
    a = [math.cosh(x), 0, 0, ph * math.sinh(x)]
    b = [0, ph * math.sinh(x), math.cosh(x), 0]
    return _from_annihilation_rows([a, b], SCHEME2_MODES, t1)


def scheme2_beamsplitter(chi: complex) -> tuple[float, BogoliubovMap]:
    """State swap between cavity and motion: ``a -> e^{i phi_chi} b`` after ``T2 = pi/2|chi|``."""
    if chi == 0:
        raise PhysicsDomainError("chi = 0 gives no beam-splitter dynamics")
    t2 = math.pi / (2 * abs(chi))
    ph = cmath.exp(1j * cmath.phase(chi))
    a = [0, 0, ph, 0]
    b = [-np.conj(ph), 0, 0, 0]
    return t2, _from_annihilation_rows([a, b], SCHEME2_MODES, t2)


def scheme2_beamsplitter_at(chi: complex, t: float) -> BogoliubovMap:
    """Beam-splitter map at arbitrary time ``t``."""
    x = abs(chi) * t
    ph = cmath.exp(1j * cmath.phase(chi))
    a = [math.cos(x), 0, ph * math.sin(x), 0]
    b = [-np.conj(ph) * math.sin(x), 0, math.cos(x), 0]
    return _from_annihilation_rows([a, b], SCHEME2_MODES, t)


def squeeze_time(chi: complex, target_n: float) -> float:
    """Pulse length giving ``sinh^2(|chi| T1) = target_n``."""
    if target_n <= 0:
        raise PhysicsDomainError("target photon number must be positive")
    return math.asinh(math.sqrt(target_n)) / abs(chi)


def r_from_tanh(tanh_value: float) -> float:
    """Root ``r > 1`` of ``tanh = 2 r / (1 + r^2)``."""
    if not 0 < tanh_value < 1:
        raise RegimeError(
            f"tanh|chi|T1 = {tanh_value} has no root r > 1 (needs 0 < tanh < 1)"
        )
    return (1 + math.sqrt(1 - tanh_value**2)) / tanh_value


def scheme2_r(chi: complex, t1: float) -> float:
    return r_from_tanh(math.tanh(abs(chi) * t1))


# --- Fock-space representation -------------------------------------------------


def effective_hamiltonian(c: Couplings, space: ModeSpace) -> sp.csr_matrix:
    """Sparse ``i chi1 a1^+ b^+ + i chi2 a2^+ b + h.c.`` in the frame of the free terms."""
    a1 = fock.embed_sparse(fock.ladder_matrix(space.dim("cav1")), space, "cav1")
    a2 = fock.embed_sparse(fock.ladder_matrix(space.dim("cav2")), space, "cav2")
    b = fock.embed_sparse(fock.ladder_matrix(space.dim("motion")), space, "motion")
    h1 = 1j * c.chi1 * (a1.conj().T @ b.conj().T)
    h2 = 1j * c.chi2 * (a2.conj().T @ b)
    h = h1 + h1.conj().T + h2 + h2.conj().T
    return h.tocsr()


def constant_of_motion_matrix() -> np.ndarray:
    """Quadratic form of ``b^+b - a1^+a1 + a2^+a2`` in the doubled scheme-1 basis."""
    return np.diag([-1.0, -1.0, 1.0, 1.0, 1.0, 1.0])
