import cmath
import math

import numpy as np
import pytest
import scipy.linalg as sla
from hypothesis import given, settings
from hypothesis import strategies as st

from epr_cavity import fock, gaussian
from epr_cavity.effective import (
    SCHEME1_MODES,
    Couplings,
    half_period_map,
    scheme1_propagator,
    two_mode_state,
)
from epr_cavity.errors import PhysicsDomainError
from epr_cavity.fock import DensityState, ModeSpace
from epr_cavity.homodyne import quadrature_moments, moments_from_state


def state_at_half_period(c):
    _, m = half_period_map(c)
    return gaussian.apply_bogoliubov(gaussian.vacuum(SCHEME1_MODES), m)


def test_vacuum_moments():
    v = gaussian.vacuum(SCHEME1_MODES)
    assert v.is_physical()
    assert v.purity() == pytest.approx(1)
    for mode in SCHEME1_MODES:
        assert gaussian.occupation(v, mode) == pytest.approx(0, abs=1e-15)
        assert gaussian.quadrature_second_moment(v, mode, 0.3, mode, 0.3) == pytest.approx(1)
    assert gaussian.epr_variance(v) == pytest.approx((2, 2))
    assert gaussian.vacuum(2).modes == ("m0", "m1")
    with pytest.raises(PhysicsDomainError):
        gaussian.vacuum(0)


def test_commutator_from_moments():
    v = gaussian.thermal(("a",), [0.7])
    x = np.array([1.0, 0.0])
    p = np.array([0.0, 1.0])
    assert gaussian.moment(v, x, p) - gaussian.moment(v, p, x) == pytest.approx(2j)
    assert gaussian.occupation(v, "a") == pytest.approx(0.7)


def test_half_period_moments_r11():
    # [DERIVED] ((s^2 + 4 chi1^2 chi2^2), 4 chi1 chi2 s) / Theta^4 with s = 2.21, Theta^2 = 0.21
    state = state_at_half_period(Couplings(1.0, 1.1))
    m = moments_from_state(state, 0.0, 0.0)
    assert m.q1_sq == pytest.approx(220.5011, abs=1e-4)
    assert m.q2_sq == pytest.approx(220.5011, abs=1e-4)
    assert m.q1q2 == pytest.approx(220.4989, abs=1e-4)
    assert gaussian.occupation(state, "cav1") == pytest.approx(109.7506, abs=1e-4)
    assert gaussian.occupation(state, "motion") == pytest.approx(0, abs=1e-9)
    assert state.is_physical()
    assert state.purity() == pytest.approx(1, rel=1e-9)


@settings(max_examples=40, deadline=None)
@given(m1=st.floats(0.1, 2), r=st.floats(1.05, 2), p1=st.floats(-3, 3), p2=st.floats(-3, 3),
       t1=st.floats(-3, 3), t2=st.floats(-3, 3))
def test_closed_form_moments_match_oracle(m1, r, p1, p2, t1, t2):
    c = Couplings(m1 * cmath.exp(1j * p1), r * m1 * cmath.exp(1j * p2))
    closed = quadrature_moments(c, t1, t2)
    oracle = moments_from_state(state_at_half_period(c), t1, t2)
    for a, b in ((closed.q1_sq, oracle.q1_sq), (closed.q2_sq, oracle.q2_sq), (closed.q1q2, oracle.q1q2)):
        assert a == pytest.approx(b, rel=1e-9, abs=1e-9 * closed.q1_sq)


def test_decay_towards_vacuum():
    state = state_at_half_period(Couplings(1.0, 1.1)).reduced(("cav1", "cav2"))
    decayed = gaussian.cavity_decay(state, {"cav1": 1.0, "cav2": 1.0}, 1.0)
    q0 = gaussian.quadrature_second_moment(state, "cav1", 0, "cav1", 0)
    q1 = gaussian.quadrature_second_moment(decayed, "cav1", 0, "cav1", 0)
    # [DERIVED] amplitude damping: V -> e^{-2 kappa t} V + (1 - e^{-2 kappa t})
    assert q1 == pytest.approx(math.exp(-2) * q0 + 1 - math.exp(-2), rel=1e-12)
    assert gaussian.occupation(decayed, "cav1") == pytest.approx(math.exp(-2) * 109.7506, abs=1e-4)
    two = gaussian.cavity_decay(gaussian.cavity_decay(state, [1.0, 0.5], 0.4), [1.0, 0.5], 0.6)
    one = gaussian.cavity_decay(state, [1.0, 0.5], 1.0)
    assert np.allclose(two.cov, one.cov, rtol=1e-12)
    far = gaussian.cavity_decay(state, [1.0, 1.0], 40.0)
    assert np.allclose(far.cov, np.eye(4), atol=1e-12)
    with pytest.raises(PhysicsDomainError):
        gaussian.cavity_decay(state, [1.0], 1.0)
    with pytest.raises(PhysicsDomainError):
        gaussian.cavity_decay(state, [1.0, 1.0], -1.0)


@pytest.mark.parametrize("r", [1.1, 1.3, 2.0])
def test_epr_variance_real_couplings(r):
    # [DERIVED] var(q1 - q2) = 2 (r - 1)^2 / (r + 1)^2 for real couplings, theta = 0
    state = state_at_half_period(Couplings.from_ratio(r))
    dx, dp = gaussian.epr_variance(state, 0.0, 0.0)
    expected = 2 * (r - 1) ** 2 / (r + 1) ** 2
    assert dx == pytest.approx(expected, rel=1e-9)
    assert dp == pytest.approx(expected, rel=1e-9)
    # theta_1 = -theta_2 = pi/2 gives the same value
    assert gaussian.epr_variance(state, math.pi / 2, -math.pi / 2)[0] == pytest.approx(dx, rel=1e-9)


def random_single_mode_cov(rng):
    s = rng.uniform(-1, 1)
    rot = rng.uniform(0, np.pi)
    c, si = math.cos(rot), math.sin(rot)
    r = np.array([[c, -si], [si, c]])
    return (1 + 2 * rng.uniform(0, 1)) * r @ np.diag([math.exp(2 * s), math.exp(-2 * s)]) @ r.T


@pytest.mark.parametrize("seed", range(5))
def test_epr_sum_bound_for_product_states(seed):
    # [DERIVED] separable states obey var(X1 - X2) + var(P1 + P2) >= 4
    rng = np.random.default_rng(seed)
    cov = np.zeros((4, 4))
    cov[:2, :2] = random_single_mode_cov(rng)
    cov[2:, 2:] = random_single_mode_cov(rng)
    state = gaussian.GaussianState(np.zeros(4), cov, ("a", "b"))
    for t1, t2 in rng.uniform(-np.pi, np.pi, size=(5, 2)):
        assert sum(gaussian.epr_variance(state, t1, t2)) >= 4 - 1e-9


@settings(max_examples=30, deadline=None)
@given(r=st.floats(1.05, 3))
def test_epr_pair_balanced_on_two_mode_squeezed(r):
    dx, dp = gaussian.epr_variance(state_at_half_period(Couplings.from_ratio(r)))
    assert dx == pytest.approx(dp, rel=1e-9)
    assert dx * dp == pytest.approx(4 * ((r - 1) / (r + 1)) ** 4, rel=1e-8)


def test_epr_variance_r11_value():
    dx, _ = gaussian.epr_variance(state_at_half_period(Couplings(1.0, 1.1)))
    assert dx == pytest.approx(0.0045351, abs=1e-7)


def test_non_symplectic_map_rejected():
    from epr_cavity.effective import BogoliubovMap

    bad = BogoliubovMap(2 * np.eye(6), SCHEME1_MODES)
    with pytest.raises(PhysicsDomainError):
        gaussian.apply_bogoliubov(gaussian.vacuum(SCHEME1_MODES), bad)
    with pytest.raises(PhysicsDomainError):
        gaussian.apply_bogoliubov(gaussian.vacuum(3), scheme1_propagator(Couplings(1, 2), 0.3))


def test_unphysical_covariance_detected():
    assert not gaussian.GaussianState(np.zeros(2), np.diag([0.5, 0.5]), ("a",)).is_physical()
    with pytest.raises(PhysicsDomainError):
        gaussian.GaussianState(np.zeros(2), np.array([[1.0, 0.5], [0.0, 1.0]]), ("a",))


@settings(max_examples=30, deadline=None)
@given(m1=st.floats(0.1, 2), r=st.floats(1.05, 3), p1=st.floats(-3, 3), p2=st.floats(-3, 3),
       frac=st.floats(0, 2), nbar=st.floats(0, 3))
def test_propagated_states_stay_physical(m1, r, p1, p2, frac, nbar):
    c = Couplings(m1 * cmath.exp(1j * p1), r * m1 * cmath.exp(1j * p2))
    start = gaussian.thermal(SCHEME1_MODES, [0, 0, nbar])
    out = gaussian.apply_bogoliubov(start, scheme1_propagator(c, frac * c.half_period))
    assert out.is_physical()


# --- fidelity ---


def displaced_thermal(dim, nbar, alpha):
    sp = ModeSpace((dim,), ("m",))
    a = fock.ladder_matrix(dim)
    d = sla.expm(alpha * a.conj().T - np.conj(alpha) * a)
    rho = d @ fock.thermal_state(sp, "m", nbar).matrix @ d.conj().T
    return DensityState(sp, rho / np.trace(rho), check=False)


def gaussian_displaced_thermal(nbar, alpha):
    mean = np.array([2 * alpha.real, 2 * alpha.imag])
    return gaussian.GaussianState(mean, (2 * nbar + 1) * np.eye(2), ("m",))


@pytest.mark.parametrize("n1,n2,a1,a2", [
    (0.0, 0.0, 0j, 0.5 + 0j),
    (0.5, 0.0, 0j, 0j),
    (0.5, 2.0, 0j, 0j),
    (0.3, 0.8, 0.2 + 0.1j, -0.3j),
])
def test_fidelity_matches_uhlmann(n1, n2, a1, a2):
    # [DERIVED] Uhlmann fidelity of truncated density matrices
    dim = 70
    expected = fock.fidelity(displaced_thermal(dim, n1, a1), displaced_thermal(dim, n2, a2))
    got = gaussian.single_mode_fidelity(gaussian_displaced_thermal(n1, a1), gaussian_displaced_thermal(n2, a2))
    assert got == pytest.approx(expected, abs=1e-8)


def test_fidelity_identity_and_motion_return():
    for nbar in (0.0, 0.5, 2.0):
        start = gaussian.thermal(SCHEME1_MODES, [0, 0, nbar])
        out = gaussian.apply_bogoliubov(start, half_period_map(Couplings(0.7, 1.3))[1])
        f = gaussian.single_mode_fidelity(out.reduced(("motion",)), start.reduced(("motion",)))
        assert f == pytest.approx(1, abs=1e-10)
    with pytest.raises(PhysicsDomainError):
        gaussian.single_mode_fidelity(start, start)


# --- Fock cross-check ---


@pytest.mark.parametrize("r,phi", [(1.5, 0.0), (2.0, 1.2), (1.1, -2.0)])
def test_fock_amplitudes_match_two_mode_state(r, phi):
    c = Couplings.from_ratio(r, 1.0, phi)
    state = state_at_half_period(c).reduced(("cav1", "cav2"))
    n_max = 40
    amps = gaussian.two_mode_fock_amplitudes(state, n_max)
    # the map's anomalous moment carries the opposite sign of the literal formula
    literal = two_mode_state(r, phi + math.pi, n_max).amplitudes
    # equal up to a global phase
    literal = literal * amps[0] / literal[0]
    assert np.allclose(amps, literal, atol=1e-10)


def test_fock_amplitudes_reject_non_tmsv():
    with pytest.raises(PhysicsDomainError):
        gaussian.two_mode_fock_amplitudes(gaussian.thermal(("a", "b"), [0.5, 0.5]), 5)
    with pytest.raises(PhysicsDomainError):
        gaussian.two_mode_fock_amplitudes(gaussian.vacuum(3), 5)


def test_decay_example_single_mode():
    state = gaussian.thermal(("a",), [110.25])
    out = gaussian.cavity_decay(state, [1.0], 1.0)
    assert gaussian.quadrature_second_moment(out, "a", 0, "a", 0) == pytest.approx(30.84, abs=5e-3)
