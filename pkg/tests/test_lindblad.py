import json
import math

import numpy as np
import pytest
import scipy.sparse as sp

from epr_cavity import fock, gaussian
from epr_cavity.effective import SCHEME1_MODES, Couplings, effective_hamiltonian, scheme1_propagator
from epr_cavity.errors import PhysicsDomainError, StepSizeError, TruncationError
from epr_cavity.fock import DensityState, ModeSpace
from epr_cavity.lindblad import (
    MasterEquation,
    compare_full_vs_effective,
    integrate,
    propagate_ket,
)
from epr_cavity.model import SystemParams

EFF_LABELS = ("motion", "cav1", "cav2")


def test_cavity_decay_exponential():
    # [DERIVED] <n>(t) = e^{-2 kappa t} for a single photon with jump sqrt(2 kappa) a
    kappa = 0.7
    space = ModeSpace((4,), ("cav1",))
    a = fock.ladder_matrix(4)
    me = MasterEquation.from_hamiltonian(space, np.zeros((4, 4)), [math.sqrt(2 * kappa) * a])
    times = np.linspace(0, 2, 5)
    traj = integrate(fock.fock_state(space, {"cav1": 1}), me, times, rtol=1e-10)
    assert np.allclose(traj.observables["n_cav1"], np.exp(-2 * kappa * times), atol=1e-7)
    assert traj.trace_drift < 1e-12
    assert traj.min_eigenvalue > -1e-12


def test_thermal_state_stationary_under_free_motion():
    space = ModeSpace((30,), ("motion",))
    h = 1.3 * np.diag(np.arange(30.0))
    rho0 = fock.thermal_state(space, "motion", 1.5)
    traj = integrate(rho0, MasterEquation.from_hamiltonian(space, h), [0, 1, 2])
    assert np.allclose(traj.final_state, rho0.matrix, atol=1e-9)


@pytest.mark.parametrize("r", [4.0, 6.0])
def test_quadratic_hamiltonian_matches_gaussian(r):
    c = Couplings.from_ratio(r, 0.5)
    space = ModeSpace((16, 16, 16), EFF_LABELS)
    me = MasterEquation.from_hamiltonian(space, effective_hamiltonian(c, space))
    times = np.linspace(0, c.half_period, 5)
    a1 = fock.sparse_annihilation(space, "cav1")
    a2 = fock.sparse_annihilation(space, "cav2")
    b = fock.sparse_annihilation(space, "motion")
    obs = {"a1a2": a1 @ a2, "n_cav1": a1.conj().T @ a1, "n_motion": b.conj().T @ b}
    traj = propagate_ket(fock.fock_ket(space), me, times, observables=obs, method="expm")
    for k, t in enumerate(times):
        g = gaussian.apply_bogoliubov(gaussian.vacuum(SCHEME1_MODES), scheme1_propagator(c, t))
        assert traj.observables["n_cav1"][k] == pytest.approx(gaussian.occupation(g, "cav1"), abs=1e-6)
        assert traj.observables["n_motion"][k] == pytest.approx(gaussian.occupation(g, "motion"), abs=1e-6)
        assert traj.observables["a1a2"][k] == pytest.approx(gaussian.pair_moment(g, "cav1", "cav2"), abs=1e-6)
    assert not traj.truncation_flag


def test_ket_methods_agree_with_density_rk4():
    c = Couplings.from_ratio(2.5, 0.4)
    space = ModeSpace((5, 5, 5), EFF_LABELS)
    me = MasterEquation.from_hamiltonian(space, effective_hamiltonian(c, space))
    times = [0, 0.3, 0.6]
    k1 = propagate_ket(fock.fock_ket(space), me, times, method="eigh")
    k2 = propagate_ket(fock.fock_ket(space), me, times, method="expm")
    rho = integrate(fock.vacuum(space), me, times, rtol=1e-9)
    for name in k1.observables:
        assert np.allclose(k1.observables[name], k2.observables[name], atol=1e-10)
        assert np.allclose(k1.observables[name], rho.observables[name], atol=1e-7)


def small_params(**kw):
    base = dict(nu=1.0, delta=-8.0, omega=1.5, g1=0.3, eta=0.1, gamma=0.2, kappa1=0.05, kappa2=0.05)
    base.update(kw)
    return SystemParams.scheme1(**base)


SMALL = ModeSpace((2, 4, 3, 3), ("dipole", "motion", "cav1", "cav2"))


def test_full_model_trace_and_positivity():
    traj = integrate(fock.vacuum(SMALL), small_params(), np.linspace(0, 2, 5), rtol=1e-8)
    assert traj.trace_drift < 1e-10
    assert traj.min_eigenvalue > -1e-8
    rho = traj.final_state
    assert np.allclose(rho, rho.conj().T)
    assert traj.observables["p_excited"][-1] > 0


def test_decoupled_motion_is_invariant():
    # eta = 0: motion only evolves under its free Hamiltonian, recoil is the identity
    p = small_params(eta=0.0)
    rho0 = DensityState(SMALL, np.kron(np.kron(np.diag([1.0, 0.0]),
                                               fock.thermal_populations(4, 0.4) * np.eye(4)),
                                       np.eye(9) / 9))
    traj = integrate(rho0, p, [0, 1, 2], rtol=1e-8)
    assert np.allclose(traj.observables["n_motion"], traj.observables["n_motion"][0], atol=1e-10)


def test_scattering_mixes_the_state():
    pure = integrate(fock.vacuum(SMALL), small_params(gamma=0.0, kappa1=0.0, kappa2=0.0), [0, 1], rtol=1e-7)
    mixed = integrate(fock.vacuum(SMALL), small_params(kappa1=0.0, kappa2=0.0), [0, 1], rtol=1e-7)
    purity = lambda rho: np.real(np.trace(rho @ rho))  # noqa: E731
    assert purity(pure.final_state) == pytest.approx(1, abs=1e-8)
    assert purity(mixed.final_state) < 1 - 1e-6


def test_time_dependent_drive_ket_and_density_agree():
    p = small_params(gamma=0.0, kappa1=0.0, kappa2=0.0, envelope=lambda t: math.sin(t) ** 2)
    me = MasterEquation.from_params(p, SMALL)
    assert not me.time_independent
    ket = propagate_ket(fock.fock_ket(SMALL), me, [0, 0.5, 1.0], rtol=1e-9)
    rho = integrate(fock.vacuum(SMALL), me, [0, 0.5, 1.0], rtol=1e-9)
    for name in ket.observables:
        assert np.allclose(ket.observables[name], rho.observables[name], atol=1e-7)


def test_drive_off_comparison_is_exact():
    p = SystemParams.scheme1(nu=1.0, delta=-20.0, omega=0.0, g1=0.02, eta=0.1)
    rep = compare_full_vs_effective(p, 5.0, (2, 3, 3, 3))
    assert rep.max_occupation_error == 0
    assert rep.relative_errors["a1a2"] == 0
    assert rep.fidelity == pytest.approx(1, abs=1e-12)
    rep = compare_full_vs_effective(p, None, (2, 3, 3, 3))
    assert rep.duration == 0


def test_comparison_small_dims_reports_truncation():
    p = SystemParams.scheme1(nu=1.0, delta=-20.0, omega=2.0, g1=0.02, g2=0.02 * 38 / 21, eta=0.1)
    rep = compare_full_vs_effective(p, dims=(2, 3, 3, 3))
    assert rep.couplings.r == pytest.approx(2.0, rel=1e-6)
    assert rep.truncation_flag
    d = rep.to_dict()
    assert d["truncation_flag"] and json.dumps(d)
    with pytest.raises(TruncationError):
        compare_full_vs_effective(p, dims=(2, 3, 3, 3), strict=True)


def test_strict_truncation_in_integrate():
    c = Couplings.from_ratio(1.2)
    space = ModeSpace((3, 3, 3), EFF_LABELS)
    me = MasterEquation.from_hamiltonian(space, effective_hamiltonian(c, space))
    with pytest.raises(TruncationError):
        propagate_ket(fock.fock_ket(space), me, [0, c.half_period], strict=True)
    traj = propagate_ket(fock.fock_ket(space), me, [0, c.half_period])
    assert traj.truncation_flag


@pytest.mark.filterwarnings("ignore::RuntimeWarning")
def test_step_size_error():
    space = ModeSpace((3,), ("m",))
    me = MasterEquation.from_hamiltonian(space, 1e4 * np.diag([0.0, 1.0, 2.0]))
    rho0 = DensityState.from_ket(space, np.ones(3) / math.sqrt(3))
    with pytest.raises(StepSizeError):
        integrate(rho0, me, [0, 1], min_step=1e-2)


def test_input_validation():
    space = ModeSpace((3,), ("m",))
    me = MasterEquation.from_hamiltonian(space, np.zeros((3, 3)), [np.eye(3)])
    with pytest.raises(PhysicsDomainError):
        propagate_ket(np.array([1, 0, 0]), me, [0, 1])
    with pytest.raises(ValueError):
        integrate(fock.vacuum(space), me, [1, 0])
    with pytest.raises(PhysicsDomainError):
        integrate(fock.vacuum(ModeSpace((4,), ("m",))), me, [0, 1])


def test_trajectory_export(tmp_path):
    space = ModeSpace((4,), ("cav1",))
    a = fock.ladder_matrix(4)
    me = MasterEquation.from_hamiltonian(space, np.zeros((4, 4)), [a])
    obs = {"n": np.diag(np.arange(4.0)), "a": sp.csr_matrix(a)}
    traj = integrate(fock.fock_state(space, {"cav1": 2}), me, [0, 0.5, 1.0], observables=obs)
    traj.to_csv(tmp_path / "t.csv")
    traj.to_json(tmp_path / "t.json")
    data = np.loadtxt(tmp_path / "t.csv", delimiter=",", skiprows=1)
    assert data.shape == (3, 3)
    assert np.allclose(data[:, 1], traj.observables["n"])
    meta = json.loads((tmp_path / "t.json").read_text())
    assert meta["dims"] == {"cav1": 4}
    assert meta["truncation_flag"] is False
    assert len(meta["rk4_steps_per_interval"]) == 2
