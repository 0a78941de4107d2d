"""Master-equation integration on a truncated Fock space.

The generator is ``d rho/dt = -i [H(t), rho] + sum_k (L_k rho L_k^+ - {L_k^+ L_k, rho}/2)``.
Time stepping is classical RK4 on each output interval; the step count is doubled
until two successive refinements agree to ``rtol``.
"""

from __future__ import annotations

import csv
import json
import math
from dataclasses import dataclass, field
from typing import Callable, Mapping, Sequence

import numpy as np
import scipy.linalg
import scipy.sparse as sp
from scipy.sparse.linalg import expm_multiply

from . import fock, gaussian
from .effective import SCHEME1_MODES, Couplings, coupling_constants, effective_hamiltonian, scheme1_propagator
from .errors import PhysicsDomainError, StepSizeError, TruncationError
from .fock import DIPOLE, DensityState, ModeSpace
from .model import MOTION, SystemParams, build_dissipators, hamiltonian_parts

TRUNCATION_TOL = 1e-4
EIGH_MAX_DIM = 6000


@dataclass(frozen=True, eq=False)
class MasterEquation:
    """Generator ``H(t) = H_static + Omega(t) D + h.c.`` plus jump operators."""

    space: ModeSpace
    h_static: sp.csr_matrix
    drive: sp.csr_matrix | None = None
    rabi: Callable[[float], complex] | None = None
    jumps: tuple = ()
    time_independent: bool = True

    def __post_init__(self):
        jumps = tuple(sp.csr_matrix(j) for j in self.jumps)
        object.__setattr__(self, "h_static", sp.csr_matrix(self.h_static))
        object.__setattr__(self, "jumps", jumps)
        n = self.space.total
        decay = sp.csr_matrix((n, n), dtype=complex)
        for j in jumps:
            decay = decay + j.conj().T @ j
        object.__setattr__(self, "_decay", decay.tocsr())

    @classmethod
    def from_params(cls, params: SystemParams, space: ModeSpace, lamb_dicke: str = "second_order",
                    recoil: bool = True, quadrature_order: int = 8) -> "MasterEquation":
        h, drive = hamiltonian_parts(params, space, lamb_dicke)
        dissipators = build_dissipators(params, space, recoil=recoil, quadrature_order=quadrature_order)
        return cls(space, h, drive, params.rabi, tuple(dissipators.jump_matrices()),
                   time_independent=params.envelope is None)

    @classmethod
    def from_hamiltonian(cls, space: ModeSpace, h, jumps: Sequence = ()) -> "MasterEquation":
        return cls(space, sp.csr_matrix(h), jumps=tuple(jumps))

    @property
    def is_unitary(self) -> bool:
        return len(self.jumps) == 0

    def hamiltonian(self, t: float) -> sp.csr_matrix:
        if self.drive is None:
            return self.h_static
        om = self.rabi(t) if self.rabi is not None else 1.0
        return (self.h_static + om * self.drive + np.conj(om) * self.drive.conj().T).tocsr()

    def rhs(self, t: float, rho: np.ndarray, h: sp.csr_matrix | None = None) -> np.ndarray:
        h = self.hamiltonian(t) if h is None else h
        heff = h - 0.5j * self._decay
        out = -1j * (heff @ rho)
        out += out.conj().T
        for j in self.jumps:
            out += j @ (j @ rho.conj().T).conj().T
        return out

    def rhs_ket(self, t: float, psi: np.ndarray, h: sp.csr_matrix | None = None) -> np.ndarray:
        h = self.hamiltonian(t) if h is None else h
        return -1j * (h @ psi)


def _rk4(f, t0: float, y: np.ndarray, dt: float, n: int, frozen_h) -> np.ndarray:
    t = t0
    for _ in range(n):
        h_a = frozen_h(t)
        h_m = frozen_h(t + 0.5 * dt)
        h_b = frozen_h(t + dt)
        k1 = f(t, y, h_a)
        k2 = f(t + 0.5 * dt, y + 0.5 * dt * k1, h_m)
        k3 = f(t + 0.5 * dt, y + 0.5 * dt * k2, h_m)
        k4 = f(t + dt, y + dt * k3, h_b)
        y = y + dt / 6.0 * (k1 + 2 * k2 + 2 * k3 + k4)
        t += dt
    return y


@dataclass
class Trajectory:
    """Output of :func:`integrate` or :func:`propagate_ket`."""

    space: ModeSpace
    times: np.ndarray
    observables: dict[str, np.ndarray]
    top_levels: dict[str, np.ndarray]
    trace_drift: float = 0.0
    min_eigenvalue: float | None = None
    steps: list[int] = field(default_factory=list)
    states: list[np.ndarray] | None = None
    metadata: dict = field(default_factory=dict)
    truncation_tol: float = TRUNCATION_TOL

    @property
    def max_top_level(self) -> float:
        if not self.top_levels:
            return 0.0
        return float(max(np.max(v) for v in self.top_levels.values()))

    @property
    def truncation_flag(self) -> bool:
        return self.max_top_level > self.truncation_tol

    @property
    def final_state(self):
        if not self.states:
            raise ValueError("trajectory was run without keeping states")
        return self.states[-1]

    def to_csv(self, path) -> None:
        names = list(self.observables)
        with open(path, "w", newline="") as fh:
            writer = csv.writer(fh)
            header = ["t"]
            for name in names:
                if np.iscomplexobj(self.observables[name]):
                    header += [f"{name}_re", f"{name}_im"]
                else:
                    header.append(name)
            writer.writerow(header)
            for k, t in enumerate(self.times):
                row = [repr(float(t))]
                for name in names:
                    v = self.observables[name][k]
                    if np.iscomplexobj(self.observables[name]):
                        row += [repr(float(v.real)), repr(float(v.imag))]
                    else:
                        row.append(repr(float(v)))
                writer.writerow(row)

    def metadata_dict(self) -> dict:
        return {
            **self.metadata,
            "dims": dict(zip(self.space.labels, self.space.dims)),
            "trace_drift": self.trace_drift,
            "min_eigenvalue": self.min_eigenvalue,
            "top_level_max": {k: float(np.max(v)) for k, v in self.top_levels.items()},
            "truncation_tol": self.truncation_tol,
            "truncation_flag": self.truncation_flag,
            "rk4_steps_per_interval": list(self.steps),
        }

    def to_json(self, path) -> None:
        with open(path, "w") as fh:
            json.dump(self.metadata_dict(), fh, indent=2, sort_keys=True)


def _finish_observables(raw: dict[str, list]) -> dict[str, np.ndarray]:
    out = {}
    for name, values in raw.items():
        arr = np.array(values, dtype=complex)
        out[name] = arr.real if np.all(np.abs(arr.imag) < 1e-14) else arr
    return out


def default_observables(space: ModeSpace) -> dict[str, sp.csr_matrix]:
    """Occupation operators ``n_<mode>`` for every bosonic mode."""
    out = {}
    for label in space.labels:
        if label == DIPOLE:
            out["p_excited"] = fock.embed_sparse(np.diag([0.0, 1.0]), space, DIPOLE)
        else:
            out[f"n_{label}"] = fock.embed_sparse(np.diag(np.arange(space.dim(label), dtype=float)), space, label)
    return out


def _time_grid(t_span) -> np.ndarray:
    times = np.asarray(t_span, dtype=float)
    if times.ndim != 1 or len(times) < 2 or np.any(np.diff(times) <= 0):
        raise ValueError("t_span must be an increasing sequence of at least two times")
    return times


def integrate(rho0: DensityState, system: SystemParams | MasterEquation, t_span: Sequence[float], *,
              observables: Mapping | None = None, rtol: float = 1e-6, max_step: float | None = None,
              min_step: float = 1e-12, truncation_tol: float = TRUNCATION_TOL, strict: bool = False,
              keep_states: bool = True, check_positivity: bool = True, **model_kw) -> Trajectory:
    """Integrate the master equation from ``rho0`` and sample at the times in ``t_span``.

    Args:
        rho0: initial density matrix.
        system: model parameters (full model on ``rho0.space``) or a prepared generator.
        t_span: increasing output times; the first is the initial time.
        observables: name -> matrix; defaults to the occupations of every mode.
        rtol: accepted change of state and observables between step doublings.
        max_step: initial RK4 step (defaults to one step per output interval).
        min_step: step below which :class:`StepSizeError` is raised.
        truncation_tol: top-level population above which the run is flagged.
        strict: raise :class:`TruncationError` instead of only flagging.

    Returns:
        A :class:`Trajectory`.
    """
    if isinstance(system, SystemParams):
        system = MasterEquation.from_params(system, rho0.space, **model_kw)
    if system.space != rho0.space:
        raise PhysicsDomainError("initial state and generator live on different spaces")
    times = _time_grid(t_span)
    space = rho0.space
    observables = default_observables(space) if observables is None else dict(observables)
    obs_mats = {k: (v.matrix if isinstance(v, fock.Operator) else v) for k, v in observables.items()}

    def frozen_h(t):
        return system.h_static if system.drive is None else system.hamiltonian(t)

    if system.time_independent:
        h_const = system.hamiltonian(times[0])
        frozen_h = lambda t: h_const  # noqa: E731

    def obs_of(rho):
        return {k: complex(np.sum((m @ rho).diagonal())) if sp.issparse(m) else complex(np.sum(m.T * rho))
                for k, m in obs_mats.items()}

    rho = np.array(rho0.matrix, dtype=complex)
    raw = {k: [v] for k, v in obs_of(rho).items()}
    top = {k: [v] for k, v in fock.top_level_populations(rho, space).items()}
    states = [rho.copy()] if keep_states else None
    drift = abs(np.trace(rho).real - 1.0)
    min_eig = float(np.linalg.eigvalsh(rho).min()) if check_positivity else None
    steps_used = []
    n = 1 if max_step is None else max(1, math.ceil((times[1] - times[0]) / max_step))
    for t0, t1 in zip(times[:-1], times[1:]):
        span = t1 - t0
        coarse = _rk4(system.rhs, t0, rho, span / n, n, frozen_h)
        while True:
            if span / (2 * n) < min_step:
                raise StepSizeError(f"step {span / (2 * n):.3g} fell below min_step {min_step:.3g} "
                                    f"on [{t0}, {t1}]")
            fine = _rk4(system.rhs, t0, rho, span / (2 * n), 2 * n, frozen_h)
            change = np.abs(fine - coarse).max()
            oc, of = obs_of(coarse), obs_of(fine)
            for k in of:
                change = max(change, abs(of[k] - oc[k]) / max(1.0, abs(of[k])))
            n *= 2
            if change <= rtol and np.all(np.isfinite(fine)):
                break
            coarse = fine
        rho = 0.5 * (fine + fine.conj().T)
        steps_used.append(n)
        # try a coarser step on the next interval
        n = max(1, n // 4)
        for k, v in obs_of(rho).items():
            raw[k].append(v)
        for k, v in fock.top_level_populations(rho, space).items():
            top[k].append(v)
        drift = max(drift, abs(np.trace(rho).real - 1.0))
        if check_positivity:
            min_eig = min(min_eig, float(np.linalg.eigvalsh(rho).min()))
        if keep_states:
            states.append(rho.copy())
    traj = Trajectory(space, times, _finish_observables(raw), {k: np.array(v) for k, v in top.items()},
                      trace_drift=drift, min_eigenvalue=min_eig, steps=steps_used, states=states,
                      metadata={"method": "rk4-density", "rtol": rtol}, truncation_tol=truncation_tol)
    _check_truncation(traj, strict)
    return traj


def _check_truncation(traj: Trajectory, strict: bool) -> None:
    if strict and traj.truncation_flag:
        raise TruncationError(
            f"top Fock level population {traj.max_top_level:.3g} exceeds {traj.truncation_tol:.3g}; "
            "increase the mode dimensions"
        )


def propagate_ket(psi0: np.ndarray, system: MasterEquation, t_span: Sequence[float], *,
                  observables: Mapping | None = None, rtol: float = 1e-6, min_step: float = 1e-12,
                  truncation_tol: float = TRUNCATION_TOL, strict: bool = False,
                  keep_states: bool = True, method: str = "auto") -> Trajectory:
    """Schrodinger evolution for generators without jump operators.

    Time-independent generators are propagated exactly, either through a dense
    eigendecomposition (``method="eigh"``) or the sparse action of the matrix
    exponential (``"expm"``); ``"auto"`` picks ``eigh`` up to ``EIGH_MAX_DIM``
    states. Time-dependent generators use RK4 with step doubling as in
    :func:`integrate`.
    """
    if method not in ("auto", "eigh", "expm"):
        raise ValueError(f"unknown method {method!r}")
    if not system.is_unitary:
        raise PhysicsDomainError("pure-state propagation needs a generator without jump operators")
    times = _time_grid(t_span)
    space = system.space
    observables = default_observables(space) if observables is None else dict(observables)
    obs_mats = {k: (v.matrix if isinstance(v, fock.Operator) else v) for k, v in observables.items()}
    psi = np.asarray(psi0, dtype=complex)
    if psi.shape != (space.total,):
        raise ValueError("ket does not match the generator's space")

    def obs_of(v):
        return {k: fock.ket_expectation(v, m) for k, m in obs_mats.items()}

    raw = {k: [v] for k, v in obs_of(psi).items()}
    top = {k: [v] for k, v in fock.top_level_populations(psi, space).items()}
    states = [psi.copy()] if keep_states else None
    drift = abs(np.vdot(psi, psi).real - 1.0)
    steps_used = []
    h_const = system.hamiltonian(times[0]) if system.time_independent else None
    if h_const is not None and method == "auto":
        method = "eigh" if space.total <= EIGH_MAX_DIM else "expm"
    if h_const is not None and method == "eigh":
        energies, vecs = scipy.linalg.eigh(h_const.toarray(), overwrite_a=True, check_finite=False)
    n = 1
    for t0, t1 in zip(times[:-1], times[1:]):
        span = t1 - t0
        if h_const is not None and method == "eigh":
            psi = vecs @ (np.exp(-1j * span * energies) * (vecs.conj().T @ psi))
            steps_used.append(0)
        elif h_const is not None:
            psi = expm_multiply(-1j * span * h_const, psi)
            steps_used.append(0)
        else:
            f = lambda t, y, h: system.rhs_ket(t, y, h)  # noqa: E731
            coarse = _rk4(f, t0, psi, span / n, n, system.hamiltonian)
            while True:
                if span / (2 * n) < min_step:
                    raise StepSizeError(f"step {span / (2 * n):.3g} fell below min_step {min_step:.3g}")
                fine = _rk4(f, t0, psi, span / (2 * n), 2 * n, system.hamiltonian)
                n *= 2
                if np.abs(fine - coarse).max() <= rtol:
                    break
                coarse = fine
            psi = fine
            steps_used.append(n)
            n = max(1, n // 4)
        for k, v in obs_of(psi).items():
            raw[k].append(v)
        for k, v in fock.top_level_populations(psi, space).items():
            top[k].append(v)
        drift = max(drift, abs(np.vdot(psi, psi).real - 1.0))
        if keep_states:
            states.append(psi.copy())
    traj = Trajectory(space, times, _finish_observables(raw), {k: np.array(v) for k, v in top.items()},
                      trace_drift=drift, steps=steps_used, states=states,
                      metadata={"method": f"{method}-ket" if h_const is not None else "rk4-ket", "rtol": rtol},
                      truncation_tol=truncation_tol)
    _check_truncation(traj, strict)
    return traj


# --- full model vs effective model -----------------------------------------------


FULL_LABELS = (DIPOLE, MOTION, "cav1", "cav2")


@dataclass
class ComparisonReport:
    """Full-model and effective-model moments after a pulse of length ``duration``."""

    duration: float
    dims: dict[str, int]
    couplings: Couplings | None
    full: dict[str, complex]
    effective: dict[str, complex]
    relative_errors: dict[str, float]
    fidelity: float
    top_levels: dict[str, float]
    truncation_tol: float = TRUNCATION_TOL
    method: str = ""

    @property
    def truncation_flag(self) -> bool:
        return max(self.top_levels.values()) > self.truncation_tol

    @property
    def max_occupation_error(self) -> float:
        """Largest relative error of the cavity occupations."""
        return max(self.relative_errors["n_cav1"], self.relative_errors["n_cav2"])

    @property
    def motion_residual(self) -> float:
        """``|<b^+b>_full - <b^+b>_eff|``; reported absolutely since the effective value vanishes at ``T_pi``."""
        return abs(self.full["n_motion"] - self.effective["n_motion"])

    def to_dict(self) -> dict:
        def enc(v):
            v = complex(v)
            return v.real if v.imag == 0 else [v.real, v.imag]

        return {
            "duration": self.duration,
            "dims": self.dims,
            "couplings": None if self.couplings is None else
            {"chi1": enc(self.couplings.chi1), "chi2": enc(self.couplings.chi2)},
            "full": {k: enc(v) for k, v in self.full.items()},
            "effective": {k: enc(v) for k, v in self.effective.items()},
            "relative_errors": self.relative_errors,
            "max_occupation_error": self.max_occupation_error,
            "motion_residual": self.motion_residual,
            "fidelity": self.fidelity,
            "top_levels": self.top_levels,
            "truncation_tol": self.truncation_tol,
            "truncation_flag": self.truncation_flag,
            "method": self.method,
        }


def _rel(a: complex, b: complex) -> float:
    if b == 0:
        return 0.0 if a == 0 else math.inf
    return abs(a - b) / abs(b)


def _comparison_operators(space: ModeSpace) -> dict[str, sp.csr_matrix]:
    a1 = fock.sparse_annihilation(space, "cav1")
    a2 = fock.sparse_annihilation(space, "cav2")
    b = fock.sparse_annihilation(space, MOTION)
    return {
        "n_cav1": (a1.conj().T @ a1).tocsr(),
        "n_cav2": (a2.conj().T @ a2).tocsr(),
        "n_motion": (b.conj().T @ b).tocsr(),
        "a1a2": (a1 @ a2).tocsr(),
    }


def compare_full_vs_effective(params: SystemParams, duration: float | None = None,
                              dims: Sequence[int] = (2, 12, 14, 14), *, strict: bool = False,
                              lamb_dicke: str = "second_order", recoil: bool = True,
                              truncation_tol: float = TRUNCATION_TOL, rtol: float = 1e-6,
                              method: str = "auto") -> ComparisonReport:
    """Run the full dipole+motion+cavity model and compare with the effective prediction.

    The pulse starts from the atomic ground state and the vacuum of all bosonic
    modes. With ``gamma = kappa = 0`` the full model is propagated as a pure state;
    otherwise the density matrix is integrated. ``duration`` defaults to the
    half period of the effective dynamics (or ``0`` when the drive is off).

    Args:
        params: full-model parameters with ``delta1 = nu`` and ``delta2 = -nu``.
        duration: pulse length.
        dims: dimensions for (dipole, motion, cav1, cav2).
        strict: raise :class:`TruncationError` when a top Fock level holds more
            than ``truncation_tol``; otherwise only flag it in the report.

    Returns:
        A :class:`ComparisonReport`.
    """
    space = ModeSpace(tuple(dims), FULL_LABELS)
    drive_off = params.omega == 0 or params.eta == 0 or (params.g1 == 0 and params.g2 == 0)
    couplings = None if drive_off else coupling_constants(params)
    if duration is None:
        duration = 0.0 if couplings is None else couplings.half_period
    if duration < 0:
        raise PhysicsDomainError("pulse duration must be non-negative")
    ops = _comparison_operators(space)
    system = MasterEquation.from_params(params, space, lamb_dicke=lamb_dicke, recoil=recoil)
    ket0 = fock.fock_ket(space)
    full_ket = None
    if duration == 0:
        full = {k: fock.ket_expectation(ket0, m) for k, m in ops.items()}
        top = fock.top_level_populations(ket0, space)
        full_ket, method = ket0, "none"
    elif system.is_unitary:
        traj = propagate_ket(ket0, system, [0.0, duration], observables=ops, rtol=rtol, method=method)
        full = {k: v[-1] for k, v in traj.observables.items()}
        top = {k: float(np.max(v)) for k, v in traj.top_levels.items()}
        full_ket, method = traj.final_state, traj.metadata["method"]
    else:
        rho0 = DensityState.from_ket(space, ket0)
        traj = integrate(rho0, system, [0.0, duration], observables=ops, rtol=rtol,
                         check_positivity=space.total <= 2000)
        full = {k: v[-1] for k, v in traj.observables.items()}
        top = {k: float(np.max(v)) for k, v in traj.top_levels.items()}
        method = traj.metadata["method"]
        full_rho = traj.final_state

    # effective prediction: Gaussian moments and a truncated-Fock ket for the fidelity
    eff_space = ModeSpace(tuple(dims[1:]), FULL_LABELS[1:])
    eff_ket = fock.fock_ket(eff_space)
    state = gaussian.vacuum(SCHEME1_MODES)
    if couplings is not None and duration > 0:
        state = gaussian.apply_bogoliubov(state, scheme1_propagator(couplings, duration))
        eff_ket = expm_multiply(-1j * duration * effective_hamiltonian(couplings, eff_space), eff_ket)
    # back to the laser frame: free terms nu (b^+b - a1^+a1 + a2^+a2)
    free = (np.arange(dims[1])[:, None, None] - np.arange(dims[2])[None, :, None]
            + np.arange(dims[3])[None, None, :])
    eff_ket = eff_ket * np.exp(-1j * params.nu * duration * free.ravel())
    effective = {
        "n_cav1": gaussian.occupation(state, "cav1"),
        "n_cav2": gaussian.occupation(state, "cav2"),
        "n_motion": gaussian.occupation(state, "motion"),
        "a1a2": gaussian.pair_moment(state, "cav1", "cav2"),
    }
    if full_ket is not None:
        overlaps = full_ket.reshape(2, -1).conj() @ eff_ket
        fid = float(np.sum(np.abs(overlaps) ** 2))
    else:
        red = fock.partial_trace_matrix(full_rho, space, FULL_LABELS[1:])
        fid = float(np.real(np.vdot(eff_ket, red @ eff_ket)))
    errors = {k: _rel(full[k], effective[k]) for k in ("n_cav1", "n_cav2", "a1a2")}
    report = ComparisonReport(duration, dict(zip(FULL_LABELS, map(int, dims))), couplings,
                              {k: complex(v) for k, v in full.items()},
                              {k: complex(v) for k, v in effective.items()},
                              errors, fid, top, truncation_tol, method)
    if strict and report.truncation_flag:
        raise TruncationError(
            f"top Fock level population {max(top.values()):.3g} exceeds {truncation_tol:.3g} at dims {tuple(dims)}"
        )
    return report
