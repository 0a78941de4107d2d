"""Balanced-homodyne correlation signal of the two cavity outputs.

``q_j(theta)`` are the intracavity quadratures at the end of the pulse (vacuum
variance 1). The output-field integration window ``dt`` enters through

    R(t) = kappa dt exp(-2 kappa t) (<q_1^2> + <q_2^2>)

and the normalized correlation of the photocurrents is

    C(t) = 1 - R/(1 + R) * 2 <q_1 q_2> / (<q_1^2> + <q_2^2>),

which equals 1 for uncorrelated inputs (shot noise).
"""

from __future__ import annotations

import cmath
import csv
import json
import math
from dataclasses import dataclass, field
from pathlib import Path
from typing import Sequence

import numpy as np

from . import gaussian
from .effective import (
    BogoliubovMap,
    Couplings,
    scheme2_beamsplitter,
    scheme2_r,
    scheme2_squeeze,
)
from .errors import PhysicsDomainError, RegimeError

MAX_KAPPA_DT = 0.2
MIN_KAPPA_TAU = 3.0


@dataclass(frozen=True)
class QuadratureMoments:
    q1_sq: float
    q2_sq: float
    q1q2: float


def quadrature_moments(c: Couplings, theta1: float = 0.0, theta2: float = 0.0) -> QuadratureMoments:
    """Cavity quadrature moments after the half period, closed form."""
    theta4 = c.theta**4
    s = abs(c.chi1) ** 2 + abs(c.chi2) ** 2
    diag = (s**2 + 4 * abs(c.chi1 * c.chi2) ** 2) / theta4
    cross = (4 * c.chi1 * c.chi2 * s * cmath.exp(1j * (theta1 + theta2)) / theta4).real
    return QuadratureMoments(diag, diag, cross)


def moments_from_state(state: gaussian.GaussianState, theta1: float = 0.0, theta2: float = 0.0,
                       modes: tuple[str, str] | None = None) -> QuadratureMoments:
    m1, m2 = modes if modes is not None else state.modes[:2]
    q = gaussian.quadrature_second_moment
    return QuadratureMoments(q(state, m1, theta1, m1, theta1), q(state, m2, theta2, m2, theta2),
                             q(state, m1, theta1, m2, theta2))


def _common_kappa(kappa) -> float:
    if np.ndim(kappa) == 0:
        k = float(kappa)
    else:
        rates = [float(v) for v in kappa]
        if max(rates) - min(rates) > 1e-12 * max(rates):
            raise PhysicsDomainError(f"cavity rates must be equal for the homodyne signal, got {rates}")
        k = rates[0]
    if k <= 0:
        raise PhysicsDomainError("kappa must be positive")
    return k


def _check_window(kappa: float, dt: float) -> None:
    if dt <= 0:
        raise PhysicsDomainError("integration window dt must be positive")
    if kappa * dt > MAX_KAPPA_DT:
        raise PhysicsDomainError(
            f"kappa*dt = {kappa * dt:.3g} exceeds {MAX_KAPPA_DT}: window too coarse for the continuum limit"
        )


def ratio_R(t, dt: float, kappa, moments: QuadratureMoments):
    """``R(t)``; ``t`` may be an array."""
    kappa = _common_kappa(kappa)
    _check_window(kappa, dt)
    t = np.asarray(t, dtype=float)
    return kappa * dt * np.exp(-2 * kappa * t) * (moments.q1_sq + moments.q2_sq)


def c12_from_moments(t, dt: float, kappa, moments: QuadratureMoments):
    r_val = ratio_R(t, dt, kappa, moments)
    corr = 2 * moments.q1q2 / (moments.q1_sq + moments.q2_sq)
    return 1 - r_val / (1 + r_val) * corr


def c12(t, dt: float, kappa, c: Couplings, theta1: float = 0.0, theta2: float = 0.0):
    """Correlation signal ``C(t)`` for the scheme-1 state after ``T_pi``."""
    return c12_from_moments(t, dt, kappa, quadrature_moments(c, theta1, theta2))


def c12_from_output_moments(t, dt: float, kappa, moments: QuadratureMoments):
    """``C(t)`` assembled from the integrated output-field moments.

    ``<Q_j^2> = 2 kappa e^{-2 kappa t} (<q_j^2> + e^{2 kappa t}/(2 kappa dt))`` contains the
    free-field vacuum contribution; ``<Q_1 Q_2> = 2 kappa e^{-2 kappa t} <q_1 q_2>``.
    """
    kappa = _common_kappa(kappa)
    _check_window(kappa, dt)
    t = np.asarray(t, dtype=float)
    decay = 2 * kappa * np.exp(-2 * kappa * t)
    vac = 1 / dt
    big1 = decay * moments.q1_sq + vac
    big2 = decay * moments.q2_sq + vac
    cross = decay * moments.q1q2
    return 1 - 2 * cross / (big1 + big2)


def c12_r(t, dt: float, kappa, r: float):
    """``C(t)`` for real couplings with ratio ``r`` and ``theta_1 = theta_2 = 0``."""
    kappa = _common_kappa(kappa)
    _check_window(kappa, dt)
    if r <= 1:
        raise RegimeError(f"r must exceed 1, got {r}")
    t = np.asarray(t, dtype=float)
    s = 2 * r / (1 + r**2)
    q_sq = ((1 + r**2) ** 2 + 4 * r**2) / (r**2 - 1) ** 2
    r_val = 2 * kappa * dt * np.exp(-2 * kappa * t) * q_sq
    return 1 - r_val / (1 + r_val) * s * 2 / (1 + s**2)


@dataclass
class CorrelationSeries:
    """``C(t)`` and ``R(t)`` on a grid of ``kappa t``."""

    kappa_t: np.ndarray
    c12: np.ndarray
    R: np.ndarray
    metadata: dict = field(default_factory=dict)

    def to_csv(self, path) -> None:
        with open(path, "w", newline="") as fh:
            writer = csv.writer(fh)
            writer.writerow(["kappa_t", "C12", "R"])
            for row in zip(self.kappa_t, self.c12, self.R):
                writer.writerow([repr(float(v)) for v in row])

    @classmethod
    def from_csv(cls, path, metadata: dict | None = None) -> "CorrelationSeries":
        data = np.loadtxt(path, delimiter=",", skiprows=1, ndmin=2)
        return cls(data[:, 0], data[:, 1], data[:, 2], dict(metadata or {}))

    def to_json(self, path) -> None:
        with open(path, "w") as fh:
            json.dump(self.metadata, fh, indent=2, sort_keys=True)

    def to_gnuplot(self, path) -> None:
        with open(path, "w") as fh:
            fh.write("# " + " ".join(f"{k}={v}" for k, v in sorted(self.metadata.items())) + "\n")
            fh.write("# kappa_t C12 R\n")
            for row in zip(self.kappa_t, self.c12, self.R):
                fh.write(" ".join(repr(float(v)) for v in row) + "\n")


def _series(kappa_t, kappa_dt: float, moments: QuadratureMoments, metadata: dict) -> CorrelationSeries:
    kt = np.asarray(kappa_t, dtype=float)
    if np.any(kt < 0):
        raise PhysicsDomainError("times must be non-negative")
    # kappa = 1 sets the time unit
    return CorrelationSeries(kt.copy(), np.asarray(c12_from_moments(kt, kappa_dt, 1.0, moments)),
                             np.asarray(ratio_R(kt, kappa_dt, 1.0, moments)), metadata)


def figure2(r_list: Sequence[float], kappa_t, kappa_dt: float = 0.1,
            theta: float = 0.0) -> list[CorrelationSeries]:
    """One correlation series per ratio ``r`` (real couplings, ``theta_1 = theta_2 = theta``)."""
    if len(r_list) == 0:
        raise PhysicsDomainError("r_list is empty")
    out = []
    for r in r_list:
        if r <= 1:
            raise RegimeError(f"r must exceed 1, got {r}")
        c = Couplings.from_ratio(float(r))
        meta = {"scheme": "scheme1", "r": float(r), "theta1": theta, "theta2": theta,
                "kappa_dt": kappa_dt, "mean_photons": c.mean_photons()}
        out.append(_series(kappa_t, kappa_dt, quadrature_moments(c, theta, theta), meta))
    return out


def write_gnuplot_script(path, data_files: Sequence[str], labels: Sequence[str]) -> None:
    """Minimal gnuplot stub plotting ``C12`` against ``kappa t`` for each data file."""
    lines = [
        "set xlabel 'kappa t'",
        "set ylabel 'C_{1,2}'",
        "set key bottom right",
        "plot " + ", \\\n     ".join(
            f"'{Path(f).name}' using 1:2 with lines title '{lab}'" for f, lab in zip(data_files, labels)
        ),
    ]
    Path(path).write_text("\n".join(lines) + "\n")


# --- scheme 2 -------------------------------------------------------------------


def scheme2_pulse_state(chi: complex, t1: float) -> gaussian.GaussianState:
    """Gaussian state of the two output pulses.

    Pulse 1 carries the cavity mode after the squeezing pulse; pulse 2 carries the
    motional state swapped into the cavity by the beam-splitter pulse, i.e. the
    beam-splitter's cavity row applied to the stored motion.
    """
    squeezed = gaussian.apply_bogoliubov(gaussian.vacuum(("cav", "motion")), scheme2_squeeze(chi, t1))
    _, swap = scheme2_beamsplitter(chi)
    m = np.zeros((4, 4), dtype=complex)
    m[0:2] = np.eye(4)[0:2]
    # a-rows of the swap act on a freshly emptied cavity and the stored motion
    m[2:4] = swap.matrix[0:2]
    pulses = BogoliubovMap(m, ("cav", "motion"), t1)
    state = gaussian.apply_bogoliubov(squeezed, pulses)
    return gaussian.GaussianState(state.mean, state.cov, ("pulse1", "pulse2"))


def scheme2_correlation(chi: complex, t1: float, tau: float, kappa_t, kappa_dt: float = 0.1,
                        kappa: float = 1.0, theta1: float = 0.0, theta2: float = 0.0) -> CorrelationSeries:
    """Correlation of the difference current between the two delayed pulses.

    Args:
        chi: scheme-2 coupling.
        t1: squeezing pulse length.
        tau: delay between the pulses; ``kappa * tau >= 3`` is required.
        kappa_t: grid of ``kappa t`` within each pulse.
        kappa_dt: integration window in units of ``1/kappa``.
    """
    if kappa * tau < MIN_KAPPA_TAU:
        raise PhysicsDomainError(
            f"kappa*tau = {kappa * tau:.3g} < {MIN_KAPPA_TAU}: first pulse has not left the cavity"
        )
    r = scheme2_r(chi, t1)
    moments = moments_from_state(scheme2_pulse_state(chi, t1), theta1, theta2)
    meta = {"scheme": "scheme2", "r": r, "theta1": theta1, "theta2": theta2, "kappa_dt": kappa_dt,
            "chi": [complex(chi).real, complex(chi).imag], "T1": t1, "kappa_tau": kappa * tau}
    return _series(kappa_t, kappa_dt, moments, meta)
