import cmath
import json
import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from epr_cavity import gaussian
from epr_cavity.effective import Couplings, squeeze_time, scheme2_r
from epr_cavity.errors import PhysicsDomainError, RegimeError
from epr_cavity.homodyne import (
    CorrelationSeries,
    QuadratureMoments,
    c12,
    c12_from_moments,
    c12_from_output_moments,
    c12_r,
    figure2,
    quadrature_moments,
    ratio_R,
    scheme2_correlation,
    scheme2_pulse_state,
    write_gnuplot_script,
)

R11 = Couplings(1.0, 1.1)


def test_ratio_examples():
    # [DERIVED] 0.1 * (220.5011 + 220.5011) and its e^{-2} decay
    m = quadrature_moments(R11)
    assert ratio_R(0.0, 0.1, 1.0, m) == pytest.approx(44.100, abs=1e-3)
    assert ratio_R(1.0, 0.1, 1.0, m) == pytest.approx(5.968, abs=1e-3)


def test_correlation_examples_r11():
    # [DERIVED] scalar evaluation of the r-form
    assert c12(0.0, 0.1, 1.0, R11) == pytest.approx(0.0221829, abs=1e-7)
    assert c12(1.0, 0.1, 1.0, R11) == pytest.approx(0.1435155, abs=1e-7)


def test_uncorrelated_input_is_shot_noise():
    m = QuadratureMoments(1.0, 1.0, 0.0)
    assert np.allclose(c12_from_moments(np.linspace(0, 3, 7), 0.1, 1.0, m), 1.0)


@settings(max_examples=50, deadline=None)
@given(r=st.floats(1.01, 5), kt=st.floats(0, 5), kdt=st.floats(0.001, 0.2), kappa=st.floats(0.1, 10))
def test_three_paths_agree(r, kt, kdt, kappa):
    c = Couplings.from_ratio(r)
    t, dt = kt / kappa, kdt / kappa
    m = quadrature_moments(c)
    direct = c12(t, dt, kappa, c)
    assert direct == pytest.approx(c12_r(t, dt, kappa, r), abs=1e-12)
    assert direct == pytest.approx(c12_from_output_moments(t, dt, kappa, m), abs=1e-12)


@settings(max_examples=50, deadline=None)
@given(m1=st.floats(0.1, 2), r=st.floats(1.01, 4), p1=st.floats(-3, 3), p2=st.floats(-3, 3),
       t1=st.floats(-3, 3), t2=st.floats(-3, 3), kt=st.floats(0, 5))
def test_signal_bounded(m1, r, p1, p2, t1, t2, kt):
    c = Couplings(m1 * cmath.exp(1j * p1), r * m1 * cmath.exp(1j * p2))
    value = c12(kt, 0.1, 1.0, c, t1, t2)
    big = ratio_R(kt, 0.1, 1.0, quadrature_moments(c, t1, t2))
    assert 1 - big / (1 + big) - 1e-12 <= value <= 1 + big / (1 + big) + 1e-12


def test_window_and_rate_validation():
    m = quadrature_moments(R11)
    with pytest.raises(PhysicsDomainError):
        ratio_R(0.0, 0.3, 1.0, m)
    with pytest.raises(PhysicsDomainError):
        ratio_R(0.0, 0.0, 1.0, m)
    with pytest.raises(PhysicsDomainError):
        c12(0.0, 0.1, [1.0, 1.2], R11)
    assert c12(0.0, 0.1, [1.0, 1.0], R11) == pytest.approx(c12(0.0, 0.1, 1.0, R11))
    with pytest.raises(RegimeError):
        c12_r(0.0, 0.1, 1.0, 1.0)


def test_figure2_ordering_and_limits():
    grid = np.linspace(0, 8, 81)
    series = figure2([1.05, 1.1, 1.3, 1.5, 1.8], grid, 0.1)
    for lower, higher in zip(series, series[1:]):
        assert np.all(lower.c12 < higher.c12)
    for s in series:
        assert np.all(np.diff(s.c12) > 0)
        assert s.c12[-1] == pytest.approx(1, abs=1e-4)
        assert np.allclose(s.c12, c12_r(grid, 0.1, 1.0, s.metadata["r"]), atol=1e-12)
    with pytest.raises(PhysicsDomainError):
        figure2([], grid)
    with pytest.raises(RegimeError):
        figure2([0.9], grid)
    with pytest.raises(PhysicsDomainError):
        figure2([1.1], [-1.0, 0.0])


def test_series_round_trip(tmp_path):
    s = figure2([1.1], np.linspace(0, 3, 31))[0]
    s.to_csv(tmp_path / "s.csv")
    back = CorrelationSeries.from_csv(tmp_path / "s.csv")
    assert np.array_equal(back.kappa_t, s.kappa_t)
    assert np.array_equal(back.c12, s.c12)
    assert np.array_equal(back.R, s.R)
    s.to_json(tmp_path / "s.json")
    assert json.loads((tmp_path / "s.json").read_text())["r"] == 1.1
    s.to_gnuplot(tmp_path / "s.dat")
    assert np.allclose(np.loadtxt(tmp_path / "s.dat")[:, 1], s.c12)
    write_gnuplot_script(tmp_path / "p.gp", ["s.dat"], ["r = 1.1"])
    assert "s.dat" in (tmp_path / "p.gp").read_text()


# --- scheme 2 ---


@pytest.mark.parametrize("phase", [0.0, 0.8, -2.0])
def test_scheme2_pulses_match_scheme1(phase):
    chi = 0.25 * cmath.exp(1j * phase)
    t1 = squeeze_time(chi, 100.0)
    r = scheme2_r(chi, t1)
    theta = -phase
    pulses = scheme2_pulse_state(chi, t1)
    assert gaussian.occupation(pulses, "pulse1") == pytest.approx(100, rel=1e-12)
    assert gaussian.occupation(pulses, "pulse2") == pytest.approx(100, rel=1e-12)
    expected = 2 * (r - 1) ** 2 / (r + 1) ** 2
    dx, dp = gaussian.epr_variance(pulses, theta, theta)
    assert dx == pytest.approx(expected, abs=1e-12)
    assert dp == pytest.approx(expected, abs=1e-12)
    grid = np.linspace(0, 3, 31)
    series = scheme2_correlation(chi, t1, 3.0, grid, 0.1, 1.0, theta, theta)
    assert np.allclose(series.c12, c12_r(grid, 0.1, 1.0, r), atol=1e-12)
    assert series.metadata["r"] == pytest.approx(1.104988, abs=1e-6)


def test_scheme2_delay_validation():
    with pytest.raises(PhysicsDomainError):
        scheme2_correlation(0.2, 10.0, 2.9, [0.0, 1.0])
    series = scheme2_correlation(0.2, 10.0, 30.0, [0.0, 1.0], kappa=0.1)
    assert series.metadata["kappa_tau"] == pytest.approx(3.0)
