import math

import numpy as np
import pytest

from nsplab.decay import (
    ExperimentConfig,
    InitialData,
    NormSeries,
    PreconditionError,
    F_min_analytic,
    F_of_t,
    canonical_config,
    compare_ns,
    evolve_norm_series,
    expected_kernel_slope,
    fit_all,
    fit_decay,
    lower_bound_radius,
    spectral_kernel_lq_slope,
    verify_lower_bound,
)
from nsplab.radial import Gaussian, QuadratureSpec, RadialProfile, spectral_l2_norm
from nsplab.symbol import FluidParams

CANON = FluidParams()
# independent high-precision quadrature of int_0^5 e^{-2r^2} sin^2(r^2/2) dr
F0_PINNED = 0.024927771086339667
# ((sqrt(3pi)-sqrt(2pi))/2) e^{-7pi/2} sin^2(pi/8), evaluated to 30 digits
F_MIN_PINNED = 6.9200910919446004e-07


@pytest.fixture(scope="module")
def canonical_l2():
    cfg = canonical_config(derivative_orders=(0, 1))
    return cfg, evolve_norm_series(cfg)


def test_config_validation():
    with pytest.raises(ValueError):
        ExperimentConfig(t_min=0.0)
    with pytest.raises(ValueError):
        ExperimentConfig(t_min=10.0, t_max=5.0)
    with pytest.raises(ValueError):
        ExperimentConfig(norms=(("q", 2),))
    with pytest.raises(ValueError):
        ExperimentConfig(norms=(("n", 1),))
    with pytest.raises(ValueError):
        ExperimentConfig(initial=InitialData(n0=None))
    with pytest.raises(ValueError, match="fails"):
        ExperimentConfig(initial=InitialData(n0=Gaussian(1.0, 1.0), floor=(0.5, 1.0)))
    with pytest.raises(ValueError, match="transverse"):
        ExperimentConfig(initial=InitialData(m0_trans=Gaussian()), norms=(("m", math.inf),))


def test_time_grid_density():
    t = canonical_config().time_grid()
    assert t[0] == 100.0 and t[-1] == pytest.approx(1e4)
    assert t.size == 61
    assert np.allclose(np.diff(np.log(t)), np.log(t[1] / t[0]))


def test_transverse_heat_decay_closed_form():
    cfg = ExperimentConfig(initial=InitialData(n0=None, m0_trans=Gaussian(1.0, 0.5)),
                           norms=(("m", 2),), averaging=False)
    t = np.array([0.0, 0.5, 3.0, 40.0, 700.0])
    got = evolve_norm_series(cfg, t)[("m", 2, 0)].values
    exact = math.pi ** 0.75 * (1 + 2 * t) ** -0.75
    assert np.abs(got / exact - 1).max() <= 1e-8


def test_time_zero_matches_initial_norms():
    cfg = canonical_config(norms=(("n", 2), ("m", 2), ("E", 2), ("n", math.inf), ("n", 4)),
                           averaging=False)
    out = evolve_norm_series(cfg, [0.0])
    n0 = RadialProfile.sample(Gaussian(1.0, 1.0), QuadratureSpec(r_max=10.0))
    assert out[("n", 2, 0)].values[0] == pytest.approx(spectral_l2_norm(n0), rel=1e-12)
    assert out[("m", 2, 0)].values[0] == 0.0
    assert out[("E", 2, 0)].values[0] == pytest.approx(spectral_l2_norm(n0, -1), rel=1e-12)
    assert out[("n", math.inf, 0)].values[0] == pytest.approx(2 ** -1.5, rel=1e-9)
    assert out[("n", 4, 0)].values[0] == pytest.approx(2 ** -1.5 * math.pi ** 0.375, rel=1e-6)


def test_electric_field_two_paths():
    cfg = canonical_config(averaging=False)
    t = np.array([0.3, 5.0, 150.0, 4000.0])
    e_norm = evolve_norm_series(cfg, t)[("E", 2, 0)].values
    from nsplab.decay import _Propagator
    prop = _Propagator(cfg)
    for ti, e in zip(t, e_norm):
        spec = prop.spec(ti)
        n_prof = RadialProfile.sample(lambda r: prop.fields(r, ti)[0], spec)
        r, w = spec.rule()
        shortcut = math.sqrt(4 * math.pi * np.sum(w * np.abs(n_prof.values) ** 2))
        assert e == pytest.approx(shortcut, rel=1e-8)
        assert spectral_l2_norm(n_prof, -1) == pytest.approx(shortcut, rel=1e-8)


def test_quadrature_convergence_on_panel_doubling():
    base = canonical_config(derivative_orders=(0, 1), averaging=False)
    fine = canonical_config(derivative_orders=(0, 1), averaging=False, base_panels=96,
                            points_per_panel=20)
    t = [100.0, 900.0, 1e4]
    a, b = evolve_norm_series(base, t), evolve_norm_series(fine, t)
    for key in a:
        assert np.abs(a[key].values / b[key].values - 1).max() < 1e-8


def test_fit_exact_power_law():
    s = NormSeries.from_function(lambda t: (1 + t) ** -0.75, np.geomspace(1, 1e3, 30))
    fit = fit_decay(s, averaging=False)
    assert fit.exponent == pytest.approx(-0.75, abs=1e-6)
    assert fit.samples_used == 30
    assert fit.stderr < 1e-10


def test_fit_period_averaged_oscillation():
    f = lambda t: (1 + t) ** -0.25 * (0.6 + 0.4 * np.sin(t) ** 2)
    s = NormSeries.from_function(f, np.geomspace(1e2, 1e4, 61), period=math.pi)
    fit = fit_decay(s, averaging=True)
    assert -0.27 <= fit.exponent <= -0.23
    assert fit.period_averaged


def test_fit_constant_series():
    s = NormSeries.from_function(lambda t: 0 * t + 3.0, np.linspace(1, 10, 20))
    assert fit_decay(s, averaging=False).exponent == pytest.approx(0.0, abs=1e-12)


def test_fit_errors():
    s = NormSeries.from_function(lambda t: 1 / t, np.linspace(1, 10, 11))
    with pytest.raises(ValueError, match="samples"):
        fit_decay(s, averaging=False)
    s = NormSeries.from_function(lambda t: 0 * t, np.linspace(1, 10, 20))
    with pytest.raises(ValueError, match="positive"):
        fit_decay(s, averaging=False)
    s = NormSeries.from_function(lambda t: 1 / t, np.linspace(1, 10, 20))
    with pytest.raises(ValueError, match="block"):
        fit_decay(s, averaging=True)


def test_canonical_l2_exponents(canonical_l2):
    cfg, series = canonical_l2
    fits = {(f.field, f.k): f.exponent for f in fit_all(cfg, series)}
    assert fits[("n", 0)] == pytest.approx(-0.75, abs=0.05)
    assert fits[("m", 0)] == pytest.approx(-0.25, abs=0.05)
    assert fits[("E", 0)] == pytest.approx(-0.25, abs=0.05)
    for fld in "nmE":
        assert fits[(fld, 1)] - fits[(fld, 0)] == pytest.approx(-0.5, abs=0.05)
    assert abs(fits[("E", 0)] - fits[("m", 0)]) <= 0.03


def test_averaged_norms_monotone(canonical_l2):
    _, series = canonical_l2
    for s in series.values():
        avg = s.averaged()
        assert np.all(np.diff(avg) <= 0)


def test_window_doubling_stable():
    cfg = canonical_config(t_max=2e4)
    fits = {f.field: f.exponent for f in fit_all(cfg)}
    assert fits["n"] == pytest.approx(-0.75, abs=0.05)
    assert fits["m"] == pytest.approx(-0.25, abs=0.05)


def test_compare_ns_contrast():
    res = compare_ns(canonical_config())
    assert res["nsp_m_exponent"] == pytest.approx(-0.25, abs=0.05)
    assert res["ns_m_exponent"] == pytest.approx(-0.75, abs=0.05)
    assert res["nsp_n_exponent"] == pytest.approx(-0.75, abs=0.05)
    assert res["ns_n_exponent"] == pytest.approx(-0.75, abs=0.05)


def test_weak_coupling_drifts_toward_ns():
    weak = compare_ns(canonical_config(params=FluidParams(debye=1e3)))
    strong = compare_ns(canonical_config())
    # the plasma frequency is 1e-3, so the window only partly resolves the Poisson regime
    assert weak["ns_m_exponent"] - 0.05 < weak["nsp_m_exponent"] < strong["nsp_m_exponent"] - 0.05


@pytest.mark.parametrize("piece, p, alpha, target", [
    ("M", math.inf, 0, -1.5),
    ("M_frak", 2, 0, -0.25),
    ("N_frak", 2, 0, -1.25),
])
def test_kernel_slope_examples(piece, p, alpha, target):
    assert expected_kernel_slope(piece, p, alpha) == target
    fit = spectral_kernel_lq_slope(CANON, piece, p, alpha)
    assert fit.exponent == pytest.approx(target, abs=0.05)


@pytest.mark.parametrize("piece", ["N", "N_frak", "M", "M_frak", "L", "L_frak"])
def test_kernel_slope_exact_kernel(piece):
    for p in (2, math.inf):
        fit = spectral_kernel_lq_slope(CANON, piece, p, 0, mode="exact")
        assert fit.exponent == pytest.approx(expected_kernel_slope(piece, p, 0), abs=0.05)


def test_kernel_slope_rejects_unknown_piece():
    with pytest.raises(ValueError):
        spectral_kernel_lq_slope(CANON, "X", 2)


def test_F_bounds_and_pin():
    t = np.linspace(0, 10, 37)
    F = F_of_t(CANON, 5.0, t)
    upper = math.sqrt(math.pi / 2) / 2 * math.erf(5 * math.sqrt(2))
    assert np.all(F >= 0) and np.all(F <= upper)
    assert F_of_t(CANON, 5.0, 0.0) == pytest.approx(F0_PINNED, rel=1e-13)


@pytest.mark.parametrize("t", [0.0, 1.0, 2.5])
def test_F_periodic(t):
    assert abs(F_of_t(CANON, 5.0, t + math.pi) - F_of_t(CANON, 5.0, t)) <= 1e-10


def test_F_min_analytic_constant():
    assert F_min_analytic(CANON) == pytest.approx(F_MIN_PINNED, rel=1e-13)
    assert lower_bound_radius(CANON) == pytest.approx(4.689472099834751, rel=1e-14)


def test_lower_bound_report():
    rep = verify_lower_bound(CANON, 5.0)
    assert rep.F_min_numeric >= rep.F_min_analytic
    assert rep.periodicity_defect <= 1e-8
    lo, hi = rep.ratio_band
    assert lo > 0 and hi / lo <= 1e2
    assert rep.passed
    assert rep.F_samples.size >= 400


def test_lower_bound_precondition():
    with pytest.raises(PreconditionError, match="R > √\\(7π\\)/\\(c√λ\\)"):
        verify_lower_bound(CANON, 3.0)
