from __future__ import annotations

import math
from fractions import Fraction

import numpy as np
import pytest

from mongelab.errors import FitError
from mongelab.field_core import Domain, QuadraticField, RadialPowerField, evaluate_jet
from mongelab.norms import (
    OrliczGauge,
    classify_profile,
    critical_exponent,
    decay_fit,
    log_divergence_fit,
    loglog_fit,
    lp_norm,
    luxemburg_norm,
    orlicz_divergence_test,
    scaling_invariance_check,
    tail_divergence_test,
)
from mongelab.pogorelov import build_example, default_spec
from mongelab.quadrature import AnnulusProfile, AnnulusScheme, dyadic_annulus_profile


@pytest.mark.parametrize("setting, n, k, p", [
    ("real", 3, 1, Fraction(3)),
    ("complex", 2, 1, Fraction(2)),
    ("real", 5, 2, Fraction(15, 4)),
])
def test_critical_exponents(setting, n, k, p):
    assert critical_exponent(setting, n, k).p_crit == p


def test_critical_exponent_preconditions():
    with pytest.raises(ValueError):
        critical_exponent("real", 4, 2)
    with pytest.raises(ValueError):
        critical_exponent("complex", 2, 2)


def test_luxemburg_constant_on_unit_box():
    box = Domain.box([0, 0], [1, 1])
    one = luxemburg_norm(lambda X: np.ones(len(X)), box, OrliczGauge("power", 2.0), budget=5000)
    assert one == pytest.approx(1.0, rel=1e-6)
    c = luxemburg_norm(lambda X: np.full(len(X), 3.7), box, OrliczGauge("power", 4.0),
                       budget=5000)
    assert c == pytest.approx(3.7, rel=1e-6)


def test_luxemburg_matches_radial_closed_form():
    u = RadialPowerField(4 / 3, 3)

    def g(X):
        return evaluate_jet(u, X, check=False).laplacian

    dom = Domain.annulus(3, 0.01, 1.0)
    lux = luxemburg_norm(g, dom, OrliczGauge("power", 3.0), budget=100_000)
    closed = (28 / 9) * (4 * math.pi * 0.99) ** (1 / 3)
    assert lux == pytest.approx(closed, rel=1e-4)
    assert lux == pytest.approx(lp_norm(g, dom, 3.0, budget=100_000), rel=1e-6)


def test_gauge_continuation_is_continuous_at_e():
    F = OrliczGauge("power-log", 3.0, 1.0)
    e = math.e
    lo, hi = F(np.array([e * (1 - 1e-9)])), F(np.array([e]))
    assert lo[0] == pytest.approx(hi[0], rel=1e-7)
    assert F(np.array([0.0]))[0] == 0.0
    assert F.convex_certified
    assert not OrliczGauge("power-log", 1.2, 0.5).convex_certified


@pytest.mark.parametrize("m, s, verdict", [
    (3.0, 1.0, "diverges"), (3.0, 1.5, "converges"), (2.5, 0.0, "converges")])
def test_orlicz_divergence_examples(m, s, verdict):
    assert orlicz_divergence_test(OrliczGauge("power-log", m, s), 3, 1) == verdict


@pytest.mark.parametrize("m, s, verdict", [
    (3.5, 2.0, "diverges"), (3.0, 0.0, "diverges"), (3.0, 2.0, "converges"),
    (2.5, 0.0, "converges")])
def test_tail_divergence_agrees(m, s, verdict):
    t = np.geomspace(1e3, 1e30, 200)
    assert tail_divergence_test(t, OrliczGauge("power-log", m, s)(t), 3, 1) == verdict


def test_tail_divergence_knife_edge_inconclusive():
    t = np.geomspace(1e3, 1e30, 200)
    with pytest.raises(FitError):
        tail_divergence_test(t, OrliczGauge("power-log", 3.0, 1.0)(t), 3, 1)


def test_loglog_fit_exact_power():
    x = np.geomspace(1e-3, 1, 10)
    fit = loglog_fit(x, 2.5 * x**1.7)
    assert fit.exponent == pytest.approx(1.7)
    assert fit.r2 == pytest.approx(1.0)


def test_log_divergence_fit_on_homogeneous_power():
    prof = dyadic_annulus_profile(RadialPowerField(4 / 3, 3), "laplacian", 4.5,
                                  AnnulusScheme(1.0, 8, 50_000))
    lf = log_divergence_fit(prof)
    assert lf.verdict == "log-divergent"
    assert lf.r2 > 0.999
    assert lf.slope == pytest.approx((28 / 9) ** 4.5 * 4 * math.pi, rel=0.01)
    assert classify_profile(prof) == "divergent"
    assert '"verdict"' in lf.to_json()


def test_constant_laplacian_not_log_divergent():
    prof = dyadic_annulus_profile(QuadraticField(2 * np.eye(3)), "laplacian", 1.0,
                                  AnnulusScheme(1.0, 6, 20_000))
    assert log_divergence_fit(prof).verdict == "not log-divergent"
    dec = decay_fit(prof)
    assert dec.exponent == pytest.approx(3.0, abs=1e-3)
    assert classify_profile(prof) == "finite"


def test_fit_needs_enough_annuli():
    prof = AnnulusProfile(np.array([1, 0.5, 0.25, 0.125]), np.ones(3), np.full(3, 0.01),
                          np.zeros(3, bool))
    with pytest.raises(FitError):
        log_divergence_fit(prof)


def test_scaling_invariance_real_homogeneous():
    rep = scaling_invariance_check(RadialPowerField(4 / 3, 3), "real", q=4 / 3,
                                   radii=(0.5, 0.25, 0.125), budget=20_000)
    assert rep.max_deviation < 1e-3


def test_scaling_invariance_complex():
    u = build_example(default_spec("complex", 2, 1))
    rep = scaling_invariance_check(u, "complex", radii=(0.5, 0.25), budget=20_000)
    assert rep.max_deviation < 1e-2


def test_scaling_invariance_single_scale():
    u = RadialPowerField(4 / 3, 3, domain=Domain.ball(3, 2.0))
    rep = scaling_invariance_check(u, "real", q=4 / 3, radii=(1.0,), budget=5000)
    assert rep.max_deviation == 0.0
