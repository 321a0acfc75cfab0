from __future__ import annotations

import math

import numpy as np
import pytest

from mongelab.field_core import Domain, QuadraticField, RadialPowerField
from mongelab.pogorelov import PogorelovField, solve_profile_ode
from mongelab.quadrature import (
    AnnulusScheme,
    dyadic_annulus_profile,
    integrate_region,
    sample_region,
    sphere_sup,
)


def test_ball_volume_integral():
    est = integrate_region(lambda X: np.ones(len(X)), Domain.ball(3), 50_000)
    assert est.value == pytest.approx(4 * math.pi / 3, rel=5e-3)


def test_laplacian_of_square_norm_on_planar_annulus():
    # Laplacian of |x|^2 is 4 in d=2, and the annulus B_2 minus B_1 has area 3 pi
    est = integrate_region(lambda X: np.full(len(X), 4.0), Domain.annulus(2, 1.0, 2.0), 20_000)
    assert est.value == pytest.approx(12 * math.pi, rel=5e-3)


def test_inverse_cube_on_shell():
    est = integrate_region(lambda X: np.linalg.norm(X, axis=1) ** -3.0,
                           Domain.annulus(3, 0.5, 1.0), 50_000)
    assert est.value == pytest.approx(4 * math.pi * math.log(2), rel=5e-3)
    assert abs(est.value - 4 * math.pi * math.log(2)) < 3 * est.stderr + 1e-9


def test_determinism_and_worker_independence():
    f = lambda X: np.exp(-(X**2).sum(axis=1))  # noqa: E731
    a = integrate_region(f, Domain.ball(3), 20_000, seed=7)
    b = integrate_region(f, Domain.ball(3), 20_000, seed=7, workers=4)
    assert a == b
    assert integrate_region(f, Domain.ball(3), 20_000, seed=8) != a


def test_error_shrinks_with_budget():
    f = lambda X: np.cos(3 * X[:, 0]) + X[:, 1] ** 2  # noqa: E731
    e1 = integrate_region(f, Domain.ball(2), 20_000, seed=1).stderr
    e2 = integrate_region(f, Domain.ball(2), 40_000, seed=1).stderr
    assert e1 / e2 == pytest.approx(math.sqrt(2), rel=0.2)


def test_sample_set_integrate_matches_integrate_region():
    S = sample_region(Domain.ball(2), 10_000, seed=3)
    f = lambda X: X[:, 0] ** 2  # noqa: E731
    assert S.integrate(f(S.points)).value == pytest.approx(math.pi / 4, rel=2e-2)


def test_homogeneous_annulus_masses():
    prof = dyadic_annulus_profile(RadialPowerField(4 / 3, 3), "laplacian", 4.5,
                                  AnnulusScheme(1.0, 8, 50_000))
    exact = (28 / 9) ** 4.5 * 4 * math.pi * math.log(2)
    np.testing.assert_allclose(prof.masses, exact, rtol=0.01)


def test_constant_laplacian_masses_decay_eightfold():
    u = QuadraticField(2 * np.eye(3))
    prof = dyadic_annulus_profile(u, "laplacian", 1.0, AnnulusScheme(1.0, 5, 20_000))
    r = prof.radii
    vol = 4 * math.pi / 3 * (r[:-1] ** 3 - r[1:] ** 3)
    np.testing.assert_allclose(prof.masses, 6 * vol, rtol=1e-3)
    np.testing.assert_allclose(prof.masses[1:] / prof.masses[:-1], 1 / 8, rtol=1e-3)


def test_pogorelov_critical_masses_flat():
    prof = dyadic_annulus_profile(PogorelovField(solve_profile_ode(3)), "laplacian", 3.0,
                                  AnnulusScheme(2.0**-4, 6, 50_000))
    np.testing.assert_allclose(prof.masses[1:] / prof.masses[:-1], 1.0, atol=0.02)


def test_profile_csv_columns(tmp_path):
    prof = dyadic_annulus_profile(RadialPowerField(1.5, 2), "laplacian", 1.0,
                                  AnnulusScheme(1.0, 3, 2000))
    lines = prof.write_csv(tmp_path / "p.csv").read_text().splitlines()
    assert lines[0] == "j,r_j,mass,stderr,cumulative"
    assert len(lines) == 4


def test_annulus_scheme_rejects_bad_parameters():
    with pytest.raises(ValueError):
        AnnulusScheme(J=0)
    with pytest.raises(ValueError):
        AnnulusScheme(budget=10)


def test_sphere_sup_examples():
    u = QuadraticField(2 * np.eye(3))
    s = sphere_sup(u, np.zeros(3), 0.5)
    assert s.value == pytest.approx(0.25, abs=1e-12)
    lin = sphere_sup(lambda X: X[:, 0] + 2, np.zeros(2), 1.0)
    assert lin.value == pytest.approx(3.0, abs=1e-9)
    np.testing.assert_allclose(lin.point, [1, 0], atol=1e-4)


def test_sphere_sup_pogorelov_slice():
    prof = solve_profile_ode(3)
    u = PogorelovField(prof)
    r = 0.2
    s = sphere_sup(u, np.zeros(3), r, dims=[0, 1])
    assert s.value == pytest.approx(prof(0.0) * r ** (4 / 3), rel=1e-9)
