from __future__ import annotations

import numpy as np
import pytest

from mongelab.errors import MongeLabError, PointInExcisionTube, PointOutsideDomain
from mongelab.field_core import (
    CallableField,
    Domain,
    GridField,
    QuadraticField,
    RadialPowerField,
    ball_volume,
    complex_jet,
    determinant_check,
    evaluate_jet,
    paraboloid,
    parse_grid,
    read_grid,
    sphere_area,
    write_grid,
)
from mongelab.pogorelov import PogorelovField, solve_profile_ode


def test_ball_volume_and_sphere_area():
    assert ball_volume(3) == pytest.approx(4 * np.pi / 3)
    assert ball_volume(2, 2.0) == pytest.approx(4 * np.pi)
    assert sphere_area(3, 2.0) == pytest.approx(16 * np.pi)
    assert sphere_area(2) == pytest.approx(2 * np.pi)


def test_paraboloid_jet_at_unit_vector():
    jet = evaluate_jet(paraboloid(3), [1.0 - 1e-9, 0, 0])
    assert jet.value == pytest.approx(0.5, abs=1e-8)
    np.testing.assert_allclose(jet.gradient, [1, 0, 0], atol=1e-8)
    np.testing.assert_allclose(jet.hessian, np.eye(3))


def test_fd_matches_analytic_on_radial_power():
    u = RadialPowerField(4 / 3, 3)
    X = np.array([[0.3, 0.1, -0.2], [0.05, 0.5, 0.1]])
    an = evaluate_jet(u, X, mode="analytic")
    fd = evaluate_jet(u, X, mode="fd")
    np.testing.assert_allclose(fd.hessian, an.hessian, rtol=1e-6, atol=1e-6)
    np.testing.assert_allclose(fd.gradient, an.gradient, rtol=1e-8)


def test_jet_preconditions():
    u = RadialPowerField(4 / 3, 3)
    with pytest.raises(PointOutsideDomain):
        evaluate_jet(u, [2.0, 0, 0])
    with pytest.raises(PointInExcisionTube):
        evaluate_jet(u, [1e-7, 0, 0])
    with pytest.raises(PointOutsideDomain):
        evaluate_jet(u, [0.1, 0.1])


def test_complex_hessian_of_euclidean_norm():
    u = CallableField(lambda X: (X**2).sum(axis=1), 4)
    cj = complex_jet(u, [0.2, -0.1, 0.3, 0.05])
    np.testing.assert_allclose(cj.complex_hessian, np.eye(2), atol=1e-6)
    assert np.real(np.linalg.det(cj.complex_hessian)) == pytest.approx(1.0, abs=1e-6)


def test_complex_hessian_pluriharmonic():
    # Re(z1^2) = x1^2 - y1^2
    u = CallableField(lambda X: X[:, 0] ** 2 - X[:, 1] ** 2, 4)
    cj = complex_jet(u, [0.2, 0.3, 0.1, 0.1])
    np.testing.assert_allclose(cj.complex_hessian, 0, atol=1e-6)


def test_complex_hessian_quartic():
    u = CallableField(lambda X: (X[:, 0] ** 2 + X[:, 1] ** 2) ** 2, 2)
    cj = complex_jet(u, [0.5, 0.0])
    assert cj.complex_hessian[0, 0].real == pytest.approx(1.0, rel=1e-6)


def test_determinant_certificates():
    c = determinant_check(paraboloid(3), np.array([[0.1, 0.2, 0.3]]))
    assert c.det[0] == pytest.approx(1.0)
    assert c.min_eig[0] == pytest.approx(1.0)
    saddle = QuadraticField(np.diag([2.0, -2.0]))
    s = determinant_check(saddle, np.array([[0.1, 0.1]]))
    assert s.min_eig[0] == pytest.approx(-2.0)
    assert not s.all_certified


def test_pogorelov_determinant_at_documented_point():
    u = PogorelovField(solve_profile_ode(3))
    c = determinant_check(u, np.array([[0.3, 0.0, 0.1]]), mode="fd")
    assert abs(c.det[0] - 1) < 1e-6
    a = determinant_check(u, np.array([[0.3, 0.0, 0.1]]), mode="analytic")
    assert abs(a.det[0] - 1) < 1e-9


def test_grid_round_trip(tmp_path):
    axes = [np.linspace(-1, 1, 21), np.linspace(-1, 1, 17)]
    mesh = np.meshgrid(*axes, indexing="ij")
    vals = 0.5 * (mesh[0] ** 2 + mesh[1] ** 2)
    path = write_grid(tmp_path / "q.grid", axes, vals, split=(1, 1))
    g = read_grid(path)
    np.testing.assert_array_equal(g.values_grid, vals)
    assert g.split == (1, 1)
    jet = evaluate_jet(g, np.array([[0.1, -0.2]]), mode="fd")
    np.testing.assert_allclose(jet.hessian[0], np.eye(2), atol=1e-8)
    text = path.read_text()
    axes2, vals2, split2 = parse_grid(text)
    np.testing.assert_array_equal(vals2, vals)


def test_grid_from_function_and_bad_header():
    g = GridField.from_function(lambda P: P[:, 0] ** 2, [(-1, 1)], [41])
    assert g(np.array([[0.5]]))[0] == pytest.approx(0.25, abs=1e-3)
    with pytest.raises(MongeLabError):
        parse_grid("not a grid\n")


def test_domain_sampling_stays_inside():
    rng = np.random.default_rng(0)
    for dom in (Domain.ball(3, 2.0), Domain.annulus(2, 1.0, 2.0), Domain.product(2, 1, 0.5, 1.0, 0.1),
                Domain.box([0, 0], [1, 2])):
        X = dom.sample_uniform(rng, 500)
        assert np.all(dom.contains(X))
