from __future__ import annotations

import numpy as np
import pytest

from mongelab.errors import PreconditionError
from mongelab.field_core import determinant_check, evaluate_jet
from mongelab.pogorelov import (
    ExampleSpec,
    build_complex_example,
    build_example,
    build_real_example,
    default_spec,
    example_power,
    solve_profile_ode,
    sobolev_membership,
)


@pytest.mark.parametrize("n, expected", [(3, 27 / 16), (4, 16 / 27)])
def test_second_derivative_at_origin(n, expected):
    prof = solve_profile_ode(n)
    assert prof(0.0) == 1.0
    assert prof.second_derivative(0.0) == pytest.approx(expected, abs=1e-12)
    assert prof.residual_max < 1e-10


def test_profile_is_even_for_zero_slope():
    prof = solve_profile_ode(3)
    t = np.linspace(0, prof.rho, 7)
    np.testing.assert_allclose(prof(t), prof(-t), rtol=1e-10)


def test_profile_export(tmp_path):
    grid, side = solve_profile_ode(3).export(tmp_path / "p.grid")
    assert grid.exists() and side.exists()


def test_ode_exact_vanishes_on_segment():
    u = build_real_example(default_spec("real", 3, 1))
    X = np.zeros((11, 3))
    X[:, 2] = np.linspace(-0.45, 0.45, 11)
    np.testing.assert_array_equal(u(X), 0.0)


def test_ode_exact_determinant_on_random_points():
    u = build_real_example(default_spec("real", 3, 1))
    rng = np.random.default_rng(3)
    d = rng.standard_normal((1000, 2))
    X = np.empty((1000, 3))
    X[:, :2] = d / np.linalg.norm(d, axis=1)[:, None] * rng.uniform(0.05, 0.5, 1000)[:, None]
    X[:, 2] = rng.uniform(-0.4, 0.4, 1000)
    c = determinant_check(u, X, mode="fd")
    assert np.max(np.abs(c.det - 1)) < 1e-6
    assert c.all_certified


def test_complex_example_is_psh():
    u = build_complex_example(default_spec("complex", 2, 1))
    rng = np.random.default_rng(4)
    X = u.domain.sample_uniform(rng, 4000)
    r = np.linalg.norm(X[:, :2], axis=1)
    X = X[(r > 0.05) & (r < 0.5)][:1000]
    c = determinant_check(u, X, setting="complex")
    assert c.all_certified
    assert np.all(c.det > 0)


def test_real_power_quadratic_det_lower_bound():
    u = build_real_example(default_spec("real", 5, 2))
    rng = np.random.default_rng(5)
    X = u.domain.sample_uniform(rng, 2000)
    X = X[np.linalg.norm(X[:, :3], axis=1) > 1e-3]
    c = determinant_check(u, X)
    assert c.all_certified
    assert np.min(c.det) >= 1 - 1e-9


def test_spec_validation():
    with pytest.raises(PreconditionError):
        ExampleSpec("real", 3, 2).validate()
    with pytest.raises(PreconditionError):
        ExampleSpec("complex", 2, 2).validate()
    with pytest.raises(PreconditionError):
        ExampleSpec("quaternionic", 3, 1).validate()


def test_example_power():
    assert example_power(default_spec("real", 3, 1)) == ("laplacian", 3.0)
    assert example_power(default_spec("complex", 2, 1)) == ("z-block-hessian", 2.0)


@pytest.mark.parametrize("p, verdict", [(3.0, "divergent"), (2.7, "finite")])
def test_sobolev_membership_n3(p, verdict):
    res = sobolev_membership(default_spec("real", 3, 1), p)
    assert res.verdict == verdict
    if p == 2.7:
        assert res.decay.ratio == pytest.approx(2**-0.2, rel=0.05)


def test_sobolev_membership_n4_critical():
    assert sobolev_membership(default_spec("real", 4, 1), 6.0).verdict == "divergent"


def test_build_example_dispatch():
    assert build_example(default_spec("complex", 2, 1)).is_complex
    u = build_example(default_spec("real", 5, 2))
    jet = evaluate_jet(u, np.array([[0.1, 0.1, 0.1, 0.1, 0.1]]))
    assert np.all(np.linalg.eigvalsh(jet.hessian) > 0)
