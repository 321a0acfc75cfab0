from __future__ import annotations

import math

import numpy as np
import pytest

from mongelab.convex import (
    annulus_mass_bound_check,
    cap_bound,
    from_pieces,
    growth_exponent_fit,
    john_ellipsoid,
    random_convex,
    section_extract,
    section_height_scan,
    sublevel_growth_check,
    supporting_plane,
    y_grid,
)
from mongelab.errors import (
    ConvexityCertificateError,
    DegenerateCloudError,
    EmptySectionError,
    PreconditionError,
)
from mongelab.field_core import (
    CallableField,
    Domain,
    QuadraticField,
    RadialPowerField,
    ball_volume,
    paraboloid,
)
from mongelab.pogorelov import PogorelovField, build_example, default_spec, solve_profile_ode


def test_single_piece_sample():
    w = from_pieces([[0.0, 0.0, 1.0]], [0.0], tau=0.0)
    assert w(np.zeros((1, 3)))[0] == 0.0
    assert w(np.array([[0, 0, 0.7]]))[0] == pytest.approx(0.7)
    assert w(np.array([[0, 0, -0.7]]))[0] == 0.0


@pytest.mark.parametrize("seed", range(5))
def test_random_convex_normalization(seed):
    w = random_convex(3, 6, seed=seed)
    sup, u = w.sphere_sup()
    assert sup == pytest.approx(1.0, abs=1e-6)
    assert np.linalg.norm(u) == pytest.approx(1.0)
    assert w.sharp(np.zeros((1, 3)))[0] == 0.0


def test_random_convex_determinism_and_guard():
    a, b = random_convex(2, 5, seed=11), random_convex(2, 5, seed=11)
    np.testing.assert_array_equal(a.slopes, b.slopes)
    np.testing.assert_array_equal(a.offsets, b.offsets)
    with pytest.raises(PreconditionError):
        random_convex(3, 3)


def test_positive_offset_rejected():
    with pytest.raises(PreconditionError):
        from_pieces([[1.0, 0.0]], [0.1])


def test_cap_bounds():
    assert cap_bound(2) == pytest.approx(math.pi / 3)
    assert cap_bound(3) == pytest.approx(math.pi)
    assert cap_bound(4) > 0


def test_annulus_mass_planar_square():
    w = QuadraticField(np.diag([0.0, 2.0]), domain=Domain.ball(2, 2.0))
    r = annulus_mass_bound_check(w, budget=10_000)
    assert r.mass == pytest.approx(6 * math.pi, rel=1e-9)
    assert r.flux == pytest.approx(6 * math.pi, rel=1e-2)
    assert r.passed


def test_annulus_mass_spatial_square():
    w = QuadraticField(2 * np.eye(3), domain=Domain.ball(3, 2.0))
    r = annulus_mass_bound_check(w, budget=10_000)
    assert r.mass == pytest.approx(6 * 28 * math.pi / 3, rel=1e-9)
    assert r.passed and r.bound == pytest.approx(math.pi)


def test_annulus_mass_requires_normalization():
    w = QuadraticField(4 * np.eye(2), domain=Domain.ball(2, 2.0))
    r = annulus_mass_bound_check(w, budget=2000)
    assert r.sup == pytest.approx(2.0)
    with pytest.raises(PreconditionError):
        annulus_mass_bound_check(QuadraticField(np.eye(2), c=0.5, domain=Domain.ball(2, 2.0)))


def test_annulus_mass_mc_agrees_with_flux_on_samples():
    for seed in range(3):
        w = random_convex(3, 8, seed=seed)
        r = annulus_mass_bound_check(w, budget=20_000, seed=seed)
        assert r.passed
        assert r.mass == pytest.approx(r.flux, rel=0.05)


def test_supporting_plane_examples():
    pl = supporting_plane(paraboloid(2), [0.5, 0.0])
    np.testing.assert_allclose(pl.slope, [0.5, 0.0], atol=1e-9)
    assert pl.offset == pytest.approx(-0.125)
    cone = RadialPowerField(1.0, 2)
    np.testing.assert_array_equal(supporting_plane(cone, [0.0, 0.0]).slope, [0.0, 0.0])
    pog = PogorelovField(solve_profile_ode(3))
    pp = supporting_plane(pog, np.zeros(3))
    assert np.allclose(pp.slope, 0) and pp.offset == 0.0


def test_supporting_plane_rejects_nonconvex():
    saddle = QuadraticField(np.diag([2.0, -2.0]))
    with pytest.raises(ConvexityCertificateError):
        supporting_plane(saddle, [0.0, 0.0])


def test_paraboloid_section():
    sec = section_extract(paraboloid(2), np.zeros(2), 0.08, budget=100_000)
    assert sec.volume == pytest.approx(math.pi * 0.16, rel=0.01)
    assert sec.diameter == pytest.approx(0.8, rel=0.01)
    assert sec.compact


def test_section_volume_monotone_in_height():
    u = paraboloid(3)
    vols = [section_extract(u, np.zeros(3), h, budget=20_000).volume for h in (0.01, 0.05, 0.1)]
    assert vols == sorted(vols)


def test_large_height_exhausts_domain():
    sec = section_extract(paraboloid(2), np.zeros(2), 10.0, budget=20_000)
    assert not sec.compact
    assert sec.volume == pytest.approx(math.pi, rel=1e-9)


def test_pogorelov_section_not_compact():
    pog = PogorelovField(solve_profile_ode(3))
    for h in (1e-3, 1e-2, 1e-1):
        assert not section_extract(pog, np.zeros(3), h, budget=20_000).compact


def test_empty_section():
    with pytest.raises(EmptySectionError):
        section_extract(paraboloid(2), np.zeros(2), 1e-12, budget=2000)


def test_section_export(tmp_path):
    sec = section_extract(paraboloid(2), np.zeros(2), 0.05, budget=5000)
    csv_path, side = sec.export(tmp_path / "s.csv")
    assert csv_path.read_text().count("\n") == len(sec.members) + 1
    assert side.exists()


def test_height_scan_on_paraboloid():
    res = section_height_scan(paraboloid(2), [[0, 0], [0.3, 0.1]], [0.01, 0.05, 2.0],
                              budget=10_000)
    assert res["h0_empirical"] == pytest.approx(0.05)


def test_sublevel_growth():
    hs = np.geomspace(1e-3, 1e-1, 6)
    g = sublevel_growth_check(paraboloid(3), hs, budget=100_000)
    assert g.exponent == pytest.approx(1.5, abs=0.02)
    assert np.all(np.diff(g.volumes) >= 0)
    np.testing.assert_allclose(g.volumes, ball_volume(3) * (2 * hs) ** 1.5, rtol=0.02)
    g2 = sublevel_growth_check(QuadraticField(2 * np.eye(3)), hs, budget=100_000)
    assert g2.exponent == pytest.approx(g.exponent, abs=0.02)


def test_sublevel_growth_pogorelov():
    g = sublevel_growth_check(PogorelovField(solve_profile_ode(3)), np.geomspace(1e-2, 1e-1, 6),
                              budget=200_000)
    assert g.exponent == pytest.approx(1.5, abs=0.05)


def test_growth_exponent_pogorelov():
    g = growth_exponent_fit(build_example(default_spec("real", 3, 1)), (2, 1))
    assert g.exponent == pytest.approx(4 / 3, abs=0.02)
    assert g.passed


def test_growth_exponent_power_quadratic():
    g = growth_exponent_fit(build_example(default_spec("real", 5, 2)), (3, 2))
    assert g.exponent == pytest.approx(1.2, abs=0.03)


def test_growth_rejects_point_singularity():
    with pytest.raises(PreconditionError):
        growth_exponent_fit(QuadraticField(2 * np.eye(3)), (3, 0))
    with pytest.raises(PreconditionError):
        y_grid(1, 1.0, 4)


def test_john_ellipsoid_ball():
    rng = np.random.default_rng(0)
    X = Domain.ball(2).sample_uniform(rng, 20_000)
    E = john_ellipsoid(X)
    np.testing.assert_allclose(E.shape, np.eye(2), atol=0.02)


def test_john_ellipsoid_ellipse():
    rng = np.random.default_rng(1)
    X = Domain.ball(2).sample_uniform(rng, 20_000) * np.array([2.0, 1.0])
    E = john_ellipsoid(X)
    ax = E.axes
    assert ax[0] / ax[1] == pytest.approx(2.0, rel=0.02)
    assert np.all(np.linalg.norm(E.normalize(X), axis=1) <= 1 + 1e-3)


def test_john_ellipsoid_degenerate():
    t = np.linspace(0, 1, 50)
    with pytest.raises(DegenerateCloudError) as info:
        john_ellipsoid(np.column_stack([t, 2 * t]))
    d = np.asarray(info.value.direction)
    assert abs(d @ np.array([2.0, -1.0]) / math.sqrt(5)) == pytest.approx(1.0, abs=1e-6)


def test_callable_field_annulus_check_uses_sphere_search():
    w = CallableField(lambda X: np.linalg.norm(X, axis=1), 2, domain=Domain.ball(2, 2.0))
    r = annulus_mass_bound_check(w, budget=5000)
    assert r.mass == pytest.approx(2 * math.pi, rel=1e-2)
    assert r.passed
