"""Sections {u < l + h}, sub-level growth and growth away from singular sets."""

from __future__ import annotations

import json
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np
from scipy.spatial import ConvexHull
from scipy.spatial.distance import pdist, squareform

from mongelab.convex.samples import SupportingPlane, supporting_plane
from mongelab.errors import EmptySectionError, FitError, PreconditionError
from mongelab.field_core import FieldHandle
from mongelab.norms import loglog_fit
from mongelab.quadrature import sample_region, sphere_sup

MARGIN = 1e-3
MIN_GRID = 16


@dataclass
class Section:
    base: np.ndarray
    plane: SupportingPlane
    h: float
    members: np.ndarray
    volume: float
    stderr: float
    diameter: float
    compact: bool
    min_boundary_distance: float
    margin: float

    def sidecar(self) -> dict:
        return {"base": self.base.tolist(), "h": self.h, "slope": self.plane.slope.tolist(),
                "offset": self.plane.offset, "volume": self.volume, "stderr": self.stderr,
                "diameter": self.diameter, "compact": self.compact,
                "min_boundary_distance": self.min_boundary_distance, "margin": self.margin,
                "members": int(len(self.members))}

    def export(self, path) -> tuple:
        """Point cloud CSV (one member per row) plus a ``.json`` sidecar."""
        path = Path(path)
        d = self.members.shape[1]
        lines = [",".join(f"x{i}" for i in range(d))]
        lines += [",".join(repr(float(v)) for v in row) for row in self.members]
        path.write_text("\n".join(lines) + "\n")
        side = path.with_suffix(".json")
        side.write_text(json.dumps(self.sidecar(), indent=2, sort_keys=True) + "\n")
        return path, side


def _extreme_pair(P: np.ndarray):
    if len(P) > P.shape[1] + 1:
        try:
            P = P[ConvexHull(P).vertices]
        except Exception:  # flat cloud: fall back to all points
            pass
    if len(P) > 3000:
        P = P[:3000]
    D = squareform(pdist(P))
    i, j = np.unravel_index(int(np.argmax(D)), D.shape)
    return P[i], P[j]


def _push(inside, p, q, iters: int = 40):
    """Move p outward along q -> p to the boundary of the set ``inside``."""
    e = p - q
    lo, hi = 1.0, 2.0
    while inside((q + hi * e)[None])[0] and hi < 64:
        lo, hi = hi, 2 * hi
    for _ in range(iters):
        mid = 0.5 * (lo + hi)
        if inside((q + mid * e)[None])[0]:
            lo = mid
        else:
            hi = mid
    return q + lo * e


def _margin_probes(u: FieldHandle, count: int, width: float, seed: int) -> np.ndarray:
    dom = u.domain
    rng = np.random.default_rng(np.random.SeedSequence([int(seed), 104729]))
    B = dom.sample_boundary(rng, count)
    c = np.asarray(dom.center)
    v = c - B
    v /= np.maximum(np.linalg.norm(v, axis=1), 1e-300)[:, None]
    P = B + rng.uniform(0, width, count)[:, None] * v
    if u.singular is not None:
        P = np.vstack([P, u.singular.project(P)])
    dist = dom.boundary_distance(P)
    return P[(dist > 0) & (dist <= width)]


def section_extract(u: FieldHandle, x, h: float, budget: int = 200_000, seed: int = 0,
                    plane: SupportingPlane | None = None, margin: float = MARGIN,
                    probes: int = 20_000) -> Section:
    """The section {u < l + h} of the domain, l the supporting plane at x.

    Volume is the stratified-sample integral of the membership indicator.
    The section is compactly contained iff no member (stratified sample or
    probes placed in the boundary shell of width ``margin * R``, including
    their projections onto the singular set) lies within that shell.
    """
    x = np.asarray(x, dtype=float)
    plane = plane or supporting_plane(u, x, seed=seed)
    dom = u.domain

    def inside(X):
        return (u(X) < plane(X) + h) & dom.contains(X)

    S = sample_region(dom, budget, seed)
    mem = inside(S.points)
    est = S.integrate(mem.astype(float))
    members = S.points[mem]
    if len(members) == 0:
        raise EmptySectionError(f"no sample satisfies u < l + {h:g} (height below resolution)")
    width = margin * dom.outer_radius
    dist = dom.boundary_distance(members)
    P = _margin_probes(u, probes, width, seed)
    hit = bool(np.any(inside(P))) if len(P) else False
    compact = bool(dist.min() > width) and not hit
    diameter = 0.0
    if len(members) > 1:
        p, q = _extreme_pair(members)
        p2 = _push(inside, p, q)
        q2 = _push(inside, q, p2)
        diameter = float(max(np.linalg.norm(p2 - q2), np.linalg.norm(p - q)))
    return Section(x, plane, float(h), members, est.value, est.stderr, diameter, compact,
                   float(dist.min()), margin)


def section_height_scan(u: FieldHandle, bases, heights, budget: int = 50_000,
                        seed: int = 0) -> dict:
    """Largest scanned height with compactly contained sections, per base point.

    An empirical stand-in for a universal section height; no uniformity is
    claimed beyond the scanned bases.
    """
    heights = sorted(float(h) for h in heights)
    rows = []
    for x in np.atleast_2d(bases):
        plane = supporting_plane(u, x, seed=seed)
        best = 0.0
        for h in heights:
            try:
                sec = section_extract(u, x, h, budget, seed, plane=plane)
            except EmptySectionError:
                continue
            if not sec.compact:
                break
            best = h
        rows.append({"base": np.asarray(x).tolist(), "h_max": best})
    return {"rows": rows, "h0_empirical": min(r["h_max"] for r in rows) if rows else 0.0}


@dataclass
class SublevelGrowth:
    heights: np.ndarray
    volumes: np.ndarray
    stderr: np.ndarray
    exponent: float
    exponent_stderr: float
    bound: float
    passed: bool


def sublevel_growth_check(u: FieldHandle, heights, budget: int = 200_000,
                          seed: int = 0, slack: float = 0.05) -> SublevelGrowth:
    """Fit |{u < h}| ~ h^e and pass iff e >= d/2 - slack.

    All heights share one stratified sample, so the volumes are exactly
    monotone in h.
    """
    d = u.dim
    heights = np.sort(np.asarray(heights, dtype=float))
    S = sample_region(u.domain, budget, seed)
    vals = u(S.points)
    vols, errs = [], []
    for h in heights:
        e = S.integrate((vals < h).astype(float))
        vols.append(e.value)
        errs.append(e.stderr)
    vols = np.array(vols)
    errs = np.array(errs)
    ok = (vols > 0) & (errs < 0.05 * np.maximum(vols, 1e-300))
    if ok.sum() < 4:
        raise FitError(f"only {int(ok.sum())} usable heights; need at least 4")
    fit = loglog_fit(heights[ok], vols[ok])
    bound = d / 2
    return SublevelGrowth(heights, vols, errs, fit.exponent, fit.stderr, bound,
                          bool(fit.exponent >= bound - slack))


@dataclass
class GrowthFit:
    radii: np.ndarray
    values: np.ndarray
    exponent: float
    stderr: float
    bound: float
    passed: bool
    argmin: list = field(default_factory=list)


def y_grid(dy: int, ry: float, grid: int) -> np.ndarray:
    """Tensor grid with ``grid`` interior nodes per axis, clipped to the open ball."""
    if grid < MIN_GRID:
        raise PreconditionError(f"y-grid needs at least {MIN_GRID} points per axis")
    t = np.linspace(-ry, ry, grid + 2)[1:-1]
    Y = np.stack(np.meshgrid(*([t] * dy), indexing="ij"), axis=-1).reshape(-1, dy)
    return Y[np.linalg.norm(Y, axis=1) < ry]


def growth_exponent_fit(u: FieldHandle, split, radii=None, grid: int = MIN_GRID,
                        budget: int = 256, seed: int = 0, slack: float = 0.03) -> GrowthFit:
    """Fit r -> inf_y sup_{|x| = r} u(x, y) by a power law; pass iff exponent <= 2 - 2k/n + slack."""
    dx, dy = split
    if dy < 1 or dx < 1:
        raise PreconditionError("growth fit needs a singular set of dimension k >= 1")
    n = dx + dy
    if u.dim != n:
        raise PreconditionError("split does not match the field dimension")
    radii = np.asarray(radii if radii is not None else 2.0 ** -np.arange(1, 8), dtype=float)
    dom = u.domain
    ry = dom.ry if dom.kind == "product" else dom.outer_radius
    Y = y_grid(dy, ry, grid)
    xdims = list(range(dx))
    vals, where = [], []
    for r in radii:
        best, arg = np.inf, None
        for y in Y:
            c = np.concatenate([np.zeros(dx), y])
            s = sphere_sup(u, c, r, dims=xdims, budget=budget, rounds=2, seed=seed)
            if s.value < best:
                best, arg = s.value, y
        vals.append(best)
        where.append(arg.tolist())
    vals = np.array(vals)
    fit = loglog_fit(radii, vals)
    bound = 2 - 2 * dy / n
    return GrowthFit(radii, vals, fit.exponent, fit.stderr, bound,
                     bool(fit.exponent <= bound + slack), where)
