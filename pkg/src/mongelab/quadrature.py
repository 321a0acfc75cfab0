"""Stratified Monte Carlo over balls, annuli, boxes and products of balls.

Strata are radial-first: equal-log-width shells (with a small core ball when
the inner radius is zero) times uniform sphere directions. Every stratum
draws from its own generator seeded by ``(seed, *tag, stratum index)``, so
results do not depend on evaluation order or on the number of workers, and
the per-stratum contributions are reduced in index order with ``math.fsum``.
"""

from __future__ import annotations

import csv
import io
import math
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field as dc_field
from pathlib import Path

import numpy as np

from mongelab.errors import IntegrationError
from mongelab.field_core import DERIVED_QUANTITIES, Domain, FieldHandle, evaluate_jet
from mongelab.field_core.domain import ball_volume, shell_radii, uniform_directions

CORE_OCTAVES = 8
Y_SHELLS = 4
REJECTION_ALLOWANCE = 1e-4


@dataclass(frozen=True)
class IntegralEstimate:
    value: float
    stderr: float
    n_samples: int
    cutoff: float = 0.0

    def as_dict(self) -> dict:
        return {"value": self.value, "stderr": self.stderr, "n_samples": self.n_samples,
                "cutoff": self.cutoff}


@dataclass(frozen=True)
class _Stratum:
    index: int
    volume: float
    center: tuple
    x: tuple            # (a, b, dim) radial shell, or (axis, lo, hi) for box slabs
    y: tuple | None = None
    box: tuple | None = None  # (lower, upper) of a box domain


def _radial_edges(a: float, b: float, shells: int) -> list:
    if a > 0:
        return list(np.geomspace(a, b, shells + 1))
    core = b * 2.0**-CORE_OCTAVES
    if shells == 1:
        return [0.0, b]
    return [0.0] + list(np.geomspace(core, b, shells))


def _strata(domain: Domain, shells: int) -> list:
    out = []
    c = domain.center
    if domain.kind in ("ball", "annulus"):
        edges = _radial_edges(domain.inner, domain.radius, shells)
        d = domain.dim
        for i, (a, b) in enumerate(zip(edges[:-1], edges[1:])):
            vol = ball_volume(d, b) - ball_volume(d, a)
            out.append(_Stratum(i, vol, c, (a, b, d)))
    elif domain.kind == "product":
        dx, dy = domain.split
        xe = _radial_edges(domain.inner, domain.radius, shells)
        ye = [domain.ry * (i / Y_SHELLS) ** (1.0 / dy) for i in range(Y_SHELLS + 1)]
        idx = 0
        for a, b in zip(xe[:-1], xe[1:]):
            vx = ball_volume(dx, b) - ball_volume(dx, a)
            for ya, yb in zip(ye[:-1], ye[1:]):
                vy = ball_volume(dy, yb) - ball_volume(dy, ya)
                out.append(_Stratum(idx, vx * vy, c, (a, b, dx), (ya, yb, dy)))
                idx += 1
    else:
        lo = np.asarray(domain.lower)
        hi = np.asarray(domain.upper)
        cuts = np.linspace(lo[0], hi[0], shells + 1)
        rest = float(np.prod(hi[1:] - lo[1:])) if domain.dim > 1 else 1.0
        for i in range(shells):
            out.append(_Stratum(i, (cuts[i + 1] - cuts[i]) * rest, c, (0, cuts[i], cuts[i + 1]),
                                box=(tuple(lo), tuple(hi))))
    return out


def _sample(st: _Stratum, rng: np.random.Generator, n: int) -> np.ndarray:
    if st.box is not None:
        lo = np.asarray(st.box[0])
        hi = np.asarray(st.box[1])
        X = lo + rng.random((n, lo.size)) * (hi - lo)
        X[:, 0] = st.x[1] + rng.random(n) * (st.x[2] - st.x[1])
        return X
    a, b, dx = st.x
    parts = [shell_radii(rng, n, dx, a, b)[:, None] * uniform_directions(rng, n, dx)]
    if st.y is not None:
        ya, yb, dy = st.y
        parts.append(shell_radii(rng, n, dy, ya, yb)[:, None] * uniform_directions(rng, n, dy))
    return np.asarray(st.center) + np.hstack(parts)


def _rng(seed: int, tag: tuple, index: int) -> np.random.Generator:
    return np.random.default_rng(np.random.SeedSequence([int(seed), *map(int, tag), int(index)]))


@dataclass
class SampleSet:
    """A fixed stratified sample: points, quadrature weights and stratum ids."""

    points: np.ndarray
    weights: np.ndarray
    stratum: np.ndarray
    volumes: np.ndarray

    def integrate(self, values) -> IntegralEstimate:
        v = np.asarray(values, dtype=float)
        total = []
        var = []
        for s, vol in enumerate(self.volumes):
            m = self.stratum == s
            vs = v[m]
            total.append(vol * vs.mean())
            var.append(vol**2 * vs.var(ddof=1) / vs.size if vs.size > 1 else 0.0)
        return IntegralEstimate(math.fsum(total), math.sqrt(math.fsum(var)), int(v.size))


def _per_stratum(budget: int, n_strata: int) -> int:
    return max(2, int(budget) // n_strata)


def sample_region(domain: Domain, budget: int = 200_000, seed: int = 0, shells: int = 64,
                  tag: tuple = ()) -> SampleSet:
    strata = _strata(domain, shells)
    n = _per_stratum(budget, len(strata))
    pts = [_sample(st, _rng(seed, tag, st.index), n) for st in strata]
    return SampleSet(np.vstack(pts), np.repeat([st.volume / n for st in strata], n),
                     np.repeat(np.arange(len(strata)), n), np.array([st.volume for st in strata]))


def integrate_region(integrand, domain: Domain, budget: int = 200_000, seed: int = 0,
                     shells: int = 64, tag: tuple = (), workers: int = 1,
                     cutoff: float = 0.0) -> IntegralEstimate:
    """Stratified Monte Carlo estimate of the integral of ``integrand`` over ``domain``.

    Non-finite integrand samples are discarded; more than a 0.01% share of
    them raises ``IntegrationError``.
    """
    strata = _strata(domain, shells)
    n = _per_stratum(budget, len(strata))

    def run(st):
        X = _sample(st, _rng(seed, tag, st.index), n)
        v = np.asarray(integrand(X), dtype=float)
        ok = np.isfinite(v)
        vf = v[ok]
        if vf.size == 0:
            return 0.0, 0.0, 0, n
        mean = vf.mean()
        var = vf.var(ddof=1) / vf.size if vf.size > 1 else 0.0
        return st.volume * mean, st.volume**2 * var, int(vf.size), int(n - vf.size)

    if workers > 1:
        with ThreadPoolExecutor(max_workers=workers) as pool:
            parts = list(pool.map(run, strata))
    else:
        parts = [run(st) for st in strata]
    bad = sum(p[3] for p in parts)
    total = n * len(strata)
    if bad > REJECTION_ALLOWANCE * total:
        raise IntegrationError(f"{bad} of {total} integrand samples were non-finite")
    value = math.fsum(p[0] for p in parts)
    err = math.sqrt(math.fsum(p[1] for p in parts))
    return IntegralEstimate(value, err, total - bad, cutoff)


# Dyadic annulus profiles ----------------------------------------------------

@dataclass(frozen=True)
class AnnulusScheme:
    r_outer: float = 0.5
    J: int = 8
    budget: int = 200_000
    seed: int = 0
    shells: int = 64

    def __post_init__(self):
        if self.J < 1:
            raise ValueError("need at least one annulus (J >= 1)")
        if self.budget < 1000:
            raise ValueError("per-annulus budget must be at least 1e3")

    @property
    def radii(self) -> np.ndarray:
        return self.r_outer * 2.0 ** -np.arange(self.J + 1)


@dataclass
class AnnulusProfile:
    """Masses of a derived quantity on the dyadic annuli r_{j+1} < |x| < r_j."""

    radii: np.ndarray
    masses: np.ndarray
    stderr: np.ndarray
    dropped: np.ndarray
    quantity: str = ""
    power: float = 1.0
    meta: dict = dc_field(default_factory=dict)

    @property
    def cumulative(self) -> np.ndarray:
        m = np.where(self.dropped, 0.0, self.masses)
        return np.cumsum(m)

    @property
    def valid(self) -> np.ndarray:
        return ~self.dropped

    def to_csv(self) -> str:
        buf = io.StringIO()
        w = csv.writer(buf, lineterminator="\n")
        w.writerow(["j", "r_j", "mass", "stderr", "cumulative"])
        for j, (r, m, e, c) in enumerate(zip(self.radii[:-1], self.masses, self.stderr,
                                             self.cumulative)):
            w.writerow([j, repr(float(r)), repr(float(m)), repr(float(e)), repr(float(c))])
        return buf.getvalue()

    def write_csv(self, path) -> Path:
        path = Path(path)
        path.write_text(self.to_csv())
        return path


def dyadic_annulus_profile(field: FieldHandle, quantity: str, power: float,
                           scheme: AnnulusScheme, mode: str | None = None,
                           workers: int = 1) -> AnnulusProfile:
    """Per-annulus integrals of ``quantity(jet) ** power``.

    For product domains the annuli live in the x (or z) factor and the y (or
    w) factor is integrated over the whole ball of the field's domain.
    """
    q = DERIVED_QUANTITIES[quantity]
    mode = mode or ("analytic" if field.analytic else "fd")
    radii = scheme.radii
    dom = field.domain

    def integrand(X):
        jet = evaluate_jet(field, X, mode=mode, check=False)
        return np.abs(q(jet, field)) ** power

    masses, errs, dropped = [], [], []
    for j in range(scheme.J):
        a, b = radii[j + 1], radii[j]
        if a < field.r_min:
            masses.append(np.nan)
            errs.append(np.nan)
            dropped.append(True)
            continue
        if dom.kind == "product":
            region = Domain.product(dom.split[0], dom.split[1], b, dom.ry, a, center=dom.center)
        else:
            region = Domain.annulus(field.dim, a, b, center=dom.center)
        est = integrate_region(integrand, region, scheme.budget, scheme.seed, scheme.shells,
                               tag=(j,), workers=workers, cutoff=a)
        masses.append(est.value)
        errs.append(est.stderr)
        dropped.append(False)
    return AnnulusProfile(radii, np.array(masses), np.array(errs), np.array(dropped),
                          quantity=quantity, power=float(power),
                          meta={"field": field.name, "scheme": scheme.__dict__.copy()})


# Sphere suprema ----------------------------------------------------------------

@dataclass(frozen=True)
class SphereSup:
    value: float
    point: np.ndarray


_GOLD = (math.sqrt(5) - 1) / 2


def _as_callable(f):
    if isinstance(f, FieldHandle):
        return f._values
    return f


def sphere_sup(func, center, radius: float, dims=None, budget: int = 512, rounds: int = 4,
               seed: int = 0, golden_iters: int = 24) -> SphereSup:
    """Supremum of ``func`` over the sphere ``|x_dims - center_dims| = radius``.

    Coordinates outside ``dims`` are held at ``center``. Uniform sampling is
    followed by ``rounds`` of golden-section searches along great circles
    through the incumbent maximiser.
    """
    f = _as_callable(func)
    c = np.asarray(center, dtype=float)
    dims = list(range(c.size)) if dims is None else list(dims)
    m = len(dims)
    rng = np.random.default_rng(np.random.SeedSequence([int(seed), 7919]))

    def lift(U):
        X = np.repeat(c[None], U.shape[0], axis=0)
        X[:, dims] = c[dims] + radius * U
        return X

    U = uniform_directions(rng, budget, m)
    if m > 1:
        U = np.vstack([U, np.eye(m), -np.eye(m)])
    else:
        U = np.array([[1.0], [-1.0]])
    vals = np.asarray(f(lift(U)), dtype=float)
    bad = ~np.isfinite(vals)
    if bad.sum() > REJECTION_ALLOWANCE * vals.size:
        raise IntegrationError(f"{int(bad.sum())} of {vals.size} sphere evaluations failed")
    vals = np.where(bad, -np.inf, vals)
    k = int(np.argmax(vals))
    best_u = U[k]
    best = float(vals[k])
    if m > 1:
        for rnd in range(rounds):
            width = math.pi / 2 ** (rnd + 1)
            for _ in range(2):
                e = rng.standard_normal(m)
                e -= e.dot(best_u) * best_u
                ne = np.linalg.norm(e)
                if ne < 1e-12:
                    continue
                e /= ne

                def phi(t):
                    u = math.cos(t) * best_u + math.sin(t) * e
                    return float(f(lift(u[None]))[0])

                lo, hi = -width, width
                x1 = hi - _GOLD * (hi - lo)
                x2 = lo + _GOLD * (hi - lo)
                f1, f2 = phi(x1), phi(x2)
                for _ in range(golden_iters):
                    if f1 < f2:
                        lo, x1, f1 = x1, x2, f2
                        x2 = lo + _GOLD * (hi - lo)
                        f2 = phi(x2)
                    else:
                        hi, x2, f2 = x2, x1, f1
                        x1 = hi - _GOLD * (hi - lo)
                        f1 = phi(x1)
                t, ft = (x1, f1) if f1 >= f2 else (x2, f2)
                if ft > best:
                    best = ft
                    best_u = math.cos(t) * best_u + math.sin(t) * e
                    best_u /= np.linalg.norm(best_u)
    return SphereSup(best, lift(best_u[None])[0])
