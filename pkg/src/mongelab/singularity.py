"""Probes for the singular-set estimates: dichotomy, growth scans, barriers, slices, sharpness."""

from __future__ import annotations

import json
import math
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np
from scipy.cluster.hierarchy import fcluster, linkage

from mongelab.convex import (
    ConvexSample,
    growth_exponent_fit,
    random_convex,
    y_grid,
)
from mongelab.errors import (
    BarrierHypothesisError,
    MongeLabError,
    PreconditionError,
    StageError,
)
from mongelab.field_core import (
    Domain,
    FieldHandle,
    GridField,
    QuadraticField,
    RadialPowerField,
    RescaledField,
    ball_volume,
    evaluate_jet,
)
from mongelab.field_core.domain import uniform_directions
from mongelab.norms import (
    classify_profile,
    critical_exponent,
    decay_fit,
    log_divergence_fit,
    loglog_fit,
)
from mongelab.pogorelov import build_example, default_spec, example_power
from mongelab.quadrature import (
    AnnulusProfile,
    AnnulusScheme,
    dyadic_annulus_profile,
    integrate_region,
    sphere_sup,
)

# Annulus dichotomy -------------------------------------------------------------------


@dataclass
class DichotomyReport:
    p: float
    eps: float
    sup: float
    annulus_ratio: float
    inner_ratio: float
    annulus_stderr: float
    inner_stderr: float
    delta_emp: float | None = None
    c0_emp: float | None = None

    @property
    def branch(self) -> int | None:
        if self.delta_emp is None:
            return None
        return 1 if self.annulus_ratio >= self.delta_emp else 2

    def satisfied(self) -> bool:
        """At least one branch holds with the attached constants."""
        return (self.annulus_ratio >= self.delta_emp) or (self.inner_ratio >= self.c0_emp)


def _hess_power(w: FieldHandle, p: float):
    mode = "analytic" if w.analytic else "fd"

    def f(X):
        H = evaluate_jet(w, X, mode=mode, check=False).hessian
        return np.linalg.norm(H, axis=(1, 2)) ** p

    return f


def _sup_unit_sphere(w: FieldHandle, seed: int) -> float:
    if isinstance(w, ConvexSample):
        return w.sphere_sup()[0]
    return sphere_sup(w, np.zeros(w.dim), 1.0, seed=seed).value


def dichotomy_probe(w: FieldHandle, p: float, eps: float, budget: int = 20_000, seed: int = 0,
                    delta_emp: float | None = None, c0_emp: float | None = None,
                    tol: float = 1e-9) -> DichotomyReport:
    """Both ratios of the annulus dichotomy for w on B_2.

    annulus ratio = ||D^2 w||_{L^p(B_2 \\ B_eps)} / sup_{|x|=1} w and
    inner ratio = ||D^2 w||_{L^p(B_2eps)} / (eps^{d/p - 2} sup_{|x|=1} w).
    """
    d = w.dim
    if p <= d / 2:
        raise PreconditionError(f"dichotomy needs p > d/2 = {d / 2}")
    if not 0 < eps < 1:
        raise PreconditionError("eps must lie in (0, 1)")
    w0 = float(w.sharp(np.zeros((1, d)))[0]) if isinstance(w, ConvexSample) else float(
        w(np.zeros((1, d)))[0])
    if abs(w0) > tol:
        raise PreconditionError(f"dichotomy needs w(0) = 0, got {w0:.3g}")
    try:
        sup = _sup_unit_sphere(w, seed)
    except MongeLabError as exc:
        raise StageError("sphere-sup", str(exc)) from exc
    if not sup > 0:
        raise PreconditionError("sup of w on the unit sphere must be positive")
    f = _hess_power(w, p)
    outer = integrate_region(f, Domain.annulus(d, eps, 2.0), budget, seed, shells=32, tag=(1,))
    inner = integrate_region(f, Domain.ball(d, 2 * eps), budget, seed, shells=32, tag=(2,))
    a = outer.value ** (1 / p)
    c = inner.value ** (1 / p)
    # delta method for the p-th root
    a_err = a * outer.stderr / (p * outer.value) if outer.value > 0 else 0.0
    c_err = c * inner.stderr / (p * inner.value) if inner.value > 0 else 0.0
    scale = eps ** (d / p - 2)
    return DichotomyReport(float(p), float(eps), float(sup), a / sup, c / (scale * sup),
                           a_err / sup, c_err / (scale * sup), delta_emp, c0_emp)


def dichotomy_corpus(d: int = 3, size: int = 200, seed: int = 0) -> list:
    """Deterministic corpus of normalized convex fields on B_2 (w >= 0, w(0) = 0, sup = 1)."""
    ball = Domain.ball(d, 2.0)
    fields = [QuadraticField(2 * np.eye(d), domain=ball, name="|x|^2")]
    for q in (1.4, 1.6, 1.8):
        fields.append(RadialPowerField(q, d, domain=ball, name=f"|x|^{q}"))
    rng = np.random.default_rng(np.random.SeedSequence([int(seed), 8191]))
    for i in range(12):
        M = rng.standard_normal((d, d))
        A = M @ M.T + 0.05 * np.eye(d)
        A *= 2 / np.linalg.eigvalsh(A).max()
        fields.append(QuadraticField(A, domain=ball, name=f"quadratic-{i}"))
    i = 0
    while len(fields) < size:
        fields.append(random_convex(d, d + 1 + i % 10, seed=seed * 100_003 + i))
        i += 1
    return fields[:size]


@dataclass
class DichotomyCalibration:
    p: float
    delta_emp: dict
    c0_emp: dict
    reports: dict
    all_satisfied: bool

    def summary(self) -> dict:
        return {"p": self.p, "delta_emp": {str(k): v for k, v in self.delta_emp.items()},
                "c0_emp": {str(k): v for k, v in self.c0_emp.items()},
                "members": {str(k): len(v) for k, v in self.reports.items()},
                "branch1": {str(k): sum(r.branch == 1 for r in v) for k, v in self.reports.items()},
                "all_satisfied": self.all_satisfied}


def calibrate_dichotomy(corpus, p: float = 4.0, eps_list=(0.05, 0.1), budget: int = 20_000,
                        seed: int = 0) -> DichotomyCalibration:
    """Empirical (delta, c0) per eps as corpus minima of the two ratios.

    Every member then satisfies at least one branch by construction; the
    report keeps both ratios so the inequality itself can be inspected.
    """
    delta, c0, reports = {}, {}, {}
    ok = True
    for eps in eps_list:
        reps = [dichotomy_probe(w, p, eps, budget, seed) for w in corpus]
        delta[eps] = min(r.annulus_ratio for r in reps)
        c0[eps] = min(r.inner_ratio for r in reps)
        for r in reps:
            r.delta_emp, r.c0_emp = delta[eps], c0[eps]
        ok = ok and all(r.satisfied() for r in reps) and delta[eps] > 0 and c0[eps] > 0
        reports[eps] = reps
    return DichotomyCalibration(float(p), delta, c0, reports, bool(ok))


# Complex growth scan -----------------------------------------------------------------


@dataclass
class ComplexGrowth:
    radii: np.ndarray
    values: np.ndarray
    exponent: float
    stderr: float
    bound: float
    c_fit: float
    passed: bool


def complex_growth_scan(u: FieldHandle, split=None, radii=None, grid: int = 16,
                        budget: int = 256, seed: int = 0, w_radius: float = 0.25) -> ComplexGrowth:
    """r -> sup_{|w| < 1/4} sup_{|z| = r} u(z, w), with a log-log exponent.

    Pass iff c_fit = min_r value / r^{2 - 2k/n} is positive, i.e. the scan
    dominates a positive multiple of the lemma's power.
    """
    split = split or u.complex_split
    if split is None:
        raise PreconditionError("complex growth scan needs a (n-k, k) split")
    m, k = split
    if m < 1 or k < 1:
        raise PreconditionError("complex growth scan needs 0 < k < n")
    n = m + k
    radii = np.asarray(radii if radii is not None else 2.0 ** -np.arange(1, 9), dtype=float)
    W = y_grid(2 * k, w_radius, grid)
    zdims = list(range(2 * m))
    vals = []
    for r in radii:
        best = -np.inf
        for w in W:
            c = np.concatenate([np.zeros(2 * m), w])
            best = max(best, sphere_sup(u, c, r, dims=zdims, budget=budget, rounds=2,
                                        seed=seed).value)
        vals.append(best)
    vals = np.array(vals)
    fit = loglog_fit(radii, vals)
    bound = 2 - 2 * k / n
    c_fit = float(np.min(vals / radii**bound))
    return ComplexGrowth(radii, vals, fit.exponent, fit.stderr, bound, c_fit,
                         bool(np.isfinite(c_fit) and c_fit > 0))


# Barrier comparison ------------------------------------------------------------------


@dataclass(frozen=True)
class BarrierSpec:
    """Q_t = 2h (16|w|^2 + a|z|^2) + t with a = (h/c)^{-n/(n-k)}."""

    h: float
    c: float
    n: int
    k: int
    r0: float
    t: float = 0.0

    def __post_init__(self):
        if min(self.h, self.c, self.r0) <= 0:
            raise PreconditionError("h, c and r0 must be positive")
        if not 0 < self.k < self.n:
            raise PreconditionError("barrier needs 0 < k < n")

    @classmethod
    def from_radius(cls, c: float, r0: float, n: int, k: int) -> "BarrierSpec":
        """h = c r0^{2-2k/n}, which makes a r0^2 = 1."""
        return cls(c * r0 ** (2 - 2 * k / n), c, n, k, r0)

    @property
    def a(self) -> float:
        return (self.h / self.c) ** (-self.n / (self.n - self.k))

    def __call__(self, X, t: float | None = None) -> np.ndarray:
        X = np.atleast_2d(X)
        mz = 2 * (self.n - self.k)
        z2 = (X[:, :mz] ** 2).sum(axis=1)
        w2 = (X[:, mz:] ** 2).sum(axis=1)
        return 2 * self.h * (16 * w2 + self.a * z2) + (self.t if t is None else t)


@dataclass
class BarrierReport:
    gap: float
    gap_point: np.ndarray
    t_star: float
    touch_point: np.ndarray
    interior: bool


def barrier_touch_check(u: FieldHandle, barrier: BarrierSpec, budget: int = 20_000,
                        seed: int = 0) -> BarrierReport:
    """Boundary gap of Q_0 - u on {|z| < r0} x {|w| < 1/4} and the touching shift.

    t* = max over interior samples of (u - Q_0); Q_{t*} touches u from above.
    """
    m, k = barrier.n - barrier.k, barrier.k
    if u.dim != 2 * (m + k):
        raise PreconditionError("field dimension does not match the barrier's (n, k)")
    region = Domain.product(2 * m, 2 * k, barrier.r0, 0.25)
    rng = np.random.default_rng(np.random.SeedSequence([int(seed), 6007]))
    B = region.sample_boundary(rng, budget)
    gb = barrier(B, 0.0) - u(B)
    i = int(np.argmin(gb))
    gap = float(gb[i])
    if not gap > 0:
        raise BarrierHypothesisError(
            f"Q_0 does not lie above u on the boundary (gap {gap:.4g} at {B[i]})", gap, B[i])
    P = np.vstack([np.zeros(u.dim), region.sample_uniform(rng, budget)])
    diff = u(P) - barrier(P, 0.0)
    j = int(np.argmax(diff))
    t_star = float(diff[j])
    interior = bool(region.boundary_distance(P[j:j + 1])[0] > 0 and t_star > -gap)
    return BarrierReport(gap, B[i], t_star, P[j], interior)


# Slices and the mean-value bound -------------------------------------------------------


@dataclass
class SliceProfile:
    k: int
    M: object
    z0: np.ndarray | None
    w0: np.ndarray | None
    m_w0: float
    mass: float
    mass_stderr: float
    submean_violation: float

    @classmethod
    def from_function(cls, M, k: int, w0=None, budget: int = 50_000, seed: int = 0,
                      z0=None, checks: int = 64, directions: int = 64) -> "SliceProfile":
        """Tabulate M on the unit ball of C^k = R^{2k}: mass, value at w0, sub-mean defect.

        The defect is max(0, M(c) - mean of M over a sphere around c) over
        ``checks`` random centres and radii with the sphere inside the ball.
        """
        d = 2 * k
        est = integrate_region(M, Domain.ball(d, 1.0), budget, seed, shells=16)
        rng = np.random.default_rng(np.random.SeedSequence([int(seed), 1223]))
        C = Domain.ball(d, 0.9).sample_uniform(rng, checks)
        rad = rng.uniform(0.02, 1.0, checks) * (0.99 - np.linalg.norm(C, axis=1))
        if d == 2:
            th = 2 * np.pi * (np.arange(directions) + 0.5) / directions
            U = np.column_stack([np.cos(th), np.sin(th)])
        else:
            U = uniform_directions(rng, directions, d)
            U = np.vstack([U, -U])
        viol = 0.0
        for c, r in zip(C, rad):
            mean = float(np.mean(M(c + r * U)))
            viol = max(viol, float(M(c[None])[0]) - mean)
        w0a = None if w0 is None else np.asarray(w0, dtype=float)
        mw0 = float(M(w0a[None])[0]) if w0a is not None else float("nan")
        return cls(k, M, z0, w0a, mw0, est.value, est.stderr, viol)


def slice_profile(u: FieldHandle, r: float, grid: int = 16, budget: int = 50_000,
                  seed: int = 0) -> SliceProfile:
    """M(w) = u_r(z0, w) where (z0, w0) maximises u_r over {|z| = 1} x {|w| < 1/4}."""
    if u.complex_split is None:
        raise PreconditionError("slice profiles need a complex field")
    m, k = u.complex_split
    n = m + k
    ur = RescaledField(u, r, 2 - 2 * k / n, tuple(range(2 * m)))
    best, z0, w0 = -np.inf, None, None
    for w in y_grid(2 * k, 0.25, grid):
        s = sphere_sup(ur, np.concatenate([np.zeros(2 * m), w]), 1.0,
                       dims=list(range(2 * m)), seed=seed)
        if s.value > best:
            best, z0, w0 = s.value, s.point[:2 * m], w
    zz = z0.copy()

    def M(W):
        W = np.atleast_2d(W)
        return ur(np.hstack([np.repeat(zz[None], len(W), axis=0), W]))

    return SliceProfile.from_function(M, k, w0=w0, budget=budget, seed=seed, z0=z0)


@dataclass
class MVIResult:
    mass: float
    bound: float
    m_w0: float
    passed: bool


def mvi_mass_bound(profile: SliceProfile, tol: float = 1e-9) -> MVIResult:
    """Check mass >= |B_{3/4}| M(w0), the mean value inequality on B_{3/4}(w0)."""
    if profile.submean_violation > tol * max(1.0, abs(profile.m_w0)):
        raise PreconditionError(
            f"M is not sub-mean at sampled resolution (defect {profile.submean_violation:.3g})")
    if profile.w0 is None or not np.linalg.norm(profile.w0) < 0.25:
        raise PreconditionError("no certified w0 with |w0| < 1/4")
    bound = ball_volume(2 * profile.k, 0.75) * profile.m_w0
    return MVIResult(profile.mass, bound, profile.m_w0, bool(profile.mass >= bound))


def rescaled_claim_mass(u: FieldHandle, r: float, eps: float = 0.1, budget: int = 50_000,
                        seed: int = 0):
    """Mass of |D_z^2 u_r|^{n(n-k)/k} over {eps < |z| < 2} x {|w| < 1}."""
    if u.complex_split is None:
        raise PreconditionError("the claim mass needs a complex field")
    m, k = u.complex_split
    n = m + k
    p = float(critical_exponent("complex", n, k).p_crit)
    ur = RescaledField(u, r, 2 - 2 * k / n, tuple(range(2 * m)))
    mz = 2 * m
    mode = "analytic" if ur.analytic else "fd"

    def f(X):
        H = evaluate_jet(ur, X, mode=mode, check=False).hessian[:, :mz, :mz]
        return np.linalg.norm(H, axis=(1, 2)) ** p

    return integrate_region(f, Domain.product(mz, 2 * k, 2.0, 1.0, eps), budget, seed)


# Zero sets ----------------------------------------------------------------------------


@dataclass
class ZeroSetReport:
    dimension: int
    method: str
    residual: float
    points: int


def zero_set_dimension(u: FieldHandle, threshold: float = 1e-8, residual_tol: float = 1e-6,
                       samples: int = 2000, seed: int = 0) -> ZeroSetReport:
    """Dimension of {u = 0} (real dimension).

    Built-in families: the declared singular subspace, verified by sampling
    (u <= 1e-12 on it, u > 0 off it). Grid fields: nodes with u < threshold,
    clustered, each cluster fitted by the lowest-dimensional affine subspace
    with RMS residual below ``residual_tol``.
    """
    if isinstance(u, GridField):
        mesh = np.meshgrid(*u.axes, indexing="ij")
        P = np.stack([g.ravel() for g in mesh], axis=1)
        Z = P[u.values_grid.ravel() < threshold]
        if len(Z) == 0:
            return ZeroSetReport(-1, "grid", 0.0, 0)
        step = max(float(a[1] - a[0]) for a in u.axes if len(a) > 1)
        labels = (fcluster(linkage(Z, "single"), 1.5 * step, "distance")
                  if len(Z) > 1 else np.ones(1, int))
        dim, worst = 0, 0.0
        for lab in np.unique(labels):
            C = Z[labels == lab]
            s = np.linalg.svd(C - C.mean(axis=0), compute_uv=False) if len(C) > 1 else np.zeros(1)
            for q in range(u.dim + 1):
                res = math.sqrt(float(np.sum(s[q:] ** 2)) / len(C))
                if res <= residual_tol:
                    break
            dim, worst = max(dim, q), max(worst, res)
        return ZeroSetReport(dim, "grid", worst, len(Z))
    if u.singular is None:
        raise PreconditionError("field declares no singular set")
    rng = np.random.default_rng(np.random.SeedSequence([int(seed), 2029]))
    P = u.domain.sample_uniform(rng, samples)
    on = u.singular.project(P)
    on = on[u.domain.contains(on)]
    v_on = float(np.max(np.abs(u(on)))) if len(on) else 0.0
    off = P[u.singular.distance(P) > 10 * u.r_min]
    if v_on > 1e-12 or np.any(u(off) <= 0):
        raise PreconditionError("declared singular set is not the zero set at sampled points")
    return ZeroSetReport(u.singular.dimension, "declared", v_on, len(on))


# Sharpness experiments -----------------------------------------------------------------


def _p_label(p: float) -> str:
    return repr(round(float(p), 6))


@dataclass
class SharpnessResult:
    setting: str
    n: int
    k: int
    p_crit: float
    rows: list
    zero_set: ZeroSetReport
    growth: dict
    slices: list
    confirmed: bool
    profiles: dict = field(default_factory=dict)

    def verdict(self) -> dict:
        return {"setting": self.setting, "n": self.n, "k": self.k, "p_crit": self.p_crit,
                "rows": self.rows, "zero_set_dimension": self.zero_set.dimension,
                "zero_set_residual": self.zero_set.residual, "growth": self.growth,
                "slices": self.slices,
                "verdict": ("divergent at and above p_crit, finite below" if self.confirmed
                            else "threshold not confirmed")}

    def table_csv(self) -> str:
        cols = ["multiplier", "p", "verdict", "decay_exponent", "decay_stderr", "ratio",
                "slope", "slope_stderr", "flatness", "profile"]
        lines = [",".join(cols)]
        for r in self.rows:
            lines.append(",".join(str(r[c]) for c in cols))
        return "\n".join(lines) + "\n"

    def write(self, out) -> list:
        out = Path(out)
        out.mkdir(parents=True, exist_ok=True)
        files = []
        for name, prof in self.profiles.items():
            files.append(prof.write_csv(out / name))
        (out / "verdict.json").write_text(json.dumps(self.verdict(), indent=2, sort_keys=True) + "\n")
        (out / "verdict.csv").write_text(self.table_csv())
        return files + [out / "verdict.json", out / "verdict.csv"]


def default_scheme(setting: str, budget: int = 200_000, seed: int = 0) -> AnnulusScheme:
    # real Laplacians carry lower-order terms of relative size r^2, so start small
    r_outer = 2.0**-4 if setting == "real" else 0.5
    return AnnulusScheme(r_outer=r_outer, J=8, budget=budget, seed=seed)


def slice_log_slopes(u: FieldHandle, split, p: float, ys, scheme: AnnulusScheme) -> list:
    """Log-divergence fits of (Lap_x u(., y))^p on x-annuli at fixed slices y."""
    dx, dy = split
    out = []
    for y in np.atleast_2d(ys):
        mode = "analytic" if u.analytic else "fd"

        def f(X, y=y):
            P = np.hstack([X, np.repeat(y[None], len(X), axis=0)])
            H = evaluate_jet(u, P, mode=mode, check=False).hessian
            return np.abs(np.trace(H[:, :dx, :dx], axis1=1, axis2=2)) ** p

        radii = scheme.radii
        masses, errs = [], []
        for j in range(scheme.J):
            e = integrate_region(f, Domain.annulus(dx, radii[j + 1], radii[j]), scheme.budget,
                                 scheme.seed, scheme.shells, tag=(j,))
            masses.append(e.value)
            errs.append(e.stderr)
        prof = AnnulusProfile(radii, np.array(masses), np.array(errs),
                              np.zeros(scheme.J, bool), "x-laplacian", p)
        lf = log_divergence_fit(prof)
        out.append({"y": y.tolist(), "slope": lf.slope, "slope_stderr": lf.stderr,
                    "flatness": lf.flatness, "verdict": lf.verdict})
    return out


def sharpness_experiment(setting: str, n: int, k: int, multipliers=(0.9, 1.0),
                         budget: int = 200_000, seed: int = 0, growth: bool = True,
                         slices: bool = True, scheme: AnnulusScheme | None = None) -> SharpnessResult:
    """Build the example, confirm its zero set, and classify L^p membership at p = m p_crit."""
    try:
        spec = default_spec(setting, n, k)
        u = build_example(spec)
    except MongeLabError as exc:
        raise StageError("build", str(exc)) from exc
    try:
        zs = zero_set_dimension(u, seed=seed)
    except MongeLabError as exc:
        raise StageError("zero-set", str(exc)) from exc
    expected = k if setting == "real" else 2 * k
    if zs.dimension != expected:
        raise StageError("zero-set", f"zero set has dimension {zs.dimension}, expected {expected}")
    quantity, crit = example_power(spec)
    scheme = scheme or default_scheme(setting, budget, seed)
    rows, profiles = [], {}
    for m in multipliers:
        p = m * crit
        try:
            prof = dyadic_annulus_profile(u, quantity, p, scheme)
            dec = decay_fit(prof)
            lf = log_divergence_fit(prof)
            verdict = classify_profile(prof, dec, lf)
        except MongeLabError as exc:
            raise StageError(f"profile p={p:g}", str(exc)) from exc
        name = f"profile_p{_p_label(p)}.csv"
        profiles[name] = prof
        rows.append({"multiplier": float(m), "p": float(p), "verdict": verdict,
                     "decay_exponent": dec.exponent, "decay_stderr": dec.stderr,
                     "ratio": dec.ratio, "slope": lf.slope, "slope_stderr": lf.stderr,
                     "flatness": lf.flatness, "profile": name})
    confirmed = all((r["verdict"] == "divergent") == (r["multiplier"] >= 1) for r in rows)
    gdict = {}
    if growth:
        try:
            if setting == "real":
                g = growth_exponent_fit(u, (n - k, k))
            else:
                g = complex_growth_scan(u)
            gdict = {"exponent": g.exponent, "stderr": g.stderr, "bound": g.bound,
                     "passed": g.passed}
        except MongeLabError as exc:
            raise StageError("growth", str(exc)) from exc
    sl = []
    if slices and setting == "real":
        try:
            ys = np.zeros((1, k))
            sl = slice_log_slopes(u, (n - k, k), crit, ys,
                                  AnnulusScheme(scheme.r_outer, scheme.J,
                                                max(1000, scheme.budget // 4), seed))
        except MongeLabError as exc:
            raise StageError("slices", str(exc)) from exc
    return SharpnessResult(setting, n, k, float(crit), rows, zs, gdict, sl, confirmed, profiles)
