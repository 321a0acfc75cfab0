"""Critical exponents, L^p / Orlicz (Luxemburg) norms, divergence fits and rescalings."""

from __future__ import annotations

import json
import math
from dataclasses import asdict, dataclass
from fractions import Fraction

import numpy as np
from scipy import stats

from mongelab.errors import BracketError, FitError, PreconditionError
from mongelab.field_core import Domain, FieldHandle, RescaledField, evaluate_jet
from mongelab.field_core.jets import DERIVED_QUANTITIES
from mongelab.quadrature import AnnulusProfile, integrate_region, sample_region

SIGNIFICANCE = 3.0
FLATNESS = 0.10


@dataclass(frozen=True)
class CriticalExponents:
    setting: str
    n: int
    k: int
    p_crit: Fraction
    holder: Fraction


def critical_exponent(setting: str, n: int, k: int) -> CriticalExponents:
    """n(n-k)/(2k) in the real case, n(n-k)/k in the complex case, as exact fractions."""
    if setting == "real":
        if not 0 < k < Fraction(n, 2):
            raise PreconditionError(f"real critical exponent needs 0 < k < n/2 (n={n}, k={k})")
        p = Fraction(n * (n - k), 2 * k)
    elif setting == "complex":
        if not 0 < k < n:
            raise PreconditionError(f"complex critical exponent needs 0 < k < n (n={n}, k={k})")
        p = Fraction(n * (n - k), k)
    else:
        raise PreconditionError(f"unknown setting {setting!r}")
    return CriticalExponents(setting, n, k, p, 2 - Fraction(2 * k, n))


# Orlicz gauges ------------------------------------------------------------------

@dataclass(frozen=True)
class OrliczGauge:
    """F(t) = t^m (pure power) or t^m (log t)^{-s} for t >= e (power-log).

    Below t = e the power-log gauge continues as F(e) (t/e)^(m - s), the
    power matching value and slope at e; it is convex iff m - s >= 1.
    """

    family: str
    m: float
    s: float = 0.0

    def __post_init__(self):
        if self.family not in ("power", "power-log"):
            raise ValueError(f"unknown gauge family {self.family!r}")
        if self.m <= 0:
            raise ValueError("gauge exponent must be positive")

    def __call__(self, t):
        t = np.asarray(t, dtype=float)
        if self.family == "power":
            return t**self.m
        e = math.e
        big = t >= e
        out = np.empty_like(t)
        tb = t[big]
        out[big] = tb**self.m * np.log(tb) ** (-self.s)
        out[~big] = e**self.m * (t[~big] / e) ** (self.m - self.s)
        return out

    @property
    def convex_certified(self) -> bool:
        if self.family == "power":
            return self.m >= 1
        if self.m - self.s < 1:
            return False
        # F'' on t >= e has the sign of m(m-1)L^2 - s(2m-1)L + s(s+1), L = log t >= 1
        L = np.geomspace(1.0, 1e6, 4001)
        return bool(np.all(self.m * (self.m - 1) * L**2 - self.s * (2 * self.m - 1) * L
                           + self.s * (self.s + 1) >= 0))


def orlicz_divergence_test(gauge: OrliczGauge, n: int, k: int, setting: str = "real") -> str:
    """Decide whether int_1^inf t^{-p_crit} F(t) dt/t diverges.

    In log coordinates the integrand is e^{(m - p_crit) u} u^{-s}, so the
    integral diverges iff m > p_crit, or m = p_crit and s <= 1.
    """
    crit = critical_exponent(setting, n, k).p_crit
    m = Fraction(gauge.m).limit_denominator(10**9)
    s = gauge.s if gauge.family == "power-log" else 0.0
    if m > crit:
        return "diverges"
    if m < crit:
        return "converges"
    return "diverges" if s <= 1 else "converges"


def tail_divergence_test(t, F, n: int, k: int, setting: str = "real") -> str:
    """Numeric counterpart of ``orlicz_divergence_test`` for tabulated gauges.

    Fits log F - p_crit log t = (m - p_crit) u - s log u + c with u = log t on
    the supplied tail and applies the same 3-sigma rule to both coefficients.
    """
    crit = float(critical_exponent(setting, n, k).p_crit)
    t = np.asarray(t, dtype=float)
    F = np.asarray(F, dtype=float)
    ok = (t > math.e) & (F > 0)
    if ok.sum() < 8:
        raise FitError("need at least 8 tabulated tail points with t > e")
    u = np.log(t[ok])
    y = np.log(F[ok]) - crit * u
    A = np.column_stack([u, -np.log(u), np.ones_like(u)])
    coef, res, rank, _ = np.linalg.lstsq(A, y, rcond=None)
    dof = max(1, u.size - 3)
    sigma2 = float(np.sum((A @ coef - y) ** 2)) / dof
    cov = sigma2 * np.linalg.pinv(A.T @ A)
    se = np.sqrt(np.maximum(np.diag(cov), 1e-24))
    excess, s = coef[0], coef[1]
    if excess > SIGNIFICANCE * se[0] and excess > 1e-6:
        return "diverges"
    if excess < -SIGNIFICANCE * se[0] and excess < -1e-6:
        return "converges"
    if s < 1 - SIGNIFICANCE * se[1] - 1e-6:
        return "diverges"
    if s > 1 + SIGNIFICANCE * se[1] + 1e-6:
        return "converges"
    raise FitError("inconclusive tail fit: log exponent indistinguishable from 1")


# Norms ------------------------------------------------------------------------

def luxemburg_norm(g, domain: Domain, gauge: OrliczGauge, tol: float = 1e-6,
                   budget: int = 200_000, seed: int = 0, shells: int = 64) -> float:
    """inf{lam > 0 : int F(|g| / lam) <= 1}, by bisection in log(lam).

    The quadrature sample is drawn once, so every candidate lam is judged
    against the same points and the modular is exactly monotone in lam.
    """
    S = sample_region(domain, budget, seed, shells)
    vals = np.abs(np.asarray(g(S.points), dtype=float))
    finite = np.isfinite(vals)
    vals = np.where(finite, vals, 0.0)
    if not np.any(vals > 0):
        return 0.0

    def modular(lam):
        return S.integrate(gauge(vals / lam)).value

    attempts = []
    lo = hi = float(np.sum(S.weights * vals) / np.sum(S.weights)) or 1.0
    for _ in range(200):
        m = modular(hi)
        attempts.append((hi, m))
        if m <= 1:
            break
        hi *= 2
    else:
        raise BracketError("could not find lam with modular <= 1", attempts)
    lo = hi
    for _ in range(200):
        m = modular(lo)
        attempts.append((lo, m))
        if m > 1:
            break
        hi = lo
        lo /= 2
    else:
        raise BracketError("could not find lam with modular > 1", attempts)
    while (hi - lo) > tol * hi:
        mid = math.sqrt(lo * hi)
        if modular(mid) <= 1:
            hi = mid
        else:
            lo = mid
    return math.sqrt(lo * hi)


def lp_norm(g, domain: Domain, p: float, budget: int = 200_000, seed: int = 0,
            shells: int = 64) -> float:
    """(int |g|^p)^(1/p) on the same sample ``luxemburg_norm`` would draw."""
    S = sample_region(domain, budget, seed, shells)
    vals = np.abs(np.asarray(g(S.points), dtype=float))
    return S.integrate(vals**p).value ** (1 / p)


# Fits ---------------------------------------------------------------------------

@dataclass(frozen=True)
class PowerFit:
    exponent: float
    intercept: float
    stderr: float
    r2: float


def loglog_fit(x, y) -> PowerFit:
    """Least-squares fit of log y = exponent * log x + intercept."""
    x = np.asarray(x, dtype=float)
    y = np.asarray(y, dtype=float)
    ok = (x > 0) & (y > 0) & np.isfinite(y)
    if ok.sum() < 3:
        raise FitError("need at least 3 positive points for a log-log fit")
    r = stats.linregress(np.log(x[ok]), np.log(y[ok]))
    return PowerFit(float(r.slope), float(r.intercept), float(r.stderr), float(r.rvalue**2))


@dataclass(frozen=True)
class LogDivergenceFit:
    slope: float
    stderr: float
    intercept: float
    r2: float
    verdict: str
    flatness: float

    def to_json(self) -> str:
        return json.dumps(asdict(self), sort_keys=True)


def _usable(profile: AnnulusProfile):
    ok = profile.valid & np.isfinite(profile.masses) & (profile.masses > 0)
    rel = np.where(ok, profile.stderr / np.where(ok, profile.masses, 1.0), np.inf)
    return ok & (rel < 0.05)


def log_divergence_fit(profile: AnnulusProfile) -> LogDivergenceFit:
    """Fit cumulative mass against |log r| (j+1) ln 2.

    Verdict "log-divergent" iff the slope exceeds 3 standard errors and the
    per-annulus masses are flat within 10% of their mean.
    """
    ok = _usable(profile)
    if ok.sum() < 4:
        raise FitError("need at least 4 annuli with relative stderr below 5%")
    j = np.flatnonzero(ok)
    if not np.all(np.diff(j) == 1) or j[0] != 0:
        raise FitError("usable annuli must be the leading contiguous block")
    x = (j + 1) * math.log(2)
    y = np.cumsum(profile.masses[j])
    r = stats.linregress(x, y)
    m = profile.masses[j]
    flat = float(np.max(np.abs(m / m.mean() - 1)))
    divergent = r.slope > SIGNIFICANCE * r.stderr and flat <= FLATNESS
    return LogDivergenceFit(float(r.slope), float(r.stderr), float(r.intercept),
                            float(r.rvalue**2), "log-divergent" if divergent else "not log-divergent",
                            flat)


@dataclass(frozen=True)
class DecayFit:
    exponent: float   # gamma with annulus mass ~ r^gamma
    stderr: float
    ratio: float      # fitted m_{j+1} / m_j = 2^{-gamma}


def decay_fit(profile: AnnulusProfile) -> DecayFit:
    """Per-annulus decay exponent from ln m_j against j, with Monte Carlo errors folded in."""
    ok = _usable(profile)
    if ok.sum() < 3:
        raise FitError("need at least 3 usable annuli")
    j = np.flatnonzero(ok).astype(float)
    lm = np.log(profile.masses[ok])
    sig = profile.stderr[ok] / profile.masses[ok]
    r = stats.linregress(j, lm)
    w = 1 / np.maximum(sig, 1e-15) ** 2
    jb = np.sum(w * j) / np.sum(w)
    se_mc = math.sqrt(1 / np.sum(w * (j - jb) ** 2))
    se = math.hypot(r.stderr, se_mc)
    gamma = -r.slope / math.log(2)
    return DecayFit(float(gamma), float(se / math.log(2)), float(math.exp(r.slope)))


def classify_profile(profile: AnnulusProfile, decay: DecayFit | None = None,
                     lf: LogDivergenceFit | None = None) -> str:
    """'divergent', 'finite' or 'inconclusive' for the L^p mass near the singular set."""
    lf = lf or log_divergence_fit(profile)
    decay = decay or decay_fit(profile)
    if lf.verdict == "log-divergent":
        return "divergent"
    if decay.exponent > SIGNIFICANCE * decay.stderr:
        return "finite"
    if decay.exponent < -SIGNIFICANCE * decay.stderr:
        return "divergent"
    return "inconclusive"


# Rescaling invariance -------------------------------------------------------------

@dataclass
class ScalingReport:
    radii: list
    direct: list
    rescaled: list
    stderr: list
    max_deviation: float
    independent_deviation: float
    independent_sigma: float


def scaling_invariance_check(field: FieldHandle, setting: str, q: float | None = None,
                             n: int | None = None, k: int | None = None, radii=(0.5, 0.25),
                             budget: int = 100_000, seed: int = 0, inner: float = 1.0,
                             shells: int = 64) -> ScalingReport:
    """Compare annulus masses at scale r computed directly and through the rescaled field.

    Real: the mass of (Lap w)^{d/(2-q)} on B_{2r} \\ B_r against that of
    (Lap w_r)^{d/(2-q)} on B_2 \\ B_1, w_r(x) = r^{-q} w(r x). Complex: the
    mass of |D_z^2 u|^{n(n-k)/k} on {r inner < |z| < 2r} x {|w| < 1} against
    that of u_r(z, w) = r^{-(2-2k/n)} u(r z, w) on {inner < |z| < 2}.

    ``max_deviation`` uses common random numbers (the same seed on both
    sides), so it isolates the exponent bookkeeping; ``independent_deviation``
    redraws the direct side and is limited by Monte Carlo error.
    """
    if setting == "real":
        if q is None:
            raise PreconditionError("real scaling check needs the growth exponent q")
        p = field.dim / (2 - q)
        quantity = "laplacian"
        dims = None
        expo = q
    elif setting == "complex":
        if field.complex_split is None:
            raise PreconditionError("complex scaling check needs a complex field")
        n, k = n or sum(field.complex_split), k or field.complex_split[1]
        p = float(critical_exponent("complex", n, k).p_crit)
        expo = 2 - 2 * k / n
        quantity = "z-block-hessian"
        dims = tuple(range(2 * field.complex_split[0]))
    else:
        raise PreconditionError(f"unknown setting {setting!r}")
    qf = DERIVED_QUANTITIES[quantity]
    dom = field.domain
    outer = dom.radius

    def region(a, b):
        if dom.kind == "product":
            return Domain.product(dom.split[0], dom.split[1], b, dom.ry, a)
        return Domain.annulus(field.dim, a, b, center=dom.center)

    def mass(f, a, b, s):
        mode = "analytic" if f.analytic else "fd"

        def integrand(X):
            return np.abs(qf(evaluate_jet(f, X, mode=mode, check=False), f)) ** p

        return integrate_region(integrand, region(a, b), budget, s, shells)

    radii = list(radii)
    if any(2 * r > outer + 1e-12 for r in radii):
        raise PreconditionError("domain too small for the requested radii")
    direct, rescaled, errs, indep, sig = [], [], [], [], []
    for r in radii:
        wr = RescaledField(field, r, expo, dims)
        e_res = mass(wr, inner, 2.0, seed)
        e_dir = mass(field, inner * r, 2.0 * r, seed)
        e_ind = mass(field, inner * r, 2.0 * r, seed + 1)
        direct.append(e_dir.value)
        rescaled.append(e_res.value)
        errs.append(e_res.stderr)
        indep.append(abs(e_ind.value - e_res.value) / e_res.value)
        sig.append(math.hypot(e_ind.stderr, e_res.stderr) / e_res.value)
    dev = max(abs(a - b) / b for a, b in zip(direct, rescaled))
    i = int(np.argmax(indep))
    return ScalingReport(radii, direct, rescaled, errs, float(dev), float(indep[i]), float(sig[i]))
