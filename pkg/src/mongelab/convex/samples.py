"""Max-of-affine convex samples, supporting planes and the annulus mass bound."""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np
from scipy.special import betainc, logsumexp, softmax

from mongelab.errors import ConvexityCertificateError, PreconditionError, PointOutsideDomain
from mongelab.field_core import Domain, FieldHandle, evaluate_jet, sphere_area
from mongelab.field_core.domain import uniform_directions
from mongelab.quadrature import integrate_region, sphere_sup

SMOOTHING = 1e-2
MAX_RETRIES = 10
PLANE_TOL = 1e-9


class ConvexSample(FieldHandle):
    """w(x) = max_i (a_i . x + b_i), optionally smoothed.

    With ``tau > 0`` the max is replaced by ``tau * logsumexp((a_i . x + b_i) / tau)``,
    a smooth convex function within ``tau * log(pieces)`` of the max; its
    Hessian is ``(A^T diag(p) A - g g^T) / tau`` with p the softmax weights.
    """

    analytic = True

    def __init__(self, slopes, offsets, tau: float = SMOOTHING, domain: Domain | None = None,
                 **kwargs):
        A = np.atleast_2d(np.asarray(slopes, dtype=float))
        d = A.shape[1]
        super().__init__(d, domain or Domain.ball(d, 2.0), **kwargs)
        self.slopes = A
        self.offsets = np.asarray(offsets, dtype=float).reshape(-1)
        if self.offsets.size != A.shape[0]:
            raise ValueError("one offset per slope is required")
        self.tau = float(tau)

    @property
    def pieces(self) -> int:
        return self.slopes.shape[0]

    def sharp(self, X) -> np.ndarray:
        """The unsmoothed max of the affine pieces."""
        X = np.atleast_2d(np.asarray(X, dtype=float))
        return (X @ self.slopes.T + self.offsets).max(axis=1)

    def _values(self, X):
        z = X @ self.slopes.T + self.offsets
        if self.tau == 0:
            return z.max(axis=1)
        return self.tau * logsumexp(z / self.tau, axis=1)

    def _analytic_jet(self, X):
        if self.tau == 0:
            raise NotImplementedError("the unsmoothed max has no classical Hessian")
        z = X @ self.slopes.T + self.offsets
        p = softmax(z / self.tau, axis=1)
        g = p @ self.slopes
        H = (np.einsum("nk,ki,kj->nij", p, self.slopes, self.slopes)
             - np.einsum("ni,nj->nij", g, g)) / self.tau
        return self.tau * logsumexp(z / self.tau, axis=1), g, H

    def subgradient(self, x):
        x = np.asarray(x, dtype=float)
        if self.tau == 0:
            return self.slopes[int(np.argmax(self.slopes @ x + self.offsets))].copy()
        return evaluate_jet(self, x[None], check=False).gradient[0]

    def sphere_sup(self) -> tuple:
        """Exact sup of the unsmoothed max over the unit sphere and a maximiser."""
        norms = np.linalg.norm(self.slopes, axis=1)
        vals = norms + self.offsets
        i = int(np.argmax(vals))
        u = self.slopes[i] / norms[i] if norms[i] > 0 else np.eye(self.dim)[0]
        return float(vals[i]), u


def from_pieces(slopes, offsets, tau: float = SMOOTHING, normalize: bool = True) -> ConvexSample:
    """Max of the given pieces and the zero function, scaled so sup over the unit sphere is 1."""
    A = np.atleast_2d(np.asarray(slopes, dtype=float))
    b = np.asarray(offsets, dtype=float).reshape(-1)
    if np.any(b > 0):
        raise PreconditionError("offsets must be <= 0 so that w(0) = 0")
    A = np.vstack([A, np.zeros(A.shape[1])])
    b = np.append(b, 0.0)
    if normalize:
        s = float(np.max(np.linalg.norm(A, axis=1) + b))
        if s <= 0:
            raise PreconditionError("degenerate pieces: the max vanishes on the unit sphere")
        A, b = A / s, b / s
    return ConvexSample(A, b, tau=tau, name="max-affine")


def random_convex(d: int, pieces: int, seed: int = 0, tau: float = SMOOTHING) -> ConvexSample:
    """A random normalized sample: w >= 0, w(0) = 0, sup over the unit sphere = 1.

    Slopes are isotropic with log-uniform lengths; offsets are zero for a
    random subset (never empty) and negative otherwise. The zero piece is
    always included, which makes w >= 0.
    """
    if pieces < d + 1:
        raise PreconditionError(f"need at least d + 1 = {d + 1} affine pieces")
    rng = np.random.default_rng(np.random.SeedSequence([int(seed), int(d), int(pieces)]))
    for _ in range(MAX_RETRIES):
        m = pieces - 1
        A = uniform_directions(rng, m, d) * np.exp(rng.uniform(-2.0, 1.0, m))[:, None]
        b = -rng.uniform(0.0, 1.5, m) * np.linalg.norm(A, axis=1)
        b[rng.random(m) < 0.4] = 0.0
        b[int(rng.integers(m))] = 0.0  # keep a kink at the origin
        if np.any(np.linalg.norm(A, axis=1) + b > 1e-12):
            return from_pieces(A, b, tau=tau)
    raise PreconditionError(f"degenerate draw after {MAX_RETRIES} retries")


# Supporting planes ----------------------------------------------------------------

@dataclass
class SupportingPlane:
    base: np.ndarray
    slope: np.ndarray
    offset: float
    min_gap: float
    samples: int

    def __call__(self, X):
        return np.atleast_2d(X) @ self.slope + self.offset


def supporting_plane(u: FieldHandle, x, samples: int = 10_000, seed: int = 0,
                     tol: float = PLANE_TOL) -> SupportingPlane:
    """Affine minorant touching u at x, certified at ``samples`` random points."""
    x = np.asarray(x, dtype=float)
    if not u.domain.contains(x[None])[0]:
        raise PointOutsideDomain(f"base point {x} lies outside the domain")
    slope = np.asarray(u.subgradient(x), dtype=float)
    offset = float(u(x[None])[0] - slope @ x)
    rng = np.random.default_rng(np.random.SeedSequence([int(seed), 31337]))
    P = u.domain.sample_uniform(rng, samples)
    gap = u(P) - (P @ slope + offset)
    gmin = float(np.min(gap))
    if gmin < -tol:
        raise ConvexityCertificateError(
            f"supporting plane at {x} fails by {-gmin:.3g} at {P[int(np.argmin(gap))]}")
    return SupportingPlane(x, slope, offset, gmin, samples)


# Annulus mass bound -------------------------------------------------------------

def cap_bound(d: int, R: float = 2.0, a: float = 1.0) -> float:
    """One quarter of the area of the cap {|x| = R, x_d >= a}."""
    if d == 1:
        return 0.25
    frac = 0.5 * betainc((d - 1) / 2, 0.5, 1 - (a / R) ** 2)
    return 0.25 * sphere_area(d, R) * frac


@dataclass
class AnnulusMassReport:
    mass: float
    stderr: float
    flux: float
    bound: float
    sup: float
    argmax: np.ndarray
    passed: bool


def radial_flux(w: FieldHandle, R: float, budget: int = 4096, seed: int = 0) -> float:
    """Integral of the radial derivative of w over the sphere of radius R."""
    d = w.dim
    rng = np.random.default_rng(np.random.SeedSequence([int(seed), 4099]))
    U = uniform_directions(rng, budget, d)
    U = np.vstack([U, -U])
    mode = "analytic" if w.analytic else "fd"
    g = evaluate_jet(w, R * U, mode=mode, check=False).gradient
    return sphere_area(d, R) * float(np.mean(np.sum(g * U, axis=1)))


def annulus_mass_bound_check(w: FieldHandle, budget: int = 20_000, seed: int = 0,
                             flux_budget: int = 4096, tol: float = 1e-9) -> AnnulusMassReport:
    """Integral of the Laplacian over B_2 minus B_1 against the cap-area bound.

    The mass is a stratified Monte Carlo integral; ``flux`` is the
    divergence-theorem value (outer minus inner radial flux), an independent
    route to the same number.
    """
    d = w.dim
    if isinstance(w, ConvexSample):
        sup, argmax = w.sphere_sup()
        w0 = float(w.sharp(np.zeros((1, d)))[0])
        nonneg = bool(np.any(np.all(w.slopes == 0, axis=1) & (w.offsets >= 0)))
    else:
        s = sphere_sup(w, np.zeros(d), 1.0, seed=seed)
        sup, argmax = s.value, s.point
        w0 = float(w(np.zeros((1, d)))[0])
        rng = np.random.default_rng(np.random.SeedSequence([int(seed), 271]))
        nonneg = bool(np.min(w(Domain.ball(d, 2.0).sample_uniform(rng, 1000))) >= -tol)
    if abs(w0) > tol or sup < 1 - 1e-6 or not nonneg:
        raise PreconditionError(
            f"normalization violated: w(0) = {w0:.3g}, sup on unit sphere = {sup:.6g}, "
            f"nonnegative = {nonneg}")
    mode = "analytic" if w.analytic else "fd"

    def lap(X):
        return np.trace(evaluate_jet(w, X, mode=mode, check=False).hessian, axis1=1, axis2=2)

    est = integrate_region(lap, Domain.annulus(d, 1.0, 2.0), budget, seed, shells=16)
    flux = radial_flux(w, 2.0, flux_budget, seed) - radial_flux(w, 1.0, flux_budget, seed)
    bound = cap_bound(d)
    return AnnulusMassReport(est.value, est.stderr, flux, bound, sup, np.asarray(argmax),
                             bool(est.value >= bound))
