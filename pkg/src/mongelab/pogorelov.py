"""Singular example families: Pogorelov profiles and power-times-quadratic fields.

With u(x', t) = |x'|^a f(t), a = 2 - 2/n, x' in R^{n-1}, the Hessian has
eigenvalue a|x'|^{a-2} f on the n-2 directions tangential in x', and on the
(radial, t) plane the block

    [[a(a-1)|x'|^{a-2} f, a|x'|^{a-1} f'], [a|x'|^{a-1} f', |x'|^a f'']].

All powers of |x'| cancel in the determinant, which reduces det D^2 u = 1 to

    (a - 1) f f'' - a f'^2 = a^{1-n} f^{2-n}.

Setting f = phi^{-(a-1)} linearises the left side and gives the conservative
equation phi'' = -K phi^{n-1}, K = a^{1-n} / (a-1)^2, whose energy
phi'^2/2 + K phi^n / n is used as the residual of the integrated profile.
"""

from __future__ import annotations

import json
import logging
import math
from dataclasses import dataclass
from pathlib import Path

import numpy as np
from scipy.integrate import solve_ivp

from mongelab.errors import PreconditionError, ProfileBreakdownError
from mongelab.field_core import (
    Domain,
    FieldHandle,
    PowerQuadraticField,
    SingularSet,
    write_grid,
)
from mongelab.norms import classify_profile, critical_exponent, decay_fit, log_divergence_fit
from mongelab.quadrature import AnnulusScheme, dyadic_annulus_profile

log = logging.getLogger(__name__)

STENCIL_PAD = 0.02
BLOWUP = 1e8


def profile_second_derivative(n: int, f, df):
    a = 2 - 2 / n
    return (a * df * df + a ** (1 - n) * f ** (2 - n)) / ((a - 1) * f)


@dataclass
class PogorelovProfile:
    n: int
    alpha: float
    f0: float
    df0: float
    rho: float
    t_nodes: np.ndarray
    f_nodes: np.ndarray
    df_nodes: np.ndarray
    residual_max: float
    _pos: object
    _neg: object

    def _eval(self, t):
        t = np.asarray(t, dtype=float)
        out = np.empty((2,) + t.shape)
        pos = t >= 0
        if np.any(pos):
            out[:, pos] = self._pos(t[pos])
        if np.any(~pos):
            out[:, ~pos] = self._neg(t[~pos])
        return out

    def __call__(self, t):
        return self._eval(t)[0]

    def derivative(self, t):
        return self._eval(t)[1]

    def second_derivative(self, t):
        f, df = self._eval(t)
        return profile_second_derivative(self.n, f, df)

    def jet(self, t):
        f, df = self._eval(t)
        return f, df, profile_second_derivative(self.n, f, df)

    def energy(self, f, df):
        a = self.alpha
        K = a ** (1 - self.n) / (a - 1) ** 2
        phi = f ** (-1 / (a - 1))
        dphi = -(1 / (a - 1)) * f ** (-1 / (a - 1) - 1) * df
        return 0.5 * dphi**2 + K / self.n * phi**self.n

    def sidecar(self) -> dict:
        return {"n": self.n, "alpha": self.alpha, "f0": self.f0, "df0": self.df0,
                "rho": self.rho, "residual_max": self.residual_max}

    def export(self, path, count: int = 201) -> tuple:
        """Write the grid-field text file plus a ``.json`` sidecar next to it."""
        path = Path(path)
        t = np.linspace(-self.rho, self.rho, count)
        write_grid(path, [t], self(t))
        side = path.with_suffix(".json")
        side.write_text(json.dumps(self.sidecar(), indent=2, sort_keys=True) + "\n")
        return path, side


def solve_profile_ode(n: int, f0: float = 1.0, df0: float = 0.0, rho: float = 0.5,
                      rtol: float = 1e-12, truncate: bool = False) -> PogorelovProfile:
    """Integrate the reduced profile equation on |t| <= rho (DOP853, dense output).

    Raises ``ProfileBreakdownError`` (carrying the maximal valid radius) if f
    blows up or loses positivity before ``rho``; with ``truncate=True`` the
    profile is returned on the valid interval instead.
    """
    if n < 3:
        raise PreconditionError("the profile equation needs n >= 3")
    if f0 <= 0:
        raise PreconditionError("f(0) must be positive")
    a = 2 - 2 / n

    def rhs(t, y):
        return [y[1], profile_second_derivative(n, y[0], y[1])]

    def blowup(t, y):
        return BLOWUP - y[0]

    def collapse(t, y):
        return y[0] - 1e-8

    blowup.terminal = collapse.terminal = True
    span = rho + STENCIL_PAD
    sols = []
    limit = span
    for sign in (1.0, -1.0):
        s = solve_ivp(rhs, (0.0, sign * span), [f0, df0], method="DOP853", rtol=rtol,
                      atol=1e-14, dense_output=True, events=(blowup, collapse))
        if s.status == 1 or not s.success:
            reach = abs(float(s.t[-1]))
            limit = min(limit, 0.95 * reach - STENCIL_PAD)
        sols.append(s)
    if limit < rho:
        msg = f"profile breaks down at |t| = {limit + STENCIL_PAD:.6g} < rho = {rho:g}"
        if not truncate:
            raise ProfileBreakdownError(msg, max(limit, 0.0))
        log.warning("%s; truncating", msg)
        rho = max(limit, 0.0)
    pos, neg = sols
    t_nodes = np.concatenate([neg.t[::-1][:-1], pos.t])
    y_nodes = np.concatenate([neg.y[:, ::-1][:, :-1], pos.y], axis=1)
    keep = np.abs(t_nodes) <= rho + STENCIL_PAD
    prof = PogorelovProfile(n, a, float(f0), float(df0), float(rho), t_nodes[keep],
                            y_nodes[0, keep], y_nodes[1, keep], 0.0, pos.sol, neg.sol)
    E = prof.energy(prof.f_nodes, prof.df_nodes)
    E0 = prof.energy(f0, df0)
    prof.residual_max = float(np.max(np.abs(E - E0)) / max(1.0, abs(E0)))
    return prof


class PogorelovField(FieldHandle):
    """u(x', t) = scale |x'|^{2-2/n} f(t) on {|x'| < rx} x {|t| < rho}."""

    analytic = True

    def __init__(self, profile: PogorelovProfile, rx: float = 1.0, scale: float = 1.0):
        n = profile.n
        super().__init__(n, Domain.product(n - 1, 1, rx, profile.rho),
                         singular=SingularSet(n, tuple(range(n - 1))), name=f"pogorelov-n{n}")
        self.profile = profile
        self.alpha = profile.alpha
        self.scale = float(scale)

    def _values(self, X):
        r = np.linalg.norm(X[:, :-1], axis=1)
        return self.scale * r**self.alpha * self.profile(X[:, -1])

    def _analytic_jet(self, X):
        a = self.alpha
        d = self.dim
        xp = X[:, :-1]
        r = np.linalg.norm(xp, axis=1)
        xh = xp / r[:, None]
        f, df, d2f = self.profile.jet(X[:, -1])
        N = X.shape[0]
        s = self.scale
        v = s * r**a * f
        g = np.empty((N, d))
        g[:, :-1] = (s * a * r ** (a - 1) * f)[:, None] * xh
        g[:, -1] = s * r**a * df
        H = np.empty((N, d, d))
        H[:, :-1, :-1] = (s * a * r ** (a - 2) * f)[:, None, None] * (
            np.eye(d - 1) + (a - 2) * np.einsum("ni,nj->nij", xh, xh))
        mixed = (s * a * r ** (a - 1) * df)[:, None] * xh
        H[:, :-1, -1] = mixed
        H[:, -1, :-1] = mixed
        H[:, -1, -1] = s * r**a * d2f
        return v, g, H

    def subgradient(self, x):
        x = np.asarray(x, dtype=float)
        if np.linalg.norm(x[:-1]) < self.r_min:
            return np.zeros(self.dim)
        return super().subgradient(x)


@dataclass(frozen=True)
class ExampleSpec:
    setting: str = "real"
    n: int = 3
    k: int = 1
    family: str = "ode-exact"
    f0: float = 1.0
    df0: float = 0.0
    rho: float = 0.5
    normalize_det: bool = True

    def validate(self):
        if self.setting not in ("real", "complex"):
            raise PreconditionError(f"unknown setting {self.setting!r}")
        if self.family not in ("ode-exact", "power-times-quadratic"):
            raise PreconditionError(f"unknown family {self.family!r}")
        if self.setting == "real":
            if not 0 < self.k < self.n / 2:
                raise PreconditionError(f"real examples need 0 < k < n/2 (n={self.n}, k={self.k})")
            if self.family == "ode-exact" and (self.k != 1 or self.n < 3):
                raise PreconditionError("the ode-exact family needs k = 1 and n >= 3")
        else:
            if not 0 < self.k < self.n:
                raise PreconditionError(f"complex examples need 0 < k < n (n={self.n}, k={self.k})")
            if self.family != "power-times-quadratic":
                raise PreconditionError("complex examples use the power-times-quadratic family")
        return self

    @property
    def beta(self) -> float:
        return 2 - 2 * self.k / self.n


def default_spec(setting: str, n: int, k: int) -> ExampleSpec:
    family = "ode-exact" if setting == "real" and k == 1 and n >= 3 else "power-times-quadratic"
    return ExampleSpec(setting, n, k, family).validate()


def real_convexity_radius(beta: float) -> float:
    """|y| bound below which |x|^beta (1 + |y|^2) is strictly convex."""
    return math.sqrt((beta - 1) / (beta + 1))


def _real_det_factor(beta, dx, dy, s):
    """det D^2 of |x|^beta (1 + |y|^2) at |y| = s (independent of |x|)."""
    tang = ((1 + s * s) * beta) ** (dx - 1) * 2.0 ** (dy - 1)
    block = 2 * beta * (beta - 1) * (1 + s * s) - 4 * beta * beta * s * s
    return tang * block


def build_real_example(spec: ExampleSpec) -> FieldHandle:
    spec.validate()
    if spec.family == "ode-exact":
        return PogorelovField(solve_profile_ode(spec.n, spec.f0, spec.df0, spec.rho))
    b = spec.beta
    dx, dy = spec.n - spec.k, spec.k
    ry = real_convexity_radius(b) / math.sqrt(2)
    scale = 1.0
    if spec.normalize_det:
        s = np.linspace(0, ry, 2001)
        dmin = float(np.min(_real_det_factor(b, dx, dy, s)))
        scale = dmin ** (-1 / spec.n)
    return PowerQuadraticField(b, dx, dy, scale=scale, domain=Domain.product(dx, dy, 1.0, ry),
                               name=f"power-quadratic-real-n{spec.n}-k{spec.k}")


def build_complex_example(spec: ExampleSpec) -> FieldHandle:
    """|z|^{2-2k/n} (1 + |w|^2) on {|z| < 1} x {|w| < 1} in C^{n-k} x C^k.

    Its complex Hessian determinant is g^{m+1} (1 + |w|^2)^{m-1} with
    g = 1 - k/n and m = n - k, independent of |z|; with ``normalize_det`` the
    field is scaled so that the minimum over the domain is 1.
    """
    spec.validate()
    if spec.setting != "complex":
        raise PreconditionError("build_complex_example needs setting='complex'")
    m, k = spec.n - spec.k, spec.k
    scale = 1.0
    if spec.normalize_det:
        g = spec.beta / 2
        scale = (g ** (m + 1)) ** (-1 / spec.n)
    return PowerQuadraticField(spec.beta, 2 * m, 2 * k, scale=scale,
                               domain=Domain.product(2 * m, 2 * k, 1.0, 1.0),
                               complex_split=(m, k),
                               name=f"power-quadratic-complex-n{spec.n}-k{spec.k}")


def build_example(spec: ExampleSpec) -> FieldHandle:
    if spec.setting == "complex":
        return build_complex_example(spec)
    return build_real_example(spec)


def example_power(spec: ExampleSpec) -> tuple:
    """(derived quantity, critical power) used for Sobolev membership."""
    crit = float(critical_exponent(spec.setting, spec.n, spec.k).p_crit)
    quantity = "laplacian" if spec.setting == "real" else "z-block-hessian"
    return quantity, crit


@dataclass
class MembershipResult:
    verdict: str  # "finite" | "divergent" | "inconclusive"
    p: float
    profile: object
    decay: object
    log_fit: object


def sobolev_membership(spec: ExampleSpec, p: float, scheme=None, field=None) -> MembershipResult:
    """Classify whether the example's second derivatives lie in L^p near the singular set."""
    field = field or build_example(spec)
    quantity, _ = example_power(spec)
    scheme = scheme or AnnulusScheme(r_outer=2.0**-4, J=8, budget=200_000)
    prof = dyadic_annulus_profile(field, quantity, p, scheme)
    decay = decay_fit(prof)
    lf = log_divergence_fit(prof)
    return MembershipResult(classify_profile(prof, decay, lf), float(p), prof, decay, lf)
