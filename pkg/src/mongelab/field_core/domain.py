"""Integration/evaluation domains: boxes, balls, annuli and products of balls."""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np
from scipy.special import gamma

from mongelab.errors import DomainError


def ball_volume(d: int, r: float = 1.0) -> float:
    """Volume of the d-dimensional ball of radius r."""
    return float(np.pi ** (d / 2) / gamma(d / 2 + 1) * r**d)


def sphere_area(d: int, r: float = 1.0) -> float:
    """Area of the sphere of radius r in R^d (so ``sphere_area(1) == 2``)."""
    return float(2 * np.pi ** (d / 2) / gamma(d / 2) * r ** (d - 1))


def uniform_directions(rng: np.random.Generator, n: int, d: int) -> np.ndarray:
    g = rng.standard_normal((n, d))
    norms = np.linalg.norm(g, axis=1)
    # A Gaussian vector is exactly zero with probability zero; guard anyway.
    norms[norms == 0] = 1.0
    return g / norms[:, None]


def shell_radii(rng: np.random.Generator, n: int, d: int, a: float, b: float) -> np.ndarray:
    """Radii distributed uniformly in volume on the shell a <= r < b."""
    u = rng.random(n)
    return (a**d + u * (b**d - a**d)) ** (1.0 / d)


@dataclass(frozen=True)
class Domain:
    """A bounded region of R^d.

    ``kind`` is one of ``box``, ``ball``, ``annulus`` or ``product``. Product
    domains are ``{inner_x <= |x| < rx} x {|y| < ry}`` with ``x`` the first
    ``split[0]`` coordinates, centred at ``center``.
    """

    kind: str
    dim: int
    center: tuple
    radius: float = 0.0
    inner: float = 0.0
    lower: tuple = ()
    upper: tuple = ()
    split: tuple = ()
    ry: float = 0.0

    def __post_init__(self):
        if self.kind not in ("box", "ball", "annulus", "product"):
            raise DomainError(f"unknown domain kind {self.kind!r}")
        if len(self.center) != self.dim:
            raise DomainError("center has wrong dimension")
        if self.kind == "box":
            if len(self.lower) != self.dim or len(self.upper) != self.dim:
                raise DomainError("box bounds have wrong dimension")
            if any(hi <= lo for lo, hi in zip(self.lower, self.upper)):
                raise DomainError("box bounds must satisfy lower < upper")
            return
        if self.radius <= 0:
            raise DomainError("radii must be positive")
        if self.inner < 0 or self.inner >= self.radius:
            raise DomainError("inner radius must satisfy 0 <= inner < outer")
        if self.kind == "product":
            if len(self.split) != 2 or sum(self.split) != self.dim or min(self.split) < 1:
                raise DomainError("product domains need a split (dx, dy) with dx + dy = dim")
            if self.ry <= 0:
                raise DomainError("radii must be positive")

    # -- constructors -------------------------------------------------------

    @classmethod
    def box(cls, lower, upper) -> "Domain":
        lower = tuple(float(v) for v in lower)
        upper = tuple(float(v) for v in upper)
        return cls("box", len(lower), tuple(0.0 for _ in lower), lower=lower, upper=upper)

    @classmethod
    def ball(cls, dim: int, radius: float = 1.0, center=None) -> "Domain":
        c = tuple(0.0 for _ in range(dim)) if center is None else tuple(float(v) for v in center)
        return cls("ball", dim, c, radius=float(radius))

    @classmethod
    def annulus(cls, dim: int, inner: float, outer: float, center=None) -> "Domain":
        c = tuple(0.0 for _ in range(dim)) if center is None else tuple(float(v) for v in center)
        return cls("annulus", dim, c, radius=float(outer), inner=float(inner))

    @classmethod
    def product(cls, dx: int, dy: int, rx: float = 1.0, ry: float = 1.0, inner_x: float = 0.0,
                center=None) -> "Domain":
        d = dx + dy
        c = tuple(0.0 for _ in range(d)) if center is None else tuple(float(v) for v in center)
        return cls("product", d, c, radius=float(rx), inner=float(inner_x), split=(dx, dy),
                   ry=float(ry))

    # -- geometry -----------------------------------------------------------

    @property
    def outer_radius(self) -> float:
        """Characteristic size used for relative margins."""
        if self.kind == "box":
            return 0.5 * max(hi - lo for lo, hi in zip(self.lower, self.upper))
        if self.kind == "product":
            return max(self.radius, self.ry)
        return self.radius

    def volume(self) -> float:
        if self.kind == "box":
            return float(np.prod([hi - lo for lo, hi in zip(self.lower, self.upper)]))
        if self.kind == "ball":
            return ball_volume(self.dim, self.radius)
        if self.kind == "annulus":
            return ball_volume(self.dim, self.radius) - ball_volume(self.dim, self.inner)
        dx, dy = self.split
        return (ball_volume(dx, self.radius) - ball_volume(dx, self.inner)) * ball_volume(dy, self.ry)

    def _parts(self, X):
        X = np.atleast_2d(np.asarray(X, dtype=float)) - np.asarray(self.center)
        if self.kind == "product":
            dx = self.split[0]
            return np.linalg.norm(X[:, :dx], axis=1), np.linalg.norm(X[:, dx:], axis=1)
        return X, None

    def boundary_distance(self, X) -> np.ndarray:
        """Signed distance to the boundary, positive inside (exact for box/ball/annulus)."""
        if self.kind == "box":
            X = np.atleast_2d(np.asarray(X, dtype=float))
            lo = np.asarray(self.lower)
            hi = np.asarray(self.upper)
            return np.minimum(X - lo, hi - X).min(axis=1)
        if self.kind in ("ball", "annulus"):
            Xc, _ = self._parts(X)
            r = np.linalg.norm(Xc, axis=1)
            dist = self.radius - r
            if self.kind == "annulus":
                dist = np.minimum(dist, r - self.inner)
            return dist
        rx, ry = self._parts(X)
        dist = np.minimum(self.radius - rx, self.ry - ry)
        if self.inner > 0:
            dist = np.minimum(dist, rx - self.inner)
        return dist

    def contains(self, X) -> np.ndarray:
        return self.boundary_distance(X) > 0

    def sample_uniform(self, rng: np.random.Generator, n: int) -> np.ndarray:
        """Uniform samples (not stratified)."""
        c = np.asarray(self.center)
        if self.kind == "box":
            lo = np.asarray(self.lower)
            hi = np.asarray(self.upper)
            return lo + rng.random((n, self.dim)) * (hi - lo)
        if self.kind in ("ball", "annulus"):
            r = shell_radii(rng, n, self.dim, self.inner, self.radius)
            return c + r[:, None] * uniform_directions(rng, n, self.dim)
        dx, dy = self.split
        rx = shell_radii(rng, n, dx, self.inner, self.radius)
        ry = shell_radii(rng, n, dy, 0.0, self.ry)
        x = rx[:, None] * uniform_directions(rng, n, dx)
        y = ry[:, None] * uniform_directions(rng, n, dy)
        return c + np.hstack([x, y])

    def sample_boundary(self, rng: np.random.Generator, n: int) -> np.ndarray:
        """Samples on the outer boundary, distributed by surface area."""
        c = np.asarray(self.center)
        if self.kind == "box":
            X = self.sample_uniform(rng, n)
            axis = rng.integers(0, self.dim, n)
            side = rng.integers(0, 2, n)
            lo = np.asarray(self.lower)
            hi = np.asarray(self.upper)
            X[np.arange(n), axis] = np.where(side == 0, lo[axis], hi[axis])
            return X
        if self.kind in ("ball", "annulus"):
            return c + self.radius * uniform_directions(rng, n, self.dim)
        dx, dy = self.split
        area_x = sphere_area(dx, self.radius) * ball_volume(dy, self.ry)
        area_y = (ball_volume(dx, self.radius) - ball_volume(dx, self.inner)) * sphere_area(dy, self.ry)
        on_x = rng.random(n) < area_x / (area_x + area_y)
        X = self.sample_uniform(rng, n) - c
        m = int(on_x.sum())
        X[on_x, :dx] = self.radius * uniform_directions(rng, m, dx)
        X[~on_x, dx:] = self.ry * uniform_directions(rng, n - m, dy)
        return c + X

    def as_dict(self) -> dict:
        return {"kind": self.kind, "dim": self.dim, "center": list(self.center),
                "radius": self.radius, "inner": self.inner, "lower": list(self.lower),
                "upper": list(self.upper), "split": list(self.split), "ry": self.ry}
