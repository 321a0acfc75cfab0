"""Built-in analytic field families."""

from __future__ import annotations

import numpy as np

from mongelab.field_core.domain import Domain
from mongelab.field_core.handle import FieldHandle, SingularSet


class QuadraticField(FieldHandle):
    """u(x) = 1/2 x^T A x + b.x + c."""

    analytic = True

    def __init__(self, A, b=None, c: float = 0.0, domain: Domain | None = None, **kwargs):
        A = np.atleast_2d(np.asarray(A, dtype=float))
        d = A.shape[0]
        super().__init__(d, domain or Domain.ball(d, 1.0), **kwargs)
        self.A = 0.5 * (A + A.T)
        self.b = np.zeros(d) if b is None else np.asarray(b, dtype=float)
        self.c = float(c)

    def _values(self, X):
        return 0.5 * np.einsum("ni,ij,nj->n", X, self.A, X) + X @ self.b + self.c

    def _analytic_jet(self, X):
        g = X @ self.A + self.b
        H = np.broadcast_to(self.A, (X.shape[0],) + self.A.shape).copy()
        return self._values(X), g, H

    def subgradient(self, x):
        return np.asarray(x, dtype=float) @ self.A + self.b


def paraboloid(d: int, domain: Domain | None = None) -> QuadraticField:
    """|x|^2 / 2, the unit-determinant paraboloid."""
    return QuadraticField(np.eye(d), domain=domain, name="paraboloid")


class RadialPowerField(FieldHandle):
    """u(x) = scale * |x - center|^q, singular (for q < 2) at the centre."""

    analytic = True

    def __init__(self, q: float, dim: int, scale: float = 1.0, domain: Domain | None = None,
                 **kwargs):
        super().__init__(dim, domain or Domain.ball(dim, 1.0),
                         singular=SingularSet(dim, tuple(range(dim))), **kwargs)
        self.q = float(q)
        self.scale = float(scale)

    def _values(self, X):
        return self.scale * np.linalg.norm(X, axis=1) ** self.q

    def _analytic_jet(self, X):
        q = self.q
        r = np.linalg.norm(X, axis=1)
        xh = X / r[:, None]
        v = self.scale * r**q
        g = self.scale * q * r[:, None] ** (q - 1) * xh
        I = np.eye(self.dim)
        H = (self.scale * q * r ** (q - 2))[:, None, None] * (
            I + (q - 2) * np.einsum("ni,nj->nij", xh, xh))
        return v, g, H

    def subgradient(self, x):
        x = np.asarray(x, dtype=float)
        r = np.linalg.norm(x)
        if r == 0:
            return np.zeros(self.dim)
        return self.scale * self.q * r ** (self.q - 1) * x / r


class PowerQuadraticField(FieldHandle):
    """u(x, y) = scale * |x|^beta * (1 + |y|^2), x in R^dx (first), y in R^dy.

    Used both for the real k-dimensional families (dx = n - k, dy = k) and,
    with dx = 2(n - k), dy = 2k, for the complex families with the z block
    first.
    """

    analytic = True

    def __init__(self, beta: float, dx: int, dy: int, scale: float = 1.0,
                 domain: Domain | None = None, **kwargs):
        d = dx + dy
        super().__init__(d, domain or Domain.product(dx, dy, 1.0, 1.0),
                         singular=SingularSet(d, tuple(range(dx))), **kwargs)
        self.beta = float(beta)
        self.dx = dx
        self.dy = dy
        self.scale = float(scale)

    def _values(self, X):
        x = X[:, :self.dx]
        y = X[:, self.dx:]
        return self.scale * np.linalg.norm(x, axis=1) ** self.beta * (1 + (y * y).sum(axis=1))

    def _analytic_jet(self, X):
        b = self.beta
        dx = self.dx
        x = X[:, :dx]
        y = X[:, dx:]
        r = np.linalg.norm(x, axis=1)
        xh = x / r[:, None]
        s2 = (y * y).sum(axis=1)
        lam = self.scale
        v = lam * r**b * (1 + s2)
        N = X.shape[0]
        g = np.empty((N, self.dim))
        g[:, :dx] = (lam * b * r ** (b - 1) * (1 + s2))[:, None] * xh
        g[:, dx:] = (2 * lam * r**b)[:, None] * y
        H = np.zeros((N, self.dim, self.dim))
        H[:, :dx, :dx] = (lam * (1 + s2) * b * r ** (b - 2))[:, None, None] * (
            np.eye(dx) + (b - 2) * np.einsum("ni,nj->nij", xh, xh))
        Hxy = (2 * lam * b * r ** (b - 1))[:, None, None] * np.einsum("ni,nj->nij", xh, y)
        H[:, :dx, dx:] = Hxy
        H[:, dx:, :dx] = np.swapaxes(Hxy, 1, 2)
        H[:, dx:, dx:] = (2 * lam * r**b)[:, None, None] * np.eye(self.dy)
        return v, g, H

    def subgradient(self, x):
        x = np.asarray(x, dtype=float)
        if np.linalg.norm(x[:self.dx]) == 0 and self.beta >= 1:
            return np.zeros(self.dim)
        return super().subgradient(x)


class RescaledField(FieldHandle):
    """w_r(x) = r^{-q} w(S_r x), where S_r multiplies the ``scaled_dims`` by r.

    With all coordinates scaled this is the real rescaling that fixes a
    point singularity; scaling only the z block gives the complex u_r.
    """

    def __init__(self, parent: FieldHandle, r: float, q: float, scaled_dims=None):
        self.parent = parent
        self.r = float(r)
        self.q = float(q)
        d = parent.dim
        self.scaled_dims = tuple(range(d)) if scaled_dims is None else tuple(scaled_dims)
        self._s = np.ones(d)
        self._s[list(self.scaled_dims)] = self.r
        pd = parent.domain
        if pd.kind == "product":
            dx = pd.split[0]
            if set(self.scaled_dims) == set(range(dx)):
                dom = Domain.product(dx, pd.split[1], pd.radius / r, pd.ry, pd.inner / r)
            else:
                dom = Domain.product(dx, pd.split[1], pd.radius / r, pd.ry / r, pd.inner / r)
        elif pd.kind in ("ball", "annulus"):
            dom = Domain(pd.kind, d, tuple(np.asarray(pd.center) / r), radius=pd.radius / r,
                         inner=pd.inner / r)
        else:
            dom = Domain.box(np.asarray(pd.lower) / self._s, np.asarray(pd.upper) / self._s)
        super().__init__(d, dom, singular=parent.singular, complex_split=parent.complex_split,
                         r_min=parent.r_min / r, name=f"{parent.name}@r={r:g}")
        self.analytic = parent.analytic

    def _values(self, X):
        return self.r ** (-self.q) * self.parent._values(X * self._s)

    def _analytic_jet(self, X):
        v, g, H = self.parent._analytic_jet(X * self._s)
        f = self.r ** (-self.q)
        return f * v, f * g * self._s, f * H * np.outer(self._s, self._s)
