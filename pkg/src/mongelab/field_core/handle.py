"""Scalar field handles and second-order jet containers."""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from mongelab.field_core.domain import Domain

R_MIN = 1e-5


@dataclass(frozen=True)
class SingularSet:
    """The affine subspace ``{x_i = 0 for i in zero_dims}`` (shifted by ``offset``)."""

    ambient: int
    zero_dims: tuple
    offset: tuple = ()

    @property
    def dimension(self) -> int:
        return self.ambient - len(self.zero_dims)

    def distance(self, X) -> np.ndarray:
        X = np.atleast_2d(np.asarray(X, dtype=float))
        if self.offset:
            X = X - np.asarray(self.offset)
        return np.linalg.norm(X[:, list(self.zero_dims)], axis=1)

    def project(self, X) -> np.ndarray:
        X = np.array(np.atleast_2d(X), dtype=float)
        off = np.asarray(self.offset) if self.offset else np.zeros(self.ambient)
        X[:, list(self.zero_dims)] = off[list(self.zero_dims)]
        return X


@dataclass
class Jet2:
    """Value, gradient and Hessian at a batch of points (leading axis = point)."""

    value: np.ndarray
    gradient: np.ndarray
    hessian: np.ndarray

    @property
    def laplacian(self) -> np.ndarray:
        return np.trace(self.hessian, axis1=-2, axis2=-1)

    def squeeze(self) -> "Jet2":
        if np.ndim(self.value) == 1 and self.value.shape[0] == 1:
            return Jet2(self.value[0], self.gradient[0], self.hessian[0])
        return self


@dataclass
class ComplexJet:
    value: np.ndarray
    complex_hessian: np.ndarray  # (N, n, n) Hermitian, entries u_{z_j zbar_k}
    z_hessian: np.ndarray        # (N, 2(n-k), 2(n-k)) real Hessian of the z-block


class FieldHandle:
    """An evaluable scalar field on a domain.

    Subclasses implement ``_values`` (vectorised, ``(N, d) -> (N,)``) and,
    for built-in families, ``_analytic_jet`` returning ``(value, grad, hess)``.
    ``complex_split`` is ``(n - k, k)`` in complex dimensions; complex fields
    store coordinates as interleaved pairs ``(Re z_1, Im z_1, Re z_2, ...)``
    with the ``z`` block first.
    """

    analytic = False

    def __init__(self, dim: int, domain: Domain, singular: SingularSet | None = None,
                 complex_split: tuple | None = None, r_min: float = R_MIN, name: str = ""):
        if domain.dim != dim:
            raise ValueError("domain dimension does not match field dimension")
        if complex_split is not None and sum(complex_split) * 2 != dim:
            raise ValueError("complex split does not match the real dimension")
        self.dim = dim
        self.domain = domain
        self.singular = singular
        self.complex_split = complex_split
        self.r_min = r_min
        self.name = name or type(self).__name__

    def __repr__(self):
        return f"<{self.name} d={self.dim} domain={self.domain.kind}>"

    @property
    def is_complex(self) -> bool:
        return self.complex_split is not None

    def __call__(self, X) -> np.ndarray:
        X = np.atleast_2d(np.asarray(X, dtype=float))
        return self._values(X)

    def _values(self, X):
        raise NotImplementedError

    def _analytic_jet(self, X):
        raise NotImplementedError(f"{self.name} has no analytic jets")

    def singular_distance(self, X) -> np.ndarray:
        X = np.atleast_2d(np.asarray(X, dtype=float))
        if self.singular is None:
            return np.full(X.shape[0], np.inf)
        return self.singular.distance(X)

    def subgradient(self, x) -> np.ndarray:
        """A subgradient at ``x``; the gradient wherever the field is differentiable."""
        x = np.asarray(x, dtype=float)
        if self.analytic and self.singular_distance(x[None])[0] >= self.r_min:
            return self._analytic_jet(x[None])[1][0]
        h = 1e-7 * max(1.0, float(np.abs(x).max()))
        E = np.eye(self.dim) * h
        fp = self(x + E)
        fm = self(x - E)
        return (fp - fm) / (2 * h)


class CallableField(FieldHandle):
    """Wraps a vectorised callable; jets are finite-difference only."""

    def __init__(self, func, dim: int, domain: Domain | None = None, **kwargs):
        super().__init__(dim, domain or Domain.ball(dim, 1.0), **kwargs)
        self.func = func

    def _values(self, X):
        return np.asarray(self.func(X), dtype=float)
