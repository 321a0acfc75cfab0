"""Minimum-volume enclosing ellipsoids (Khachiyan) and John normalization."""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np
from scipy.spatial import ConvexHull

from mongelab.errors import DegenerateCloudError

FLATNESS = 1e-8


@dataclass
class EllipsoidApprox:
    """{x : (x - c)^T A (x - c) <= 1} encloses the cloud; ``enclosed`` times it lies in the hull."""

    center: np.ndarray
    shape: np.ndarray
    enclosing: float
    enclosed: float
    iterations: int

    @property
    def axes(self) -> np.ndarray:
        """Semi-axis lengths, descending."""
        return np.sort(1 / np.sqrt(np.linalg.eigvalsh(self.shape)))[::-1]

    def normalize(self, X) -> np.ndarray:
        """Affine map taking the ellipsoid to the unit ball."""
        w, V = np.linalg.eigh(self.shape)
        root = V @ np.diag(np.sqrt(w)) @ V.T
        return (np.atleast_2d(X) - self.center) @ root.T


def _khachiyan(P: np.ndarray, tol: float, max_iter: int):
    N, d = P.shape
    Q = np.hstack([P, np.ones((N, 1))]).T
    wts = np.full(N, 1.0 / N)
    it = 0
    for it in range(1, max_iter + 1):
        X = (Q * wts) @ Q.T
        M = np.einsum("ij,ji->i", Q.T, np.linalg.solve(X, Q))
        j = int(np.argmax(M))
        step = (M[j] - d - 1) / ((d + 1) * (M[j] - 1))
        new = (1 - step) * wts
        new[j] += step
        change = np.linalg.norm(new - wts)
        wts = new
        if change < tol:
            break
    c = P.T @ wts
    cov = (P.T * wts) @ P - np.outer(c, c)
    A = np.linalg.inv(cov) / d
    # rescale so every point is enclosed exactly
    r = np.einsum("ni,ij,nj->n", P - c, A, P - c).max()
    return c, A / r, it


def john_ellipsoid(cloud, tol: float = 1e-4, max_iter: int = 20_000) -> EllipsoidApprox:
    """Minimum-volume enclosing ellipsoid of a point cloud (or a Section's members)."""
    P = np.asarray(getattr(cloud, "members", cloud), dtype=float)
    N, d = P.shape
    if N < d + 1:
        raise DegenerateCloudError("fewer than d + 1 points", np.eye(d)[-1])
    _, s, Vt = np.linalg.svd(P - P.mean(axis=0), full_matrices=False)
    if s[-1] <= FLATNESS * s[0]:
        raise DegenerateCloudError("cloud is flat", Vt[-1])
    hull = ConvexHull(P)
    V = P[hull.vertices]
    c, A, it = _khachiyan(V, tol, max_iter)
    # largest s with c + s * ellipsoid inside the hull: facet by facet support functions
    normals = hull.equations[:, :-1]
    offs = -hull.equations[:, -1]
    Ainv = np.linalg.inv(A)
    support = np.sqrt(np.einsum("fi,ij,fj->f", normals, Ainv, normals))
    enclosed = float(np.min((offs - normals @ c) / support))
    return EllipsoidApprox(c, A, 1.0, enclosed, it)
