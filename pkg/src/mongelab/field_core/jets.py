"""Jets (value, gradient, Hessian), complex Hessians and determinant certificates."""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from mongelab.errors import NonFiniteEvaluation, PointInExcisionTube, PointOutsideDomain
from mongelab.field_core.handle import ComplexJet, FieldHandle, Jet2

SYM_TOL = {"analytic": 1e-9, "fd": 1e-4}
EIG_TOL = {"analytic": 1e-8, "fd": 1e-3}


def fd_step(dist: np.ndarray) -> np.ndarray:
    """Central-difference step: 1e-2 * distance to the singular set, clipped to [1e-4, 1e-2]."""
    return np.clip(1e-2 * np.asarray(dist, dtype=float), 1e-4, 1e-2)


def _fd_jet(field: FieldHandle, X: np.ndarray, h: np.ndarray):
    N, d = X.shape
    f = field._values
    f0 = f(X)
    grad = np.empty((N, d))
    hess = np.empty((N, d, d))
    hh = h[:, None]
    E = np.eye(d)
    fp = [f(X + hh * E[i]) for i in range(d)]
    fm = [f(X - hh * E[i]) for i in range(d)]
    for i in range(d):
        grad[:, i] = (fp[i] - fm[i]) / (2 * h)
        hess[:, i, i] = (fp[i] - 2 * f0 + fm[i]) / h**2
    for i in range(d):
        for j in range(i + 1, d):
            ei = hh * E[i]
            ej = hh * E[j]
            v = (f(X + ei + ej) - f(X + ei - ej) - f(X - ei + ej) + f(X - ei - ej)) / (4 * h**2)
            hess[:, i, j] = v
            hess[:, j, i] = v
    return f0, grad, hess


def evaluate_jet(field: FieldHandle, points, mode: str = "analytic", richardson: bool = True,
                 step=None, check: bool = True) -> Jet2:
    """Value, gradient and Hessian of ``field`` at ``points``.

    ``mode`` is ``"analytic"`` (built-in families only) or ``"fd"``. In
    finite-difference mode the step defaults to ``fd_step`` of the distance
    to the singular set and one level of Richardson extrapolation is applied
    unless ``richardson=False``. A single point returns an unbatched jet.
    """
    P = np.asarray(points, dtype=float)
    single = P.ndim == 1
    X = np.atleast_2d(P)
    if X.shape[1] != field.dim:
        raise PointOutsideDomain(f"points have dimension {X.shape[1]}, field has {field.dim}")
    dist = field.singular_distance(X)
    if check:
        if not np.all(field.domain.contains(X)):
            raise PointOutsideDomain(f"{int((~field.domain.contains(X)).sum())} point(s) outside the domain")
        if np.any(dist < field.r_min):
            raise PointInExcisionTube(f"point(s) within {field.r_min:g} of the singular set")
    if mode == "analytic":
        if not field.analytic:
            raise NotImplementedError(f"{field.name} has no analytic jets; use mode='fd'")
        v, g, H = field._analytic_jet(X)
    elif mode == "fd":
        if hasattr(field, "_grid_jet"):
            v, g, H = field._grid_jet(X)
        else:
            h = np.full(X.shape[0], float(step)) if step is not None else fd_step(dist)
            v, g, H = _fd_jet(field, X, h)
            if richardson:
                _, g2, H2 = _fd_jet(field, X, h / 2)
                g = (4 * g2 - g) / 3
                H = (4 * H2 - H) / 3
    else:
        raise ValueError(f"unknown derivative mode {mode!r}")
    if not (np.all(np.isfinite(v)) and np.all(np.isfinite(g)) and np.all(np.isfinite(H))):
        raise NonFiniteEvaluation(f"non-finite jet for {field.name}")
    asym = np.linalg.norm(H - np.swapaxes(H, 1, 2), axis=(1, 2))
    scale = np.maximum(1.0, np.linalg.norm(H, axis=(1, 2)))
    if np.any(asym > SYM_TOL[mode] * scale):
        raise NonFiniteEvaluation("Hessian failed the symmetry tolerance")
    H = 0.5 * (H + np.swapaxes(H, 1, 2))
    jet = Jet2(np.asarray(v, dtype=float), g, H)
    return jet.squeeze() if single else jet


def complex_hessian_from_real(H: np.ndarray) -> np.ndarray:
    """u_{z_j zbar_k} = 1/4 [(d_xj d_xk + d_yj d_yk) u + i (d_xj d_yk - d_yj d_xk) u].

    ``H`` has shape (..., 2n, 2n) with interleaved coordinates (x_1, y_1, ...).
    """
    Hxx = H[..., 0::2, 0::2]
    Hyy = H[..., 1::2, 1::2]
    Hxy = H[..., 0::2, 1::2]
    Hyx = H[..., 1::2, 0::2]
    return 0.25 * ((Hxx + Hyy) + 1j * (Hxy - Hyx))


def complex_jet(field: FieldHandle, points, mode: str | None = None) -> ComplexJet:
    if field.dim % 2:
        raise ValueError("complex jets need an even ambient dimension")
    split = field.complex_split or (field.dim // 2, 0)
    mode = mode or ("analytic" if field.analytic else "fd")
    P = np.asarray(points, dtype=float)
    jet = evaluate_jet(field, np.atleast_2d(P), mode=mode)
    C = complex_hessian_from_real(jet.hessian)
    mz = 2 * split[0]
    cj = ComplexJet(jet.value, C, jet.hessian[:, :mz, :mz])
    if P.ndim == 1:
        return ComplexJet(cj.value[0], cj.complex_hessian[0], cj.z_hessian[0])
    return cj


@dataclass
class DeterminantCertificate:
    det: np.ndarray
    min_eig: np.ndarray
    tol_eig: float

    @property
    def certified(self) -> np.ndarray:
        """Convex (real) / plurisubharmonic (complex) at each point."""
        return self.min_eig >= -self.tol_eig

    @property
    def all_certified(self) -> bool:
        return bool(np.all(self.certified))


def determinant_check(field: FieldHandle, points, setting: str = "real",
                      mode: str | None = None) -> DeterminantCertificate:
    mode = mode or ("analytic" if field.analytic else "fd")
    X = np.atleast_2d(np.asarray(points, dtype=float))
    if setting == "real":
        H = evaluate_jet(field, X, mode=mode).hessian
        eig = np.linalg.eigvalsh(H)
        det = np.linalg.det(H)
    elif setting == "complex":
        C = complex_jet(field, X, mode=mode).complex_hessian
        eig = np.linalg.eigvalsh(C)
        det = np.real(np.linalg.det(C))
    else:
        raise ValueError(f"unknown setting {setting!r}")
    return DeterminantCertificate(det, eig[:, 0], EIG_TOL[mode])


# Derived quantities used by the quadrature layer ---------------------------

def laplacian(jet: Jet2, field: FieldHandle | None = None) -> np.ndarray:
    return jet.laplacian


def hessian_frobenius(jet: Jet2, field: FieldHandle | None = None) -> np.ndarray:
    return np.linalg.norm(jet.hessian, axis=(-2, -1))


def z_block_hessian(jet: Jet2, field: FieldHandle | None = None) -> np.ndarray:
    if field is None or field.complex_split is None:
        raise ValueError("z-block Hessian needs a complex field")
    mz = 2 * field.complex_split[0]
    return np.linalg.norm(jet.hessian[..., :mz, :mz], axis=(-2, -1))


DERIVED_QUANTITIES = {
    "laplacian": laplacian,
    "hessian-frobenius": hessian_frobenius,
    "z-block-hessian": z_block_hessian,
}
