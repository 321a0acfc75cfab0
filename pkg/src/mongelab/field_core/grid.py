"""Grid-sampled fields and their plain-text file format.

Format::

    # mongelab grid-field v1
    dim 3
    counts 11 11 11
    bounds -1 1 -1 1 -1 1
    split 2 1
    values
    0.123
    ...

``split`` is optional. Values are row-major (last axis fastest), one per line.
"""

from __future__ import annotations

from pathlib import Path

import numpy as np
from scipy.interpolate import RegularGridInterpolator

from mongelab.errors import MongeLabError
from mongelab.field_core.domain import Domain
from mongelab.field_core.handle import FieldHandle

HEADER = "# mongelab grid-field v1"


class GridField(FieldHandle):
    """Multilinear interpolation of grid values.

    Derivatives are differenced on the grid itself (second-order central
    differences, one-sided at the edges) and those derivative arrays are then
    interpolated; the interpolant is never differentiated.
    """

    def __init__(self, axes, values, split=None, **kwargs):
        self.axes = [np.asarray(a, dtype=float) for a in axes]
        self.values_grid = np.asarray(values, dtype=float)
        if self.values_grid.shape != tuple(len(a) for a in self.axes):
            raise ValueError("values shape does not match the axes")
        d = len(self.axes)
        dom = Domain.box([a[0] for a in self.axes], [a[-1] for a in self.axes])
        super().__init__(d, dom, **kwargs)
        self.split = tuple(split) if split else None
        self._interp = RegularGridInterpolator(self.axes, self.values_grid)
        grads = np.gradient(self.values_grid, *self.axes, edge_order=2)
        if d == 1:
            grads = [grads]
        self._grad_interp = [RegularGridInterpolator(self.axes, g) for g in grads]
        self._hess_interp = {}
        for i in range(d):
            second = np.gradient(grads[i], *self.axes, edge_order=2)
            if d == 1:
                second = [second]
            for j in range(i, d):
                self._hess_interp[i, j] = RegularGridInterpolator(self.axes, second[j])

    def _clip(self, X):
        lo = np.array([a[0] for a in self.axes])
        hi = np.array([a[-1] for a in self.axes])
        return np.clip(X, lo, hi)

    def _values(self, X):
        return self._interp(self._clip(X))

    def _grid_jet(self, X):
        Xc = self._clip(X)
        d = self.dim
        g = np.stack([gi(Xc) for gi in self._grad_interp], axis=1)
        H = np.empty((X.shape[0], d, d))
        for (i, j), f in self._hess_interp.items():
            H[:, i, j] = f(Xc)
            if i != j:
                H[:, j, i] = H[:, i, j]
        return self._interp(Xc), g, H

    @classmethod
    def from_function(cls, func, bounds, counts, split=None, **kwargs) -> "GridField":
        axes = [np.linspace(lo, hi, c) for (lo, hi), c in zip(bounds, counts)]
        mesh = np.meshgrid(*axes, indexing="ij")
        pts = np.stack([m.ravel() for m in mesh], axis=1)
        vals = np.asarray(func(pts), dtype=float).reshape(mesh[0].shape)
        return cls(axes, vals, split=split, **kwargs)


def format_grid(axes, values, split=None) -> str:
    values = np.asarray(values, dtype=float)
    lines = [HEADER, f"dim {len(axes)}", "counts " + " ".join(str(len(a)) for a in axes),
             "bounds " + " ".join(f"{a[0]!r} {a[-1]!r}" for a in
                                  [(float(ax[0]), float(ax[-1])) for ax in axes])]
    if split:
        lines.append(f"split {split[0]} {split[1]}")
    lines.append("values")
    lines.extend(repr(float(v)) for v in values.ravel(order="C"))
    return "\n".join(lines) + "\n"


def write_grid(path, axes, values, split=None) -> Path:
    path = Path(path)
    path.write_text(format_grid(axes, values, split))
    return path


def parse_grid(text: str):
    """Return ``(axes, values, split)`` from the text format."""
    lines = [ln.strip() for ln in text.splitlines()]
    if not lines or lines[0] != HEADER:
        raise MongeLabError("missing grid-field header")
    meta = {}
    i = 1
    while i < len(lines) and lines[i] != "values":
        if lines[i]:
            key, *rest = lines[i].split()
            meta[key] = rest
        i += 1
    if i == len(lines):
        raise MongeLabError("missing 'values' section")
    try:
        d = int(meta["dim"][0])
        counts = [int(c) for c in meta["counts"]]
        b = [float(v) for v in meta["bounds"]]
    except (KeyError, IndexError, ValueError) as exc:
        raise MongeLabError(f"malformed grid header: {exc}") from exc
    if len(counts) != d or len(b) != 2 * d:
        raise MongeLabError("header dimensions are inconsistent")
    split = tuple(int(s) for s in meta["split"]) if "split" in meta else None
    vals = np.array([float(v) for v in lines[i + 1:] if v])
    if vals.size != int(np.prod(counts)):
        raise MongeLabError(f"expected {int(np.prod(counts))} values, found {vals.size}")
    axes = [np.linspace(b[2 * j], b[2 * j + 1], counts[j]) for j in range(d)]
    return axes, vals.reshape(counts), split


def read_grid(path, **kwargs) -> GridField:
    axes, vals, split = parse_grid(Path(path).read_text())
    return GridField(axes, vals, split=split, **kwargs)
