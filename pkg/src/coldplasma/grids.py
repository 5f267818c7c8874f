"""Uniform node grids over a domain and nodal fields on them."""
from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

OFFSET_FACTOR = math.sqrt(2.0) / 137.0


@dataclass(frozen=True)
class Grid:
    """Nodes x0 + i h, y0 + j h with a mask of nodes in the closed domain.

    The origin is shifted by h * sqrt(2)/137 in both axes so that no node sits
    exactly on the sonic curve of the built-in coefficients.
    """
    x0: float
    y0: float
    h: float
    nx: int
    ny: int
    inside: np.ndarray

    @property
    def xs(self):
        return self.x0 + self.h * np.arange(self.nx)

    @property
    def ys(self):
        return self.y0 + self.h * np.arange(self.ny)

    def mesh(self):
        return np.meshgrid(self.xs, self.ys, indexing="ij")

    def points(self, mask=None):
        X, Y = self.mesh()
        m = self.inside if mask is None else mask
        return np.stack([X[m], Y[m]], axis=1)

    def sample(self, f, mask=None):
        """Values of f(x, y) at the nodes, zero outside ``mask`` (default: inside)."""
        X, Y = self.mesh()
        m = self.inside if mask is None else mask
        out = np.zeros((self.nx, self.ny))
        out[m] = np.asarray(f(X[m], Y[m]), dtype=float)
        return out

    def source(self, values):
        """(x0, y0, h, values) tuple consumed by the tracing kernel."""
        return (self.x0, self.y0, self.h, values)

    def interpolate(self, values, x, y):
        from .kernels.numpy_impl import _bilinear
        return _bilinear(np.asarray(x, float), np.asarray(y, float), self.x0, self.y0,
                         self.h, np.asarray(values, float))


def make_grid(dom, h, pad=2, offset_factor=OFFSET_FACTOR):
    xmin, xmax, ymin, ymax = dom.bbox
    off = h * offset_factor
    x0 = xmin - pad * h + off
    y0 = ymin - pad * h + off
    nx = int(math.floor((xmax + pad * h - x0) / h)) + 1
    ny = int(math.floor((ymax + pad * h - y0) / h)) + 1
    X, Y = np.meshgrid(x0 + h * np.arange(nx), y0 + h * np.arange(ny), indexing="ij")
    inside = dom.contains(np.stack([X.ravel(), Y.ravel()], axis=1)).reshape(nx, ny)
    return Grid(float(x0), float(y0), float(h), nx, ny, inside)


@dataclass
class Field:
    """Nodal values on a grid; ``mask`` marks the nodes that carry values."""
    grid: Grid
    values: np.ndarray
    mask: np.ndarray

    def rows(self):
        """(x, y, value) over masked nodes, rows of constant y, x increasing."""
        xs, ys = self.grid.xs, self.grid.ys
        out = []
        for j in range(self.grid.ny):
            for i in np.nonzero(self.mask[:, j])[0]:
                out.append((float(xs[i]), float(ys[j]), float(self.values[i, j])))
        return out

    def at(self, x, y):
        return self.grid.interpolate(np.where(self.mask, self.values, 0.0), x, y)
