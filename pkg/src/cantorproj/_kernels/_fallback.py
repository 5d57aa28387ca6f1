"""Pure numpy implementations of the hot kernels.

Conventions shared with the compiled core:

* squares are closed, axis-aligned, lower-left corners ``(x0[i], y0[i])`` and a
  common side length; repeated squares are simply repeated rows;
* a line is ``nx * x + ny * y = rho`` with a unit normal (nx, ny) whose
  axis-aligned cases are exact zeros;
* a strip is the open slab ``lo < nx * x + ny * y < hi``.
"""
from __future__ import annotations

import numpy as np

_CHUNK = 1 << 22


def _proj_bounds(x0, y0, side, nx, ny):
    base = nx * x0 + ny * y0
    lo = base + side * (min(nx, 0.0) + min(ny, 0.0))
    hi = base + side * (max(nx, 0.0) + max(ny, 0.0))
    return lo, hi


def line_lengths(x0, y0, side, nx, ny, rho, tol=1e-12):
    """Per-square length of the line inside each closed square."""
    x0 = np.asarray(x0, dtype=np.float64)
    y0 = np.asarray(y0, dtype=np.float64)
    px, py = rho * nx, rho * ny
    dx, dy = -ny, nx
    t_lo = np.full(x0.shape, -np.inf)
    t_hi = np.full(x0.shape, np.inf)
    ok = np.ones(x0.shape, dtype=bool)
    for d, p, c0 in ((dx, px, x0), (dy, py, y0)):
        if d == 0.0:
            ok &= (p >= c0 - tol) & (p <= c0 + side + tol)
        else:
            a = (c0 - p) / d
            b = (c0 + side - p) / d
            t_lo = np.maximum(t_lo, np.minimum(a, b))
            t_hi = np.minimum(t_hi, np.maximum(a, b))
    out = np.where(ok, t_hi - t_lo, 0.0)
    return np.maximum(out, 0.0)


def line_length_sums(x0, y0, side, nx, ny, rho, tol=1e-12):
    """Sum over squares of the line length inside each square, for every line."""
    nx = np.atleast_1d(np.asarray(nx, dtype=np.float64))
    ny = np.atleast_1d(np.asarray(ny, dtype=np.float64))
    rho = np.atleast_1d(np.asarray(rho, dtype=np.float64))
    out = np.empty(len(rho))
    for k in range(len(rho)):
        out[k] = line_lengths(x0, y0, side, nx[k], ny[k], rho[k], tol).sum()
    return out


def line_length_sums_grid(ix, iy, denom, nx, ny, rho, tol=1e-12):
    """Same contract as `line_length_sums` for squares given on a 1/denom grid."""
    ix = np.asarray(ix, dtype=np.float64)
    iy = np.asarray(iy, dtype=np.float64)
    return line_length_sums(ix / denom, iy / denom, 1.0 / denom, nx, ny, rho, tol)


def strip_hit_counts(x0, y0, side, nx, ny, lo, hi):
    """Number of closed squares meeting each open slab."""
    x0 = np.asarray(x0, dtype=np.float64)
    y0 = np.asarray(y0, dtype=np.float64)
    nx = np.atleast_1d(np.asarray(nx, dtype=np.float64))
    ny = np.atleast_1d(np.asarray(ny, dtype=np.float64))
    lo = np.atleast_1d(np.asarray(lo, dtype=np.float64))
    hi = np.atleast_1d(np.asarray(hi, dtype=np.float64))
    out = np.zeros(len(lo), dtype=np.int64)
    if len(x0) == 0:
        return out
    step = max(1, _CHUNK // len(x0))
    for s in range(0, len(lo), step):
        e = min(s + step, len(lo))
        cx, cy = nx[s:e, None], ny[s:e, None]
        base = cx * x0[None, :] + cy * y0[None, :]
        pmin = base + side * (np.minimum(cx, 0.0) + np.minimum(cy, 0.0))
        pmax = base + side * (np.maximum(cx, 0.0) + np.maximum(cy, 0.0))
        hit = (pmax > lo[s:e, None]) & (pmin < hi[s:e, None])
        out[s:e] = hit.sum(axis=1)
    return out


def _sum_uniform_cdf(z, a, b):
    """P(a*U + b*V <= z) for independent U, V ~ U[0, 1] and 0 <= a <= b, b > 0."""
    z = np.clip(z, 0.0, a + b)
    out = np.empty_like(z)
    if a == 0.0:
        return np.clip(z / b, 0.0, 1.0)
    low = z <= a
    mid = (z > a) & (z <= b)
    top = z > b
    out[low] = z[low] ** 2 / (2 * a * b)
    out[mid] = (2 * z[mid] - a) / (2 * b)
    out[top] = 1.0 - (a + b - z[top]) ** 2 / (2 * a * b)
    return out


def strip_clip_areas(x0, y0, side, nx, ny, lo, hi):
    """Sum over squares of area(square ∩ slab) for every slab.

    Uses the closed-form distribution of the projection of a uniform point in
    a square (a trapezoid), so it is independent of polygon clipping.
    """
    x0 = np.asarray(x0, dtype=np.float64)
    y0 = np.asarray(y0, dtype=np.float64)
    nx = np.atleast_1d(np.asarray(nx, dtype=np.float64))
    ny = np.atleast_1d(np.asarray(ny, dtype=np.float64))
    lo = np.atleast_1d(np.asarray(lo, dtype=np.float64))
    hi = np.atleast_1d(np.asarray(hi, dtype=np.float64))
    out = np.zeros(len(lo))
    for k in range(len(lo)):
        a, b = sorted((side * abs(nx[k]), side * abs(ny[k])))
        pmin, _ = _proj_bounds(x0, y0, side, nx[k], ny[k])
        frac = _sum_uniform_cdf(hi[k] - pmin, a, b) - _sum_uniform_cdf(lo[k] - pmin, a, b)
        out[k] = side * side * np.maximum(frac, 0.0).sum()
    return out


def strip_hit_counts_grid(ix, iy, denom, nx, ny, lo, hi):
    """Same contract as `strip_hit_counts` for squares given on a 1/denom grid."""
    ix = np.asarray(ix, dtype=np.float64)
    iy = np.asarray(iy, dtype=np.float64)
    return strip_hit_counts(ix / denom, iy / denom, 1.0 / denom, nx, ny, lo, hi)
