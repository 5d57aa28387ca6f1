# cython: language_level=3, boundscheck=False, wraparound=False, cdivision=True
"""Compiled hot kernels (same contracts as ``_fallback``)."""
import numpy as np
cimport numpy as cnp
from libc.math cimport fabs, floor, fmin, fmax, INFINITY

cnp.import_array()

# dense count grids above this many cells fall back to the per-square loop
cdef long long MAX_GRID_CELLS = 1 << 25


cdef inline double _seg_length(double x0, double y0, double side,
                               double nx, double ny, double rho, double tol) nogil:
    cdef double px = rho * nx, py = rho * ny
    cdef double dx = -ny, dy = nx
    cdef double t_lo = -INFINITY, t_hi = INFINITY, a, b
    if dx == 0.0:
        if px < x0 - tol or px > x0 + side + tol:
            return 0.0
    else:
        a = (x0 - px) / dx
        b = (x0 + side - px) / dx
        t_lo = fmax(t_lo, fmin(a, b))
        t_hi = fmin(t_hi, fmax(a, b))
    if dy == 0.0:
        if py < y0 - tol or py > y0 + side + tol:
            return 0.0
    else:
        a = (y0 - py) / dy
        b = (y0 + side - py) / dy
        t_lo = fmax(t_lo, fmin(a, b))
        t_hi = fmin(t_hi, fmax(a, b))
    if t_hi > t_lo:
        return t_hi - t_lo
    return 0.0


def line_length_sums(x0, y0, double side, nx, ny, rho, double tol=1e-12):
    cdef double[::1] X = np.ascontiguousarray(x0, dtype=np.float64)
    cdef double[::1] Y = np.ascontiguousarray(y0, dtype=np.float64)
    cdef double[::1] NX = np.ascontiguousarray(np.atleast_1d(nx), dtype=np.float64)
    cdef double[::1] NY = np.ascontiguousarray(np.atleast_1d(ny), dtype=np.float64)
    cdef double[::1] RH = np.ascontiguousarray(np.atleast_1d(rho), dtype=np.float64)
    cdef Py_ssize_t L = RH.shape[0], P = X.shape[0], k, i
    out_arr = np.zeros(L, dtype=np.float64)
    cdef double[::1] out = out_arr
    cdef double acc, base, pmin, pmax, cx, cy, r
    cdef double ox, oy, wx, wy
    with nogil:
        for k in range(L):
            cx = NX[k]; cy = NY[k]; r = RH[k]
            ox = side * (fmin(cx, 0.0) + fmin(cy, 0.0))
            wx = side * (fmax(cx, 0.0) + fmax(cy, 0.0))
            acc = 0.0
            for i in range(P):
                base = cx * X[i] + cy * Y[i]
                pmin = base + ox
                pmax = base + wx
                if r < pmin - tol or r > pmax + tol:
                    continue
                acc += _seg_length(X[i], Y[i], side, cx, cy, r, tol)
            out[k] = acc
    return out_arr


cdef double _axis_sum(long long[::1] sums, long long D, double c, double tol) nogil:
    """Closed-square length sum of an axis-parallel line at coordinate c."""
    cdef double t, side = 1.0 / D
    cdef long long k, j
    if c < -tol or c > 1.0 + tol:
        return 0.0
    t = c * D
    k = <long long>floor(t + 0.5)
    if fabs(t - k) <= tol * D:
        # on a grid line: both neighbouring rows are touched
        j = 0
        if k - 1 >= 0 and k - 1 < D:
            j += sums[k - 1]
        if k >= 0 and k < D:
            j += sums[k]
        return j * side
    k = <long long>floor(t)
    if k < 0 or k >= D:
        return 0.0
    return sums[k] * side


cdef double _grid_line(int[:, ::1] cnt, long long D, double a, double b,
                       double rho, bint transpose) nogil:
    """Line a*u + b*v = rho with |b| >= |a| > 0 swept over columns u.

    Cell (i, j) means u in [i/D, (i+1)/D], v in [j/D, (j+1)/D]; with
    ``transpose`` the count grid is indexed cnt[j, i].
    """
    cdef double side = 1.0 / D
    cdef double inv_b = 1.0 / fabs(b)
    cdef double acc = 0.0, ua, ub, va, vb, vlo, vhi, u1, u2, ylo, yhi
    cdef long long i, j, jlo, jhi, c, i0, i1
    cdef double ulo_line, uhi_line
    # columns where the line has v in [0, 1]
    u1 = (rho - b * 0.0) / a
    u2 = (rho - b * 1.0) / a
    ulo_line = fmax(0.0, fmin(u1, u2))
    uhi_line = fmin(1.0, fmax(u1, u2))
    if uhi_line < ulo_line:
        return 0.0
    i0 = <long long>floor(ulo_line * D)
    i1 = <long long>floor(uhi_line * D)
    if i0 < 0:
        i0 = 0
    if i1 > D - 1:
        i1 = D - 1
    for i in range(i0, i1 + 1):
        ua = i * side
        ub = (i + 1) * side
        va = (rho - a * ua) / b
        vb = (rho - a * ub) / b
        vlo = fmin(va, vb)
        vhi = fmax(va, vb)
        if vhi < 0.0 or vlo > 1.0:
            continue
        jlo = <long long>floor(fmax(vlo, 0.0) * D)
        jhi = <long long>floor(fmin(vhi, 1.0) * D)
        if jlo < 0:
            jlo = 0
        if jhi > D - 1:
            jhi = D - 1
        if jlo == jhi:
            c = cnt[jlo, i] if transpose else cnt[i, jlo]
            if c:
                # whole column segment, possibly clipped by v in [0, 1]
                u1 = ua
                u2 = ub
                if vlo < 0.0 or vhi > 1.0:
                    u1 = fmax(ua, fmin((rho - b * 0.0) / a, (rho - b * 1.0) / a))
                    u2 = fmin(ub, fmax((rho - b * 0.0) / a, (rho - b * 1.0) / a))
                if u2 > u1:
                    acc += c * (u2 - u1) * inv_b
            continue
        for j in range(jlo, jhi + 1):
            c = cnt[j, i] if transpose else cnt[i, j]
            if not c:
                continue
            ylo = fmax(vlo, j * side)
            yhi = fmin(vhi, (j + 1) * side)
            if yhi <= ylo:
                continue
            u1 = (rho - b * ylo) / a
            u2 = (rho - b * yhi) / a
            u1, u2 = fmax(ua, fmin(u1, u2)), fmin(ub, fmax(u1, u2))
            if u2 > u1:
                acc += c * (u2 - u1) * inv_b
    return acc


def line_length_sums_grid(ix, iy, long long denom, nx, ny, rho, double tol=1e-12):
    cdef long long D = denom
    if D * D > MAX_GRID_CELLS:
        ixf = np.asarray(ix, dtype=np.float64)
        iyf = np.asarray(iy, dtype=np.float64)
        return line_length_sums(ixf / D, iyf / D, 1.0 / D, nx, ny, rho, tol)
    cnt_arr = np.zeros((D, D), dtype=np.int32)
    np.add.at(cnt_arr, (np.asarray(ix, dtype=np.int64), np.asarray(iy, dtype=np.int64)), 1)
    cdef int[:, ::1] cnt = cnt_arr
    cdef long long[::1] colsum = np.ascontiguousarray(cnt_arr.sum(axis=1), dtype=np.int64)
    cdef long long[::1] rowsum = np.ascontiguousarray(cnt_arr.sum(axis=0), dtype=np.int64)
    cdef double[::1] NX = np.ascontiguousarray(np.atleast_1d(nx), dtype=np.float64)
    cdef double[::1] NY = np.ascontiguousarray(np.atleast_1d(ny), dtype=np.float64)
    cdef double[::1] RH = np.ascontiguousarray(np.atleast_1d(rho), dtype=np.float64)
    cdef Py_ssize_t L = RH.shape[0], k
    out_arr = np.zeros(L, dtype=np.float64)
    cdef double[::1] out = out_arr
    cdef double a, b, r
    with nogil:
        for k in range(L):
            a = NX[k]; b = NY[k]; r = RH[k]
            if a == 0.0:
                out[k] = _axis_sum(rowsum, D, r / b, tol)
            elif b == 0.0:
                out[k] = _axis_sum(colsum, D, r / a, tol)
            elif fabs(b) >= fabs(a):
                out[k] = _grid_line(cnt, D, a, b, r, False)
            else:
                out[k] = _grid_line(cnt, D, b, a, r, True)
    return out_arr


def strip_hit_counts(x0, y0, double side, nx, ny, lo, hi):
    cdef double[::1] X = np.ascontiguousarray(x0, dtype=np.float64)
    cdef double[::1] Y = np.ascontiguousarray(y0, dtype=np.float64)
    cdef double[::1] NX = np.ascontiguousarray(np.atleast_1d(nx), dtype=np.float64)
    cdef double[::1] NY = np.ascontiguousarray(np.atleast_1d(ny), dtype=np.float64)
    cdef double[::1] LO = np.ascontiguousarray(np.atleast_1d(lo), dtype=np.float64)
    cdef double[::1] HI = np.ascontiguousarray(np.atleast_1d(hi), dtype=np.float64)
    cdef Py_ssize_t S = LO.shape[0], P = X.shape[0], k, i
    out_arr = np.zeros(S, dtype=np.int64)
    cdef long long[::1] out = out_arr
    cdef double cx, cy, ox, wx, base, l, h
    cdef long long acc
    with nogil:
        for k in range(S):
            cx = NX[k]; cy = NY[k]; l = LO[k]; h = HI[k]
            ox = side * (fmin(cx, 0.0) + fmin(cy, 0.0))
            wx = side * (fmax(cx, 0.0) + fmax(cy, 0.0))
            acc = 0
            for i in range(P):
                base = cx * X[i] + cy * Y[i]
                if base + wx > l and base + ox < h:
                    acc += 1
            out[k] = acc
    return out_arr


cdef int _clip_halfplane(double* px, double* py, int n, double nx, double ny,
                         double c, double sgn, double* qx, double* qy) nogil:
    """Sutherland-Hodgman step: keep points with sgn * (n.p - c) >= 0."""
    cdef int i, m = 0
    cdef double ax, ay, bx, by, fa, fb, t
    if n == 0:
        return 0
    for i in range(n):
        ax = px[i]; ay = py[i]
        bx = px[(i + 1) % n]; by = py[(i + 1) % n]
        fa = sgn * (nx * ax + ny * ay - c)
        fb = sgn * (nx * bx + ny * by - c)
        if fa >= 0.0:
            qx[m] = ax; qy[m] = ay; m += 1
            if fb < 0.0:
                t = fa / (fa - fb)
                qx[m] = ax + t * (bx - ax); qy[m] = ay + t * (by - ay); m += 1
        elif fb >= 0.0:
            t = fa / (fa - fb)
            qx[m] = ax + t * (bx - ax); qy[m] = ay + t * (by - ay); m += 1
    return m


cdef double _clipped_square_area(double x0, double y0, double side,
                                 double nx, double ny, double lo, double hi) nogil:
    cdef double ax[12]
    cdef double ay[12]
    cdef double bx[12]
    cdef double by[12]
    cdef int n, i
    cdef double area = 0.0
    ax[0] = x0; ay[0] = y0
    ax[1] = x0 + side; ay[1] = y0
    ax[2] = x0 + side; ay[2] = y0 + side
    ax[3] = x0; ay[3] = y0 + side
    n = _clip_halfplane(ax, ay, 4, nx, ny, lo, 1.0, bx, by)
    n = _clip_halfplane(bx, by, n, nx, ny, hi, -1.0, ax, ay)
    if n < 3:
        return 0.0
    for i in range(n):
        area += ax[i] * ay[(i + 1) % n] - ax[(i + 1) % n] * ay[i]
    return fabs(area) * 0.5


def strip_clip_areas(x0, y0, double side, nx, ny, lo, hi):
    cdef double[::1] X = np.ascontiguousarray(x0, dtype=np.float64)
    cdef double[::1] Y = np.ascontiguousarray(y0, dtype=np.float64)
    cdef double[::1] NX = np.ascontiguousarray(np.atleast_1d(nx), dtype=np.float64)
    cdef double[::1] NY = np.ascontiguousarray(np.atleast_1d(ny), dtype=np.float64)
    cdef double[::1] LO = np.ascontiguousarray(np.atleast_1d(lo), dtype=np.float64)
    cdef double[::1] HI = np.ascontiguousarray(np.atleast_1d(hi), dtype=np.float64)
    cdef Py_ssize_t S = LO.shape[0], P = X.shape[0], k, i
    out_arr = np.zeros(S, dtype=np.float64)
    cdef double[::1] out = out_arr
    cdef double cx, cy, ox, wx, base, l, h, acc, full = side * side
    with nogil:
        for k in range(S):
            cx = NX[k]; cy = NY[k]; l = LO[k]; h = HI[k]
            ox = side * (fmin(cx, 0.0) + fmin(cy, 0.0))
            wx = side * (fmax(cx, 0.0) + fmax(cy, 0.0))
            acc = 0.0
            for i in range(P):
                base = cx * X[i] + cy * Y[i]
                if base + wx <= l or base + ox >= h:
                    continue
                if base + ox >= l and base + wx <= h:
                    acc += full
                else:
                    # translate to the origin to keep the clip well conditioned
                    acc += _clipped_square_area(0.0, 0.0, side, cx, cy, l - base, h - base)
            out[k] = acc
    return out_arr


cdef inline bint _hits(double cx, double cy, double X, double Y, double ox, double wx,
                       double l, double h) nogil:
    cdef double base = cx * X + cy * Y
    return base + wx > l and base + ox < h


def strip_hit_counts_grid(ix, iy, long long denom, nx, ny, lo, hi):
    """`strip_hit_counts` for squares on a 1/denom grid, one prefix-sum
    lookup per grid column instead of one test per square."""
    cdef long long D = denom
    if D * D > MAX_GRID_CELLS:
        return strip_hit_counts(np.asarray(ix, dtype=np.float64) / D, np.asarray(iy, dtype=np.float64) / D,
                                1.0 / D, nx, ny, lo, hi)
    cnt_arr = np.zeros((D, D + 1), dtype=np.int64)
    np.add.at(cnt_arr, (np.asarray(ix, dtype=np.int64), np.asarray(iy, dtype=np.int64) + 1), 1)
    np.cumsum(cnt_arr, axis=1, out=cnt_arr)
    cdef long long[:, ::1] pre = cnt_arr
    cdef double[::1] NX = np.ascontiguousarray(np.atleast_1d(nx), dtype=np.float64)
    cdef double[::1] NY = np.ascontiguousarray(np.atleast_1d(ny), dtype=np.float64)
    cdef double[::1] LO = np.ascontiguousarray(np.atleast_1d(lo), dtype=np.float64)
    cdef double[::1] HI = np.ascontiguousarray(np.atleast_1d(hi), dtype=np.float64)
    cdef Py_ssize_t S = LO.shape[0], k
    out_arr = np.zeros(S, dtype=np.int64)
    cdef long long[::1] out = out_arr
    cdef double side = 1.0 / D
    cdef double cx, cy, ox, wx, l, h, X, bmin, bmax, e1, e2
    cdef long long i, j1, j2, acc
    with nogil:
        for k in range(S):
            cx = NX[k]; cy = NY[k]; l = LO[k]; h = HI[k]
            ox = side * (fmin(cx, 0.0) + fmin(cy, 0.0))
            wx = side * (fmax(cx, 0.0) + fmax(cy, 0.0))
            acc = 0
            for i in range(D):
                X = (<double>i) / D
                if cy == 0.0:
                    if _hits(cx, cy, X, 0.0, ox, wx, l, h):
                        acc += pre[i, D]
                    continue
                # estimated row range, then settled with the exact test
                bmin = cx * X + side * fmin(cx, 0.0)
                bmax = cx * X + side * fmax(cx, 0.0)
                e1 = (l - bmax) / cy
                e2 = (h - bmin) / cy
                if cy < 0.0:
                    e1, e2 = e2, e1
                e1 = e1 * D - 1.0
                e2 = e2 * D
                if e2 < -1.0 or e1 > D + 1.0:
                    continue
                j1 = <long long>floor(fmax(e1, -1.0))
                j2 = <long long>floor(fmin(e2, <double>D))
                if j1 < 0:
                    j1 = 0
                if j2 > D - 1:
                    j2 = D - 1
                while j1 > 0 and _hits(cx, cy, X, (<double>(j1 - 1)) / D, ox, wx, l, h):
                    j1 -= 1
                while j1 <= j2 and not _hits(cx, cy, X, (<double>j1) / D, ox, wx, l, h):
                    j1 += 1
                if j1 > j2:
                    continue
                while j2 < D - 1 and _hits(cx, cy, X, (<double>(j2 + 1)) / D, ox, wx, l, h):
                    j2 += 1
                while j2 > j1 and not _hits(cx, cy, X, (<double>j2) / D, ox, wx, l, h):
                    j2 -= 1
                acc += pre[i, j2 + 1] - pre[i, j1]
            out[k] = acc
    return out_arr
