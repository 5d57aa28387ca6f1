"""Lines, strips and their interaction with construction squares.

A line is stored in Hesse normal form: ``theta`` in [0, pi) is the angle of
the unit normal n = (cos theta, sin theta) and the line is {p : n.p = rho}.
A strip of width w about a line is {p in [0,1]^2 : |n.p - rho| < w/2}.
Squares are closed.
"""
from __future__ import annotations

import csv
import math
from dataclasses import dataclass
from fractions import Fraction
from typing import TYPE_CHECKING, Iterator, Sequence

import numpy as np

from . import _kernels
from .errors import FamilyGuardError

if TYPE_CHECKING:
    from .cantor import Construction

DEFAULT_FAMILY_GUARD = 10**7
COORD_TOL = 1e-12
LENGTH_TO_COUNT_CONSTANT = 2 * (1 + 2 * math.sqrt(2))

_SNAP = 1e-15


def unit_normal(theta: float) -> tuple[float, float]:
    c, s = math.cos(theta), math.sin(theta)
    if abs(c) < _SNAP:
        return 0.0, math.copysign(1.0, s)
    if abs(s) < _SNAP:
        return math.copysign(1.0, c), 0.0
    return c, s


def unit_normals(theta: np.ndarray) -> tuple[np.ndarray, np.ndarray]:
    c, s = np.cos(theta), np.sin(theta)
    cz = np.abs(c) < _SNAP
    sz = np.abs(s) < _SNAP
    c = np.where(cz, 0.0, np.where(sz, np.sign(c), c))
    s = np.where(sz, 0.0, np.where(cz, np.sign(s), s))
    return c, s


def _canonical(theta: float, rho: float) -> tuple[float, float]:
    theta = math.fmod(theta, 2 * math.pi)
    if theta < 0:
        theta += 2 * math.pi
    if theta >= math.pi:
        theta -= math.pi
        rho = -rho
    if theta >= math.pi:  # rounding at the top end: theta = pi is theta = 0 with the normal reversed
        theta, rho = 0.0, -rho
    return theta, rho


@dataclass(frozen=True)
class Line:
    theta: float
    rho: float

    def __post_init__(self):
        t, r = _canonical(float(self.theta), float(self.rho))
        object.__setattr__(self, "theta", t)
        object.__setattr__(self, "rho", r)

    @classmethod
    def from_points(cls, p: Sequence[float], q: Sequence[float]) -> Line:
        dx, dy = q[0] - p[0], q[1] - p[1]
        if dx == 0 and dy == 0:
            raise ValueError("points coincide")
        if dx == 0:
            return cls(0.0, float(p[0]))
        if dy == 0:
            return cls(math.pi / 2, float(p[1]))
        theta = math.atan2(dx, -dy)
        nx, ny = unit_normal(theta)
        return cls(theta, nx * p[0] + ny * p[1])

    @classmethod
    def through(cls, point: Sequence[float], direction: float) -> Line:
        """Line through `point` whose direction vector has angle `direction`."""
        theta = direction + math.pi / 2
        nx, ny = unit_normal(theta)
        return cls(theta, nx * point[0] + ny * point[1])

    @classmethod
    def horizontal(cls, y: float) -> Line:
        return cls(math.pi / 2, y)

    @classmethod
    def vertical(cls, x: float) -> Line:
        return cls(0.0, x)

    @property
    def normal(self) -> tuple[float, float]:
        return unit_normal(self.theta)

    @property
    def direction(self) -> tuple[float, float]:
        nx, ny = self.normal
        return -ny, nx

    def distance(self, p: Sequence[float]) -> float:
        nx, ny = self.normal
        return abs(nx * p[0] + ny * p[1] - self.rho)

    def isclose(self, other: Line, tol: float = 1e-12) -> bool:
        if abs(self.theta - other.theta) <= tol and abs(self.rho - other.rho) <= tol:
            return True
        # theta near 0 and near pi describe the same normal up to sign
        return abs(abs(self.theta - other.theta) - math.pi) <= tol and abs(self.rho + other.rho) <= tol


@dataclass(frozen=True)
class Strip:
    line: Line
    width: float

    def __post_init__(self):
        if not self.width > 0:
            raise ValueError("strip width must be positive")

    @property
    def lo(self) -> float:
        return self.line.rho - self.width / 2

    @property
    def hi(self) -> float:
        return self.line.rho + self.width / 2

    def contains(self, p: Sequence[float]) -> bool:
        if not (0 <= p[0] <= 1 and 0 <= p[1] <= 1):
            return False
        return self.line.distance(p) < self.width / 2

    def polygon(self) -> list[tuple[float, float]]:
        """Vertices of the closure of the strip ∩ [0,1]^2 (empty list if disjoint)."""
        nx, ny = self.line.normal
        poly = [(0.0, 0.0), (1.0, 0.0), (1.0, 1.0), (0.0, 1.0)]
        poly = clip_halfplane(poly, nx, ny, self.lo, keep_above=True)
        return clip_halfplane(poly, nx, ny, self.hi, keep_above=False)


def clip_halfplane(poly: list[tuple[float, float]], nx: float, ny: float, c: float,
                   keep_above: bool) -> list[tuple[float, float]]:
    """One Sutherland-Hodgman pass: keep the part with n.p >= c (or <= c)."""
    sgn = 1.0 if keep_above else -1.0
    out: list[tuple[float, float]] = []
    n = len(poly)
    for i in range(n):
        a, b = poly[i], poly[(i + 1) % n]
        fa = sgn * (nx * a[0] + ny * a[1] - c)
        fb = sgn * (nx * b[0] + ny * b[1] - c)
        if fa >= 0:
            out.append(a)
            if fb < 0:
                t = fa / (fa - fb)
                out.append((a[0] + t * (b[0] - a[0]), a[1] + t * (b[1] - a[1])))
        elif fb >= 0:
            t = fa / (fa - fb)
            out.append((a[0] + t * (b[0] - a[0]), a[1] + t * (b[1] - a[1])))
    return out


def polygon_area(poly: Sequence[tuple[float, float]]) -> float:
    n = len(poly)
    if n < 3:
        return 0.0
    acc = 0.0
    for i in range(n):
        x1, y1 = poly[i]
        x2, y2 = poly[(i + 1) % n]
        acc += x1 * y2 - x2 * y1
    return abs(acc) / 2


def strip_contains(outer: Strip, inner: Strip, tol: float = COORD_TOL) -> bool:
    """Whether inner ∩ [0,1]^2 lies inside outer.

    Both sets are convex, so it suffices that every vertex of the closure of
    inner ∩ [0,1]^2 is within outer.width/2 of the outer line.
    """
    verts = inner.polygon()
    half = outer.width / 2
    return all(outer.line.distance(v) <= half + tol for v in verts)


# ---------------------------------------------------------------------------
# single squares


def line_square_length(line: Line, rect, tol: float = COORD_TOL) -> float:
    """Length of line ∩ rect for a closed axis-aligned rectangle (x0, y0, x1, y1)."""
    x0, y0, x1, y1 = (float(v) for v in _rect_tuple(rect))
    if x1 < x0 or y1 < y0:
        raise ValueError("empty rectangle")
    nx, ny = line.normal
    px, py = line.rho * nx, line.rho * ny
    dx, dy = -ny, nx
    lo, hi = -math.inf, math.inf
    for d, p, a, b in ((dx, px, x0, x1), (dy, py, y0, y1)):
        if d == 0.0:
            if p < a - tol or p > b + tol:
                return 0.0
        else:
            t1, t2 = (a - p) / d, (b - p) / d
            lo, hi = max(lo, min(t1, t2)), min(hi, max(t1, t2))
    return max(0.0, hi - lo)


def _rect_tuple(rect):
    if hasattr(rect, "x0"):
        return rect.x0, rect.y0, rect.x1, rect.y1
    return tuple(rect)


# ---------------------------------------------------------------------------
# construction queries


def _squares(c: Construction, n: int):
    x0, y0, side = c.float_squares(n)
    return x0, y0, side


def line_total_length(c: Construction, n: int, line: Line, pruned: bool = True) -> float:
    """Sum over level-n entries (with multiplicity) of the length of line ∩ Q."""
    nx, ny = line.normal
    if not pruned:
        x0, y0, side = _squares(c, n)
        return float(_kernels.line_length_sums(x0, y0, side, nx, ny, line.rho)[0])
    idx = _pruned_indices(c, n, nx, ny, line.rho - COORD_TOL, line.rho + COORD_TOL, closed=True)
    x0, y0, side = _squares(c, n)
    return float(_kernels.line_length_sums(x0[idx], y0[idx], side, nx, ny, line.rho)[0])


def _pruned_indices(c: Construction, n: int, nx: float, ny: float, lo: float, hi: float,
                    closed: bool) -> np.ndarray:
    """Indices of level-n entries whose square meets the slab, by descending
    only through ancestors that meet it."""
    idx = np.zeros(1, dtype=np.int64)  # the unit square
    for k in range(1, n + 1):
        nk = c.seq.N[k - 1]
        idx = (idx[:, None] * nk + np.arange(nk)[None, :]).ravel()
        x0, y0, side = _squares(c, k)
        xs, ys = x0[idx], y0[idx]
        base = nx * xs + ny * ys
        pmin = base + side * (min(nx, 0.0) + min(ny, 0.0))
        pmax = base + side * (max(nx, 0.0) + max(ny, 0.0))
        keep = (pmax >= lo) & (pmin <= hi) if closed else (pmax > lo) & (pmin < hi)
        idx = idx[keep]
        if idx.size == 0:
            break
    return idx


def strip_count(c: Construction, n: int, strip: Strip, pruned: bool = True) -> int:
    """Z(S, n): number of level-n entries (with multiplicity) meeting the strip."""
    nx, ny = strip.line.normal
    if pruned:
        return int(_pruned_indices(c, n, nx, ny, strip.lo, strip.hi, closed=False).size)
    x0, y0, side = _squares(c, n)
    return int(_kernels.strip_hit_counts(x0, y0, side, nx, ny, strip.lo, strip.hi)[0])


def strip_counts(c: Construction, n: int, nx, ny, lo, hi) -> np.ndarray:
    """Vectorised Z(S, n) over many strips given as arrays."""
    d = c.seq.denominator(n)
    ix, iy = c.coords(n)
    if d * d <= 1 << 25 and d < len(ix):
        return _kernels.strip_hit_counts_grid(np.asarray(ix, dtype=np.int64), np.asarray(iy, dtype=np.int64),
                                              d, nx, ny, lo, hi)
    x0, y0, side = _squares(c, n)
    return _kernels.strip_hit_counts(x0, y0, side, nx, ny, lo, hi)


# ---------------------------------------------------------------------------
# finite families


@dataclass(frozen=True)
class LineArray:
    theta: np.ndarray
    rho: np.ndarray

    def __len__(self) -> int:
        return len(self.theta)

    def __getitem__(self, i: int) -> Line:
        return Line(float(self.theta[i]), float(self.rho[i]))

    def __iter__(self) -> Iterator[Line]:
        return (self[i] for i in range(len(self)))

    def normals(self) -> tuple[np.ndarray, np.ndarray]:
        return unit_normals(self.theta)

    def take(self, idx) -> LineArray:
        return LineArray(self.theta[idx], self.rho[idx])

    def to_csv(self, path) -> None:
        with open(path, "w", newline="") as fh:
            w = csv.writer(fh)
            w.writerow(["theta", "rho", "width"])
            for t, r in zip(self.theta, self.rho):
                w.writerow([repr(float(t)), repr(float(r)), ""])


@dataclass(frozen=True)
class StripFamily:
    """All strips of the given widths about every line of `lines`."""

    lines: LineArray
    widths: np.ndarray

    def __len__(self) -> int:
        return len(self.lines) * len(self.widths)

    def __iter__(self) -> Iterator[Strip]:
        for w in self.widths:
            for line in self.lines:
                yield Strip(line, float(w))

    def chunks(self, size: int = 1 << 20):
        """Yield (nx, ny, lo, hi, width) arrays covering the family."""
        nx, ny = self.lines.normals()
        rho = self.lines.rho
        for w in self.widths:
            for s in range(0, len(rho), size):
                e = min(s + size, len(rho))
                yield nx[s:e], ny[s:e], rho[s:e] - w / 2, rho[s:e] + w / 2, np.full(e - s, float(w))

    def to_csv(self, path) -> None:
        with open(path, "w", newline="") as fh:
            out = csv.writer(fh)
            out.writerow(["theta", "rho", "width"])
            for w in self.widths:
                for t, r in zip(self.lines.theta, self.lines.rho):
                    out.writerow([repr(float(t)), repr(float(r)), repr(float(w))])


def _boundary_points(denom: int, include_corners: bool) -> tuple[np.ndarray, np.ndarray, np.ndarray]:
    """Distinct boundary grid points (integers over denom) and their side bitmasks."""
    ks = np.arange(0 if include_corners else 1, denom + 1, dtype=np.int64)
    zeros, fulls = np.zeros_like(ks), np.full_like(ks, denom)
    px = np.concatenate([zeros, fulls, ks, ks])
    py = np.concatenate([ks, ks, zeros, fulls])
    pts = np.unique(np.stack([px, py], axis=1), axis=0)
    px, py = pts[:, 0], pts[:, 1]
    sides = (px == 0) * 1 + (px == denom) * 2 + (py == 0) * 4 + (py == denom) * 8
    return px, py, sides.astype(np.int64)


def _side_lines(sides: np.ndarray) -> list[tuple[float, float]]:
    out = []
    for bit, (theta, rho) in ((1, (0.0, 0.0)), (2, (0.0, 1.0)), (4, (math.pi / 2, 0.0)), (8, (math.pi / 2, 1.0))):
        if np.count_nonzero(sides & bit) >= 2:
            out.append((theta, rho))
    return out


def boundary_family_size(denom: int, include_corners: bool = True) -> int:
    """Number of distinct lines through two distinct boundary grid points."""
    per_side = denom + 1 if include_corners else None
    if include_corners:
        pts = 4 * denom
        return math.comb(pts, 2) - 4 * math.comb(per_side, 2) + 4
    _, _, sides = _boundary_points(denom, include_corners)
    pts = len(sides)
    same = sum(math.comb(int(np.count_nonzero(sides & b)), 2) for b in (1, 2, 4, 8))
    return math.comb(pts, 2) - same + len(_side_lines(sides))


def boundary_line_family(denom: int, include_corners: bool = True,
                         max_size: int = DEFAULT_FAMILY_GUARD) -> LineArray:
    """Lines through pairs of distinct boundary grid points at spacing 1/denom.

    Pairs on a common side all give that side, which is listed once.
    """
    size = boundary_family_size(denom, include_corners)
    if size > max_size:
        raise FamilyGuardError(f"family of {size} lines exceeds guard {max_size}")
    px, py, sides = _boundary_points(denom, include_corners)
    thetas, rhos = [], []
    for i in range(len(px) - 1):
        j = np.arange(i + 1, len(px))
        j = j[(sides[j] & sides[i]) == 0]
        if j.size == 0:
            continue
        a = -(py[j] - py[i])
        b = px[j] - px[i]
        flip = (b < 0) | ((b == 0) & (a < 0))
        a = np.where(flip, -a, a)
        b = np.where(flip, -b, b)
        h = np.hypot(a, b)
        thetas.append(np.arctan2(b, a))
        rhos.append((a * px[i] + b * py[i]) / (denom * h))
    for t, r in _side_lines(sides):
        thetas.append(np.array([t]))
        rhos.append(np.array([r]))
    theta = np.concatenate(thetas) if thetas else np.empty(0)
    rho = np.concatenate(rhos) if rhos else np.empty(0)
    theta = np.where(theta >= math.pi, 0.0, theta)
    return LineArray(theta, rho)


def sample_boundary_lines(denom: int, count: int, rng: np.random.Generator,
                          include_corners: bool = True) -> LineArray:
    """Uniform sample (with replacement) of non-side lines of the boundary family."""
    px, py, sides = _boundary_points(denom, include_corners)
    thetas, rhos = [], []
    need = count
    while need > 0:
        i = rng.integers(0, len(px), size=2 * need + 16)
        j = rng.integers(0, len(px), size=2 * need + 16)
        ok = (i != j) & ((sides[i] & sides[j]) == 0)
        i, j = i[ok][:need], j[ok][:need]
        a = -(py[j] - py[i])
        b = px[j] - px[i]
        flip = (b < 0) | ((b == 0) & (a < 0))
        a = np.where(flip, -a, a)
        b = np.where(flip, -b, b)
        thetas.append(np.arctan2(b, a))
        rhos.append((a * px[i] + b * py[i]) / (denom * np.hypot(a, b)))
        need -= len(i)
    return LineArray(np.concatenate(thetas), np.concatenate(rhos))


def sample_strip_family(M: int, count: int, rng: np.random.Generator,
                        max_width: float | None = None) -> "SampledStrips":
    """`count` strips drawn uniformly from the non-side members of
    `strip_family(M, max_width=...)`, returned as a family with one width per
    line (``widths`` aligned with ``lines``)."""
    widths = 5.0 * np.arange(1, M + 1) / M
    if max_width is not None:
        widths = widths[widths <= max_width * (1 + 1e-12)]
    lines = sample_boundary_lines(M, count, rng, include_corners=False)
    return SampledStrips(lines, widths[rng.integers(0, len(widths), size=count)])


@dataclass(frozen=True)
class SampledStrips:
    """Strips given line by line: strip i is about ``lines[i]`` with width ``widths[i]``."""

    lines: LineArray
    widths: np.ndarray

    def __len__(self) -> int:
        return len(self.lines)

    def __iter__(self) -> Iterator[Strip]:
        for i in range(len(self.lines)):
            yield Strip(self.lines[i], float(self.widths[i]))

    def chunks(self, size: int = 1 << 20):
        nx, ny = self.lines.normals()
        rho, w = self.lines.rho, self.widths
        for s in range(0, len(rho), size):
            e = min(s + size, len(rho))
            yield nx[s:e], ny[s:e], rho[s:e] - w[s:e] / 2, rho[s:e] + w[s:e] / 2, w[s:e]


def _denominator(r) -> int:
    r = Fraction(r)
    if r <= 0 or r > 1 or r.numerator != 1:
        raise ValueError(f"resolution {r} must be 1/D for an integer D >= 1")
    return r.denominator


def line_family(r_n, max_size: int = DEFAULT_FAMILY_GUARD) -> LineArray:
    """Approximating line family at resolution r_n: lines through pairs of
    boundary points of [0,1]^2 at spacing r_n (corners included)."""
    return boundary_line_family(_denominator(r_n), include_corners=True, max_size=max_size)


def line_family_size(r_n) -> int:
    return boundary_family_size(_denominator(r_n), include_corners=True)


def strip_family(M: int, max_size: int = DEFAULT_FAMILY_GUARD, max_width: float | None = None) -> StripFamily:
    """Approximating strip family for widths in [1/M, 1].

    Lines B join distinct points of {(0, k/M), (1, k/M), (k/M, 0), (k/M, 1) :
    k = 1..M}; the sub-family of index i consists of the strips of width 5i/M
    about every line of B, i = 1..M. `max_width` keeps only the narrower
    sub-families.
    """
    if M < 2:
        raise ValueError("M must be >= 2")
    widths = 5.0 * np.arange(1, M + 1) / M
    if max_width is not None:
        widths = widths[widths <= max_width * (1 + 1e-12)]
    size = boundary_family_size(M, include_corners=False) * len(widths)
    if size > max_size:
        raise FamilyGuardError(f"strip family of {size} members exceeds guard {max_size}")
    lines = boundary_line_family(M, include_corners=False, max_size=max_size)
    return StripFamily(lines, widths)


def strip_family_size(M: int, max_width: float | None = None) -> int:
    widths = 5.0 * np.arange(1, M + 1) / M
    if max_width is not None:
        widths = widths[widths <= max_width * (1 + 1e-12)]
    return boundary_family_size(M, include_corners=False) * len(widths)


def covering_strip(family: StripFamily, strip: Strip, tol: float = COORD_TOL) -> Strip | None:
    """A member S~ of the family with S ⊂ S~ and w(S~) <= 5 w(S), or None."""
    verts = strip.polygon()
    ok_widths = family.widths[family.widths <= 5 * strip.width * (1 + 1e-12)]
    if not len(ok_widths):
        return None
    if not verts:
        return Strip(family.lines[0], float(ok_widths[0]))
    nx, ny = family.lines.normals()
    vx = np.array([v[0] for v in verts])
    vy = np.array([v[1] for v in verts])
    dist = np.abs(nx[:, None] * vx[None, :] + ny[:, None] * vy[None, :] - family.lines.rho[:, None]).max(axis=1)
    # the widest admissible sub-family contains every narrower one
    best = int(np.argmin(dist))
    if dist[best] <= ok_widths[-1] / 2 + tol:
        w = ok_widths[np.searchsorted(ok_widths, 2 * (dist[best] - tol))]
        cand = Strip(family.lines[best], float(w))
        if strip_contains(cand, strip, tol):
            return cand
        return Strip(family.lines[best], float(ok_widths[-1]))
    return None


# ---------------------------------------------------------------------------
# line-length quantities


def family_line_lengths(c: Construction, n: int, lines: LineArray) -> np.ndarray:
    """|l ∩ F_n| for every line of the array."""
    nx, ny = lines.normals()
    d = c.seq.denominator(n)
    if d * d <= 1 << 25:
        ix, iy = c.coords(n)
        return _kernels.line_length_sums_grid(np.asarray(ix, dtype=np.int64), np.asarray(iy, dtype=np.int64),
                                              d, nx, ny, lines.rho)
    x0, y0, side = _squares(c, n)
    return _kernels.line_length_sums(x0, y0, side, nx, ny, lines.rho)


def sup_line_length(c: Construction, n: int, max_size: int = DEFAULT_FAMILY_GUARD, coarsen: int = 1) -> float:
    """V* = max over the level-n line family of |l~ ∩ F_n|, plus r_n.

    With ``coarsen = f`` the family is taken at spacing f * r_n, which is a
    subset of the full family, so the result is a lower bound for V*.
    """
    d = c.seq.denominator(n)
    if d % coarsen:
        raise ValueError("coarsening factor must divide the grid denominator")
    lines = boundary_line_family(d // coarsen, include_corners=True, max_size=max_size)
    lengths = family_line_lengths(c, n, lines)
    return float(lengths.max(initial=0.0)) + 1.0 / d


def lengthtonum_bound(V: float, r_n) -> float:
    """Upper bound 2(1 + 2 sqrt 2) V / r_n on the number of squares meeting a
    strip of width <= r_n, given |l ∩ F_n| <= V for all lines."""
    if V < 0:
        raise ValueError("V must be non-negative")
    return LENGTH_TO_COUNT_CONSTANT * V / float(r_n)
