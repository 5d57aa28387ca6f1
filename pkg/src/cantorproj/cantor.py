"""The random construction F_1, F_2, ... and its level measures mu_n.

Entry ``i`` of level ``n`` has parent ``i // N_n`` at level ``n - 1``; its
child digit is draw number ``i`` of the stream keyed by (seed_n, n), so each
level is an ordered multiset of exactly P_n squares and any slice of it can
be regenerated on its own.
"""
from __future__ import annotations

import json
import math
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field
from fractions import Fraction
from typing import Sequence

import numpy as np

from . import _kernels, rng
from .geometry import Line, Strip
from .grid import DEFAULT_MAX_BITS, GridSequence, Rect, SquareAddr, address_from_index, check_depth

_CHUNK = 1 << 20
_INT64_SAFE = 1 << 62


@dataclass(frozen=True, eq=False)
class Generation:
    """One level: per-entry child digits and integer corners on the 1/D_n grid."""

    col: np.ndarray
    row: np.ndarray
    ix: np.ndarray
    iy: np.ndarray

    def __len__(self) -> int:
        return len(self.col)

    def __eq__(self, other) -> bool:
        if not isinstance(other, Generation):
            return NotImplemented
        return all(np.array_equal(a, b) for a, b in
                   ((self.col, other.col), (self.row, other.row), (self.ix, other.ix), (self.iy, other.iy)))

    __hash__ = None


def _coord_dtype(denom: int):
    return np.int64 if denom < _INT64_SAFE else object


@dataclass(frozen=True, eq=False)
class Construction:
    seq: GridSequence
    levels: tuple[Generation, ...]
    seeds: tuple[int, ...]
    _float_cache: dict = field(default_factory=dict, compare=False, repr=False)

    def __eq__(self, other) -> bool:
        if not isinstance(other, Construction):
            return NotImplemented
        return self.seq == other.seq and self.seeds == other.seeds and self.levels == other.levels

    __hash__ = None

    @property
    def depth(self) -> int:
        return len(self.levels)

    @property
    def seed(self) -> int:
        return self.seeds[0] if self.seeds else 0

    def _check(self, n: int) -> None:
        if not 0 <= n <= self.depth:
            raise IndexError(f"level {n} not built (depth {self.depth})")

    def generation(self, n: int) -> Generation:
        if not 1 <= n <= self.depth:
            raise IndexError(f"level {n} not built (depth {self.depth})")
        return self.levels[n - 1]

    def coords(self, n: int) -> tuple[np.ndarray, np.ndarray]:
        self._check(n)
        if n == 0:
            z = np.zeros(1, dtype=np.int64)
            return z, z
        g = self.levels[n - 1]
        return g.ix, g.iy

    def float_squares(self, n: int) -> tuple[np.ndarray, np.ndarray, float]:
        """Lower-left corners and side of the level-n squares as doubles."""
        self._check(n)
        hit = self._float_cache.get(n)
        if hit is None:
            d = self.seq.denominator(n)
            ix, iy = self.coords(n)
            if ix.dtype == object:
                x0 = np.array([i / d for i in ix], dtype=np.float64)
                y0 = np.array([i / d for i in iy], dtype=np.float64)
            else:
                x0, y0 = ix / d, iy / d
            hit = (x0, y0, 1.0 / d)
            self._float_cache[n] = hit
        return hit

    def parents(self, n: int) -> np.ndarray:
        """Index at level n - 1 of the parent of each level-n entry."""
        g = self.generation(n)
        return np.arange(len(g), dtype=np.int64) // self.seq.N[n - 1]

    def entries(self, n: int) -> list[SquareAddr]:
        ix, iy = self.coords(n)
        if n == 0:
            return [()]
        return [address_from_index(int(a), int(b), n, self.seq) for a, b in zip(ix, iy)]

    def truncate(self, depth: int) -> Construction:
        self._check(depth)
        return Construction(self.seq.truncate(depth), self.levels[:depth], self.seeds[:depth])

    # -- serialisation ---------------------------------------------------
    def dump_jsonl(self, path) -> None:
        with open(path, "w") as fh:
            fh.write(json.dumps({"M": list(self.seq.M[: self.depth]), "N": list(self.seq.N[: self.depth]),
                                 "seeds": [str(s) for s in self.seeds]}) + "\n")
            for n in range(1, self.depth + 1):
                fh.write(json.dumps({"level": n, "entries": [[list(p) for p in a] for a in self.entries(n)]}) + "\n")

    @classmethod
    def load_jsonl(cls, path) -> Construction:
        with open(path) as fh:
            head = json.loads(fh.readline())
            seq = GridSequence(tuple(head["M"]), tuple(head["N"]))
            digits = []
            for n, line in enumerate(fh, start=1):
                rec = json.loads(line)
                if rec["level"] != n:
                    raise ValueError(f"expected level {n}, found {rec['level']}")
                addrs = rec["entries"]
                col = np.array([a[-1][0] for a in addrs], dtype=np.int64)
                row = np.array([a[-1][1] for a in addrs], dtype=np.int64)
                digits.append((col, row))
            c = from_digits(seq, digits, tuple(int(s) for s in head["seeds"]))
        return c


def from_digits(seq: GridSequence, digits: Sequence[tuple[np.ndarray, np.ndarray]],
                seeds: Sequence[int] | None = None) -> Construction:
    """Assemble a construction from per-level child digits (col, row)."""
    levels = []
    px = py = np.zeros(1, dtype=np.int64)
    for k, (col, row) in enumerate(digits, start=1):
        m, nk = seq.M[k - 1], seq.N[k - 1]
        col = np.asarray(col, dtype=np.int64)
        row = np.asarray(row, dtype=np.int64)
        if len(col) != len(px) * nk or len(row) != len(col):
            raise ValueError(f"level {k} needs {len(px) * nk} entries, got {len(col)}")
        if col.size and (col.min() < 0 or col.max() >= m or row.min() < 0 or row.max() >= m):
            raise ValueError(f"digit out of range at level {k}")
        dt = _coord_dtype(seq.denominator(k))
        par = np.arange(len(col)) // nk
        ix = px.astype(dt)[par] * m + col.astype(dt)
        iy = py.astype(dt)[par] * m + row.astype(dt)
        levels.append(Generation(col, row, ix, iy))
        px, py = ix, iy
    seeds = tuple(seeds) if seeds is not None else (0,) * len(levels)
    return Construction(seq, tuple(levels), seeds)


def _draw_level(seed: int, level: int, count: int, m: int, workers: int) -> np.ndarray:
    """Child cell indices in [0, m^2) for draws 0..count-1 of a level."""
    spans = [(s, min(s + _CHUNK, count)) for s in range(0, count, _CHUNK)]
    if workers > 1 and len(spans) > 1:
        with ThreadPoolExecutor(workers) as pool:
            parts = list(pool.map(lambda se: rng.indices(seed, (level,), se[0], se[1] - se[0], m * m), spans))
    else:
        parts = [rng.indices(seed, (level,), s, e - s, m * m) for s, e in spans]
    return np.concatenate(parts) if parts else np.empty(0, dtype=np.int64)


def _build(seq: GridSequence, depth: int, seeds: Sequence[int], keep: Sequence[Generation] = (),
           workers: int = 1) -> Construction:
    levels = list(keep)
    if levels:
        px, py = levels[-1].ix, levels[-1].iy
    else:
        px = py = np.zeros(1, dtype=np.int64)
    for k in range(len(levels) + 1, depth + 1):
        m, nk = seq.M[k - 1], seq.N[k - 1]
        cells = _draw_level(seeds[k - 1], k, len(px) * nk, m, workers)
        col, row = cells % m, cells // m
        dt = _coord_dtype(seq.denominator(k))
        par = np.arange(len(cells)) // nk
        ix = px.astype(dt)[par] * m + col.astype(dt)
        iy = py.astype(dt)[par] * m + row.astype(dt)
        levels.append(Generation(col, row, ix, iy))
        px, py = ix, iy
    return Construction(seq.truncate(depth), tuple(levels), tuple(seeds[:depth]))


def generate(seq: GridSequence, depth: int, seed: int, max_bits: int = DEFAULT_MAX_BITS,
             workers: int = 1) -> Construction:
    """Sample F_1, ..., F_depth with N_k independent uniform children per parent."""
    check_depth(seq, depth, max_bits)
    return _build(seq, depth, (int(seed),) * depth, workers=workers)


def resample_level(c: Construction, n: int, seed2: int, workers: int = 1) -> Construction:
    """Keep levels 1..n and redraw levels n+1..depth from `seed2`."""
    if not 1 <= n < c.depth:
        raise IndexError(f"resample level {n} outside [1, {c.depth - 1}]")
    seeds = c.seeds[:n] + (int(seed2),) * (c.depth - n)
    return _build(c.seq, c.depth, seeds, keep=c.levels[:n], workers=workers)


def extend(c: Construction, depth: int, seed: int | None = None, workers: int = 1,
           seq: GridSequence | None = None) -> Construction:
    """Add levels up to `depth` (same seed by default).

    A construction only stores its sequence up to its own depth; pass the
    longer `seq` (which must agree on the built levels) to go further.
    """
    s = c.seed if seed is None else int(seed)
    if seq is None:
        seq = c.seq
    elif seq.M[: c.depth] != c.seq.M[: c.depth] or seq.N[: c.depth] != c.seq.N[: c.depth]:
        raise ValueError("seq disagrees with the construction on its built levels")
    check_depth(seq, depth)
    return _build(seq, depth, c.seeds + (s,) * (depth - c.depth), keep=c.levels, workers=workers)


# ---------------------------------------------------------------------------
# measures


def measure_mass(c: Construction, n: int, region) -> Fraction | float:
    """mu_n(region) = c_n * sum over entries of area(Q ∩ region).

    Axis-aligned `Rect` regions are evaluated exactly and return a Fraction;
    a `Strip` is evaluated in floating point. ``None`` means the empty set.
    """
    c._check(n)
    if region is None:
        return Fraction(0)
    if isinstance(region, Strip):
        x0, y0, side = c.float_squares(n)
        nx, ny = region.line.normal
        area = _kernels.strip_clip_areas(x0, y0, side, nx, ny, region.lo, region.hi)[0]
        return float(c.seq.c(n)) * float(area)
    if isinstance(region, Rect):
        return _rect_mass(c, n, region)
    raise TypeError(f"unsupported region type {type(region).__name__}")


def _rect_mass(c: Construction, n: int, R: Rect) -> Fraction:
    if R.is_empty:
        return Fraction(0)
    d = c.seq.denominator(n)
    L = math.lcm(d, R.x0.denominator, R.y0.denominator, R.x1.denominator, R.y1.denominator)
    f = L // d
    X0, X1 = int(R.x0 * L), int(R.x1 * L)
    Y0, Y1 = int(R.y0 * L), int(R.y1 * L)
    ix, iy = c.coords(n)
    if L < _INT64_SAFE and ix.dtype != object:
        ix64, iy64 = ix.astype(np.int64) * f, iy.astype(np.int64) * f
        ox = np.clip(np.minimum(ix64 + f, X1) - np.maximum(ix64, X0), 0, None)
        oy = np.clip(np.minimum(iy64 + f, Y1) - np.maximum(iy64, Y0), 0, None)
        total = int(np.dot(ox.astype(object), oy.astype(object)))
    else:
        total = 0
        for a, b in zip(ix, iy):
            a, b = int(a) * f, int(b) * f
            total += max(0, min(a + f, X1) - max(a, X0)) * max(0, min(b + f, Y1) - max(b, Y0))
    # c_n * total / L^2 with c_n = d^2 / P_n
    return Fraction(total * d * d, L * L * c.seq.count(n))


def entry_mass(c: Construction, n: int) -> Fraction:
    """Mass of one listed copy of a level-n square."""
    return Fraction(1, c.seq.count(n))


def project_mass_interval(c: Construction, n: int, line: Line, x: Sequence[float], r: float) -> float:
    """(pi_l)_* mu_n(B(x, r)) for a point x on the line l."""
    if not r > 0:
        raise ValueError("radius must be positive")
    dx, dy = line.direction
    t = dx * x[0] + dy * x[1]
    x0, y0, side = c.float_squares(n)
    area = _kernels.strip_clip_areas(x0, y0, side, dx, dy, t - r, t + r)[0]
    return float(c.seq.c(n)) * float(area)
