"""Nested M-adic grids with exact arithmetic.

A level-n square is addressed by its digit path ((c_1, r_1), ..., (c_n, r_n)),
where (c_k, r_k) picks a cell of the M_k-adic grid of the level-(k-1) square.
Equivalently it is the integer pair (ix, iy) on the grid of denominator
D_n = M_1 * ... * M_n, which is how coordinates are stored internally.
"""
from __future__ import annotations

import json
import math
from dataclasses import dataclass
from fractions import Fraction
from typing import Callable, Sequence

from .errors import DepthGuardError

DEFAULT_MAX_BITS = 256

SquareAddr = tuple[tuple[int, int], ...]


@dataclass(frozen=True)
class GridSequence:
    """Defining sequences (M_n) and (N_n) of a random Cantor construction."""

    M: tuple[int, ...]
    N: tuple[int, ...]

    def __post_init__(self):
        object.__setattr__(self, "M", tuple(int(m) for m in self.M))
        object.__setattr__(self, "N", tuple(int(k) for k in self.N))
        if len(self.M) != len(self.N):
            raise ValueError(f"M and N differ in length ({len(self.M)} vs {len(self.N)})")
        for i, (m, k) in enumerate(zip(self.M, self.N), start=1):
            if m < 2:
                raise ValueError(f"M_{i} = {m} must be >= 2")
            if not 1 <= k <= m * m:
                raise ValueError(f"N_{i} = {k} must lie in [1, M_{i}^2 = {m * m}]")

    @classmethod
    def constant(cls, M: int, N: int, depth: int) -> GridSequence:
        return cls((M,) * depth, (N,) * depth)

    @classmethod
    def from_callables(cls, M: Callable[[int], int], N: Callable[[int], int], depth: int) -> GridSequence:
        """Materialise the first `depth` terms of generator callbacks n -> M_n, n -> N_n (1-based)."""
        return cls(tuple(M(n) for n in range(1, depth + 1)), tuple(N(n) for n in range(1, depth + 1)))

    def __len__(self) -> int:
        return len(self.M)

    def denominator(self, n: int) -> int:
        """D_n = M_1 * ... * M_n, so that r_n = 1 / D_n."""
        self._check_level(n)
        return math.prod(self.M[:n])

    def count(self, n: int) -> int:
        self._check_level(n)
        return math.prod(self.N[:n])

    def r(self, n: int) -> Fraction:
        return Fraction(1, self.denominator(n))

    def c(self, n: int) -> Fraction:
        return Fraction(self.denominator(n) ** 2, self.count(n))

    @property
    def s(self) -> float:
        return dim_s(self, len(self))

    def truncate(self, depth: int) -> GridSequence:
        self._check_level(depth)
        return GridSequence(self.M[:depth], self.N[:depth])

    def _check_level(self, n: int) -> None:
        if not 0 <= n <= len(self.M):
            raise IndexError(f"level {n} outside [0, {len(self.M)}]")

    def to_json(self) -> str:
        return json.dumps({"M": list(self.M), "N": list(self.N)})

    @classmethod
    def from_json(cls, text: str | dict) -> GridSequence:
        data = json.loads(text) if isinstance(text, str) else text
        return cls(tuple(data["M"]), tuple(data["N"]))


def derive_scales(seq: GridSequence, n: int) -> tuple[Fraction, int, Fraction]:
    """Return (r_n, P_n, c_n) exactly; c_n * r_n**2 == 1 / P_n."""
    return seq.r(n), seq.count(n), seq.c(n)


def dim_s(seq: GridSequence, n_terms: int) -> float:
    """Finite proxy for the liminf of sum(log N_i) / sum(log M_i).

    Takes the minimum of the partial ratios over the first `n_terms` levels,
    which is exact for eventually constant sequences.
    """
    if n_terms < 1:
        raise ValueError("n_terms must be >= 1")
    if n_terms > len(seq):
        raise IndexError(f"sequence has only {len(seq)} terms")
    num = den = 0.0
    best = math.inf
    for m, k in zip(seq.M[:n_terms], seq.N[:n_terms]):
        num += math.log(k)
        den += math.log(m)
        best = min(best, num / den)
    return best


def check_depth(seq: GridSequence, depth: int, max_bits: int = DEFAULT_MAX_BITS) -> None:
    """Fail loudly when the level-`depth` denominator needs more than `max_bits` bits."""
    if depth > len(seq):
        raise DepthGuardError(f"depth {depth} exceeds sequence length {len(seq)}")
    bits = seq.denominator(depth).bit_length()
    if bits > max_bits:
        raise DepthGuardError(f"denominator at depth {depth} needs {bits} bits (> {max_bits})")


def square_index(addr: SquareAddr, seq: GridSequence) -> tuple[int, int, int]:
    """Integer corner (ix, iy) of the addressed square on the grid of denominator D_n."""
    ix = iy = 0
    for k, (col, row) in enumerate(addr):
        if k >= len(seq):
            raise IndexError("address longer than the grid sequence")
        m = seq.M[k]
        if not (0 <= col < m and 0 <= row < m):
            raise ValueError(f"digit ({col}, {row}) out of range for M_{k + 1} = {m}")
        ix = ix * m + col
        iy = iy * m + row
    return ix, iy, seq.denominator(len(addr))


def square_rect(addr: SquareAddr, seq: GridSequence) -> tuple[Fraction, Fraction, Fraction, Fraction]:
    """Exact corners (x0, y0, x1, y1) of the addressed square."""
    ix, iy, d = square_index(addr, seq)
    return Fraction(ix, d), Fraction(iy, d), Fraction(ix + 1, d), Fraction(iy + 1, d)


def address_from_index(ix: int, iy: int, n: int, seq: GridSequence) -> SquareAddr:
    """Inverse of `square_index` at level n."""
    d = seq.denominator(n)
    if not (0 <= ix < d and 0 <= iy < d):
        raise ValueError(f"index ({ix}, {iy}) outside the level-{n} grid")
    digits = []
    for m in reversed(seq.M[:n]):
        ix, col = divmod(ix, m)
        iy, row = divmod(iy, m)
        digits.append((col, row))
    return tuple(reversed(digits))


@dataclass(frozen=True)
class Rect:
    """Axis-aligned rectangle [x0, x1] x [y0, y1] with exact (rational) corners."""

    x0: Fraction
    y0: Fraction
    x1: Fraction
    y1: Fraction

    def __post_init__(self):
        for name in ("x0", "y0", "x1", "y1"):
            object.__setattr__(self, name, Fraction(getattr(self, name)))

    @classmethod
    def unit(cls) -> Rect:
        return cls(0, 0, 1, 1)

    @property
    def is_empty(self) -> bool:
        return self.x1 <= self.x0 or self.y1 <= self.y0


def lcm_denominator(values: Sequence[Fraction], base: int = 1) -> int:
    out = base
    for v in values:
        out = math.lcm(out, Fraction(v).denominator)
    return out
