"""Random covering sets on the torus and the extraction of a Cantor subset.

The torus is the unit square with opposite sides identified. Translation
points are 53-bit dyadic doubles, so every grid-membership test below is done
in exact integer arithmetic on ``xi * 2**53``.
"""
from __future__ import annotations

import json
import math
from dataclasses import dataclass, field
from fractions import Fraction
from typing import Sequence

import numpy as np

from . import rng
from .cantor import Construction, from_digits
from .errors import DepthGuardError, ExtractionInvariantError
from .grid import GridSequence

_SCALE = 1 << 53
_MAGIC = b"CVRSMPL1"


@dataclass(frozen=True)
class CoveringSpec:
    """Generating sets g_n: a ball of radius delta_n = a n^-alpha (``shape="ball"``)
    or a rectangle of sides n^-alpha (x) by n^-beta (y) (``shape="rect"``).

    For a rectangle the inscribed radius is n^-beta / 2. ``rho_alpha`` gives
    the diameter law rho_n = n^-rho_alpha used by the dimension formula; it
    defaults to ``alpha``.
    """

    alpha: float
    shape: str = "ball"
    beta: float | None = None
    scale: float = 1.0
    rho_alpha: float | None = None

    def __post_init__(self):
        if self.shape not in ("ball", "rect"):
            raise ValueError("shape must be 'ball' or 'rect'")
        if self.alpha <= 0:
            raise ValueError("alpha must be positive")
        if self.shape == "rect" and (self.beta is None or self.beta < self.alpha):
            raise ValueError("a rectangle needs beta >= alpha")
        if not 0 < self.scale <= 1:
            raise ValueError("scale must lie in (0, 1]")

    def delta(self, n) -> np.ndarray | float:
        n = np.asarray(n, dtype=np.float64)
        if self.shape == "rect":
            return 0.5 * n ** (-self.beta)
        return self.scale * n ** (-self.alpha)

    def inv_delta_sq(self, n: int) -> float:
        """delta_n^-2, computed as a power of n so integer cases stay exact."""
        if self.shape == "rect":
            return 4.0 * float(n) ** (2 * self.beta)
        return float(n) ** (2 * self.alpha) / (self.scale * self.scale)

    def log_rho(self, n: int) -> float:
        a = self.alpha if self.rho_alpha is None else self.rho_alpha
        return -a * math.log(n)

    def sides(self, n) -> tuple[np.ndarray, np.ndarray]:
        """Side lengths (x, y) of rectangular g_n."""
        n = np.asarray(n, dtype=np.float64)
        return n ** (-self.alpha), n ** (-(self.beta if self.beta is not None else self.alpha))

    def to_dict(self) -> dict:
        return dict(alpha=self.alpha, shape=self.shape, beta=self.beta, scale=self.scale, rho_alpha=self.rho_alpha)

    @classmethod
    def from_dict(cls, d: dict) -> CoveringSpec:
        return cls(**d)


@dataclass(frozen=True, eq=False)
class CoveringSample:
    """Translation points xi_1..xi_N (row i holds xi_{i+1})."""

    xi: np.ndarray
    spec: CoveringSpec
    seed: int

    @property
    def horizon(self) -> int:
        return len(self.xi)

    def point(self, i: int) -> tuple[float, float]:
        """xi_i with 1-based index i."""
        return float(self.xi[i - 1, 0]), float(self.xi[i - 1, 1])

    def scaled(self) -> np.ndarray | None:
        """xi * 2^53 as exact integers, or None if some coordinate is not 53-bit dyadic."""
        v = self.xi * _SCALE
        if np.all(np.floor(v) == v):
            return v.astype(np.int64)
        return None

    def save(self, path) -> None:
        header = json.dumps({"spec": self.spec.to_dict(), "seed": str(self.seed), "horizon": self.horizon,
                             "columns": ["n", "xi_x", "xi_y"], "dtype": "<f8"}).encode()
        n = np.arange(1, self.horizon + 1, dtype="<f8")
        with open(path, "wb") as fh:
            fh.write(_MAGIC)
            fh.write(len(header).to_bytes(8, "little"))
            fh.write(header)
            for col in (n, self.xi[:, 0], self.xi[:, 1]):
                fh.write(np.ascontiguousarray(col, dtype="<f8").tobytes())

    @classmethod
    def load(cls, path) -> CoveringSample:
        with open(path, "rb") as fh:
            if fh.read(len(_MAGIC)) != _MAGIC:
                raise ValueError("not a covering-sample file")
            hlen = int.from_bytes(fh.read(8), "little")
            head = json.loads(fh.read(hlen))
            body = np.frombuffer(fh.read(), dtype="<f8")
        N = head["horizon"]
        if body.size != 3 * N:
            raise ValueError("truncated covering-sample file")
        cols = body.reshape(3, N)
        return cls(np.stack([cols[1], cols[2]], axis=1).copy(), CoveringSpec.from_dict(head["spec"]), int(head["seed"]))


def sample_covering(spec: CoveringSpec, N: int, seed: int) -> CoveringSample:
    """N independent uniform points of the torus, a pure function of the seed."""
    if N < 1:
        raise ValueError("N must be >= 1")
    u = rng.uniforms(seed, (0xC0,), 0, 2 * N)
    return CoveringSample(u.reshape(N, 2), spec, int(seed))


def s0_value(spec: CoveringSpec, n_max: int) -> float:
    """max over 2 <= n <= n_max of log n / (-log rho_n), the finite limsup proxy."""
    if n_max < 2:
        raise ValueError("n_max must be >= 2")
    best = -math.inf
    for n in range(2, n_max + 1):
        lr = spec.log_rho(n)
        if lr < 0:
            best = max(best, math.log(n) / -lr)
    return best


def _ceil_int(x: float, rel: float = 1e-12) -> int:
    """Ceiling that treats values within `rel` of an integer as that integer."""
    r = round(x)
    if abs(x - r) <= rel * max(1.0, abs(x)):
        return int(r)
    return math.ceil(x)


@dataclass(frozen=True)
class NkChoice:
    nk: tuple[int, ...]
    log_delta_ratio: tuple[float, ...]
    factor: float
    relaxed: bool


def choose_nk(spec: CoveringSpec, k_max: int, n1: int, factor: float = 256.0,
              max_n: int = 10**15) -> NkChoice:
    """n_k = smallest integer >= factor k^2 n_{k-1}^2 delta_{n_{k-1}}^-2 whose
    ratio log n / -log delta_n is maximal on [bound, 2 bound] (for power laws
    this is the bound itself). ``factor < 256`` is the relaxed desk mode."""
    if n1 < 2:
        raise ValueError("n1 must be >= 2")
    if s0_value(spec, max(n1, 2)) >= 1:
        raise ValueError("s0 must be < 1")
    nk = [n1]
    ratios = []
    for k in range(2, k_max + 1):
        prev = nk[-1]
        bound = _ceil_int(factor * k * k * prev * prev * spec.inv_delta_sq(prev))
        if bound > max_n:
            raise DepthGuardError(f"n_{k} would be {bound} (> {max_n})")
        cand = bound
        if spec.shape == "ball" and spec.scale != 1.0:
            window = np.arange(bound, 2 * bound + 1, max(1, bound // 1000))
            ratio = np.log(window) / -np.log(spec.delta(window))
            cand = int(window[np.flatnonzero(ratio >= ratio.max() - 1e-12)[0]])
        nk.append(cand)
        ratios.append(math.log(spec.delta(prev)) / math.log(spec.delta(cand)))
    return NkChoice(tuple(nk), tuple(ratios), factor, factor < 256.0)


def omega_bound(k: int, nk: Sequence[int], spec: CoveringSpec, Ntilde_prev: int, factor: float = 256.0) -> float:
    """q_k lower bound 1 - 256 Ntilde_{k-1}^2 delta_{n_{k-1}}^-2 / n_k.

    When n_k satisfies the growth condition and Ntilde_{k-1} <= n_{k-1}, the
    value is at least 1 - 1/k^2; that implication is asserted."""
    if k < 2:
        raise ValueError("k must be >= 2")
    prev, cur = nk[k - 2], nk[k - 1]
    inv = spec.inv_delta_sq(prev)
    q = 1.0 - 256.0 * Ntilde_prev**2 * inv / cur
    if factor >= 256.0 and cur >= 256.0 * k * k * prev * prev * inv * (1 - 1e-12) and Ntilde_prev <= prev:
        assert q >= 1 - 1 / k**2 - 1e-12, "omega bound below 1 - 1/k^2 despite the growth condition"
    return q


# ---------------------------------------------------------------------------
# extraction


@dataclass
class ExtractionLevel:
    k: int
    M: int
    N: int
    m: int | None
    denom: int
    omega: bool
    q_bound: float | None
    indices: list[int] = field(default_factory=list)  # chosen i, grouped by parent
    ix: list[int] = field(default_factory=list)
    iy: list[int] = field(default_factory=list)
    ties: list[int] = field(default_factory=list)
    hits_min: int | None = None


@dataclass
class ExtractionResult:
    nk: tuple[int, ...]
    levels: list[ExtractionLevel]
    spec: CoveringSpec
    seed: int
    tie_rule: str
    relaxed: bool = False

    @property
    def complete(self) -> bool:
        return len(self.levels) == len(self.nk) and all(lv.omega for lv in self.levels)

    @property
    def omega_flags(self) -> list[bool]:
        return [lv.omega for lv in self.levels]

    @property
    def q_bounds(self) -> list[float | None]:
        return [lv.q_bound for lv in self.levels]

    @property
    def seq(self) -> GridSequence:
        built = [lv for lv in self.levels if lv.omega]
        return GridSequence(tuple(lv.M for lv in built), tuple(lv.N for lv in built))

    def to_construction(self) -> Construction:
        """The extracted squares as a Construction (parent of entry i is i // N_k)."""
        seq = self.seq
        digits = []
        px = np.zeros(1, dtype=object)
        py = np.zeros(1, dtype=object)
        for lv in self.levels[: len(seq)]:
            ix = np.array(lv.ix, dtype=object)
            iy = np.array(lv.iy, dtype=object)
            par = np.arange(len(ix)) // lv.N
            col = ix - px[par] * lv.M
            row = iy - py[par] * lv.M
            digits.append((col.astype(np.int64), row.astype(np.int64)))
            px, py = ix, iy
        return from_digits(seq, digits, (self.seed,) * len(seq))

    def to_json(self) -> str:
        return json.dumps({
            "nk": list(self.nk), "spec": self.spec.to_dict(), "seed": str(self.seed), "tie_rule": self.tie_rule,
            "relaxed": self.relaxed,
            "levels": [dict(k=lv.k, M=lv.M, N=lv.N, m=lv.m, denom=str(lv.denom), omega=lv.omega,
                            q_bound=lv.q_bound, hits_min=lv.hits_min, indices=lv.indices,
                            ix=[str(v) for v in lv.ix], iy=[str(v) for v in lv.iy], ties=lv.ties)
                       for lv in self.levels]})


def _cells_containing(num: int, denom: int) -> list[int]:
    """Grid cells [a/D, (a+1)/D] containing num / 2^53 (one, or two on a grid line)."""
    a, rem = divmod(num * denom, _SCALE)
    if rem == 0 and a > 0:
        return [a - 1, a] if a < denom else [a - 1]
    return [a]


def _pick_square(num_x: int, num_y: int, denom: int, parent: tuple[int, int, int] | None,
                 tie_rule: str, gen: np.random.Generator) -> tuple[int, int, bool]:
    cx = _cells_containing(num_x, denom)
    cy = _cells_containing(num_y, denom)
    cands = [(a, b) for a in cx for b in cy]
    if parent is not None:
        pa, pb, f = parent
        cands = [(a, b) for a, b in cands if a // f == pa and b // f == pb]
    if not cands:
        raise ExtractionInvariantError("no grid square contains the point inside its parent")
    tie = len(cands) > 1
    if tie and tie_rule == "random":
        a, b = cands[int(gen.integers(len(cands)))]
    else:
        a, b = min(cands)
    return a, b, tie


def square_in_ball(ix: int, iy: int, denom: int, num_x: int, num_y: int, radius: float) -> bool:
    """Exact test that the closed square lies in the closed ball B(xi, radius)."""
    r2 = Fraction(radius) ** 2
    cx, cy = Fraction(num_x, _SCALE), Fraction(num_y, _SCALE)
    for a in (ix, ix + 1):
        for b in (iy, iy + 1):
            if (Fraction(a, denom) - cx) ** 2 + (Fraction(b, denom) - cy) ** 2 > r2:
                return False
    return True


def _in_closed(num: np.ndarray, a: int, denom: int) -> np.ndarray:
    """Exact a/D <= num/2^53 <= (a+1)/D for an int64 array num."""
    if denom < (1 << 9):
        lhs = num * denom
        return (lhs >= a * _SCALE) & (lhs <= (a + 1) * _SCALE)
    return np.array([a * _SCALE <= int(v) * denom <= (a + 1) * _SCALE for v in num], dtype=bool)


def extract_cantor(sample: CoveringSample, nk: Sequence[int], tie_seed: int = 0, tie_rule: str = "lex",
                   relaxed: bool = False, check: bool = True) -> ExtractionResult:
    """Inductive extraction of grid squares xi_i ∈ Q_i ⊂ B_i = B(xi_i, delta_i).

    Stops at the first level whose event Omega_k fails. Ties (a point on a
    grid line) take the lexicographically smallest admissible square, or a
    uniformly random one with ``tie_rule="random"`` (driven by `tie_seed`).
    """
    if tie_rule not in ("lex", "random"):
        raise ValueError("tie_rule must be 'lex' or 'random'")
    if sample.horizon < nk[-1]:
        raise ValueError(f"sample horizon {sample.horizon} < n_k = {nk[-1]}")
    num = sample.scaled()
    if num is None:
        raise ValueError("extraction needs 53-bit dyadic points (as produced by sample_covering)")
    spec = sample.spec
    gen = rng.generator(tie_seed, 0x71E)
    levels: list[ExtractionLevel] = []

    # level 1
    n1 = nk[0]
    N1 = n1 // 2
    M1 = _ceil_int(2.0 / float(spec.delta(n1)))
    lv = ExtractionLevel(1, M1, N1, None, M1, True, 1.0)
    for i in range(1, N1 + 1):
        a, b, tie = _pick_square(int(num[i - 1, 0]), int(num[i - 1, 1]), M1, None, tie_rule, gen)
        lv.indices.append(i)
        lv.ix.append(a)
        lv.iy.append(b)
        if tie:
            lv.ties.append(i)
    levels.append(lv)
    Ntilde = N1
    denom = M1

    for k in range(2, len(nk) + 1):
        prev_n, cur_n = nk[k - 2], nk[k - 1]
        m_k = (cur_n - prev_n) // Ntilde
        Nk = m_k // (2 * denom * denom)  # floor(m_k * area / 2), area = denom^-2
        Mk = _ceil_int(2.0 / (float(spec.delta(cur_n)) * denom))
        new_denom = denom * Mk
        q = omega_bound(k, nk, spec, Ntilde, 256.0 if not relaxed else 0.0)
        lv = ExtractionLevel(k, Mk, Nk, m_k, new_denom, True, q)
        hits_min = None
        parents = levels[-1]
        for l in range(Ntilde):
            start = prev_n + l * m_k  # 0-based index of xi_{start + 1}
            block = num[start:start + m_k]
            pa, pb = parents.ix[l], parents.iy[l]
            inside = _in_closed(block[:, 0], pa, denom) & _in_closed(block[:, 1], pb, denom)
            js = np.flatnonzero(inside)
            hits_min = len(js) if hits_min is None else min(hits_min, len(js))
            if len(js) < Nk or Nk == 0:
                lv.omega = False
                break
            for j0 in js[:Nk]:
                i = start + int(j0) + 1
                a, b, tie = _pick_square(int(num[i - 1, 0]), int(num[i - 1, 1]), new_denom, (pa, pb, Mk),
                                         tie_rule, gen)
                lv.indices.append(i)
                lv.ix.append(a)
                lv.iy.append(b)
                if tie:
                    lv.ties.append(i)
        lv.hits_min = hits_min
        levels.append(lv)
        if not lv.omega:
            break
        Ntilde *= Nk
        denom = new_denom

    res = ExtractionResult(tuple(nk), levels, spec, sample.seed, tie_rule, relaxed)
    if check:
        check_extraction(res, sample)
    return res


def check_extraction(res: ExtractionResult, sample: CoveringSample) -> None:
    """Raise ExtractionInvariantError unless every built square satisfies
    xi_i ∈ Q_i ⊂ B_i and the side is at most delta_{n_k} / 2."""
    num = sample.scaled()
    spec = res.spec
    for lv in res.levels:
        if not lv.omega:
            continue
        dk = float(spec.delta(res.nk[lv.k - 1]))
        if Fraction(1, lv.denom) > Fraction(dk) / 2:
            raise ExtractionInvariantError(f"level {lv.k}: side 1/{lv.denom} exceeds delta/2")
        for i, a, b in zip(lv.indices, lv.ix, lv.iy):
            x, y = int(num[i - 1, 0]), int(num[i - 1, 1])
            if not (a * _SCALE <= x * lv.denom <= (a + 1) * _SCALE and b * _SCALE <= y * lv.denom <= (b + 1) * _SCALE):
                raise ExtractionInvariantError(f"xi_{i} not in its square")
            if not square_in_ball(a, b, lv.denom, x, y, float(spec.delta(i))):
                raise ExtractionInvariantError(f"square of xi_{i} not inside B_{i}")


def extraction_invariants(res: ExtractionResult) -> dict:
    """Numerical checks of the growth estimates on a completed extraction."""
    spec = res.spec
    out = {}
    prod = 1
    Ntilde = None
    for lv in res.levels:
        if not lv.omega:
            break
        prod *= lv.M
        dk = float(spec.delta(res.nk[lv.k - 1]))
        out[f"prodM_le_4_over_delta_{lv.k}"] = prod <= 4 / dk
        if lv.k >= 2:
            nkk = res.nk[lv.k - 1]
            out[f"m_ge_n_over_4N_{lv.k}"] = lv.m >= nkk / (4 * Ntilde)
            out[f"N_ge_n_delta3_over_16_{lv.k}"] = lv.N >= nkk * float(spec.delta(res.nk[lv.k - 2])) ** 3 / 16
        Ntilde = lv.N if Ntilde is None else Ntilde * lv.N
    return out


# ---------------------------------------------------------------------------
# Lebesgue dichotomy (finite horizon)


def _torus_d2(p: np.ndarray, q: np.ndarray) -> np.ndarray:
    d = np.abs(p - q)
    d = np.minimum(d, 1.0 - d)
    return (d * d).sum(axis=-1)


def covered_fraction(sample: CoveringSample, lo: int, hi: int, grid: int = 64) -> float:
    """Fraction of a grid x grid lattice of test points covered by some ball
    B(xi_n, delta_n) with lo <= n <= hi (torus distance)."""
    g = (np.arange(grid) + 0.5) / grid
    pts = np.stack(np.meshgrid(g, g, indexing="ij"), axis=-1).reshape(-1, 2)
    covered = np.zeros(len(pts), dtype=bool)
    ns = np.arange(lo, hi + 1)
    rad = np.asarray(sample.spec.delta(ns))
    cells = grid
    # bucket balls by the lattice cells they can reach
    for n, r in zip(ns, rad):
        c = sample.xi[n - 1]
        span = int(math.ceil(r * cells)) + 1
        i0, j0 = int(c[0] * cells), int(c[1] * cells)
        ii = (np.arange(i0 - span, i0 + span + 1) % cells)
        jj = (np.arange(j0 - span, j0 + span + 1) % cells)
        if len(ii) >= cells:
            ii = np.arange(cells)
        if len(jj) >= cells:
            jj = np.arange(cells)
        idx = (ii[:, None] * cells + jj[None, :]).ravel()
        hit = _torus_d2(pts[idx], c[None, :]) <= r * r
        covered[idx[hit]] = True
    return float(covered.mean())


def dichotomy_trend(spec: CoveringSpec, horizons: Sequence[int], seed: int, grid: int = 64) -> list[float]:
    """Covered fraction of the tail window (N/2, N] for each horizon N; this
    decreases with N when the ball areas are summable and tends to 1 otherwise."""
    sample = sample_covering(spec, max(horizons), seed)
    return [covered_fraction(sample, N // 2 + 1, N, grid) for N in horizons]


# ---------------------------------------------------------------------------
# anisotropic counterexample


def _interval_cell_count(centers: np.ndarray, lengths: np.ndarray, level: int) -> int:
    """Number of dyadic cells of side 2^-level of the circle meeting the union
    of closed arcs [c - L/2, c + L/2] (mod 1)."""
    cells = 1 << level
    a = (centers - lengths / 2) * cells
    b = (centers + lengths / 2) * cells
    full = (b - a) >= cells
    if np.any(full):
        return cells
    lo = np.floor(a).astype(np.int64)
    hi = np.ceil(b).astype(np.int64) - 1
    hi = np.maximum(hi, lo)
    # arcs start in [-cells, cells) and end below 2 cells; shift and fold
    diff = np.zeros(3 * cells + 1, dtype=np.int64)
    np.add.at(diff, lo + cells, 1)
    np.add.at(diff, hi + cells + 1, -1)
    cover = np.cumsum(diff)[: 3 * cells] > 0
    folded = cover[:cells] | cover[cells:2 * cells] | cover[2 * cells:]
    return int(folded.sum())


def _fit(xs: np.ndarray, ys: np.ndarray) -> tuple[float, float]:
    A = np.vstack([xs, np.ones_like(xs)]).T
    coef, *_ = np.linalg.lstsq(A, ys, rcond=None)
    pred = A @ coef
    ss = float(((ys - ys.mean()) ** 2).sum())
    r2 = 1.0 - float(((ys - pred) ** 2).sum()) / ss if ss > 0 else 1.0
    return float(coef[0]), r2


@dataclass(frozen=True)
class AnisoReport:
    alpha: float
    beta: float
    N: int
    K: int
    seed: int
    levels: tuple[int, ...]
    counts_x: tuple[int, ...]
    counts_y: tuple[int, ...]
    slope_x: float
    slope_y: float
    r2_x: float
    r2_y: float

    @property
    def y_below_x(self) -> bool:
        return self.slope_y < self.slope_x


def aniso_experiment(alpha: float, beta: float, N: int, seed: int, K: int = 3,
                     levels: Sequence[int] = tuple(range(4, 21))) -> AnisoReport:
    """Box-count slopes of the x- and y-projections of the stage-K set
    ∩_{k<=K} ∪_{k<=n<=N} (xi_n + g_n), g_n a centred n^-alpha by n^-beta rectangle.

    The sets ∪_{n>=k} decrease in k, so the stage-K set is ∪_{K<=n<=N}.
    """
    if not beta >= alpha > 1:
        raise ValueError("need beta >= alpha > 1")
    spec = CoveringSpec(alpha, shape="rect", beta=beta)
    sample = sample_covering(spec, N, seed)
    ns = np.arange(K, N + 1)
    lx, ly = spec.sides(ns)
    xi = sample.xi[K - 1:]
    cx = [_interval_cell_count(xi[:, 0], lx, L) for L in levels]
    cy = [_interval_cell_count(xi[:, 1], ly, L) for L in levels]
    logs = np.array(levels, dtype=float) * math.log(2)
    sx, rx = _fit(logs, np.log(cx))
    sy, ry = _fit(logs, np.log(cy))
    return AnisoReport(alpha, beta, N, K, int(seed), tuple(levels), tuple(cx), tuple(cy), sx, sy, rx, ry)
