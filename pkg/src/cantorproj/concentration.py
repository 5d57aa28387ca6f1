"""Good events, their Chernoff-type bounds, and conditional Monte-Carlo checks.

Bounds are evaluated through their logarithms; the public evaluators return
``exp(log_value)``, which may be ``inf`` (never clamped). A bound >= 1 is
called vacuous and carries no information.
"""
from __future__ import annotations

import csv
import math
import warnings
from dataclasses import dataclass, field
from fractions import Fraction
from statistics import NormalDist
from typing import Sequence

import numpy as np

from . import rng
from .cantor import Construction, extend
from .errors import ParameterWarning
from .geometry import (DEFAULT_FAMILY_GUARD, LineArray, Strip, StripFamily, family_line_lengths,
                       line_family, line_family_size, sample_strip_family, strip_counts, strip_family,
                       strip_family_size)
from .grid import GridSequence

SQRT2 = math.sqrt(2.0)
STRIP_BOUND_COEFF = 20.0  # stated coefficient; the proof's (e - 1) * 5 * sqrt(2) is about 12.15
STRIP_MGF_COEFF = (math.e - 1) * 5 * SQRT2


def _exp(x: float) -> float:
    try:
        return math.exp(x)
    except OverflowError:
        return math.inf


@dataclass(frozen=True)
class BoundParams:
    """Exponents and constants of the good events.

    ``s`` is the dimension value of the sequence under study; ``t < s`` and
    ``0 < 2 eps < s - t`` are enforced, except that ``eps == 0`` is accepted
    with a warning so the degenerate case can be inspected.
    """

    t: float
    eps: float
    s: float
    R: float = 1.0
    C0: float = 1.0
    C2: float | None = None
    C3: float | None = None

    def __post_init__(self):
        if not self.t < self.s:
            raise ValueError(f"need t < s (t={self.t}, s={self.s})")
        if self.eps == 0:
            warnings.warn("eps = 0: failure bounds do not decay along levels", ParameterWarning, stacklevel=3)
        elif not 0 < 2 * self.eps < self.s - self.t:
            raise ValueError(f"need 0 < 2 eps < s - t (eps={self.eps}, s - t={self.s - self.t})")
        if self.R <= 0:
            raise ValueError("R must be positive")

    def with_(self, **kw) -> BoundParams:
        d = dict(t=self.t, eps=self.eps, s=self.s, R=self.R, C0=self.C0, C2=self.C2, C3=self.C3)
        d.update(kw)
        with warnings.catch_warnings():
            warnings.simplefilter("ignore", ParameterWarning)
            return BoundParams(**d)


# ---------------------------------------------------------------------------
# thresholds and families


def g_threshold(seq: GridSequence, n: int, p: BoundParams) -> float:
    """R P_n r_n^(t+1) + r_n."""
    r = float(seq.r(n))
    return p.R * seq.count(n) * r ** (p.t + 1) + r


def a_threshold(seq: GridSequence, n: int, w, p: BoundParams, five_t: bool = True) -> np.ndarray:
    """500 * 5^t * R * P_n * w^t (``five_t=False`` drops the 5^t factor)."""
    k = 500.0 * (5.0 ** p.t if five_t else 1.0) * p.R * seq.count(n)
    return k * np.asarray(w, dtype=np.float64) ** p.t


def level_strip_family(seq: GridSequence, n: int, max_size: int = DEFAULT_FAMILY_GUARD) -> StripFamily:
    """Strips tested by A(., n): the approximating strip family for M = 5 / r_n, widths <= r_{n-1}."""
    return strip_family(5 * seq.denominator(n), max_size=max_size, max_width=float(seq.r(n - 1)))


def level_strip_family_size(seq: GridSequence, n: int) -> int:
    return strip_family_size(5 * seq.denominator(n), max_width=float(seq.r(n - 1)))


def sample_level_strips(seq: GridSequence, n: int, count: int, gen: np.random.Generator):
    return sample_strip_family(5 * seq.denominator(n), count, gen, max_width=float(seq.r(n - 1)))


# ---------------------------------------------------------------------------
# events


def event_G(c: Construction, n: int, p: BoundParams, max_size: int = DEFAULT_FAMILY_GUARD) -> bool:
    """G_n on the finite family: every family line has |l ∩ F_n| <= R P_n r_n^(t+1) + r_n."""
    lines = line_family(c.seq.r(n), max_size=max_size)
    return bool(family_line_lengths(c, n, lines).max(initial=0.0) <= g_threshold(c.seq, n, p))


def event_A(c: Construction, n: int, p: BoundParams, max_size: int = DEFAULT_FAMILY_GUARD,
            family=None) -> bool:
    """A_n on the finite family: Z(S, n) <= 500 * 5^t R P_n w(S)^t for every tested strip."""
    if n < 1:
        raise ValueError("event A needs n >= 1")
    fam = level_strip_family(c.seq, n, max_size) if family is None else family
    for nx, ny, lo, hi, w in fam.chunks():
        if np.any(strip_counts(c, n, nx, ny, lo, hi) > a_threshold(c.seq, n, w, p)):
            return False
    return True


def required_R(c: Construction, n: int, p: BoundParams, max_size: int = DEFAULT_FAMILY_GUARD,
               events: str = "AG") -> float:
    """Smallest R for which the requested events hold at level n for this sample."""
    need = 0.0
    r = float(c.seq.r(n))
    P = c.seq.count(n)
    if "G" in events:
        lines = line_family(c.seq.r(n), max_size=max_size)
        vmax = float(family_line_lengths(c, n, lines).max(initial=0.0))
        need = max(need, (vmax - r) / (P * r ** (p.t + 1)))
    if "A" in events:
        fam = level_strip_family(c.seq, n, max_size)
        unit = p.with_(R=1.0)
        for nx, ny, lo, hi, w in fam.chunks():
            z = strip_counts(c, n, nx, ny, lo, hi)
            need = max(need, float((z / a_threshold(c.seq, n, w, unit)).max(initial=0.0)))
    return need


# ---------------------------------------------------------------------------
# strip bound (Chernoff)


def _check_width(w: float, n: int, seq: GridSequence) -> None:
    # the closed lower end is admitted: the tested families contain w = r_{n+1}
    # and the argument goes through unchanged there
    lo, hi = float(seq.r(n + 1)), float(seq.r(n))
    if not (lo * (1 - 1e-12) <= w <= hi * (1 + 1e-12)):
        raise ValueError(f"width {w} outside [r_{n + 1}, r_{n}] = [{lo}, {hi}]")


def log_chernoff_strip_rhs(w: float, n: int, Zn: int, seq: GridSequence, p: BoundParams,
                           coeff: float = STRIP_BOUND_COEFF) -> float:
    _check_width(w, n, seq)
    P1 = seq.count(n + 1)
    return -500.0 * p.R * w ** p.t * P1 + coeff * w * seq.denominator(n) * seq.N[n] * Zn


def chernoff_strip_rhs(w: float, n: int, Zn: int, seq: GridSequence, p: BoundParams,
                       coeff: float = STRIP_BOUND_COEFF) -> float:
    """exp(-500 R w^t P_{n+1} + 20 w r_n^-1 N_{n+1} Z(S, n))."""
    return _exp(log_chernoff_strip_rhs(w, n, Zn, seq, p, coeff))


@dataclass(frozen=True)
class MGFBound:
    exact: float
    closed_form: float
    log_exact: float
    log_closed_form: float


def mgf_strip_bound(m_counts: Sequence[int], M_next: int, N_next: int, w: float | None = None,
                    r_n: float | None = None) -> MGFBound:
    """Exact E(e^{Z(S, n+1)} | F_n) = prod_i (e q_i + 1 - q_i)^N, q_i = m_i / M^2,
    with the exponential upper bound exp((e-1) 5 sqrt2 w r_n^-1 N K) when w, r_n are given."""
    m = np.asarray(m_counts, dtype=np.int64)
    if np.any(m < 0) or np.any(m > M_next * M_next):
        raise ValueError("each m_i must lie in [0, M_next^2]")
    q = m / float(M_next * M_next)
    log_exact = float(N_next * np.log1p((math.e - 1) * q).sum())
    if w is None or r_n is None:
        log_closed_form = math.nan
    else:
        log_closed_form = STRIP_MGF_COEFF * w / r_n * N_next * len(m)
    return MGFBound(_exp(log_exact), _exp(log_closed_form) if not math.isnan(log_closed_form) else math.nan,
                    log_exact, log_closed_form)


def child_hit_table(c: Construction, n: int, strip: Strip, parents: np.ndarray | None = None):
    """For level-n entries meeting the strip: their indices and, per entry, a
    boolean mask over the M_{n+1}^2 child cells (cell index = row * M + col)
    telling which children meet it. Brute force over all children."""
    seq = c.seq
    m = seq.M[n]
    d1 = seq.denominator(n + 1)
    ix, iy = c.coords(n)
    ix = np.asarray(ix, dtype=np.int64)
    iy = np.asarray(iy, dtype=np.int64)
    nx, ny = strip.line.normal
    if parents is None:
        x0, y0, side = c.float_squares(n)
        base = nx * x0 + ny * y0
        pmin = base + side * (min(nx, 0.0) + min(ny, 0.0))
        pmax = base + side * (max(nx, 0.0) + max(ny, 0.0))
        parents = np.flatnonzero((pmax > strip.lo) & (pmin < strip.hi))
    cells = np.arange(m * m)
    ccol, crow = cells % m, cells // m
    cx = (ix[parents, None] * m + ccol[None, :]) / d1
    cy = (iy[parents, None] * m + crow[None, :]) / d1
    side = 1.0 / d1
    base = nx * cx + ny * cy
    pmin = base + side * (min(nx, 0.0) + min(ny, 0.0))
    pmax = base + side * (max(nx, 0.0) + max(ny, 0.0))
    return parents, (pmax > strip.lo) & (pmin < strip.hi)


def geometric_hit_bound(w: float, r_n: float) -> float:
    """5 sqrt2 w / r_n, the bound on m_i / M_{n+1}^2."""
    return 5 * SQRT2 * w / r_n


def simulate_conditional_Z(mask: np.ndarray, N_next: int, trials: int, seed: int, *path: int) -> np.ndarray:
    """Samples of Z(S, n+1) given F_n: each of the K parents receives N_next
    uniform children; ``mask`` is the (K, M^2) child-hit table."""
    K, cells = mask.shape
    gen = rng.generator(seed, *path)
    out = np.zeros(trials, dtype=np.int64)
    if K == 0:
        return out
    step = max(1, (1 << 22) // (K * N_next))
    rows = np.arange(K)[None, :, None]
    for s in range(0, trials, step):
        e = min(s + step, trials)
        draws = gen.integers(0, cells, size=(e - s, K, N_next))
        out[s:e] = mask[rows, draws].sum(axis=(1, 2))
    return out


def exact_tail(mask: np.ndarray, N_next: int, threshold: float) -> float:
    """P(Z(S, n+1) > threshold | F_n) exactly: Z is a sum of independent
    Binomial(N_next, m_i / M^2) counts, one per parent meeting the strip."""
    K, cells = mask.shape
    if K * N_next <= threshold:
        return 0.0
    dist = np.ones(1)
    for q in mask.sum(axis=1) / cells:
        k = np.arange(N_next + 1)
        pmf = np.array([math.comb(N_next, j) for j in k], dtype=float) * q**k * (1 - q) ** (N_next - k)
        dist = np.convolve(dist, pmf)
    cut = math.floor(threshold) + 1
    return float(dist[cut:].sum()) if cut < len(dist) else 0.0


# ---------------------------------------------------------------------------
# line bound


def lambda_interval(n: int, seq: GridSequence) -> tuple[float, float]:
    return 0.0, 1.0 / (float(seq.r(n + 1)) * SQRT2)


def proof_lambda(n: int, seq: GridSequence, p: BoundParams) -> float:
    """lambda = r_{n+1}^(-1 + eps)."""
    return float(seq.r(n + 1)) ** (-1 + p.eps)


def default_lambda(n: int, seq: GridSequence, p: BoundParams, shrink: float = 0.99) -> float:
    """proof_lambda when it is admissible, else `shrink` times the upper end.

    The moment bound holds for every lambda in the open interval; the proof's
    choice only lands inside it once r_{n+1}^eps < 1 / sqrt2.
    """
    lam = proof_lambda(n, seq, p)
    hi = lambda_interval(n, seq)[1]
    return lam if lam < hi else shrink * hi


def log_mgf_line_rhs(len_n: float, lam: float, n: int, seq: GridSequence, p: BoundParams) -> float:
    lo, hi = lambda_interval(n, seq)
    if not lo < lam < hi:
        raise ValueError(f"lambda {lam} outside (0, {hi})")
    r1 = float(seq.r(n + 1))
    m1, n1 = seq.M[n], seq.N[n]
    first = -lam * seq.count(n + 1) * p.R * r1 ** (p.t + 1)
    second = 2 * lam * n1 * len_n / (m1 * m1 * (2 - r1 * lam * SQRT2))
    return first + second


def mgf_line_rhs(len_n: float, lam: float, n: int, seq: GridSequence, p: BoundParams) -> float:
    """exp(-lam P_{n+1} R r_{n+1}^(t+1)) * exp(2 lam N_{n+1} len_n / (M_{n+1}^2 (2 - r_{n+1} lam sqrt2)))."""
    return _exp(log_mgf_line_rhs(len_n, lam, n, seq, p))


# ---------------------------------------------------------------------------
# level bounds and constants


def line_family_constant(max_denominator: int = 4096) -> float:
    """Empirical C with |A_n| <= C r_n^-4, the supremum over denominators D."""
    return max(line_family_size(Fraction(1, d)) / d**4 for d in range(1, max_denominator + 1))


@dataclass(frozen=True)
class LevelBounds:
    n: int
    boundA: float
    boundG: float
    log_boundA: float
    log_boundG: float


def level_failure_bounds(n: int, seq: GridSequence, p: BoundParams, C_line: float | None = None) -> LevelBounds:
    """boundA = 2000 r^-3 exp(-C3 r^-eps) and boundG = C r^-4 exp(-C2 r^-eps), r = r_{n+1}.

    The decaying form exp(-C3 r^-eps) is the one the strip argument derives.
    """
    if n < 1:
        raise ValueError("n must be >= 1")
    if p.C2 is None or p.C3 is None:
        raise ValueError("C2 and C3 must be set (see fit_constants)")
    if p.eps == 0:
        warnings.warn("eps = 0: failure bounds do not decay along levels", ParameterWarning, stacklevel=2)
    C = line_family_constant(64) if C_line is None else C_line
    logD = sum(math.log(m) for m in seq.M[: n + 1])  # -log r_{n+1}
    decay = math.exp(p.eps * logD)  # r_{n+1}^-eps
    la = math.log(2000) + 3 * logD - p.C3 * decay
    lg = math.log(C) + 4 * logD - p.C2 * decay
    return LevelBounds(n, _exp(la), _exp(lg), la, lg)


def partial_products(seq: GridSequence, p: BoundParams, start: int, stop: int,
                     C_line: float | None = None) -> list[float]:
    """prod_{m=start}^{k} (1 - boundA - boundG) for k = start..stop, using the
    level-m bounds (indexed by r_m, i.e. level_failure_bounds(m - 1))."""
    out, acc = [], 1.0
    for m in range(start, stop + 1):
        b = level_failure_bounds(m - 1, seq, p, C_line)
        acc *= 1.0 - b.boundA - b.boundG
        out.append(acc)
    return out


def _c3_at(seq: GridSequence, n: int, p: BoundParams, grid: int = 64) -> float:
    """min over r_{n+1} < w <= r_n of w^t P_{n+1} R (500 - 400 (w / r_n)^(1-t)) r_{n+1}^eps."""
    r0, r1 = float(seq.r(n)), float(seq.r(n + 1))
    w = np.geomspace(r1, r0, grid)
    val = w ** p.t * seq.count(n + 1) * p.R * (500 - 400 * (w / r0) ** (1 - p.t))
    return float(val.min() * r1 ** p.eps)


def _c2_at(seq: GridSequence, n: int, p: BoundParams) -> float:
    """P_{n+1} R r_{n+1}^(t + 2 eps) times the bracket of the line argument at lambda = r_{n+1}^(eps - 1)."""
    r0, r1 = float(seq.r(n)), float(seq.r(n + 1))
    m1 = seq.M[n]
    bracket = 1 - 2 * m1 ** (p.t - 1) * (1 + 1 / (seq.count(n) * p.R * r0 ** p.t)) / (2 - r1 ** p.eps * SQRT2)
    return seq.count(n + 1) * p.R * r1 ** (p.t + 2 * p.eps) * bracket


def fit_constants(seq: GridSequence, p: BoundParams, levels: Sequence[int]) -> BoundParams:
    """C2, C3 as the minima over `levels` of the quantities the proofs bound below.
    A non-positive value means the proof inequality fails at some tested level."""
    c3 = min(_c3_at(seq, n, p) for n in levels)
    c2 = min(_c2_at(seq, n, p) for n in levels)
    return p.with_(C2=c2, C3=c3)


def calibrate_R(seq: GridSequence, p: BoundParams, seeds: Sequence[int], levels: Sequence[int] = (1, 2, 3),
                coverage: float = 0.95, max_size: int = DEFAULT_FAMILY_GUARD,
                a_from: int = 2) -> tuple[float, list[float]]:
    """Smallest power of two R such that A_n (n >= a_from) and G_n hold at every
    listed level in at least `coverage` of the seeds. Also returns the
    per-seed minimal R."""
    from .cantor import generate

    depth = max(levels)
    needs = []
    for sd in seeds:
        c = generate(seq, depth, sd)
        need = 0.0
        for n in levels:
            need = max(need, required_R(c, n, p, max_size, "AG" if n >= a_from else "G"))
        needs.append(need)
    target = float(np.quantile(np.asarray(needs), coverage, method="higher"))
    k = math.ceil(math.log2(target)) if target > 0 else -60
    R = 2.0 ** k
    while sum(x <= R for x in needs) < coverage * len(needs):
        R *= 2
    return R, needs


# ---------------------------------------------------------------------------
# conditional Monte-Carlo


def wilson_interval(k: int, n: int, level: float = 0.95) -> tuple[float, float]:
    if n <= 0:
        raise ValueError("need at least one trial")
    z = NormalDist().inv_cdf(0.5 + level / 2)
    ph = k / n
    den = 1 + z * z / n
    mid = (ph + z * z / (2 * n)) / den
    half = z * math.sqrt(ph * (1 - ph) / n + z * z / (4 * n * n)) / den
    # the endpoints at k = 0 and k = n are exactly 0 and 1
    return (0.0 if k == 0 else max(0.0, mid - half)), (1.0 if k == n else min(1.0, mid + half))


@dataclass
class FailureEstimate:
    event: str
    level: int
    trials: int
    failures: int
    p_hat: float
    ci: tuple[float, float]
    bound: float
    members: int
    vacuous: bool = field(init=False)

    def __post_init__(self):
        self.vacuous = not self.bound < 1

    @property
    def ok(self) -> bool | None:
        """None when the bound is vacuous (not scored)."""
        return None if self.vacuous else self.ci[1] <= self.bound


def _tested_strips(c: Construction, n: int, family, max_size: int):
    """Strips with r_{n+1} < w <= r_n for the level-(n+1) strip events."""
    if family is not None:
        return family
    return strip_family(5 * c.seq.denominator(n + 1), max_size=max_size, max_width=float(c.seq.r(n)))


def conditional_failure_estimate(c: Construction, n: int, event: str, trials: int, seed: int,
                                 p: BoundParams, family=None, max_size: int = DEFAULT_FAMILY_GUARD,
                                 lam: float | None = None) -> FailureEstimate:
    """Redraw level n+1 given F_n `trials` times and count failures.

    ``event="A"``: some tested strip (r_{n+1} < w <= r_n) has
    Z(S, n+1) > 500 R P_{n+1} w^t; the bound is the union over the strips of
    the Chernoff right-hand side.
    ``event="G"``: some family line has |l ∩ F_{n+1}| > R P_{n+1} r_{n+1}^(t+1);
    the bound is the union of the moment-generating right-hand sides at
    ``lam`` (default r_{n+1}^(eps - 1), pulled inside the admissible interval).
    """
    if trials < 100:
        raise ValueError("need at least 100 trials")
    if event not in ("A", "G"):
        raise ValueError("event must be 'A' or 'G'")
    if n < 1 or n >= len(c.seq) or n > c.depth:
        raise IndexError(f"cannot redraw level {n + 1}")
    seq = c.seq
    base = c.truncate(n)
    if event == "A":
        fam = _tested_strips(c, n, family, max_size)
        arrays = list(fam.chunks())
        logs = []
        for nx, ny, lo, hi, w in arrays:
            zn = strip_counts(base, n, nx, ny, lo, hi)
            for wi, zi in zip(w, zn):
                logs.append(log_chernoff_strip_rhs(float(wi), n, int(zi), seq, p))
        members = len(logs)

        def failed(c1):
            for nx, ny, lo, hi, w in arrays:
                if np.any(strip_counts(c1, n + 1, nx, ny, lo, hi) > a_threshold(seq, n + 1, w, p, five_t=False)):
                    return True
            return False
    else:
        lines = family if family is not None else line_family(seq.r(n + 1), max_size=max_size)
        lam = default_lambda(n, seq, p) if lam is None else lam
        len_n = family_line_lengths(base, n, lines)
        logs = [log_mgf_line_rhs(float(v), lam, n, seq, p) for v in len_n]
        members = len(logs)
        thr = p.R * seq.count(n + 1) * float(seq.r(n + 1)) ** (p.t + 1)

        def failed(c1):
            return bool(family_line_lengths(c1, n + 1, lines).max(initial=0.0) > thr)

    bound = _exp(float(np.logaddexp.reduce(np.asarray(logs)))) if logs else 0.0
    fails = 0
    for k in range(trials):
        c1 = extend(base, n + 1, seed=rng.derive_seed(seed, n, k), seq=seq)
        fails += failed(c1)
    return FailureEstimate(event, n + 1, trials, fails, fails / trials, wilson_interval(fails, trials),
                           bound, members)


AUDIT_FIELDS = ["level", "kind", "members", "bound", "p_hat", "ci_low", "ci_high", "vacuous", "ok"]


def audit_rows(results: Sequence[FailureEstimate]) -> list[dict]:
    return [dict(level=r.level, kind=r.event, members=r.members, bound=repr(r.bound), p_hat=repr(r.p_hat),
                 ci_low=repr(r.ci[0]), ci_high=repr(r.ci[1]), vacuous=int(r.vacuous),
                 ok="" if r.ok is None else int(r.ok)) for r in results]


def write_audit_csv(path, rows: Sequence[dict], fields: Sequence[str] = AUDIT_FIELDS) -> None:
    with open(path, "w", newline="") as fh:
        w = csv.DictWriter(fh, fieldnames=list(fields))
        w.writeheader()
        for row in rows:
            w.writerow(row)


def strip_audit(c: Construction, n: int, strips: Sequence[Strip], trials: int, seed: int,
                p: BoundParams) -> list[dict]:
    """Per-strip comparison of P(Z(S, n+1) > 500 R P_{n+1} w^t | F_n) with its
    Chernoff right-hand side. Z(S, n+1) is simulated from the exact child-hit
    table of each parent, which is the conditional law itself."""
    seq = c.seq
    rows = []
    for j, s in enumerate(strips):
        parents, mask = child_hit_table(c, n, s)
        zn = len(parents)
        rhs_log = log_chernoff_strip_rhs(s.width, n, zn, seq, p)
        thr = float(a_threshold(seq, n + 1, s.width, p, five_t=False))
        z = simulate_conditional_Z(mask, seq.N[n], trials, seed, n, j)
        k = int((z > thr).sum())
        lo, hi = wilson_interval(k, trials)
        rhs = _exp(rhs_log)
        vac = not rhs < 1
        rows.append(dict(level=n + 1, kind="strip", index=j, width=repr(s.width), Zn=zn, threshold=repr(thr),
                         bound=repr(rhs), log_bound=repr(rhs_log), p_hat=repr(k / trials), ci_low=repr(lo),
                         ci_high=repr(hi), p_exact=repr(exact_tail(mask, seq.N[n], thr)), vacuous=int(vac),
                         ok="" if vac else int(hi <= rhs)))
    return rows


def line_audit(c: Construction, n: int, lines: LineArray, trials: int, seed: int, p: BoundParams,
               lam: float | None = None) -> list[dict]:
    """Per-line comparison of P(|l ∩ F_{n+1}| > R P_{n+1} r_{n+1}^(t+1) | F_n)
    with the moment-generating right-hand side."""
    seq = c.seq
    lam = default_lambda(n, seq, p) if lam is None else lam
    len_n = family_line_lengths(c.truncate(n), n, lines)
    thr = p.R * seq.count(n + 1) * float(seq.r(n + 1)) ** (p.t + 1)
    hits = np.zeros(len(lines), dtype=np.int64)
    base = c.truncate(n)
    for k in range(trials):
        c1 = extend(base, n + 1, seed=rng.derive_seed(seed, n, k), seq=seq)
        hits += family_line_lengths(c1, n + 1, lines) > thr
    rows = []
    for j in range(len(lines)):
        rhs_log = log_mgf_line_rhs(float(len_n[j]), lam, n, seq, p)
        rhs = _exp(rhs_log)
        lo, hi = wilson_interval(int(hits[j]), trials)
        vac = not rhs < 1
        rows.append(dict(level=n + 1, kind="line", index=j, width="", Zn=repr(float(len_n[j])), threshold=repr(thr),
                         bound=repr(rhs), log_bound=repr(rhs_log), p_hat=repr(float(hits[j] / trials)), ci_low=repr(lo),
                         ci_high=repr(hi), p_exact="", vacuous=int(vac), ok="" if vac else int(hi <= rhs)))
    return rows


ROW_FIELDS = ["level", "kind", "index", "width", "Zn", "threshold", "bound", "log_bound", "p_hat",
              "ci_low", "ci_high", "p_exact", "vacuous", "ok"]
