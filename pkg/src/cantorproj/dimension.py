"""Box-counting of projections and local-dimension scans.

Projection onto a line l means the coordinate t = d.p along its direction
d; a mesh of size eps on l is the set of cells [i eps, (i + 1) eps).
"""
from __future__ import annotations

import csv
import math
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass
from typing import Sequence

import numpy as np

from . import _kernels, rng
from .cantor import Construction, measure_mass, project_mass_interval
from .concentration import (BoundParams, a_threshold, level_strip_family, level_strip_family_size,
                            sample_level_strips)
from .geometry import DEFAULT_FAMILY_GUARD, Line, Strip, strip_counts

_CELL_TOL = 1e-9


def _projected_intervals(c: Construction, n: int, line: Line) -> tuple[np.ndarray, np.ndarray]:
    dx, dy = line.direction
    x0, y0, side = c.float_squares(n)
    base = dx * x0 + dy * y0
    return base + side * (min(dx, 0.0) + min(dy, 0.0)), base + side * (max(dx, 0.0) + max(dy, 0.0))


def _union_cells(lo: np.ndarray, hi: np.ndarray) -> int:
    """Size of the union of integer ranges [lo_i, hi_i]."""
    if lo.size == 0:
        return 0
    order = np.argsort(lo, kind="stable")
    lo, hi = lo[order], hi[order]
    reach = np.maximum.accumulate(hi)
    prev = np.concatenate([[lo[0] - 1], reach[:-1]])
    start = np.maximum(lo, prev + 1)
    return int(np.maximum(hi - start + 1, 0).sum())


def boxcount_projection(c: Construction, n: int, line: Line, eps: float) -> int:
    """Number of eps-cells on the line meeting the projection of F_n.

    A cell counts when its interior meets a projected square; values within
    1e-9 cells of a cell boundary are snapped to it, so projections lying on
    the lattice are not inflated by rounding.
    """
    if not eps > 0:
        raise ValueError("eps must be positive")
    a, b = _projected_intervals(c, n, line)
    lo = np.floor(a / eps + _CELL_TOL).astype(np.int64)
    hi = np.ceil(b / eps - _CELL_TOL).astype(np.int64) - 1
    hi = np.maximum(hi, lo)
    return _union_cells(lo, hi)


@dataclass(frozen=True)
class SlopeReport:
    theta: float
    eps: tuple[float, ...]
    counts: tuple[int, ...]
    slope: float
    r2: float

    def row(self) -> dict:
        return dict(theta=repr(self.theta), slope=repr(self.slope), r2=repr(self.r2),
                    eps=";".join(repr(e) for e in self.eps), counts=";".join(str(k) for k in self.counts))


def fit_slope(eps: Sequence[float], counts: Sequence[int]) -> tuple[float, float]:
    """Least-squares slope of log N(eps) against log(1/eps) and its r^2."""
    if len(eps) < 2:
        raise ValueError("a slope needs at least two mesh sizes")
    x = -np.log(np.asarray(eps, dtype=float))
    y = np.log(np.asarray(counts, dtype=float))
    (slope, icpt), *_ = np.linalg.lstsq(np.vstack([x, np.ones_like(x)]).T, y, rcond=None)
    ss = float(((y - y.mean()) ** 2).sum())
    r2 = 1.0 - float(((y - (slope * x + icpt)) ** 2).sum()) / ss if ss > 0 else 1.0
    return float(slope), r2


def default_eps(c: Construction, n: int, drop: int = 2) -> list[float]:
    """Mesh sizes r_{drop+1}, ..., r_n."""
    return [float(c.seq.r(k)) for k in range(drop + 1, n + 1)]


@dataclass(frozen=True)
class SweepResult:
    reports: tuple[SlopeReport, ...]
    min_slope: float
    argmin_theta: float


def direction_sweep(c: Construction, n: int, K: int, eps_list: Sequence[float] | None = None,
                    threads: int = 1) -> SweepResult:
    """Slopes in the K directions theta_j = j pi / K and their minimum."""
    if K < 2:
        raise ValueError("K must be >= 2")
    eps = list(default_eps(c, n) if eps_list is None else eps_list)
    if len(eps) < 2:
        raise ValueError("degenerate fit: need at least two mesh sizes")

    def one(j: int) -> SlopeReport:
        theta = j * math.pi / K
        line = Line(theta + math.pi / 2, 0.0)  # direction at angle theta
        counts = [boxcount_projection(c, n, line, e) for e in eps]
        slope, r2 = fit_slope(eps, counts)
        return SlopeReport(theta, tuple(eps), tuple(counts), slope, r2)

    if threads > 1:
        with ThreadPoolExecutor(threads) as pool:
            reports = tuple(pool.map(one, range(K)))
    else:
        reports = tuple(one(j) for j in range(K))
    j = int(np.argmin([r.slope for r in reports]))
    return SweepResult(reports, reports[j].slope, reports[j].theta)


def write_sweep_csv(path, result: SweepResult) -> None:
    with open(path, "w", newline="") as fh:
        w = csv.DictWriter(fh, fieldnames=["theta", "slope", "r2", "eps", "counts"])
        w.writeheader()
        for r in result.reports:
            w.writerow(r.row())


def write_sweep_svg(path, result: SweepResult, directions: Sequence[int] | None = None) -> bool:
    """Log-log plot of N(eps) per direction; returns False if matplotlib is missing."""
    try:
        import matplotlib

        matplotlib.use("Agg")
        import matplotlib.pyplot as plt
    except ImportError:
        return False
    reps = result.reports if directions is None else [result.reports[j] for j in directions]
    fig, ax = plt.subplots(figsize=(5, 4))
    for r in reps:
        ax.loglog([1 / e for e in r.eps], r.counts, marker=".", lw=0.6, label=f"{r.theta:.3f}")
    ax.set_xlabel("1/eps")
    ax.set_ylabel("N(eps)")
    if len(reps) <= 8:
        ax.legend(fontsize=6, title="theta")
    fig.tight_layout()
    fig.savefig(path, format="svg")
    plt.close(fig)
    return True


# ---------------------------------------------------------------------------
# local dimension


@dataclass(frozen=True)
class Violation:
    source: str
    theta: float
    center: float
    radius: float
    mass: float
    bound: float


def _perp_strip_mass(c: Construction, n: int, nx: np.ndarray, ny: np.ndarray, lo: np.ndarray,
                     hi: np.ndarray) -> np.ndarray:
    x0, y0, side = c.float_squares(n)
    return float(c.seq.c(n)) * _kernels.strip_clip_areas(x0, y0, side, nx, ny, lo, hi)


def local_dim_scan(c: Construction, n: int, p: BoundParams, samples: int, seed: int,
                   family_levels: Sequence[int] | None = None, max_family: int = 200_000) -> list[Violation]:
    """Instances with (pi_l)_* mu_n(B(x, r)) > C0 r^t.

    Random triples: direction uniform, x the projection of a uniform point of
    the square, r log-uniform in [r_n, 2]. A strip of width w about a line is
    the preimage of B(x, w/2) under projection to the perpendicular line, so
    the level strip families are scanned too (sampled beyond `max_family`).
    """
    gen = rng.generator(seed, 0x1D)
    out: list[Violation] = []
    rn = float(c.seq.r(n))
    for _ in range(samples):
        theta = float(gen.uniform(0, math.pi))
        line = Line(theta, 0.0)
        dx, dy = line.direction
        pt = gen.uniform(0, 1, size=2)
        t = dx * pt[0] + dy * pt[1]
        x = (t * dx, t * dy)
        r = float(math.exp(gen.uniform(math.log(rn), math.log(2.0))))
        mass = project_mass_interval(c, n, line, x, r)
        bound = p.C0 * r ** p.t
        if mass > bound:
            out.append(Violation("random", theta, t, r, mass, bound))
    levels = range(1, n + 1) if family_levels is None else family_levels
    for m in levels:
        if level_strip_family_size(c.seq, m) <= max_family:
            chunks = level_strip_family(c.seq, m).chunks()
        else:
            chunks = sample_level_strips(c.seq, m, max_family, rng.generator(seed, 0x1E, m)).chunks()
        for nx, ny, lo, hi, w in chunks:
            mass = _perp_strip_mass(c, n, nx, ny, lo, hi)
            bound = p.C0 * (w / 2) ** p.t
            for k in np.flatnonzero(mass > bound):
                theta = math.atan2(ny[k], nx[k])
                out.append(Violation(f"family{m}", theta, (lo[k] + hi[k]) / 2, w[k] / 2, float(mass[k]),
                                     float(bound[k])))
    return out


@dataclass(frozen=True)
class ClosingCheck:
    level: int
    strips: int
    sampled: bool
    a_true: int
    violations: int
    max_ratio: float


def closing_identity_check(c: Construction, n: int, p: BoundParams, max_size: int = DEFAULT_FAMILY_GUARD,
                           sample: int = 1_000_000, seed: int = 0, rel_tol: float = 1e-12) -> ClosingCheck:
    """For strips S tested by A(., n) with A(S, n) true, check
    mu_n(S) <= 500 * 5^t R w(S)^t. The mass is summed clip areas times c_n;
    `rel_tol` absorbs rounding of that float sum only."""
    size = level_strip_family_size(c.seq, n)
    if size <= max_size:
        fam, sampled = level_strip_family(c.seq, n, max_size), False
    else:
        fam, sampled = sample_level_strips(c.seq, n, sample, rng.generator(seed, 0xC1, n)), True
    total = a_true = bad = 0
    worst = 0.0
    for nx, ny, lo, hi, w in fam.chunks(1 << 18):
        z = strip_counts(c, n, nx, ny, lo, hi)
        ok = z <= a_threshold(c.seq, n, w, p)
        total += len(z)
        if not np.any(ok):
            continue
        mass = _perp_strip_mass(c, n, nx[ok], ny[ok], lo[ok], hi[ok])
        bound = 500.0 * 5.0 ** p.t * p.R * w[ok] ** p.t
        ratio = mass / bound
        a_true += int(ok.sum())
        bad += int((ratio > 1 + rel_tol).sum())
        worst = max(worst, float(ratio.max()))
    return ClosingCheck(n, total, sampled, a_true, bad, worst)


def strip_mass(c: Construction, n: int, strip: Strip) -> float:
    return float(measure_mass(c, n, strip))


def depth_slope_drop_bound(c: Construction, n: int) -> float:
    """log M_{n+1} / sum_{k<=n+1} log M_k + 0.05, the tolerated slope decrease when adding level n+1."""
    logs = [math.log(m) for m in c.seq.M[: n + 1]]
    return logs[-1] / sum(logs) + 0.05


__all__ = ["boxcount_projection", "direction_sweep", "fit_slope", "SlopeReport", "SweepResult", "local_dim_scan",
           "closing_identity_check", "ClosingCheck", "Violation", "write_sweep_csv", "write_sweep_svg",
           "default_eps", "strip_mass", "depth_slope_drop_bound", "strip_counts"]
