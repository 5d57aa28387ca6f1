"""Finite checks of the covering and counting properties and of the conditional hit laws.

Each check returns a plain dict with a ``violations`` count (0 means the
property held on every tested instance) plus whatever context is useful for
a report row.
"""
from __future__ import annotations

import math
from typing import Sequence

import numpy as np

from . import rng
from .cantor import generate
from .concentration import (child_hit_table, geometric_hit_bound, mgf_strip_bound, simulate_conditional_Z)
from .geometry import (Line, Strip, covering_strip, lengthtonum_bound, strip_count, strip_family,
                       strip_family_size, sup_line_length)
from .grid import GridSequence


def random_strip(gen: np.random.Generator, w_lo: float, w_hi: float) -> Strip:
    """Strip through a uniform point of the square, uniform direction and width."""
    p = gen.uniform(0, 1, size=2)
    return Strip(Line.through(p, float(gen.uniform(0, math.pi))), float(gen.uniform(w_lo, w_hi)))


def check_strip_family(M_values: Sequence[int], strips: int, seed: int) -> list[dict]:
    """|D| <= 16 M^3 and S ⊂ S~ with w(S~) <= 5 w(S) for random widths in [1/M, 1]."""
    rows = []
    for M in M_values:
        fam = strip_family(M)
        gen = rng.generator(seed, 32, M)
        fails = 0
        for _ in range(strips):
            s = random_strip(gen, 1.0 / M, 1.0)
            if covering_strip(fam, s) is None:
                fails += 1
        size = strip_family_size(M)
        rows.append(dict(check="strip_family", M=M, size=size, size_bound=16 * M**3, strips=strips,
                         violations=fails + int(size > 16 * M**3)))
    return rows


def family_coarsening(denom: int, max_family_denom: int) -> int:
    """Smallest divisor f of denom with denom / f <= max_family_denom."""
    for f in range(1, denom + 1):
        if denom % f == 0 and denom // f <= max_family_denom:
            return f
    return denom


def check_length_to_count(seq: GridSequence, depths: Sequence[int], seeds: Sequence[int], strips: int,
                  max_family_denom: int = 64) -> list[dict]:
    """Z(S, n) <= 2 (1 + 2 sqrt2) V* / r_n for random strips of width <= r_n.

    V* is taken over the line family at spacing f r_n, f chosen so the family
    denominator is at most `max_family_denom`. That family is a subset of the
    full one, so V* can only come out smaller and the check only stricter.
    """
    rows = []
    depth = max(depths)
    for sd in seeds:
        c = generate(seq, depth, sd)
        gen = rng.generator(sd, 33)
        for n in depths:
            d = seq.denominator(n)
            f = family_coarsening(d, max_family_denom)
            V = sup_line_length(c, n, coarsen=f)
            bound = lengthtonum_bound(V, seq.r(n))
            rn = 1.0 / d
            worst, bad = 0, 0
            for _ in range(strips):
                s = random_strip(gen, rn * 1e-6, rn)
                z = strip_count(c, n, s)
                worst = max(worst, z)
                bad += z > bound
            rows.append(dict(check="length_to_count", seed=sd, n=n, coarsen=f, V=V, bound=bound, max_Z=worst,
                             strips=strips, violations=int(bad)))
    return rows


def random_level_strip(c, n: int, gen: np.random.Generator) -> Strip:
    """Strip with r_{n+1} < w <= r_n that meets at least one level-n entry."""
    r0, r1 = float(c.seq.r(n)), float(c.seq.r(n + 1))
    x0, y0, side = c.float_squares(n)
    while True:
        i = int(gen.integers(len(x0)))
        p = (x0[i] + side * gen.uniform(), y0[i] + side * gen.uniform())
        w = float(gen.uniform(r1, r0))
        if w > r1:
            return Strip(Line.through(p, float(gen.uniform(0, math.pi))), w)


def check_hit_law(seq: GridSequence, n: int, pairs: int, draws: int, seed: int) -> list[dict]:
    """Per-child hit probability m_i / M^2 against the frequency of real child draws.

    m_i is counted by brute force over all M^2 children; the draws come from
    the construction's own child stream, redrawn with fresh seeds.
    """
    c = generate(seq, n + 1, seed)
    gen = rng.generator(seed, 5)
    m = seq.M[n]
    rows = []
    for j in range(pairs):
        s = random_level_strip(c, n, gen)
        parents, mask = child_hit_table(c, n, s)
        k = int(gen.integers(len(parents)))
        q = float(mask[k].sum() / (m * m))
        cells = rng.indices(seed, (n + 1, 0xD0, j), 0, draws, m * m)
        freq = float(mask[k][cells].mean())
        sigma = math.sqrt(q * (1 - q) / draws) if 0 < q < 1 else 0.0
        dev = abs(freq - q)
        ok = dev <= 3 * sigma if sigma > 0 else dev == 0
        geo = geometric_hit_bound(s.width, float(seq.r(n)))
        rows.append(dict(check="hit_law", pair=j, m_i=int(mask[k].sum()), q=q, freq=freq, sigma=sigma,
                         geometric_bound=geo, violations=int(not ok) + int(q > geo)))
    return rows


def check_mgf_chain(seq: GridSequence, n: int, configs: int, resamples: int, seed: int) -> list[dict]:
    """MC mean of e^Z <= exact product MGF <= exp((e-1) 5 sqrt2 w r_n^-1 N K), per strip.

    The Monte-Carlo mean must stay below the exact value up to three standard
    errors of the mean (the two agree in expectation).
    """
    c = generate(seq, n + 1, seed)
    gen = rng.generator(seed, 6)
    rn = float(seq.r(n))
    rows = []
    for j in range(configs):
        s = random_level_strip(c, n, gen)
        parents, mask = child_hit_table(c, n, s)
        mvals = mask.sum(axis=1)
        b = mgf_strip_bound(mvals, seq.M[n], seq.N[n], s.width, rn)
        z = simulate_conditional_Z(mask, seq.N[n], resamples, seed, 7, j)
        ez = np.exp(z.astype(float))
        mean = float(ez.mean())
        se = float(ez.std(ddof=1) / math.sqrt(resamples))
        geo_bad = int(np.sum(mvals / seq.M[n] ** 2 > geometric_hit_bound(s.width, rn)))
        ordered = mean <= b.exact + 3 * se and b.exact <= b.closed_form
        rows.append(dict(check="mgf_chain", config=j, K=len(parents), mc_mean=mean, mc_se=se, exact=b.exact,
                         closed_form=b.closed_form, geometric_violations=geo_bad, violations=int(not ordered) + geo_bad))
    return rows
