import math
from fractions import Fraction

import numpy as np
from hypothesis import given, settings
from hypothesis import strategies as st

from cantorproj import _kernels
from cantorproj.cantor import from_digits, generate, measure_mass
from cantorproj.concentration import wilson_interval
from cantorproj.geometry import Line, Strip, line_total_length, strip_count, unit_normals
from cantorproj.grid import GridSequence, Rect, address_from_index, square_index, square_rect

FAST = settings(max_examples=60, deadline=None)


@st.composite
def sequences(draw, max_depth=4):
    depth = draw(st.integers(1, max_depth))
    M = draw(st.lists(st.integers(2, 6), min_size=depth, max_size=depth))
    N = [draw(st.integers(1, min(m * m, 6))) for m in M]
    return GridSequence(tuple(M), tuple(N))


@st.composite
def constructions(draw):
    seq = draw(sequences())
    return generate(seq, len(seq), draw(st.integers(0, 2**64 - 1)))


@FAST
@given(sequences(), st.data())
def test_address_round_trip(seq, data):
    n = len(seq)
    d = seq.denominator(n)
    ix = data.draw(st.integers(0, d - 1))
    iy = data.draw(st.integers(0, d - 1))
    addr = address_from_index(ix, iy, n, seq)
    assert square_index(addr, seq)[:2] == (ix, iy)
    x0, y0, x1, y1 = square_rect(addr, seq)
    assert (x0, y0) == (Fraction(ix, d), Fraction(iy, d)) and x1 - x0 == Fraction(1, d)


@FAST
@given(constructions())
def test_unit_mass_and_refinement_invariance(c):
    for n in range(c.depth + 1):
        assert measure_mass(c, n, Rect.unit()) == 1
    # a level-n grid-aligned rectangle keeps its mass at every deeper level
    for n in range(c.depth):
        d = c.seq.denominator(n)
        R = Rect(Fraction(0), Fraction(0), Fraction(max(1, d // 2), d), Fraction(1))
        assert all(measure_mass(c, k, R) == measure_mass(c, n, R) for k in range(n, c.depth + 1))


@FAST
@given(constructions(), st.fractions(0, 1), st.fractions(0, 1))
def test_mass_additive_on_split(c, a, b):
    n = c.depth
    lo, hi = min(a, b), max(a, b)
    whole = measure_mass(c, n, Rect(0, lo, 1, hi))
    mid = (lo + hi) / 2
    assert measure_mass(c, n, Rect(0, lo, 1, mid)) + measure_mass(c, n, Rect(0, mid, 1, hi)) == whole


@FAST
@given(constructions(), st.floats(0, math.pi), st.floats(-0.5, 1.5), st.floats(1e-6, 0.5))
def test_pruned_matches_brute(c, theta, rho, w):
    n = c.depth
    line = Line(theta, rho)
    assert math.isclose(line_total_length(c, n, line), line_total_length(c, n, line, pruned=False), abs_tol=1e-12)
    s = Strip(line, w)
    assert strip_count(c, n, s) == strip_count(c, n, s, pruned=False)


@FAST
@given(constructions(), st.floats(0.01, math.pi - 0.01), st.floats(-0.5, 1.5))
def test_reflection_symmetry(c, theta, rho):
    """Mirroring x -> 1 - x sends the line (theta, rho) to (pi - theta, rho - cos theta)."""
    seq = c.seq
    digits = [(seq.M[k - 1] - 1 - c.generation(k).col, c.generation(k).row) for k in range(1, c.depth + 1)]
    m = from_digits(seq, digits)
    n = c.depth
    mirror = Line(math.pi - theta, rho - math.cos(theta))
    assert math.isclose(line_total_length(c, n, Line(theta, rho)), line_total_length(m, n, mirror), abs_tol=1e-9)
    assert measure_mass(m, n, Rect(0, 0, Fraction(1, 3), 1)) == measure_mass(c, n, Rect(Fraction(2, 3), 0, 1, 1))


@FAST
@given(st.floats(-10, 10), st.floats(-3, 3))
def test_line_canonical_idempotent(theta, rho):
    a = Line(theta, rho)
    assert 0 <= a.theta < math.pi
    assert Line(a.theta, a.rho) == a
    nx, ny = a.normal
    p = (rho * math.cos(theta), rho * math.sin(theta))  # a point of the original line
    assert abs(nx * p[0] + ny * p[1] - a.rho) <= 1e-9


@FAST
@given(st.integers(1, 300), st.integers(2, 40), st.integers(0, 2**32))
def test_grid_strip_counter_matches_naive(n, d, seed):
    gen = np.random.default_rng(seed)
    ix, iy = gen.integers(0, d, n), gen.integers(0, d, n)
    nx, ny = unit_normals(gen.uniform(0, math.pi, 50))
    rho = gen.uniform(-0.2, 1.4, 50)
    rho[:10] = gen.integers(0, d, 10) / d  # on grid lines
    w = gen.uniform(0, 3 / d, 50)
    got = _kernels.strip_hit_counts_grid(ix, iy, d, nx, ny, rho - w / 2, rho + w / 2)
    ref = _kernels.strip_hit_counts(ix / d, iy / d, 1 / d, nx, ny, rho - w / 2, rho + w / 2)
    assert np.array_equal(got, ref)


@FAST
@given(st.integers(1, 5000), st.data())
def test_wilson_contains_point_estimate(n, data):
    k = data.draw(st.integers(0, n))
    lo, hi = wilson_interval(k, n)
    assert 0 <= lo <= k / n <= hi <= 1
