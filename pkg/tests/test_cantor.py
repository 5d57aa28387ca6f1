import math
from fractions import Fraction

import numpy as np
import pytest

from cantorproj.cantor import (Construction, entry_mass, extend, from_digits, generate, measure_mass,
                               project_mass_interval, resample_level)
from cantorproj.geometry import Line, Strip
from cantorproj.grid import GridSequence, Rect, square_rect


def test_generation_sizes_and_nesting():
    seq = GridSequence((3, 4, 2), (2, 5, 3))
    c = generate(seq, 3, 7)
    for n in range(1, 4):
        assert len(c.generation(n)) == seq.count(n)
        ix, iy = c.coords(n)
        px, py = c.coords(n - 1)
        par = c.parents(n)
        m = seq.M[n - 1]
        assert np.array_equal(ix // m, px[par]) and np.array_equal(iy // m, py[par])
        assert np.bincount(par).tolist() == [seq.N[n - 1]] * len(px)


def test_chain_has_single_entries():
    c = generate(GridSequence.constant(5, 1, 5), 5, 3)
    assert all(len(c.generation(n)) == 1 for n in range(1, 6))


def test_full_density_child_counts_binomial():
    # N = M^2 = 4 draws over 4 children: each child appears once on average
    seeds = 10_000
    counts = np.zeros(4)
    for sd in range(seeds):
        g = generate(GridSequence((2,), (4,)), 1, sd).generation(1)
        counts += np.bincount(g.row * 2 + g.col, minlength=4)
    mean = counts / seeds
    sigma = math.sqrt(4 * 0.25 * 0.75 / seeds)
    assert np.all(np.abs(mean - 1) <= 3 * sigma)


def test_two_draws_coincide_with_probability_quarter():
    trials = 4000
    same = 0
    for sd in range(trials):
        g = generate(GridSequence((2,), (2,)), 1, sd).generation(1)
        same += g.col[0] == g.col[1] and g.row[0] == g.row[1]
    assert abs(same / trials - 0.25) <= 3 * math.sqrt(0.25 * 0.75 / trials)


def test_determinism_and_seed_dependence():
    seq = GridSequence.constant(3, 2, 6)
    assert generate(seq, 6, 11) == generate(seq, 6, 11)
    assert generate(seq, 6, 11) != generate(seq, 6, 12)


def test_thread_count_does_not_change_draws():
    seq = GridSequence.constant(4, 9, 5)
    assert generate(seq, 5, 2, workers=1) == generate(seq, 5, 2, workers=4)


@pytest.mark.parametrize("seed", range(5))
def test_unit_square_mass_is_exactly_one(seed, flagship):
    c = generate(flagship, 10, seed)
    for n in range(11):
        m = measure_mass(c, n, Rect.unit())
        assert isinstance(m, Fraction) and m == 1


def test_entry_square_mass_counts_multiplicity():
    seq = GridSequence.constant(2, 3, 3)
    c = generate(seq, 3, 5)
    addrs = c.entries(3)
    for a in set(addrs):
        rect = Rect(*square_rect(a, seq))
        assert measure_mass(c, 3, rect) == Fraction(addrs.count(a), seq.count(3)) == addrs.count(a) * entry_mass(c, 3)


def test_empty_region_and_bad_type():
    c = generate(GridSequence.constant(3, 2, 2), 2, 0)
    assert measure_mass(c, 2, None) == 0
    assert measure_mass(c, 2, Rect(0.5, 0.5, 0.5, 1)) == 0
    with pytest.raises(TypeError):
        measure_mass(c, 2, "square")


def test_strip_mass_matches_rect_mass_for_axis_band():
    c = generate(GridSequence.constant(3, 4, 4), 4, 1)
    s = Strip(Line.horizontal(0.4), 0.3)
    exact = measure_mass(c, 4, Rect(0, Fraction(1, 4), 1, Fraction(11, 20)))
    assert measure_mass(c, 4, s) == pytest.approx(float(exact), abs=1e-12)


def test_projected_mass_whole_and_uniform():
    c = generate(GridSequence.constant(3, 2, 5), 5, 4)
    line = Line(0.7, 0.0)
    assert project_mass_interval(c, 5, line, (0.0, 0.0), 10.0) == pytest.approx(1.0, abs=1e-9)
    full = generate(GridSequence.constant(4, 16, 1), 1, 0)
    # uniform measure on [0,1]^2 whenever the 16 draws hit every child once; otherwise use the drawn squares
    x_axis = Line.horizontal(0.0)  # direction (1, 0)
    x0, _, side = full.float_squares(1)
    for center, r in [(0.5, 0.1), (0.05, 0.2), (0.9, 0.3)]:
        lo, hi = center - r, center + r
        expect = sum(max(0.0, min(a + side, hi) - max(a, lo)) for a in x0) / (16 * side)
        assert project_mass_interval(full, 1, x_axis, (center, 0.0), r) == pytest.approx(expect, abs=1e-12)


def test_projected_mass_full_grid_is_lebesgue():
    seq = GridSequence((4,), (16,))
    digits = [(np.tile(np.arange(4), 4), np.repeat(np.arange(4), 4))]
    c = from_digits(seq, digits)
    for center, r in [(0.5, 0.1), (0.05, 0.2), (0.9, 0.3)]:
        expect = max(0.0, min(1.0, center + r) - max(0.0, center - r))
        assert project_mass_interval(c, 1, Line.horizontal(0.0), (center, 0.0), r) == pytest.approx(expect, abs=1e-12)


def test_projected_mass_chain_is_zero_or_area_ratio():
    c = generate(GridSequence.constant(3, 1, 4), 4, 9)
    x0, y0, side = c.float_squares(4)
    line = Line.horizontal(0.0)
    far = project_mass_interval(c, 4, line, (x0[0] + 5 * side, 0.0), side)
    assert far == 0
    half = project_mass_interval(c, 4, line, (x0[0], 0.0), side / 2)
    assert half == pytest.approx(0.5, abs=1e-9)


def test_resample_level_contracts():
    seq = GridSequence.constant(2, 4, 4)
    c = generate(seq, 4, 3)
    assert resample_level(c, 2, 3) == c
    d = resample_level(c, 2, 99)
    for n in range(3):
        assert measure_mass(d, n, Rect(0, 0, Fraction(1, 2), Fraction(3, 4))) == measure_mass(
            c, n, Rect(0, 0, Fraction(1, 2), Fraction(3, 4)))
        if n:
            assert d.generation(n) == c.generation(n)


def test_resampled_children_uniform():
    seq = GridSequence((2, 2), (1, 4))
    c = generate(seq, 2, 0)
    counts = np.zeros(4)
    reps = 10_000
    for k in range(reps):
        g = resample_level(c, 1, 1000 + k).generation(2)
        counts += np.bincount(g.row * 2 + g.col, minlength=4)
    p = counts / (4 * reps)
    assert np.all(np.abs(p - 0.25) <= 3 * math.sqrt(0.25 * 0.75 / (4 * reps)))


def test_extend_keeps_levels_and_needs_seq():
    seq = GridSequence.constant(3, 2, 5)
    c = generate(seq, 5, 8)
    base = c.truncate(3)
    assert extend(base, 5, seq=seq) == c
    with pytest.raises(Exception):
        extend(base, 5)
    with pytest.raises(ValueError):
        extend(base, 4, seq=GridSequence.constant(4, 2, 5))


def test_jsonl_round_trip(tmp_path):
    c = generate(GridSequence((3, 2, 5), (2, 3, 4)), 3, 21)
    path = tmp_path / "c.jsonl"
    c.dump_jsonl(path)
    assert Construction.load_jsonl(path) == c


def test_big_denominators_use_exact_coordinates():
    seq = GridSequence.constant(1000, 1, 7)
    c = generate(seq, 7, 1)
    ix, _ = c.coords(7)
    assert ix.dtype == object and int(ix[0]) < seq.denominator(7)
    assert measure_mass(c, 7, Rect.unit()) == 1
