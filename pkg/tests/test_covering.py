import math
from fractions import Fraction

import numpy as np
import pytest

from cantorproj.covering import (CoveringSample, CoveringSpec, aniso_experiment, check_extraction, choose_nk,
                                 dichotomy_trend, extract_cantor, extraction_invariants, omega_bound,
                                 sample_covering, s0_value)
from cantorproj.errors import DepthGuardError, ExtractionInvariantError

FLAG = CoveringSpec(1.5)


def test_sample_uniform_mean_and_determinism():
    s = sample_covering(FLAG, 100_000, 3)
    sigma = math.sqrt(1 / 12 / 100_000)
    assert np.all(np.abs(s.xi.mean(axis=0) - 0.5) <= 3 * sigma)
    assert np.array_equal(s.xi, sample_covering(FLAG, 100_000, 3).xi)
    assert not np.array_equal(s.xi, sample_covering(FLAG, 100_000, 4).xi)
    assert s.scaled() is not None and np.all((s.xi >= 0) & (s.xi < 1))


def test_sample_prefix_stable():
    a = sample_covering(FLAG, 1000, 9)
    b = sample_covering(FLAG, 5000, 9)
    assert np.array_equal(a.xi, b.xi[:1000])


def test_sample_save_load(tmp_path):
    s = sample_covering(CoveringSpec(1.2, shape="rect", beta=2.4), 777, 5)
    s.save(tmp_path / "xi.bin")
    t = CoveringSample.load(tmp_path / "xi.bin")
    assert np.array_equal(s.xi, t.xi) and t.spec == s.spec and t.seed == s.seed
    (tmp_path / "bad.bin").write_bytes(b"nope")
    with pytest.raises(ValueError):
        CoveringSample.load(tmp_path / "bad.bin")


@pytest.mark.parametrize("a,expect", [(1.5, 2 / 3), (2.0, 0.5), (1.0, 1.0)])
def test_s0_power_laws(a, expect):
    assert s0_value(CoveringSpec(a), 10_000) == pytest.approx(expect)


def test_choose_nk_examples():
    ch = choose_nk(FLAG, 2, 2)
    assert ch.nk == (2, 32768) and not ch.relaxed
    with pytest.raises(ValueError):
        choose_nk(CoveringSpec(1.0), 2, 2)
    ch3 = choose_nk(CoveringSpec(1.2), 4, 2, max_n=10**120)
    inv = [1 / r for r in ch3.log_delta_ratio]  # log delta_{n_k} / log delta_{n_{k-1}}
    assert inv[0] > inv[1] > inv[2] > 2 + 2 * 1.2
    with pytest.raises(DepthGuardError):
        choose_nk(FLAG, 3, 2)
    assert choose_nk(FLAG, 2, 2, factor=16).relaxed


def test_omega_bound_examples():
    assert omega_bound(2, (2, 32768), FLAG, 1) == pytest.approx(0.9375)
    assert omega_bound(2, (2, 32768), FLAG, 1) >= 1 - 1 / 4
    # equality in the growth condition with Ntilde = n_{k-1}
    spec = CoveringSpec(2.0)
    for k in (2, 5, 50):
        prev = 3
        cur = 256 * k * k * prev * prev * spec.inv_delta_sq(prev)
        assert omega_bound(k, (prev, cur) if k == 2 else (0,) * (k - 2) + (prev, cur), spec, prev) == pytest.approx(
            1 - 1 / k**2)
    qs = [1 - 1 / k**2 for k in (2, 3)]
    assert math.prod(qs) > 0


def test_level_one_extraction():
    res = extract_cantor(sample_covering(FLAG, 2, 0), (2,))
    lv = res.levels[0]
    assert (lv.N, lv.M) == (1, 6) and res.complete
    x, y = sample_covering(FLAG, 2, 0).point(1)
    assert lv.ix[0] / 6 <= x <= (lv.ix[0] + 1) / 6 and lv.iy[0] / 6 <= y <= (lv.iy[0] + 1) / 6


def test_extracted_squares_lie_in_balls():
    nk = choose_nk(FLAG, 2, 2).nk
    done = 0
    for sd in range(100):
        sample = sample_covering(FLAG, nk[-1], sd)
        res = extract_cantor(sample, nk, tie_seed=sd)
        check_extraction(res, sample)
        for lv in res.levels:
            if not lv.omega:
                continue
            side = Fraction(1, lv.denom)
            for i, a, b in zip(lv.indices, lv.ix, lv.iy):
                cx, cy = (Fraction(v) for v in sample.point(i))
                r = Fraction(float(FLAG.delta(i)))
                for px in (a * side, (a + 1) * side):
                    for py in (b * side, (b + 1) * side):
                        dx, dy = px - cx, py - cy
                        assert dx * dx + dy * dy <= r * r
        done += res.complete
        if res.complete:
            inv = extraction_invariants(res)
            assert all(inv.values())
            c = res.to_construction()
            assert c.depth == 2 and c.seq.count(2) == len(res.levels[1].indices)
    assert done >= 90


def test_tampered_extraction_is_caught():
    nk = (2, 32768)
    sample = sample_covering(FLAG, nk[-1], 1)
    res = extract_cantor(sample, nk)
    res.levels[0].ix[0] = (res.levels[0].ix[0] + 3) % 6
    with pytest.raises(ExtractionInvariantError):
        check_extraction(res, sample)


def test_random_tie_rule_is_reproducible():
    nk = (2, 32768)
    sample = sample_covering(FLAG, nk[-1], 2)
    a = extract_cantor(sample, nk, tie_seed=4, tie_rule="random")
    b = extract_cantor(sample, nk, tie_seed=4, tie_rule="random")
    assert a.to_json() == b.to_json()


def test_dichotomy_summable_decreases():
    fr = dichotomy_trend(CoveringSpec(0.75), [1000, 10_000, 100_000], 1)
    assert fr[0] > fr[1] > fr[2]
    dense = dichotomy_trend(CoveringSpec(0.4), [1000, 10_000], 1)
    assert dense[-1] > 0.95


def test_aniso_symmetric_case_matches():
    r = aniso_experiment(1.5, 1.5, 20_000, 3, levels=range(4, 16))
    assert abs(r.slope_x - r.slope_y) < 0.05


def test_aniso_ordering_single_seed():
    r = aniso_experiment(1.2, 2.4, 20_000, 1, levels=range(4, 18))
    assert r.y_below_x


def test_spec_validation():
    with pytest.raises(ValueError):
        CoveringSpec(1.2, shape="rect", beta=1.0)
    with pytest.raises(ValueError):
        CoveringSpec(-1)
    with pytest.raises(ValueError):
        CoveringSpec(1.0, shape="disc")
