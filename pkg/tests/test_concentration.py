import math
import warnings

import mpmath
import numpy as np
import pytest

from cantorproj.cantor import generate
from cantorproj.concentration import (STRIP_MGF_COEFF, BoundParams, a_threshold, chernoff_strip_rhs,
                                      child_hit_table, conditional_failure_estimate, default_lambda, event_A,
                                      event_G, exact_tail, fit_constants, level_failure_bounds, level_strip_family,
                                      line_family_constant, log_chernoff_strip_rhs, mgf_line_rhs, mgf_strip_bound,
                                      partial_products, proof_lambda, required_R, simulate_conditional_Z,
                                      wilson_interval)
from cantorproj.errors import ParameterWarning
from cantorproj.geometry import Line, Strip
from cantorproj.grid import GridSequence


def test_params_validation():
    BoundParams(t=0.3, eps=0.1, s=0.6)
    with pytest.raises(ValueError):
        BoundParams(t=0.7, eps=0.01, s=0.6)
    with pytest.raises(ValueError):
        BoundParams(t=0.3, eps=0.2, s=0.6)
    with pytest.warns(ParameterWarning):
        BoundParams(t=0.3, eps=0.0, s=0.6)
    with pytest.raises(ValueError):
        BoundParams(t=0.3, eps=0.1, s=0.6, R=0)


def test_event_G_chain_holds():
    seq = GridSequence.constant(3, 1, 5)
    c = generate(seq, 5, 1)
    p = BoundParams(t=-0.5, eps=0.1, s=0.0, R=2.0)
    assert all(event_G(c, n, p) for n in range(1, 6))


def test_event_G_fails_for_tiny_R_full_density():
    c = generate(GridSequence.constant(2, 4, 3), 3, 0)
    p = BoundParams(t=0.0, eps=0.1, s=2.0, R=1e-9)
    assert not event_G(c, 3, p)


def test_events_monotone_in_R():
    seq = GridSequence.constant(3, 2, 3)
    c = generate(seq, 3, 4)
    p = BoundParams(t=0.3, eps=0.1, s=seq.s)
    need = required_R(c, 2, p)
    assert event_G(c, 2, p.with_(R=need * 1.0001)) and event_A(c, 2, p.with_(R=need * 1.0001))
    assert not (event_G(c, 2, p.with_(R=need * 0.5)) and event_A(c, 2, p.with_(R=need * 0.5)))
    for R in (need, 2 * need, 10 * need):
        assert event_A(c, 2, p.with_(R=R * 1.0001))


def test_a_threshold_value():
    seq = GridSequence.constant(2, 2, 3)  # P_2 = 4
    p = BoundParams(t=0.5, eps=0.05, s=1.0)
    r2 = float(seq.r(2))
    assert a_threshold(seq, 2, r2, p) == pytest.approx(500 * 5**0.5 * 4 * r2**0.5)


def test_event_A_holds_when_threshold_exceeds_count_cap():
    seq = GridSequence.constant(4, 16, 3)
    c = generate(seq, 3, 0)
    p = BoundParams(t=0.2, eps=0.1, s=2.0, R=1.0)
    w_min = float(level_strip_family(seq, 2).widths.min())
    assert 500 * 5**p.t * p.R * w_min**p.t >= 1
    assert event_A(c, 2, p)


def test_chernoff_rhs_examples():
    seq = GridSequence.constant(4, 8, 3)
    p = BoundParams(t=0.3, eps=0.05, s=1.5, R=1.0)
    w = float(seq.r(2))
    assert log_chernoff_strip_rhs(w, 2, 0, seq, p) < 0 and chernoff_strip_rhs(w, 2, 0, seq, p) < 1
    assert chernoff_strip_rhs(w, 1, 10**6, seq, p) == math.inf  # not clamped
    assert chernoff_strip_rhs(w, 2, 10**4, seq, p) > 1
    with pytest.raises(ValueError):
        chernoff_strip_rhs(w * 2, 2, 0, seq, p)


def test_chernoff_rhs_against_arbitrary_precision():
    seq = GridSequence((4, 4, 4), (8, 8, 8))
    c = generate(seq, 3, 5)
    p = BoundParams(t=0.3, eps=0.05, s=1.5, R=1.0)
    n = 2
    w = float(seq.r(n))
    s = Strip(Line(0.7, 0.4), w)
    zn = len(child_hit_table(c, n, s)[0])
    mpmath.mp.dps = 50
    want = mpmath.exp(-500 * mpmath.mpf(p.R) * mpmath.mpf(w) ** mpmath.mpf(p.t) * seq.count(3)
                      + 20 * mpmath.mpf(w) * seq.denominator(2) * seq.N[2] * zn)
    assert log_chernoff_strip_rhs(w, n, zn, seq, p) == pytest.approx(float(mpmath.log(want)), rel=1e-12)


def test_mgf_strip_bound_examples():
    assert mgf_strip_bound([0, 0, 0], 4, 5).exact == 1.0
    assert mgf_strip_bound([16], 4, 3).exact == pytest.approx(math.e**3)
    b = mgf_strip_bound([8, 8], 4, 2, w=0.1, r_n=0.25)
    assert b.exact == pytest.approx((math.e / 2 + 0.5) ** 4)
    assert b.closed_form == pytest.approx(math.exp(STRIP_MGF_COEFF * 0.1 / 0.25 * 2 * 2))
    with pytest.raises(ValueError):
        mgf_strip_bound([17], 4, 1)


def test_mgf_exact_matches_simulation():
    mask = np.zeros((2, 16), dtype=bool)
    mask[:, :8] = True
    z = simulate_conditional_Z(mask, 2, 100_000, 3)
    ez = np.exp(z.astype(float))
    exact = mgf_strip_bound([8, 8], 4, 2).exact
    assert abs(ez.mean() - exact) <= 3 * ez.std(ddof=1) / math.sqrt(len(ez))


def test_exact_tail_matches_simulation():
    gen = np.random.default_rng(0)
    mask = gen.uniform(size=(5, 9)) < 0.4
    z = simulate_conditional_Z(mask, 3, 200_000, 1)
    for thr in (2, 5, 8):
        p = exact_tail(mask, 3, thr)
        assert abs((z > thr).mean() - p) <= 4 * math.sqrt(p * (1 - p) / len(z)) + 1e-12
    assert exact_tail(mask, 3, 15) == 0.0


def test_mgf_line_rhs_limits():
    seq = GridSequence.constant(3, 2, 4)
    p = BoundParams(t=0.3, eps=0.05, s=seq.s, R=2.0)
    lam = 3.0
    r1 = float(seq.r(2))
    assert mgf_line_rhs(0.0, lam, 1, seq, p) == pytest.approx(math.exp(-lam * seq.count(2) * 2.0 * r1**1.3))
    assert mgf_line_rhs(0.3, 1e-12, 1, seq, p) == pytest.approx(1.0)
    with pytest.raises(ValueError):
        mgf_line_rhs(0.3, 1e6, 1, seq, p)


def test_default_lambda_is_admissible():
    seq = GridSequence.constant(3, 2, 40)
    p = BoundParams(t=0.3, eps=0.05, s=seq.s)
    assert default_lambda(2, seq, p) < proof_lambda(2, seq, p)  # pulled inside at desk scale
    assert default_lambda(35, seq, p) == proof_lambda(35, seq, p)  # the proof's choice, deep enough


def test_level_bounds_decay_and_products():
    seq = GridSequence.constant(3, 2, 60)
    p = BoundParams(t=0.3, eps=0.1, s=seq.s, C2=5.0, C3=5.0)
    C = line_family_constant(64)
    assert 6 <= C <= 6.1
    tail = [level_failure_bounds(n, seq, p, C) for n in range(5, 55)]
    a = [b.log_boundA for b in tail]
    g = [b.log_boundG for b in tail]
    start = next(i for i in range(len(a) - 1) if a[i + 1] < a[i] and g[i + 1] < g[i])
    assert all(x > y for x, y in zip(a[start:], a[start + 1:]))
    assert all(x > y for x, y in zip(g[start:], g[start + 1:]))
    assert tail[-1].boundA < 1e-100
    prods = partial_products(seq, p, 45, 58, C)
    assert 0 < prods[-1] <= prods[0] and prods[-1] == pytest.approx(prods[0], rel=1e-12)


def test_eps_zero_surfaces_warning():
    seq = GridSequence.constant(3, 2, 5)
    with warnings.catch_warnings():
        warnings.simplefilter("ignore")
        p = BoundParams(t=0.3, eps=0.0, s=seq.s, C2=1.0, C3=1.0)
    with pytest.warns(ParameterWarning):
        level_failure_bounds(2, seq, p)
    with pytest.raises(ValueError):
        level_failure_bounds(2, seq, p.with_(C2=None))


def test_fit_constants_sign_reports_desk_scale():
    seq = GridSequence.constant(3, 2, 8)
    p = fit_constants(seq, BoundParams(t=0.5, eps=0.05, s=seq.s), range(1, 6))
    assert p.C3 > 0  # strip argument already closes
    assert p.C2 < 0  # line argument does not close at these depths


def test_wilson_interval():
    lo, hi = wilson_interval(0, 2000)
    assert lo == 0 and hi == pytest.approx(1.917e-3, rel=1e-3)
    lo, hi = wilson_interval(50, 100)
    assert lo == pytest.approx(0.4038, abs=1e-4) and hi == pytest.approx(0.5962, abs=1e-4)


def test_conditional_estimate_impossible_failure_and_determinism():
    seq = GridSequence((3, 3, 3), (2, 2, 1))
    c = generate(seq, 3, 0)
    p = BoundParams(t=0.3, eps=0.05, s=0.4, R=1e6)
    est = conditional_failure_estimate(c, 2, "A", 100, 7, p)
    assert est.failures == 0 and est.p_hat == 0
    again = conditional_failure_estimate(c, 2, "A", 100, 7, p)
    assert (again.failures, again.ci, again.bound) == (est.failures, est.ci, est.bound)
    assert conditional_failure_estimate(c, 2, "G", 100, 7, p).failures == 0


def test_vacuous_bound_is_not_scored():
    seq = GridSequence.constant(3, 2, 3)
    c = generate(seq, 3, 0)
    p = BoundParams(t=0.3, eps=0.05, s=seq.s, R=1e-3)
    est = conditional_failure_estimate(c, 2, "A", 100, 1, p)
    assert est.vacuous and est.ok is None
