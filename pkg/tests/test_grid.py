import math
from fractions import Fraction

import pytest

from cantorproj.errors import DepthGuardError
from cantorproj.grid import (GridSequence, address_from_index, check_depth, derive_scales, dim_s, square_index,
                             square_rect)


def test_derive_scales_examples():
    assert derive_scales(GridSequence((3, 3), (2, 2)), 2) == (Fraction(1, 9), 4, Fraction(81, 4))
    assert derive_scales(GridSequence((2,), (4,)), 1)[2] == 1
    assert derive_scales(GridSequence((2, 4), (2, 2)), 2) == (Fraction(1, 8), 4, Fraction(16))


def test_scales_identity():
    seq = GridSequence((2, 5, 7), (3, 11, 40))
    for n in range(4):
        r, P, c = derive_scales(seq, n)
        assert c * r * r == Fraction(1, P)


@pytest.mark.parametrize("M,N,expect", [(3, 2, math.log(2) / math.log(3)), (4, 16, 2.0), (5, 1, 0.0)])
def test_dim_s_constant(M, N, expect):
    assert dim_s(GridSequence.constant(M, N, 12), 12) == pytest.approx(expect, abs=1e-12)


def test_square_rect_examples():
    seq = GridSequence((3, 3), (2, 2))
    assert square_rect((), seq) == (0, 0, 1, 1)
    assert square_rect(((1, 0),), GridSequence((2,), (2,))) == (Fraction(1, 2), 0, 1, Fraction(1, 2))
    x0, y0, x1, y1 = square_rect(((2, 2), (0, 0)), seq)
    assert (x0, y0, x1, y1) == (Fraction(2, 3), Fraction(2, 3), Fraction(7, 9), Fraction(7, 9))


def test_address_round_trip_small():
    seq = GridSequence((2, 3), (1, 1))
    for ix in range(6):
        for iy in range(6):
            addr = address_from_index(ix, iy, 2, seq)
            assert square_index(addr, seq)[:2] == (ix, iy)


@pytest.mark.parametrize("M,N", [(1, 1), (3, 0), (3, 10)])
def test_invalid_sequences(M, N):
    with pytest.raises(ValueError):
        GridSequence.constant(M, N, 2)


def test_mismatched_lengths():
    with pytest.raises(ValueError):
        GridSequence((2, 2), (1,))


def test_depth_guard():
    seq = GridSequence.constant(3, 2, 200)
    check_depth(seq, 100)
    with pytest.raises(DepthGuardError):
        check_depth(seq, 200, max_bits=64)
    with pytest.raises(DepthGuardError):
        check_depth(seq, 201)


def test_json_round_trip():
    seq = GridSequence((2, 5), (3, 7))
    assert GridSequence.from_json(seq.to_json()) == seq
