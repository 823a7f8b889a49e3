from __future__ import annotations

from itertools import product
import math

import pytest
from hypothesis import given
from hypothesis import strategies as st

from dimlab.lanecoder import LaneState, code_lanes, lane_cost, lcp


@pytest.mark.parametrize("A,n", [(2, 10), (3, 6)])
def test_code_lengths_form_a_complete_code(A, n):
    # the predictor's probabilities sum to one at every step, so sum 2^-len = 1 over all lanes
    st0 = LaneState(A)
    total = sum(2.0 ** -lane_cost(st0, bytes(t)) for t in product(range(A), repeat=n))
    assert total == pytest.approx(1.0, rel=1e-9)


def test_primed_state_is_also_complete():
    st0 = LaneState(2)
    st0.prime(bytes([0, 1, 1, 0, 1, 1, 0, 1] * 4))
    total = sum(2.0 ** -lane_cost(st0, bytes(t)) for t in product(range(2), repeat=8))
    assert total == pytest.approx(1.0, rel=1e-9)


def test_lane_cost_leaves_state_untouched():
    st0 = LaneState(2)
    lane = bytes([1, 0, 1, 1, 0, 0, 1])
    assert lane_cost(st0, lane) == lane_cost(st0, lane)
    assert st0.nxt == 1 and not st0.cnt


def test_repetitive_lanes_are_cheap():
    st0 = LaneState(2)
    zeros = lane_cost(st0, bytes(2048))
    assert zeros < 0.1 * 2048


@given(st.lists(st.binary(min_size=0, max_size=40).map(lambda b: bytes(x & 1 for x in b)), min_size=1, max_size=8))
def test_shared_prefix_coding_matches_individual(lanes):
    st0 = LaneState(2)
    marks = code_lanes(st0, lanes)
    for ln in lanes:
        mk = marks[ln]
        assert mk.length == len(ln)
        assert mk.total == pytest.approx(lane_cost(st0, ln))
        for k in (0, len(ln) // 2, len(ln)):
            assert mk.upto(k) == pytest.approx(lane_cost(st0, ln[:k]))


@given(st.binary(max_size=30), st.binary(max_size=30))
def test_lcp(a, b):
    n = lcp(a, b)
    assert a[:n] == b[:n]
    assert n == min(len(a), len(b)) or a[n] != b[n]


def test_bad_alphabet():
    with pytest.raises(ValueError):
        LaneState(4)


def test_cost_is_finite_positive():
    c = lane_cost(LaneState(3), bytes([2, 1, 0] * 10))
    assert math.isfinite(c) and c > 0
