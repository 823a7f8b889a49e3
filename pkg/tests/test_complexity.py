from __future__ import annotations

from fractions import Fraction
import random

import pytest
from hypothesis import given
from hypothesis import strategies as st

from dimlab.codes import nat_code_length
from dimlab.complexity import (
    SELECT_BITS,
    ClassicLZ78Model,
    LZ78Model,
    MachineModel,
    binary_entropy,
    cond_precision_complexity,
    lz78_conditional,
    lz78_cost,
    lz78_phrases,
    make_model,
    mutual_info_precision,
    point_candidates,
    precision_complexity,
    side_info_complexity,
)
from dimlab.core import Ball
from dimlab.encoding import PointEncoding
from dimlab.generators import generate_point
from dimlab.machine import MachineBudget, min_program_length
from dimlab.sources import PointSource

bits = st.text("01", max_size=48)


def test_lz78_textbook_parse():
    seq = [int(c) for c in "1011010100010"]
    assert lz78_phrases(seq) == [(1,), (0,), (1, 1), (0, 1), (0, 1, 0), (0, 0), (1, 0)]
    # phrase k costs ceil(log2 k) + 2
    assert lz78_cost(seq) == sum((k - 1).bit_length() + 2 for k in range(1, 8))


def test_classic_conditional_never_negative():
    assert lz78_conditional("0101", "0101") >= 0
    assert ClassicLZ78Model().estimate("0101") == lz78_cost([0, 1, 0, 1])


@given(bits, bits)
def test_condition_never_hurts(w, v):
    m = LZ78Model()
    assert m.estimate(w, v) <= m.estimate(w) + 1e-9


@given(bits)
def test_estimate_bounded_by_literal(w):
    m = LZ78Model()
    total = nat_code_length(len(w)) + len(w)
    assert m.estimate(w) <= SELECT_BITS + nat_code_length(total) + total + 1e-9


def test_copy_from_condition_is_cheap():
    rng = random.Random(0)
    w = "".join(rng.choice("01") for _ in range(512))
    m = LZ78Model()
    assert m.estimate(w, w) < 0.1 * m.estimate(w)


def test_estimate_many_matches_estimate():
    rng = random.Random(1)
    ws = ["".join(rng.choice("01") for _ in range(rng.randrange(80))) for _ in range(20)]
    encs = [PointEncoding.from_dyadic(generate_point({"kind": "Bernoulli", "seed": i}).truncate(40)) for i in range(5)]
    m = LZ78Model()
    for group in (ws, encs):
        assert m.estimate_many(group) == pytest.approx([m.estimate(t) for t in group])


def test_machine_model_is_exact():
    b = MachineBudget(16)
    mm = MachineModel(b)
    assert mm.estimate("0000") == min_program_length("0000", "", b)
    assert mm.estimate("1010", "1010") == min_program_length("1010", "1010", b)
    assert make_model("machine:12,500").budget == MachineBudget(12, 500)
    assert isinstance(make_model("lz78"), LZ78Model)
    with pytest.raises(ValueError):
        make_model("gzip")


def test_candidates_lie_in_ball():
    x = generate_point({"kind": "Bernoulli", "seed": 3, "dim": 2})
    r = 10
    cands = point_candidates(x, r, triadic=False)
    assert cands
    ball = Ball(x.truncate(r + 40), r)
    # the true point is within 2^-(r+40) of the reference centre, so a small margin suffices
    assert all(Ball(ball.center, r - 1).contains(c.to_dyadic()) for c in cands)


def test_triadic_candidates_for_cantor_point():
    x = generate_point({"kind": "Cantor", "seed": 2})
    cands = point_candidates(x, 20)
    assert any(c.radix == 3 for c in cands)


def test_all_zero_is_cheap_and_bernoulli_is_not():
    m = LZ78Model()
    zero = generate_point({"kind": "AllZero"})
    coin = generate_point({"kind": "Bernoulli", "seed": 1})
    r = 2048
    assert precision_complexity(m, zero, r) < 40
    assert precision_complexity(m, coin, r) > 0.8 * r


def test_conditioning_on_self_and_mutual_information():
    m = LZ78Model()
    x = generate_point({"kind": "Bernoulli", "seed": 4})
    y = generate_point({"kind": "Bernoulli", "seed": 5})
    r = 1024
    kx = precision_complexity(m, x, r)
    assert cond_precision_complexity(m, x, x, r) < 0.1 * kx
    assert mutual_info_precision(m, x, x, r) > 0.8 * kx
    assert mutual_info_precision(m, x, y, r) < 0.2 * kx
    assert side_info_complexity(m, x, x, r) < 0.1 * kx


def test_constant_point_cost_does_not_grow():
    m = LZ78Model()
    p = PointSource.constant([Fraction(5, 8)])
    assert precision_complexity(m, p, 64) == precision_complexity(m, p, 4096)


def test_binary_entropy():
    assert binary_entropy(0.5) == 1.0
    assert binary_entropy(0.0) == 0.0
    assert binary_entropy(0.11) == pytest.approx(0.4999, abs=1e-3)
