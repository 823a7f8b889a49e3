from __future__ import annotations

from fractions import Fraction
import math

import numpy as np
import pytest

from dimlab.errors import InvalidSpec
from dimlab.generators import (
    DIRECTION_BITS,
    analytic_dimension,
    dilution_boundaries,
    dilution_mask,
    dilution_open_count,
    generate_point,
    generate_set,
    pair_components,
    parse_number,
    segment_directions,
    set_point_sampler,
)
from dimlab.sources import to_base3

A, B = Fraction(3, 10), Fraction(9, 10)


def digits(spec, n, coord=0):
    return "".join(str(int(d)) for d in generate_point(spec).coords[coord].digits(n))


def test_bernoulli_golden(fixture_json):
    g = fixture_json("bernoulli_seed7.json")
    assert digits(g["spec"], 32) == g["digits"]


def test_all_zero():
    assert generate_point({"kind": "AllZero", "dim": 3}).truncate(100).nums == (0, 0, 0)


def test_line_point_exact():
    pt = generate_point({"kind": "Line", "dim": 2, "params": {"m": "1/2", "b": "1/4", "x": "1/2"}})
    assert pt.truncate(50).fractions() == (Fraction(1, 2), Fraction(1, 2))


def test_determinism_and_seed_dependence():
    s = {"kind": "Bernoulli", "seed": 11, "dim": 2, "params": {"p": 0.3}}
    assert generate_point(s).truncate(5000) == generate_point(s).truncate(5000)
    assert generate_point(s).truncate(64) != generate_point({**s, "seed": 12}).truncate(64)
    c = {"kind": "UnitCube", "seed": 4}
    assert [p.nums for p in generate_set(c, 50).points] == [p.nums for p in generate_set(c, 50).points]


@pytest.mark.parametrize("p", [0.11, 0.5, 0.9])
def test_bernoulli_frequency(p):
    n = 1 << 16
    d = generate_point({"kind": "Bernoulli", "seed": 3, "params": {"p": p}}).coords[0].digits(n)
    sigma = math.sqrt(n * p * (1 - p))
    assert abs(int(d.sum()) - n * p) <= 3 * sigma


def test_joint_copy_and_independent():
    x, y = pair_components({"kind": "JointCopy", "seed": 1, "dim": 2})
    assert x.truncate(300) == y.truncate(300)
    x, y = pair_components({"kind": "JointIndependent", "seed": 1, "dim": 2})
    assert x.truncate(300) != y.truncate(300)


def test_invalid_specs():
    for bad in [
        {"kind": "Bernoulli", "params": {"p": 1.5}},
        {"kind": "BlockDilution", "params": {"alpha": 0.9, "beta": 0.3}},
        {"kind": "Line", "dim": 1},
        {"kind": "Nope"},
        {"seed": 1},
        {"kind": "Line", "dim": 2, "params": {"m": 2}},
    ]:
        with pytest.raises(InvalidSpec):
            generate_point(bad)
    with pytest.raises(InvalidSpec):
        generate_set({"kind": "IFS", "params": {"maps": [{"ratio": 1.5, "offset": [0]}]}}, 5)
    with pytest.raises(InvalidSpec):
        generate_set({"kind": "UnitCube"}, 0)
    with pytest.raises(InvalidSpec):
        parse_number("abc")


def test_parse_number():
    assert parse_number("3/8") == Fraction(3, 8)
    assert parse_number("0.25") == Fraction(1, 4)
    assert parse_number(0.5) == Fraction(1, 2)


# block dilution


def test_boundaries():
    assert dilution_boundaries(3000) == [4, 8, 64, 2048, 262144]
    assert dilution_boundaries(2048) == [4, 8, 64, 2048]
    assert dilution_boundaries(2049)[-1] == 262144


def test_mask_matches_schedule_count_exhaustively():
    n = 300_000
    mask = dilution_mask(0, n, A, B)
    prefix = np.concatenate([[0], np.cumsum(mask)])
    for k in list(range(0, 5000)) + list(range(5000, n + 1, 997)) + [262144, n]:
        assert prefix[k] == dilution_open_count(k, A, B)


def test_mask_is_local():
    whole = dilution_mask(0, 70_000, A, B)
    parts = np.concatenate([dilution_mask(i, min(i + 4096, 70_000), A, B) for i in range(0, 70_000, 4096)])
    assert np.array_equal(whole, parts)


def test_running_density_swings_between_alpha_and_beta():
    ends = dilution_boundaries(1 << 40)
    dens = [Fraction(dilution_open_count(e, A, B), e) for e in ends[3:]]
    # ends[k] closes block k; odd k has density alpha
    for k, d in zip(range(3, len(ends)), dens):
        target = A if k % 2 == 1 else B
        assert abs(d - target) < Fraction(1, 10)
    assert abs(dens[-1] - (A if (len(ends) - 1) % 2 else B)) < Fraction(1, 1000)


def test_dilution_digits_vanish_off_mask():
    spec = {"kind": "BlockDilution", "seed": 2, "params": {"alpha": "0.3", "beta": "0.9"}}
    d = generate_point(spec).coords[0].digits(70_000)
    mask = dilution_mask(0, 70_000, A, B)
    assert not d[~mask].any()
    assert 0.4 < d[mask].mean() < 0.6


# sets


def test_unit_cube_in_square():
    s = generate_set({"kind": "UnitCube", "seed": 0}, 10_000)
    assert all(0 <= v < 1 << p.prec for p in s.points for v in p.nums)


def test_cantor_digits_avoid_one():
    d = 12
    s = generate_set({"kind": "CantorMiddleThirds", "seed": 1, "params": {"depth": d}}, 1000)
    for p in s.points:
        v = p.fractions()[0]
        assert 0 <= v < 1
        assert 1 not in to_base3(math.floor(v * 3**d), d)


def test_segment_family_points_on_segments():
    s = generate_set({"kind": "SegmentFamily", "seed": 3, "params": {"directions": 64}}, 500)
    dirs = s.provenance["directions"]
    for p, i in zip(s.points, s.provenance["segment_index"]):
        dx, dy = dirs[i]
        x, y = p.fractions()
        # exactly on the declared dyadic direction through the origin, within half a unit
        assert x * dy == y * dx
        assert x * x + y * y <= Fraction(1, 4) * Fraction(dx * dx + dy * dy, 1 << (2 * DIRECTION_BITS))
    th = [i * math.pi / 64 for i in range(64)]
    for (dx, dy), t in zip(segment_directions(64), th):
        assert abs(dx / 2**DIRECTION_BITS - math.cos(t)) < 2**-40
        assert abs(dy / 2**DIRECTION_BITS - math.sin(t)) < 2**-40


def test_ifs_sierpinski_dimension():
    spec = {"kind": "IFS", "params": {"depth": 8, "maps": [
        {"ratio": "1/2", "offset": [0, 0]}, {"ratio": "1/2", "offset": ["1/2", 0]},
        {"ratio": "1/2", "offset": [0, "1/2"]}]}}
    assert analytic_dimension(spec) == pytest.approx(math.log2(3))
    s = generate_set(spec, 200)
    for p in s.points:
        x, y = p.fractions()
        assert x >= 0 and y >= 0 and x + y <= 1


def test_analytic_dimensions_and_samplers():
    assert analytic_dimension({"kind": "CantorMiddleThirds"}) == pytest.approx(math.log(2) / math.log(3))
    assert analytic_dimension({"kind": "UnitCube"}) == 2.0
    assert analytic_dimension({"kind": "Singleton", "params": {"point": [0.3]}}) == 0.0
    pt = set_point_sampler({"kind": "CantorMiddleThirds"})(0)
    assert 1 not in to_base3(pt.triadic_floor(40)[0], 40)
    seg = set_point_sampler({"kind": "SegmentFamily", "params": {"directions": 8}})(4)
    x, y = seg.truncate(30).fractions()
    assert abs(x) < 2**-20  # direction pi/2
    single = generate_set({"kind": "Singleton", "params": {"point": ["0.3", "0.7"]}}, 3)
    assert len({p.nums for p in single.points}) == 1
