"""The thirteen acceptance criteria at their stated tolerances.

Each test records one PASS/FAIL line; the lines are printed together at the
end of the pytest run (see conftest.py) and also when this file is executed
directly with ``python tests/test_acceptance.py``.
"""

from __future__ import annotations

import json
import math
import random
import subprocess
import sys
import time
from fractions import Fraction
from itertools import product
from pathlib import Path

import pytest

from dimlab.codes import (
    audit_nat_constant,
    delta_length_bound,
    is_prefix_free,
    kraft_sum,
    nat_code_length,
    nat_codewords_up_to,
)
from dimlab.complexity import (
    LZ78Model,
    binary_entropy,
    cond_precision_complexity,
    mutual_info_precision,
    precision_complexity,
)
from dimlab.core import Ball, DyadicPoint, half_log_floor, lattice_point_in_ball
from dimlab.dimension import PrecisionSchedule, dim_estimate, robustness_audit, sensitivity_audit
from dimlab.errors import MalformedCode
from dimlab.generators import generate_point, generate_set, pair_components
from dimlab.geometry import box_counting_dim, low_complexity_cover_cost, point_to_set_audit
from dimlab.kakeya import (
    analytic_interval_sum,
    h_statistics,
    harmonic_bound,
    harness_input,
    inside_ball,
    min_h_detail,
    reconstruct,
)
from dimlab.machine import MachineBudget, Program, enumerate_programs, min_program_length
from dimlab.sources import Const, join

RESULTS: dict[int, str] = {}
MODEL = LZ78Model()
SCHEDULE = PrecisionSchedule()


def record(n: int, ok: bool, detail: str) -> None:
    RESULTS[n] = f"criterion {n:2d}: {'PASS' if ok else 'FAIL'}  {detail}"
    assert ok, RESULTS[n]


def pairs():
    out = {
        "JointCopy": pair_components({"kind": "JointCopy", "seed": 1, "dim": 2}),
        "JointIndependent": pair_components({"kind": "JointIndependent", "seed": 1, "dim": 2}),
    }
    line = generate_point({"kind": "Line", "seed": 1, "dim": 2, "params": {"b": "1/4"}})
    out["Line"] = (line.project([0]), line.project([1]))
    return out


def test_criterion_01_reconstruction_exact():
    rng = random.Random(2024)
    t0 = time.perf_counter()
    checked = failures = 0
    for _ in range(100):
        m, b, x = (Fraction(rng.getrandbits(64), 1 << 64) for _ in range(3))
        for r in range(3, 17):
            d = min_h_detail(r, m, b, x)
            c = reconstruct(harness_input(r, m, b, x, h=d.h))
            ok = c == d.candidate and inside_ball(c.triple, (Const(m), Const(b), Const(x)), r - 1)
            failures += not ok
            checked += 1
    dt = time.perf_counter() - t0
    record(1, failures == 0 and dt < 120, f"{checked} (triple, r) cases, {failures} outside the ball, {dt:.1f}s")


def test_criterion_02_h_bounds():
    t0 = time.perf_counter()
    stats = {r: h_statistics(r, trials=10_000, seed=0) for r in (8, 10, 12)}
    dt = time.perf_counter() - t0
    means_ok = all(s.mean <= r * 64 for r, s in stats.items())
    sums_ok = all(analytic_interval_sum(r, Fraction(1, 2)) <= harmonic_bound(r) for r in stats)
    meds = [stats[r].median_log_ratio for r in (8, 10, 12)]
    mono = all(b <= a for a, b in zip(meds, meds[1:]))
    detail = ", ".join(f"r={r}: mean h {s.mean:.1f} <= {r * 64}" for r, s in stats.items())
    detail += f"; median log2h/r {[round(v, 3) for v in meds]}; {dt:.1f}s"
    record(2, means_ok and sums_ok and mono and dt < 300, detail)


def test_criterion_03_code_bound():
    t0 = time.perf_counter()
    limit = 1 << 20
    c0 = audit_nat_constant(limit)
    worst = max(nat_code_length(j) - float(delta_length_bound(j)) for j in range(limit))
    words = nat_codewords_up_to(20)
    k = kraft_sum(words)
    dt = time.perf_counter() - t0
    ok = c0 <= 4 and abs(worst - c0) < 1e-9 and k <= 1 and is_prefix_free(words) and dt < 60
    record(3, ok, f"c0 = {c0:.4f} over j < 2^20, Kraft sum {k:.4f} over {len(words)} codewords, {dt:.1f}s")


def test_criterion_04_lattice_points():
    rng = random.Random(7)
    t0 = time.perf_counter()
    failures = 0
    for m in (1, 2, 3):
        for _ in range(10_000):
            prec = rng.randrange(0, 60)
            centre = DyadicPoint(tuple(rng.randrange(-(1 << (prec + 3)), 1 << (prec + 3)) for _ in range(m)), prec)
            ball = Ball(centre, rng.randrange(0, 40))
            q = lattice_point_in_ball(ball)
            on_lattice = q.prec == ball.radius_exp + half_log_floor(m) + 1
            failures += not (on_lattice and ball.contains(q))
    dt = time.perf_counter() - t0
    record(4, failures == 0 and dt < 60, f"30000 balls over m = 1, 2, 3, {failures} failures, {dt:.1f}s")


def test_criterion_05_machine_properties():
    t0 = time.perf_counter()
    progs = {p.code for p in enumerate_programs(MachineBudget(16))}
    parsed = set()
    for n in range(17):
        for t in product("01", repeat=n):
            s = "".join(t)
            try:
                Program.from_bits(s)
            except MalformedCode:
                continue
            parsed.add(s)
    prefix_ok = parsed == progs and is_prefix_free(progs)
    b = MachineBudget(24)
    strs = ["".join(t) for n in range(13) for t in product("01", repeat=n)]
    K = {s: min_program_length(s, "", b) for s in strs}
    small = [s for s in strs if len(s) <= 6]
    sub_bad = sum(K[u + v] > K[u] + K[v] + 2 for u in small for v in small)
    cond_bad = sum(min_program_length(w, v, b) > K[w] for v in small for w in small)
    dt = time.perf_counter() - t0
    detail = (f"{len(progs)} programs <= 16 bits prefix-free: {prefix_ok}; "
              f"subadditivity violations {sub_bad}; conditioning violations {cond_bad}; {dt:.1f}s")
    record(5, prefix_ok and sub_bad == 0 and cond_bad == 0 and dt < 300, detail)


def test_criterion_06_entropy_convergence():
    t0 = time.perf_counter()
    coin = generate_point({"kind": "Bernoulli", "seed": 0, "params": {"p": 0.11}})
    d = dim_estimate(MODEL, coin, SCHEDULE)
    z = dim_estimate(MODEL, generate_point({"kind": "AllZero"}), SCHEDULE)
    dt = time.perf_counter() - t0
    ok = 0.40 <= d.lower <= d.upper <= 0.60 and z.upper <= 0.05 and dt < 120
    record(6, ok, f"Bernoulli(0.11) ({d.lower:.3f}, {d.upper:.3f}) vs H = {binary_entropy(0.11):.3f}; "
                  f"AllZero upper {z.upper:.4f}; {dt:.1f}s")


def test_criterion_07_block_dilution():
    x = generate_point({"kind": "BlockDilution", "seed": 0, "params": {"alpha": "0.3", "beta": "0.9"}})
    d = dim_estimate(MODEL, x, SCHEDULE)
    ok = 0.15 <= d.lower <= 0.45 and 0.75 <= d.upper <= 1.0
    record(7, ok, f"dim in [0.15, 0.45]: {d.lower:.3f}; Dim in [0.75, 1.0]: {d.upper:.3f}")


R_RESIDUAL = 1 << 13


def _residuals():
    out = {}
    for name in ("JointCopy", "JointIndependent"):
        x, y = pairs()[name]
        r = R_RESIDUAL
        kx = precision_complexity(MODEL, x, r)
        ky = precision_complexity(MODEL, y, r)
        kxy = precision_complexity(MODEL, join(x, y), r)
        kx_y = cond_precision_complexity(MODEL, x, y, r)
        mi = mutual_info_precision(MODEL, x, y, r)
        out[name] = (abs(kxy - kx_y - ky) / r, abs(mi - (kx - kx_y)) / r)
    return out


@pytest.fixture(scope="module")
def residuals():
    return _residuals()


def test_criterion_08_chain_rule(residuals):
    vals = {k: v[0] for k, v in residuals.items()}
    record(8, all(v <= 0.2 for v in vals.values()),
           "chain residual at r = 2^13: " + ", ".join(f"{k} {v:.4f}" for k, v in vals.items()))


def test_criterion_09_mutual_information(residuals):
    vals = {k: v[1] for k, v in residuals.items()}
    record(9, all(v <= 0.2 for v in vals.values()),
           "mutual-information residual at r = 2^13: " + ", ".join(f"{k} {v:.4f}" for k, v in vals.items()))


def test_criterion_10_robustness():
    worst = 0.0
    ok = True
    for name, (x, y) in pairs().items():
        rep = robustness_audit(MODEL, x, y, SCHEDULE, tol=0.1)
        base = rep.values["identity"]
        for mode in ("plus_sqrt", "minus_sqrt"):
            v = rep.values[mode]
            worst = max(worst, abs(v["lower"] - base["lower"]), abs(v["upper"] - base["upper"]))
        ok &= rep.passed
    record(10, ok and worst <= 0.1, f"largest cond-dim shift over 3 pairs and 2 shifted schedules: {worst:.4f}")


def test_criterion_11_sensitivity():
    failed = []
    for name, (x, y) in pairs().items():
        for r, delta in ((256, 32), (1024, 64), (4096, 256)):
            rep = sensitivity_audit(MODEL, x, y, r, delta, slack_bits=64.0)
            failed += [f"{name}@{r}:{k}" for k, v in rep.checks.items() if not v]
    record(11, not failed, "monotone in r, antimonotone in s, Lipschitz with slack 64 on 9 cases"
           + (f"; failed {failed}" if failed else ""))


def test_criterion_12_point_to_set():
    cantor = {"kind": "CantorMiddleThirds", "seed": 0, "params": {"depth": 12}}
    rep = point_to_set_audit(MODEL, cantor, count=20_000, points=3, tol=0.12)
    box_c = rep.values["box_dim"]
    gap = abs(box_c - rep.values["max_point_lower"])
    analytic = math.log(2) / math.log(3)
    box_sq = box_counting_dim(generate_set({"kind": "UnitCube", "seed": 0}, 10_000))
    bound_ok = True
    runs = 0
    for spec, count in ((cantor, 200), ({"kind": "UnitCube", "seed": 0}, 200)):
        sample = generate_set(spec, count)
        for s in (0.25, 0.5, 1.0) + ((2.0,) if sample.dim == 2 else ()):
            for r in (3, 5, 7):
                for slack in (0.0, 16.0):
                    try:
                        cv = low_complexity_cover_cost(MODEL, sample, s, r, slack_bits=slack)
                    except AssertionError:
                        bound_ok = False
                        continue
                    bound_ok &= cv.kept < 2.0 ** (r * s + slack + 1)
                    runs += 1
    ok = abs(box_c - analytic) <= 0.05 and gap <= 0.12 and abs(box_sq - 2) <= 0.1 and bound_ok
    record(12, ok, f"Cantor box {box_c:.4f} vs {analytic:.4f}, point gap {gap:.4f}; square box {box_sq:.4f}; "
                   f"cardinality bound held in {runs} cover runs: {bound_ok}")


def test_criterion_13_reproducibility(tmp_path):
    configs = [
        {"command": "dim", "seed": 3, "point": {"kind": "Bernoulli", "params": {"p": 0.3}},
         "schedule": {"r_max": 4096}},
        {"command": "audit", "seed": 1, "point": {"kind": "JointIndependent", "dim": 2},
         "schedule": {"r_max": 2048}},
        {"command": "kakeya-stats", "seed": 4, "params": {"r": 8, "trials": 500}},
        {"command": "box-dim", "seed": 2, "set": {"kind": "CantorMiddleThirds"}, "params": {"count": 2000}},
        {"command": "cover", "seed": 2, "set": {"kind": "UnitCube"}, "params": {"count": 100, "s": 2, "r": 4,
                                                                                "slack_bits": 20}},
        {"command": "packing", "seed": 2, "set": {"kind": "UnitCube"}, "params": {"count": 500}},
    ]
    same = 0
    for i, cfg in enumerate(configs):
        bodies = []
        for k in range(2):
            out = tmp_path / f"c{i}_{k}"
            path = tmp_path / f"c{i}_{k}.json"
            path.write_text(json.dumps({**cfg, "out": str(out)}))
            subprocess.run([sys.executable, "-m", "dimlab.cli", "run", "--config", str(path)], check=False,
                           capture_output=True)
            bodies.append({p.name: p.read_bytes() for p in sorted(out.glob("*.csv"))})
        same += bool(bodies[0]) and bodies[0] == bodies[1]
    record(13, same == len(configs), f"{same}/{len(configs)} configs re-ran with byte-identical CSV bodies")


if __name__ == "__main__":
    code = pytest.main([__file__, "-q", "-p", "no:cacheprovider"])
    sys.exit(code)
