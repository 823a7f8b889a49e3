"""Box counting, low-complexity covers, greedy packings and the point-to-set audit.

Box-counting dimension stands in for Hausdorff dimension throughout.  It is
never smaller (it bounds Hausdorff dimension from above), and every report
says so.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from fractions import Fraction
from itertools import product
from typing import Callable, Sequence

import numpy as np

from dimlab.complexity import ComplexityModel
from dimlab.core import Ball, DyadicPoint
from dimlab.dimension import AuditReport, PrecisionSchedule, dim_estimate, pmap
from dimlab.encoding import PointEncoding
from dimlab.errors import CandidateExplosion, DegenerateRange
from dimlab.generators import PointSample, SetSpec, analytic_dimension, generate_set, set_point_sampler

HAUSDORFF_NOTE = "box-counting dimension is an upper bound for Hausdorff dimension"
COVER_GRID_CAP = 1 << 16
ESTIMATE_BATCH = 512
# saturation guard for the automatic range: stop once cells exceed distinct points / SATURATION
SATURATION = 4
AUTO_R_CAP = 24


def _sample_prec(sample: PointSample) -> int:
    return max(p.prec for p in sample.points)


def _aligned(sample: PointSample) -> tuple[int, list[tuple[int, ...]]]:
    P = _sample_prec(sample)
    return P, [p.at_precision(P).nums for p in sample.points]


def cell_counts(sample: PointSample, rs: Sequence[int]) -> list[int]:
    """Occupied dyadic cells of side 2**-r for each r."""
    P, nums = _aligned(sample)
    out = []
    for r in rs:
        if r > P:
            raise DegenerateRange(f"sample resolution 2^-{P} is coarser than 2^-{r}")
        sh = P - r
        out.append(len({tuple(v >> sh for v in pt) for pt in nums}))
    return out


def auto_range(sample: PointSample, r_min: int = 1, cap: int = AUTO_R_CAP) -> tuple[int, int]:
    """Default (r_lo, r_hi) for box counting.

    r_hi is the last precision whose cell count stays below a quarter of the
    distinct sample points (finer cells are undersampled); r_lo = r_hi // 3
    drops the coarse scales where boundary effects bias the slope upward.
    """
    P, nums = _aligned(sample)
    limit = max(2, len(set(nums)) // SATURATION)
    r_hi = r_min + 1
    r = r_min + 1
    while r <= min(cap, P):
        if cell_counts(sample, [r])[0] > limit:
            break
        r_hi = r
        r += 1
    if r_hi > P:
        raise DegenerateRange("sample resolution too coarse for any range")
    return max(r_min, r_hi // 3), r_hi


def box_counting_dim(sample: PointSample, r_lo: int | None = None, r_hi: int | None = None) -> float:
    """Least-squares slope of log2 N(r) against r over r_lo..r_hi."""
    if r_lo is None or r_hi is None:
        lo, hi = auto_range(sample, r_lo or 1)
        r_lo = lo if r_lo is None else r_lo
        r_hi = hi if r_hi is None else r_hi
    if r_lo < 1 or r_hi <= r_lo:
        raise DegenerateRange(f"need r_hi > r_lo >= 1, got [{r_lo}, {r_hi}]")
    if r_hi > _sample_prec(sample):
        raise DegenerateRange(f"sample resolution 2^-{_sample_prec(sample)} is coarser than 2^-{r_hi}")
    rs = list(range(r_lo, r_hi + 1))
    counts = cell_counts(sample, rs)
    slope = np.polyfit(np.asarray(rs, float), np.log2(np.asarray(counts, float)), 1)[0]
    return float(slope)


# low-complexity covers


@dataclass(frozen=True)
class CoverElement:
    ball: Ball
    complexity_witness: float

    def __post_init__(self):
        if self.complexity_witness < 0:
            raise ValueError("witness must be >= 0")


@dataclass
class CoverResult:
    elements: list
    uncovered: int
    cost: float
    candidates: int
    r: int
    s: float
    slack_bits: float

    @property
    def kept(self) -> int:
        return len(self.elements)

    @property
    def cardinality_bound(self) -> float:
        return 2.0 ** (self.r * self.s + self.slack_bits + 1)


def _grid_box(sample: PointSample, r: int) -> list[range]:
    P, nums = _aligned(sample)
    sh = P - r if P >= r else 0
    out = []
    for i in range(sample.dim):
        col = [pt[i] for pt in nums]
        if P >= r:
            lo, hi = min(col) >> sh, -((-max(col)) >> sh)
        else:
            lo, hi = min(col) << (r - P), max(col) << (r - P)
        out.append(range(lo - 1, hi + 2))
    return out


def low_complexity_cover_cost(model: ComplexityModel, sample: PointSample, s: float, r: int,
                              slack_bits: float = 0.0, threads: int | None = None,
                              cap: int = COVER_GRID_CAP) -> CoverResult:
    """Balls B(q, 2**-r) over 2**-r grid points q with estimate(q) <= r*s + slack_bits.

    The grid spans the sample's bounding box plus one cell on each side.  The
    number of kept balls is checked against 2**(r*s + slack_bits + 1); for a
    model whose lengths satisfy Kraft's inequality this cannot fail.
    """
    n = sample.dim
    if not 0 < s <= n:
        raise ValueError(f"exponent must lie in (0, {n}]")
    if r < 1:
        raise ValueError("precision must be >= 1")
    axes = _grid_box(sample, r)
    total = math.prod(len(a) for a in axes)
    if total > cap:
        raise CandidateExplosion(f"cover grid has {total} points (cap {cap})")
    grid = [DyadicPoint(t, r) for t in product(*axes)]
    batches = [grid[i : i + ESTIMATE_BATCH] for i in range(0, len(grid), ESTIMATE_BATCH)]

    def score(batch):
        return model.estimate_many([PointEncoding.from_dyadic(q) for q in batch])

    est = [e for part in pmap(score, batches, threads) for e in part]
    budget = r * s + slack_bits
    kept = {q.nums: e for q, e in zip(grid, est) if e <= budget}
    res = CoverResult([], 0, 0.0, total, r, s, slack_bits)
    if len(kept) >= res.cardinality_bound:
        raise AssertionError(f"{len(kept)} low-complexity balls exceed 2^(rs+1) = {res.cardinality_bound}")
    res.elements = [CoverElement(Ball(DyadicPoint(k, r), r), e) for k, e in sorted(kept.items())]
    # a point at distance < 2^-r from a grid point q has floor(point) - q in {-1, 0, 1} per axis
    P, nums = _aligned(sample)
    thr = 1 << (2 * P)
    uncovered = 0
    for pt in nums:
        if P >= r:
            base = [v >> (P - r) for v in pt]
        else:
            base = [v << (r - P) for v in pt]
        hit = False
        for off in product((-1, 0, 1, 2), repeat=n):
            key = tuple(b + o for b, o in zip(base, off))
            if key in kept:
                Pm = max(P, r)
                d2 = sum(((k << (Pm - r)) - (v << (Pm - P))) ** 2 for k, v in zip(key, pt))
                if d2 < (thr << (2 * (Pm - P))) >> (2 * r):
                    hit = True
                    break
        uncovered += not hit
    res.uncovered = uncovered
    # each ball has diameter 2^(1-r)
    res.cost = len(kept) * 2.0 ** ((1 - r) * s)
    return res


def covers(element: CoverElement, point: DyadicPoint) -> bool:
    return element.ball.contains(point)


# packings


def packing(sample: PointSample, delta_exp: int) -> list[DyadicPoint]:
    """Greedy disjoint open balls of radius 2**-(delta_exp+2) centred at sample points.

    Points are visited in lexicographic order of their coordinates; a point is
    kept if its distance to every kept centre is at least twice the radius.
    """
    if delta_exp < 0:
        raise ValueError("delta exponent must be >= 0")
    P, nums = _aligned(sample)
    rexp = delta_exp + 2
    # disjoint iff |c - c'| >= 2 * 2^-rexp, i.e. d2 * 2^(2 rexp) >= 4 * 2^(2P)
    Pm = max(P, rexp)
    up = Pm - P
    pts = sorted({tuple(v << up for v in pt) for pt in nums})
    need = 4 << (2 * (Pm - rexp))
    cell_shift = Pm - rexp + 1  # cells of side 2 * radius
    cells: dict[tuple, list] = {}
    kept: list[tuple] = []
    n = sample.dim
    for pt in pts:
        key = tuple(v >> cell_shift for v in pt)
        ok = True
        for off in product((-1, 0, 1), repeat=n):
            for c in cells.get(tuple(k + o for k, o in zip(key, off)), ()):
                if sum((a - b) ** 2 for a, b in zip(pt, c)) < need:
                    ok = False
                    break
            if not ok:
                break
        if ok:
            kept.append(pt)
            cells.setdefault(key, []).append(pt)
    return [DyadicPoint(pt, Pm) for pt in kept]


def packing_cost(sample: PointSample, s: float, delta_exp: int) -> float:
    """Sum of |V_i|**s over the greedy packing, a lower bound for the packing premeasure."""
    if s <= 0:
        raise ValueError("exponent must be > 0")
    count = len(packing(sample, delta_exp))
    return count * 2.0 ** (-(delta_exp + 1) * s)


def pairwise_disjoint(centers: Sequence[DyadicPoint], delta_exp: int) -> bool:
    """Exact check that the open balls of radius 2**-(delta_exp+2) do not meet."""
    lim = Fraction(4, 1 << (2 * (delta_exp + 2)))
    return all(a.dist2(b) >= lim for i, a in enumerate(centers) for b in centers[i + 1 :])


# point-to-set audit


def point_to_set_audit(model: ComplexityModel, spec: SetSpec | dict, sampler: Callable | None = None,
                       schedule: PrecisionSchedule | None = None, count: int = 1000, points: int = 3,
                       tol: float = 0.12, r_range: tuple[int, int] | None = None,
                       threads: int | None = None) -> AuditReport:
    """Compare the box dimension of a sample with the largest estimated point dimension.

    The lower components stand for the Hausdorff side and the upper ones for
    the packing side.  The minimizing oracle is out of reach, so the check is
    one-sided evidence only.
    """
    if isinstance(spec, dict):
        spec = SetSpec.from_dict(spec)
    schedule = schedule or PrecisionSchedule()
    sampler = sampler or set_point_sampler(spec)
    sample = generate_set(spec, count)
    lo, hi = r_range if r_range else auto_range(sample)
    box = box_counting_dim(sample, lo, hi)
    pairs = pmap(lambda i: dim_estimate(model, sampler(i), schedule), list(range(points)), threads)
    best_lo = max(p.lower for p in pairs)
    best_hi = max(p.upper for p in pairs)
    analytic = analytic_dimension(spec)
    rep = AuditReport("point_to_set", rs=schedule.points())
    rep.values = {
        "set": spec.to_dict(),
        "count": count,
        "box_dim": box,
        "box_range": [lo, hi],
        "analytic_dim": analytic,
        "point_dims": [p.as_dict() for p in pairs],
        "max_point_lower": best_lo,
        "max_point_upper": best_hi,
        "gap_lower": box - best_lo,
        "gap_upper": box - best_hi,
        "tol": tol,
    }
    rep.checks = {"hausdorff_side": abs(box - best_lo) <= tol}
    if analytic is not None:
        rep.values["analytic_gap"] = box - analytic
    rep.notes = [HAUSDORFF_NOTE, "one-sided evidence: the minimum over oracles is not computed"]
    return rep
