"""Dimension estimators over precision curves, and the identity audits.

liminf and limsup are read off a tail window: the last ceil(k/2) of the k
sampled precisions.  Curves are regularized to a running max in r before
any ratio is taken.
"""

from __future__ import annotations

import json
import math
import os
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field
from typing import Callable, Sequence

import numpy as np

from dimlab.codes import nat_code_length
from dimlab.complexity import (
    ComplexityModel,
    cond_precision_complexity,
    precision_complexity,
    side_info_complexity,
)
from dimlab.errors import InsufficientSamples
from dimlab.sources import PointSource, join

MIN_SAMPLES = 12
MODES = ("identity", "plus_sqrt", "minus_sqrt")
AUDIT_SLACK = 0.2
# additive constant for the oracle-versus-condition inequality, fixed once for this model family
SIDE_INFO_CONSTANT = 32


def ceil_sqrt(r: int) -> int:
    s = math.isqrt(r)
    return s if s * s == r else s + 1


def thread_count(threads: int | None = None) -> int:
    if threads is None:
        threads = int(os.environ.get("DIMLAB_THREADS", "1") or 1)
    return max(1, threads)


def pmap(fn: Callable, items: Sequence, threads: int | None = None) -> list:
    """Order-preserving map, optionally over a thread pool."""
    n = thread_count(threads)
    if n == 1 or len(items) < 2:
        return [fn(it) for it in items]
    with ThreadPoolExecutor(max_workers=n) as ex:
        return list(ex.map(fn, items))


@dataclass(frozen=True)
class PrecisionSchedule:
    r1: int = 64
    ratio: float = 1.3
    r_max: int = 1 << 14
    mode: str = "identity"

    def __post_init__(self):
        if self.r1 < 1 or self.r_max < self.r1:
            raise ValueError("need 1 <= r1 <= r_max")
        if self.ratio <= 1:
            raise ValueError("ratio must exceed 1")
        if self.mode not in MODES:
            raise ValueError(f"mode must be one of {MODES}")

    def points(self) -> list[int]:
        out: list[int] = []
        i = 0
        while True:
            r = round(self.r1 * self.ratio**i)
            if r >= self.r_max:
                break
            if not out or r > out[-1]:
                out.append(r)
            i += 1
        out.append(self.r_max)
        return out

    def s(self, r: int) -> int:
        if self.mode == "identity":
            return r
        if self.mode == "plus_sqrt":
            return r + ceil_sqrt(r)
        return max(1, r - ceil_sqrt(r))

    def with_mode(self, mode: str) -> "PrecisionSchedule":
        return PrecisionSchedule(self.r1, self.ratio, self.r_max, mode)

    def to_dict(self) -> dict:
        return {"r1": self.r1, "ratio": self.ratio, "r_max": self.r_max, "mode": self.mode}


@dataclass
class PrecisionCurve:
    rs: list
    raw: list
    schedule: dict = field(default_factory=dict)
    label: str = ""

    def __post_init__(self):
        if len(self.rs) != len(self.raw):
            raise ValueError("rs and values differ in length")
        if any(b <= a for a, b in zip(self.rs, self.rs[1:])):
            raise ValueError("precisions must increase strictly")
        if any(v < 0 for v in self.raw):
            raise ValueError("complexities are nonnegative")

    @property
    def values(self) -> list:
        """Running max of the raw values (nondecreasing in r)."""
        return np.maximum.accumulate(np.asarray(self.raw, dtype=float)).tolist() if self.raw else []

    def ratios(self) -> list:
        return [v / r for r, v in zip(self.rs, self.values)]

    def rows(self) -> list[tuple]:
        return [(r, v, v / r) for r, v in zip(self.rs, self.values)]

    def __len__(self):
        return len(self.rs)


@dataclass(frozen=True)
class DimPair:
    lower: float
    upper: float

    def __post_init__(self):
        if self.lower > self.upper:
            raise ValueError("lower dimension exceeds upper")

    def as_dict(self) -> dict:
        return {"lower": self.lower, "upper": self.upper}


def tail_window(k: int) -> int:
    return math.ceil(k / 2)


def dim_pair(curve: PrecisionCurve, n: float, window: int | None = None) -> DimPair:
    """min/max of value/r over the tail window, clamped to [0, n]."""
    k = len(curve)
    if k < MIN_SAMPLES:
        raise InsufficientSamples(f"need >= {MIN_SAMPLES} samples, got {k}")
    w = tail_window(k) if window is None else window
    if not 1 <= w <= k:
        raise ValueError("window must lie in [1, sample count]")
    tail = curve.ratios()[k - w :]
    lo = min(max(float(min(tail)), 0.0), float(n))
    hi = min(max(float(max(tail)), 0.0), float(n))
    return DimPair(lo, hi)


# curves


def complexity_curve(model: ComplexityModel, x: PointSource, schedule: PrecisionSchedule,
                     threads: int | None = None) -> PrecisionCurve:
    rs = schedule.points()
    raw = pmap(lambda r: precision_complexity(model, x, r), rs, threads)
    return PrecisionCurve(rs, raw, schedule.to_dict(), f"K_r({x.label})")


def cond_curve(model: ComplexityModel, x: PointSource, y: PointSource, schedule: PrecisionSchedule,
               threads: int | None = None, seed: int = 0) -> PrecisionCurve:
    rs = schedule.points()
    raw = pmap(lambda r: cond_precision_complexity(model, x, y, r, schedule.s(r), seed=seed), rs, threads)
    return PrecisionCurve(rs, raw, schedule.to_dict(), f"K_r,s(r)({x.label}|{y.label})")


def mutual_curve(model: ComplexityModel, x: PointSource, y: PointSource, schedule: PrecisionSchedule,
                 threads: int | None = None) -> PrecisionCurve:
    rs = schedule.points()
    xy = join(x, y)

    def one(r):
        return max(0.0, precision_complexity(model, x, r) + precision_complexity(model, y, r)
                   - precision_complexity(model, xy, r))

    return PrecisionCurve(rs, pmap(one, rs, threads), schedule.to_dict(), f"I_r({x.label}:{y.label})")


def s_profile(model: ComplexityModel, x: PointSource, y: PointSource, r: int, s_values: Sequence[int],
              seed: int = 0) -> tuple[list, list]:
    """K_{r,s}(x|y) over increasing s: (raw, running min)."""
    s_values = list(s_values)
    if any(b <= a for a, b in zip(s_values, s_values[1:])):
        raise ValueError("s values must increase strictly")
    raw = [cond_precision_complexity(model, x, y, r, s, seed=seed) for s in s_values]
    return raw, list(np.minimum.accumulate(np.asarray(raw, dtype=float)))


def dim_estimate(model, x, schedule, threads=None) -> DimPair:
    return dim_pair(complexity_curve(model, x, schedule, threads), x.dim)


def cond_dim_pair(model: ComplexityModel, x: PointSource, y: PointSource, schedule: PrecisionSchedule,
                  threads: int | None = None) -> DimPair:
    return dim_pair(cond_curve(model, x, y, schedule, threads), x.dim)


def mdim_pair(model: ComplexityModel, x: PointSource, y: PointSource, schedule: PrecisionSchedule,
              threads: int | None = None) -> DimPair:
    return dim_pair(mutual_curve(model, x, y, schedule, threads), min(x.dim, y.dim))


# audits


@dataclass
class AuditReport:
    name: str
    rs: list = field(default_factory=list)
    residuals: dict = field(default_factory=dict)
    values: dict = field(default_factory=dict)
    checks: dict = field(default_factory=dict)
    notes: list = field(default_factory=list)

    @property
    def passed(self) -> bool:
        return all(self.checks.values())

    def to_dict(self) -> dict:
        return {
            "name": self.name,
            "passed": self.passed,
            "rs": self.rs,
            "residuals": self.residuals,
            "values": self.values,
            "checks": self.checks,
            "notes": self.notes,
        }

    def to_json(self) -> str:
        return json.dumps(self.to_dict(), indent=2, sort_keys=True)


def audit_identities(model: ComplexityModel, x: PointSource, y: PointSource, schedule: PrecisionSchedule,
                     slack: float = AUDIT_SLACK, threads: int | None = None,
                     side_info_constant: float = SIDE_INFO_CONSTANT) -> AuditReport:
    """Chain rule, mutual-information identity, mutual-dimension bounds, dimension chain,
    and the oracle-versus-condition inequality, all as slack checks."""
    rs = schedule.points()
    xy = join(x, y)

    def row(r):
        s = schedule.s(r)
        return (
            precision_complexity(model, x, r),
            precision_complexity(model, y, r),
            precision_complexity(model, xy, r),
            cond_precision_complexity(model, x, y, r, s),
            cond_precision_complexity(model, y, x, r, s),
            side_info_complexity(model, x, y, r),
        )

    rows = np.asarray(pmap(row, rs, threads), dtype=float)
    kx, ky, kxy, kx_y, ky_x, side = rows.T
    r_arr = np.asarray(rs, dtype=float)
    mutual = np.maximum(0.0, kx + ky - kxy)
    chain = np.abs(kxy - kx_y - ky) / r_arr
    mi_resid = np.abs(mutual - (kx - kx_y)) / r_arr
    curve = lambda vals, lab: PrecisionCurve(rs, list(vals), schedule.to_dict(), lab)  # noqa: E731
    m, n = x.dim, y.dim
    d_x = dim_pair(curve(kx, "x"), m)
    d_xy = dim_pair(curve(kxy, "xy"), m + n)
    d_x_y = dim_pair(curve(kx_y, "x|y"), m)
    d_y_x = dim_pair(curve(ky_x, "y|x"), n)
    md = dim_pair(curve(mutual, "I"), min(m, n))
    side_bound = kx_y + np.array([nat_code_length(r) for r in rs]) + side_info_constant

    rep = AuditReport("identities", rs=list(rs))
    rep.residuals = {"chain": chain.tolist(), "mutual": mi_resid.tolist()}
    rep.notes = ["residual checks use the last %d precisions" % tail_window(len(rs))]
    rep.values = {
        "K_x": kx.tolist(), "K_y": ky.tolist(), "K_xy": kxy.tolist(), "K_x|y": kx_y.tolist(),
        "K_y|x": ky_x.tolist(), "K^y_x": side.tolist(), "I": mutual.tolist(),
        "dim_x": d_x.as_dict(), "dim_xy": d_xy.as_dict(), "dim_x|y": d_x_y.as_dict(),
        "dim_y|x": d_y_x.as_dict(), "mdim": md.as_dict(), "slack": slack,
    }
    # residuals carry an O(1)/r overhead term, so like the dimensions they are judged on the tail window
    w = tail_window(len(rs))
    rep.checks = {
        "chain_residual": bool(chain[-w:].max() <= slack),
        "mutual_residual": bool(mi_resid[-w:].max() <= slack),
        "mdim_lower_bound": md.lower >= d_x.lower - d_x_y.upper - slack,
        "mdim_upper_bound": md.upper <= d_x.upper - d_x_y.lower + slack,
        "dim_chain_1": d_x.lower + d_y_x.lower <= d_xy.lower + slack,
        "dim_chain_2": d_xy.lower <= d_x.lower + d_y_x.upper + slack,
        "dim_chain_3": d_x.lower + d_y_x.upper <= d_xy.upper + slack,
        "dim_chain_4": d_xy.upper <= d_x.upper + d_y_x.upper + slack,
        "side_info": bool(np.all(side <= side_bound)),
    }
    return rep


def sensitivity_audit(model: ComplexityModel, x: PointSource, y: PointSource, r: int, delta: int,
                      steps: int = 4, slack_bits: float = 64.0) -> AuditReport:
    """Monotonicity and Lipschitz shape of K_r in r and of K_{r,s} in s."""
    rs = [r + i * delta for i in range(steps + 1)]
    raw_r = [precision_complexity(model, x, q) for q in rs]
    reg_r = np.maximum.accumulate(np.asarray(raw_r))
    ss = rs
    raw_s, reg_s = s_profile(model, x, y, r, ss)
    m, n = x.dim, y.dim
    rep = AuditReport("sensitivity", rs=rs)
    rep.values = {"K_r_raw": raw_r, "K_r": reg_r.tolist(), "K_rs_raw": raw_s, "K_rs": list(reg_s)}
    d_r = np.diff(reg_r)
    d_s = np.diff(reg_s)
    rep.checks = {
        "monotone_in_r": bool(np.all(d_r >= 0)),
        "lipschitz_in_r": bool(np.all(d_r <= (m + 0.5) * delta + slack_bits)),
        "antimonotone_in_s": bool(np.all(d_s <= 0)),
        "lipschitz_in_s": bool(np.all(d_s >= -((n + 0.5) * delta + slack_bits))),
    }
    return rep


def robustness_audit(model: ComplexityModel, x: PointSource, y: PointSource, schedule: PrecisionSchedule,
                     tol: float = 0.1, threads: int | None = None) -> AuditReport:
    """cond-dim under the identity and the two square-root precision shifts."""
    pairs = {mode: cond_dim_pair(model, x, y, schedule.with_mode(mode), threads) for mode in MODES}
    base = pairs["identity"]
    rep = AuditReport("robustness", rs=schedule.points())
    rep.values = {mode: p.as_dict() for mode, p in pairs.items()}
    for mode in MODES[1:]:
        p = pairs[mode]
        rep.checks[mode] = abs(p.lower - base.lower) <= tol and abs(p.upper - base.upper) <= tol
    return rep
