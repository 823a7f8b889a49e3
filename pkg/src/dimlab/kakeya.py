"""The slope-recovery machine for points on a line, and its candidate statistics.

Given a precision r, approximations p of x and q of m*x + b, and an oracle
that maps a slope guess u to an approximation of the intercept, the machine
scans u_i = i 2**-r for i = 0, 1, ..., 2**r in increasing order.  Index i is a
candidate when

    |u_i p + v_i - q| < 2**(2-r),     v_i = oracle(u_i)

and the machine returns the h-th candidate (u_i, v_i, p).  h(x, r) is the
smallest h whose output lies within 2**(1-r) of (m, b, x).

Every decision is exact; a float prefilter only skips candidates that are far
outside the target ball.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from fractions import Fraction
from typing import Sequence

import numpy as np

from dimlab.complexity import ComplexityModel
from dimlab.core import DyadicPoint
from dimlab.dimension import (
    AuditReport,
    PrecisionCurve,
    PrecisionSchedule,
    complexity_curve,
    cond_curve,
    dim_pair,
    pmap,
    tail_window,
)
from dimlab.errors import InternalInvariantViolation, NoSuchCandidate
from dimlab.generators import generate_point, stream
from dimlab.sources import MAX_EXTRA_BITS, Const, PointSource, RealSource, affine, join

AUDIT_SLACK = 0.25
X_BITS = 64
# int64 headroom for the vectorized candidate test
_INT64_BITS = 62


def as_source(v) -> RealSource:
    if isinstance(v, RealSource):
        return v
    return Const(Fraction(v))


def dyadic(v: Fraction | int, prec: int | None = None) -> tuple[int, int]:
    """(numerator, exponent) of a dyadic rational."""
    v = Fraction(v)
    d = v.denominator
    if d & (d - 1):
        raise ValueError(f"{v} is not dyadic")
    e = d.bit_length() - 1
    if prec is not None:
        if prec < e:
            raise ValueError(f"{v} needs more than {prec} bits")
        return v.numerator << (prec - e), prec
    return v.numerator, e


# oracles


class LineOracle:
    """Maps a slope guess u (a multiple of 2**-r) to an intercept approximation, or None to reject."""

    def eval(self, u: Fraction, r: int) -> Fraction | None:
        raise NotImplementedError

    def grid(self, r: int):
        """Optional vectorized form: (numerators over 2**prec as int64 array, prec, accepted mask) for all i."""
        return None


class ExactLineOracle(LineOracle):
    """Returns the truncation of b at precision r, whatever u is.

    This is always within 2**-r of b, so in particular whenever u is within
    2**-r of m.
    """

    def __init__(self, b):
        self.b = as_source(b)

    def eval(self, u, r):
        return Fraction(self.b.floor_at(r), 1 << r)

    def grid(self, r):
        n = (1 << r) + 1
        v = self.b.floor_at(r)
        if abs(v).bit_length() > _INT64_BITS:
            return None
        return np.full(n, v, dtype=np.int64), r, np.ones(n, dtype=bool)


class RejectOracle(LineOracle):
    def eval(self, u, r):
        return None

    def grid(self, r):
        n = (1 << r) + 1
        return np.zeros(n, dtype=np.int64), r, np.zeros(n, dtype=bool)


class SubgridOracle(ExactLineOracle):
    """Answers only on the sub-grid i % stride == 0 and rejects elsewhere."""

    def __init__(self, b, stride: int):
        super().__init__(b)
        if stride < 1:
            raise ValueError("stride must be >= 1")
        self.stride = stride

    def eval(self, u, r):
        i = u * (1 << r)
        if i.denominator != 1 or i.numerator % self.stride:
            return None
        return super().eval(u, r)

    def grid(self, r):
        g = super().grid(r)
        if g is None:
            return None
        v, prec, _ = g
        ok = np.arange(v.size) % self.stride == 0
        return v, prec, ok


# the machine


@dataclass(frozen=True)
class ReconstructionInput:
    r: int
    p: Fraction
    q: Fraction
    oracle: LineOracle
    h: int = 1

    def __post_init__(self):
        if self.r < 0:
            raise ValueError("precision must be >= 0")
        if self.h < 1:
            raise ValueError("h must be >= 1")
        object.__setattr__(self, "p", Fraction(self.p))
        object.__setattr__(self, "q", Fraction(self.q))


@dataclass(frozen=True)
class Candidate:
    index: int
    u: Fraction
    v: Fraction
    p: Fraction

    @property
    def triple(self) -> tuple[Fraction, Fraction, Fraction]:
        return self.u, self.v, self.p


def _passes(r: int, p: Fraction, q: Fraction, u: Fraction, v: Fraction) -> bool:
    return abs(u * p + v - q) < Fraction(4, 1 << r)


def candidate_indices(r: int, p: Fraction, q: Fraction, oracle: LineOracle) -> np.ndarray:
    """Indices i (increasing) that pass the tolerance test."""
    n = (1 << r) + 1
    g = oracle.grid(r)
    pn, pe = dyadic(p)
    qn, qe = dyadic(q)
    if g is not None:
        vals, ve, ok = g
        # common exponent D: i*P/2^(r+pe) + V/2^ve - Q/2^qe, tolerance 2^(D+2-r)
        D = max(r + pe, ve, qe)
        vmax = int(np.abs(vals).max())
        big = max(r + 1 + abs(pn).bit_length() + D - r - pe, vmax.bit_length() + D - ve,
                  abs(qn).bit_length() + D - qe, D + 3 - r)
        if big + 2 <= _INT64_BITS:
            i = np.arange(n, dtype=np.int64)
            t = i * (pn << (D - r - pe)) + (vals << (D - ve)) - (qn << (D - qe))
            mask = ok & (np.abs(t) < (1 << (D + 2 - r)))
            return np.nonzero(mask)[0]
    out = []
    for i in range(n):
        u = Fraction(i, 1 << r)
        v = oracle.eval(u, r)
        if v is not None and _passes(r, p, q, u, Fraction(v)):
            out.append(i)
    return np.asarray(out, dtype=np.int64)


def _candidate(inp_r: int, i: int, p: Fraction, oracle: LineOracle) -> Candidate:
    u = Fraction(int(i), 1 << inp_r)
    v = oracle.eval(u, inp_r)
    return Candidate(int(i), u, Fraction(v), p)


def reconstruct(inp: ReconstructionInput) -> Candidate:
    """The h-th candidate in increasing i, or NoSuchCandidate."""
    idx = candidate_indices(inp.r, inp.p, inp.q, inp.oracle)
    if len(idx) < inp.h:
        raise NoSuchCandidate(f"only {len(idx)} candidates pass at r={inp.r}, asked for h={inp.h}")
    return _candidate(inp.r, idx[inp.h - 1], inp.p, inp.oracle)


def harness_input(r: int, m, b, x, oracle: LineOracle | None = None, h: int = 1) -> ReconstructionInput:
    """p = truncate(x, r), q = truncate(m x + b, r)."""
    m, b, x = as_source(m), as_source(b), as_source(x)
    p = Fraction(x.floor_at(r), 1 << r)
    q = Fraction(affine(m, x, b).floor_at(r), 1 << r)
    return ReconstructionInput(r, p, q, oracle or ExactLineOracle(b), h)


def inside_ball(triple: Sequence[Fraction], centre: Sequence[RealSource], radius_exp: int) -> bool:
    """Exact test |triple - centre| < 2**-radius_exp, refining the centre's bounds as needed."""
    thr_exp = -2 * radius_exp
    exact = [c.exact for c in centre]
    if all(e is not None for e in exact):
        d2 = sum((Fraction(t) - e) ** 2 for t, e in zip(triple, exact))
        return d2 < Fraction(2) ** thr_exp
    R = max(dyadic(t)[1] for t in triple) + max(radius_exp, 0) + 64
    while True:
        lo2 = hi2 = 0
        for t, c in zip(triple, centre):
            tn = dyadic(t, R)[0]
            clo, chi = c.bounds(R)
            dlo, dhi = tn - chi, tn - clo
            far = max(abs(dlo), abs(dhi))
            near = 0 if dlo <= 0 <= dhi else min(abs(dlo), abs(dhi))
            hi2 += far * far
            lo2 += near * near
        # squared distance bounds are scaled by 2^(2R)
        lim = 1 << (2 * R - 2 * radius_exp)
        if hi2 < lim:
            return True
        if lo2 >= lim:
            return False
        if R > radius_exp + MAX_EXTRA_BITS:
            raise InternalInvariantViolation("ball membership undecided at the refinement limit")
        R += 64


@dataclass
class MinH:
    h: int
    candidate: Candidate
    candidates: int


def min_h_detail(r: int, m, b, x, oracle: LineOracle | None = None) -> MinH:
    m, b, x = as_source(m), as_source(b), as_source(x)
    oracle = oracle or ExactLineOracle(b)
    inp = harness_input(r, m, b, x, oracle)
    idx = candidate_indices(r, inp.p, inp.q, oracle)
    # candidates far from m cannot be within 2^(1-r); skip them with a float prefilter when r is small
    mf = m.value_float()
    window = 4.0 / (1 << r)
    for h, i in enumerate(idx, 1):
        if r <= 40 and abs(int(i) / (1 << r) - mf) > window:
            continue
        c = _candidate(r, i, inp.p, oracle)
        if inside_ball(c.triple, (m, b, x), r - 1):
            return MinH(h, c, len(idx))
    raise InternalInvariantViolation(f"no candidate lands within 2^(1-r) of (m, b, x) at r={r}")


def min_h(r: int, m, b, x, oracle: LineOracle | None = None) -> int:
    """h(x, r): the first rank whose output lies within 2**(1-r) of (m, b, x)."""
    return min_h_detail(r, m, b, x, oracle).h


# candidate intervals


def interval_length_bound(r: int, u: Fraction, m: Fraction) -> Fraction:
    """min(2**(3-r) / |u - m|, 1), or 1 when u == m."""
    if u == m:
        return Fraction(1)
    return min(Fraction(8, 1 << r) / abs(u - m), Fraction(1))


def interval_width_bound(r: int, u: Fraction, m: Fraction) -> Fraction:
    """min(2**(4-r) / |u - m|, 1), or 1 when u == m.

    {x : |(u - m) x + c| < 2**(3-r)} has width 2 * 2**(3-r) / |u - m| before
    clipping to [0, 1], so this is the bound exact lengths actually obey;
    ``interval_length_bound`` can fall short of them by a factor of two.
    """
    if u == m:
        return Fraction(1)
    return min(Fraction(16, 1 << r) / abs(u - m), Fraction(1))


def interval_length(r: int, u: Fraction, v: Fraction, m: Fraction, b: Fraction) -> Fraction:
    """Exact length of {x in [0,1] : |u x + v - (m x + b)| < 2**(3-r)}."""
    a, c = u - m, v - b
    tol = Fraction(8, 1 << r)
    if a == 0:
        return Fraction(1) if abs(c) < tol else Fraction(0)
    lo, hi = (-tol - c) / a, (tol - c) / a
    if lo > hi:
        lo, hi = hi, lo
    lo, hi = max(lo, Fraction(0)), min(hi, Fraction(1))
    return max(hi - lo, Fraction(0))


@dataclass
class CandidateProfile:
    r: int
    flags: np.ndarray
    lengths: list = field(default_factory=list)
    h_min: int | None = None


def candidate_profile(r: int, m: Fraction, b: Fraction, x: Fraction) -> CandidateProfile:
    """Pass flags, exact interval lengths and h(x, r) for exact (m, b, x)."""
    oracle = ExactLineOracle(b)
    inp = harness_input(r, m, b, x, oracle)
    idx = candidate_indices(r, inp.p, inp.q, oracle)
    flags = np.zeros((1 << r) + 1, dtype=bool)
    flags[idx] = True
    v = oracle.eval(Fraction(0), r)
    lengths = [interval_length(r, Fraction(i, 1 << r), v, Fraction(m), Fraction(b)) for i in range(flags.size)]
    return CandidateProfile(r, flags, lengths, min_h(r, m, b, x, oracle))


def _recip_sum(dens: Sequence[int]) -> tuple[int, int]:
    """sum(1/d) as an unreduced (numerator, denominator) by binary splitting."""
    if len(dens) == 1:
        return 1, dens[0]
    mid = len(dens) // 2
    a, b = _recip_sum(dens[:mid])
    c, d = _recip_sum(dens[mid:])
    return a * d + c * b, b * d


def harmonic(n: int) -> Fraction:
    """H_n exactly."""
    if n < 1:
        return Fraction(0)
    num, den = _recip_sum(list(range(1, n + 1)))
    return Fraction(num, den)


def analytic_interval_sum(r: int, m: Fraction) -> Fraction:
    """Sum over i of min(2**(3-r) / |u_i - m|, 1), exactly."""
    m = Fraction(m)
    ones = 0
    dens = []
    big = Fraction(8, 1 << r)
    for i in range(1 << r | 1):
        u = Fraction(i, 1 << r)
        a = abs(u - m)
        if a == 0 or big >= a:
            ones += 1
        else:
            # 2^(3-r) / |u - m| = 8 m.den / |i m.den - m.num 2^r|
            dens.append(abs(i * m.denominator - m.numerator * (1 << r)))
    total = Fraction(ones)
    if dens:
        num, den = _recip_sum(dens)
        total += Fraction(8 * m.denominator * num, den)
    return total


def harmonic_bound(r: int) -> Fraction:
    """2 + 2**4 H_{2**r}."""
    return 2 + 16 * harmonic(1 << r)


@dataclass
class HStats:
    r: int
    m: Fraction
    b: Fraction
    seed: int
    xs: list
    hs: list
    analytic: Fraction | None
    bound: Fraction

    @property
    def mean(self) -> float:
        return float(np.mean(self.hs))

    @property
    def median(self) -> float:
        return float(np.median(self.hs))

    @property
    def max(self) -> int:
        return int(max(self.hs))

    @property
    def median_log_ratio(self) -> float:
        return float(np.median(np.log2(np.asarray(self.hs, float)) / self.r))

    def rows(self) -> list[tuple]:
        return [(t, x, h, math.log2(h) / self.r) for t, (x, h) in enumerate(zip(self.xs, self.hs))]

    def to_dict(self) -> dict:
        cap = self.r * 64
        return {
            "r": self.r,
            "m": str(self.m),
            "b": str(self.b),
            "seed": self.seed,
            "trials": len(self.hs),
            "mean_h": self.mean,
            "median_h": self.median,
            "max_h": self.max,
            "median_log2h_over_r": self.median_log_ratio,
            "analytic_sum": None if self.analytic is None else float(self.analytic),
            "harmonic_bound": float(self.bound),
            "mean_bound": cap,
            "checks": self.checks(),
        }

    def checks(self) -> dict:
        out = {"mean_h_le_r_2^6": self.mean <= self.r * 64}
        if self.analytic is not None:
            out["analytic_le_harmonic"] = self.analytic <= self.bound
            out["analytic_le_r_2^6"] = self.analytic <= self.r * 64
        return out


def sample_xs(seed: int, trials: int) -> list[Fraction]:
    """Seeded uniform x on [0, 1) at X_BITS bits."""
    rng = stream(seed, 77)
    hi = rng.integers(0, 1 << 32, size=trials, dtype=np.uint64)
    lo = rng.integers(0, 1 << 32, size=trials, dtype=np.uint64)
    return [Fraction((int(a) << 32) | int(c), 1 << X_BITS) for a, c in zip(hi, lo)]


def h_statistics(r: int, m=Fraction(1, 2), b=Fraction(1, 4), trials: int = 1000, seed: int = 0,
                 threads: int | None = None) -> HStats:
    if trials < 1:
        raise ValueError("need at least one trial")
    m, b = Fraction(m), Fraction(b)
    xs = sample_xs(seed, trials)
    oracle = ExactLineOracle(b)
    hs = pmap(lambda x: min_h(r, m, b, x, oracle), xs, threads)
    analytic = analytic_interval_sum(r, m)
    st = HStats(r, m, b, seed, xs, hs, analytic, harmonic_bound(r))
    if st.mean > r * 64:
        raise InternalInvariantViolation(f"mean h {st.mean} exceeds r 2^6 = {r * 64}")
    return st


# complexity-side audit


def _lhs_curve(k_mbx: PrecisionCurve, k_b_m: PrecisionCurve) -> list[float]:
    return [(a - c) / r for r, a, c in zip(k_mbx.rs, k_mbx.values, k_b_m.values)]


def dim_lower_audit(model: ComplexityModel, m, b, seed: int = 0, schedule: PrecisionSchedule | None = None,
                    slack: float = AUDIT_SLACK, x: RealSource | None = None,
                    threads: int | None = None) -> AuditReport:
    """Finite-precision check of liminf (K_r(m,b,x) - K_r(b|m)) / r <= dim(x, m x + b).

    Also reports the decomposition dim(x | b, m) + dim(m) that the lower
    bound splits into.  x defaults to a Bernoulli(1/2) point drawn from seed.
    """
    schedule = schedule or PrecisionSchedule(r_max=1 << 13)
    m, b = as_source(m), as_source(b)
    if x is None:
        x = generate_point({"kind": "Bernoulli", "seed": seed, "params": {"p": 0.5}}).coords[0]
    pm, pb, px = PointSource([m], "m"), PointSource([b], "b"), PointSource([x], "x")
    line = PointSource([x, affine(m, x, b)], "(x,mx+b)")
    k_mbx = complexity_curve(model, join(pm, pb, px), schedule, threads)
    k_b_m = cond_curve(model, pb, pm, schedule, threads)
    k_line = complexity_curve(model, line, schedule, threads)
    k_m = complexity_curve(model, pm, schedule, threads)
    k_x_bm = cond_curve(model, px, join(pb, pm), schedule, threads)
    lhs = _lhs_curve(k_mbx, k_b_m)
    w = tail_window(len(lhs))
    lhs_inf = max(0.0, min(lhs[-w:]))
    d_line = dim_pair(k_line, 2)
    d_m = dim_pair(k_m, 1)
    d_x_bm = dim_pair(k_x_bm, 1)
    decomposition = d_x_bm.lower + d_m.lower
    rep = AuditReport("dim_lower", rs=k_line.rs)
    rep.values = {
        "K_mbx": k_mbx.values,
        "K_b|m": k_b_m.values,
        "K_line": k_line.values,
        "K_m": k_m.values,
        "K_x|bm": k_x_bm.values,
        "lhs": lhs,
        "lhs_liminf": lhs_inf,
        "dim_line": d_line.as_dict(),
        "dim_m": d_m.as_dict(),
        "dim_x|bm": d_x_bm.as_dict(),
        "decomposition": decomposition,
        "slack": slack,
    }
    rep.checks = {
        "lhs_le_dim_line": lhs_inf <= d_line.lower + slack,
        "decomposition_le_dim_line": decomposition <= d_line.lower + slack,
    }
    return rep
