"""Complexity models and the precision-complexity operators built on them.

A model maps a target (a bit string or a ``PointEncoding``) and an optional
condition to a description length in bits.  The operators take the best such
length over a finite set of rational candidates inside a ball:

    K_r(x)       min over candidates p near x of estimate(p)
    K_{r,s}(x|y) max over candidates q near y of min over p of estimate(p | q)

Curve-level regularization (running max in r, running min in s) lives in the
dimension module; everything here returns raw values for a single precision.
"""

from __future__ import annotations

import math
from typing import Sequence, Union

import numpy as np

from dimlab.codes import nat_code_length
from dimlab.core import DEFAULT_GRID_CAP, Ball, ball_grid, truncate
from dimlab.encoding import PointEncoding, raw_lane
from dimlab.lanecoder import LaneState, Marks, code_lanes, lcp
from dimlab.machine import MachineBudget, literal_length, min_program_length
from dimlab.sources import PointSource, join, triadic_digits_needed

Message = Union[str, PointEncoding]

GUARD = 2
# the ball is centred on x truncated this many bits below the grid spacing
CENTER_EXTRA = 32
OUTER_CAP = 64
SIDE_INFO_DEPTH = 128
SELECT_BITS = 2
COPY_MIN = 16


def message_bits(m: Message | None) -> str:
    if m is None:
        return ""
    return m.bits if isinstance(m, PointEncoding) else m


class ComplexityModel:
    """Length of a description of ``w`` given ``v``, in bits."""

    name = "abstract"

    def estimate(self, w: Message, v: Message | None = None) -> float:
        raise NotImplementedError

    def min_estimate(self, cands: Sequence[Message], conds: Sequence[Message | None]) -> list[float]:
        """For each condition, the smallest estimate over ``cands``."""
        return [min(self.estimate(c, v) for c in cands) for v in conds]

    def estimate_many(self, targets: Sequence[Message]) -> list[float]:
        """Unconditional estimate of each target."""
        return [self.estimate(t) for t in targets]

    def describe(self) -> dict:
        return {"name": self.name}


# classic LZ78 with the textbook phrase cost

SEP = 2


def lz78_phrases(seq: Sequence[int]) -> list[tuple]:
    """Incremental parse; a trailing incomplete phrase is kept as the last entry."""
    trie: dict = {}
    nxt = 1
    node = 0
    phrase: list = []
    out = []
    for ch in seq:
        phrase.append(ch)
        key = (node, ch)
        if key in trie:
            node = trie[key]
        else:
            trie[key] = nxt
            nxt += 1
            out.append(tuple(phrase))
            phrase = []
            node = 0
    if phrase:
        out.append(tuple(phrase))
    return out


def lz78_cost(seq: Sequence[int]) -> int:
    """Sum over phrases of ceil(log2 dictionary size) + 2."""
    total = 0
    for k in range(1, len(lz78_phrases(seq)) + 1):
        total += (k - 1).bit_length() + 2  # ceil(log2 k)
    return total


def _symbols(bits: str) -> list[int]:
    return [1 if c == "1" else 0 for c in bits]


def lz78_conditional(w: str, v: str = "") -> float:
    """Code length of v SEP w minus that of v, clipped at zero."""
    if not v:
        return float(lz78_cost(_symbols(w)))
    joint = _symbols(v) + [SEP] + _symbols(w)
    return float(max(0, lz78_cost(joint) - lz78_cost(_symbols(v))))


class ClassicLZ78Model(ComplexityModel):
    name = "lz78-classic"

    def estimate(self, w, v=None):
        return lz78_conditional(message_bits(w), message_bits(v))


class MachineModel(ComplexityModel):
    """Exact shortest-program length on the toy machine; literal length past the budget."""

    name = "machine"

    def __init__(self, budget: MachineBudget):
        self.budget = budget

    def estimate(self, w, v=None):
        wb, vb = message_bits(w), message_bits(v)
        k = min_program_length(wb, vb, self.budget)
        return float(literal_length(wb) if k is None else k)

    def describe(self):
        return {"name": self.name, "max_len": self.budget.max_len, "max_steps": self.budget.max_steps}


# lane-coded LZ78 predictor (default model)


class _Msg:
    __slots__ = ("header", "A", "lanes", "literal")

    def __init__(self, m: Message):
        if isinstance(m, PointEncoding):
            self.header = len(m.header())
            self.A = m.radix
            self.lanes = m.lanes
            width = 1 if m.radix == 2 else 2
            body = m.dim * m.prec * width
        else:
            self.header = nat_code_length(len(m))
            self.A = 2
            self.lanes = (raw_lane(m),)
            body = len(m)
        total = self.header + body
        self.literal = nat_code_length(total) + total


class LZ78Model(ComplexityModel):
    """LZ78-trie predictor over digit lanes with a copy-from-condition option.

    A target is charged ``SELECT_BITS`` plus the cheapest of three codings:
    the literal bits, the lanes coded from a fresh predictor, or the lanes
    coded from a predictor that has already parsed the condition.  Each lane
    carries a flag bit and may instead be copied from a condition lane or an
    earlier lane of the same alphabet (source index, copied length, then the
    remainder coded as usual).  The estimate is therefore never larger with a
    condition than without one.
    """

    name = "lz78"

    def estimate(self, w, v=None):
        return self.min_estimate([w], [v])[0]

    @staticmethod
    def _structured(msg: _Msg, marks: dict, sources: list[bytes]) -> float:
        total = float(msg.header)
        lanes = msg.lanes
        for k, ln in enumerate(lanes):
            mk: Marks = marks[ln]
            best = mk.total
            if len(ln) >= COPY_MIN:
                for j, src in enumerate(sources + list(lanes[:k])):
                    ell = lcp(ln, src)
                    if ell >= COPY_MIN:
                        c = nat_code_length(j) + nat_code_length(ell) + (mk.total - mk.upto(ell))
                        if c < best:
                            best = c
            total += 1 + best
        return total

    def estimate_many(self, targets):
        msgs = [_Msg(t) for t in targets]
        by_alpha: dict[int, set] = {}
        for m in msgs:
            by_alpha.setdefault(m.A, set()).update(m.lanes)
        fresh = {A: code_lanes(LaneState(A), lanes) for A, lanes in by_alpha.items()}
        return [SELECT_BITS + min(m.literal, self._structured(m, fresh[m.A], [])) for m in msgs]

    def min_estimate(self, cands, conds):
        msgs = [_Msg(c) for c in cands]
        if not msgs:
            raise ValueError("no candidates")
        lit = min(m.literal for m in msgs)
        by_alpha: dict[int, set] = {}
        for m in msgs:
            by_alpha.setdefault(m.A, set()).update(m.lanes)
        fresh = {A: code_lanes(LaneState(A), lanes) for A, lanes in by_alpha.items()}
        out = []
        for v in conds:
            vmsg = None if v is None or (isinstance(v, str) and not v) else _Msg(v)
            best = lit
            for m in msgs:
                srcs = list(vmsg.lanes) if vmsg is not None and vmsg.A == m.A else []
                best = min(best, self._structured(m, fresh[m.A], srcs))
            if vmsg is not None and vmsg.A in by_alpha:
                base = LaneState(vmsg.A)
                for ln in vmsg.lanes:
                    base.prime(ln)
                primed = dict(fresh)
                primed[vmsg.A] = code_lanes(base, by_alpha[vmsg.A])
                srcs = list(vmsg.lanes)
                for m in msgs:
                    if m.A == vmsg.A:
                        best = min(best, self._structured(m, primed[m.A], srcs))
            out.append(SELECT_BITS + best)
        return out


MODELS = {"lz78": LZ78Model, "lz78-classic": ClassicLZ78Model}


def make_model(spec: str) -> ComplexityModel:
    """``lz78``, ``lz78-classic`` or ``machine:L,T``."""
    if spec in MODELS:
        return MODELS[spec]()
    if spec.startswith("machine"):
        _, _, args = spec.partition(":")
        parts = [int(a) for a in args.split(",") if a.strip()] if args else []
        return MachineModel(MachineBudget(*parts))
    raise ValueError(f"unknown model {spec!r}")


# candidate sets


def _center(x: PointSource, r: int, guard: int):
    return truncate(x, r + guard + CENTER_EXTRA)


def triadic_candidates(x: PointSource, r: int, guard: int = GUARD) -> list[PointEncoding]:
    """Points of the 3**-N grid (3**-N <= 2**-(r+guard)) strictly inside B(x, 2**-r)."""
    if x.dim != 1:
        return []
    c = _center(x, r, guard)
    N = triadic_digits_needed(r + guard)
    P = c.prec
    t = 3**N
    cn = c.nums[0]
    # |k / 3^N - cn / 2^P| < 2^-r  <=>  |k 2^P - cn 3^N| < 3^N 2^(P-r)
    rad = t << (P - r)
    lo = (cn * t - rad) >> P
    hi = -((-(cn * t + rad)) >> P)
    out = []
    for k in range(lo, hi + 1):
        if abs((k << P) - cn * t) < rad:
            out.append(PointEncoding.from_triadic([k], N))
    return out


def point_candidates(x: PointSource, r: int, guard: int = GUARD, triadic: bool = True,
                     cap: int = DEFAULT_GRID_CAP) -> list[PointEncoding]:
    if r < 1:
        raise ValueError("precision must be >= 1")
    grid = ball_grid(Ball(_center(x, r, guard), r), guard, cap)
    out = [PointEncoding.from_dyadic(p) for p in grid]
    if triadic:
        out.extend(triadic_candidates(x, r, guard))
    return out


def condition_candidates(y: PointSource, s: int, guard: int = GUARD, seed: int = 0,
                         cap: int = OUTER_CAP) -> list[PointEncoding]:
    """Dyadic approximants of y for the outer max; seeded subsample above ``cap`` in n >= 3."""
    grid = ball_grid(Ball(_center(y, s, guard), s), guard, DEFAULT_GRID_CAP)
    if y.dim >= 3 and len(grid) > cap:
        rng = np.random.default_rng([seed, s])
        idx = np.sort(rng.choice(len(grid), size=cap, replace=False))
        grid = [grid[i] for i in idx]
    return [PointEncoding.from_dyadic(p) for p in grid]


# operators


def precision_complexity(model: ComplexityModel, x: PointSource, r: int, guard: int = GUARD,
                         triadic: bool = True) -> float:
    """K_r(x): best estimate over rational candidates within 2**-r of x."""
    return model.min_estimate(point_candidates(x, r, guard, triadic), [None])[0]


def cond_precision_complexity(model: ComplexityModel, x: PointSource, y: PointSource, r: int,
                              s: int | None = None, guard: int = GUARD, seed: int = 0) -> float:
    """K_{r,s}(x|y); ``s`` defaults to ``r``."""
    s = r if s is None else s
    if s < 1:
        raise ValueError("precision must be >= 1")
    qs = condition_candidates(y, s, guard, seed)
    vals = model.min_estimate(point_candidates(x, r, guard), qs)
    return max(vals)


def mutual_info_precision(model: ComplexityModel, x: PointSource, y: PointSource, r: int) -> float:
    """I_r(x:y) = K_r(x) + K_r(y) - K_r(x, y), clipped at zero."""
    kx = precision_complexity(model, x, r)
    ky = precision_complexity(model, y, r)
    kxy = precision_complexity(model, join(x, y), r)
    return max(0.0, kx + ky - kxy)


def side_info_complexity(model: ComplexityModel, x: PointSource, y: PointSource, r: int,
                         depth: int = SIDE_INFO_DEPTH) -> float:
    """K^y_r(x) surrogate: condition on y truncated ``depth`` bits past r."""
    deep = PointEncoding.from_dyadic(truncate(y, r + depth), reduce=False)
    return model.min_estimate(point_candidates(x, r), [deep])[0]


def binary_entropy(p: float) -> float:
    if p in (0.0, 1.0):
        return 0.0
    return -(p * math.log2(p) + (1 - p) * math.log2(1 - p))
