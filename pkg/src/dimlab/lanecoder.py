"""Sequential code lengths from an LZ78-trie predictor.

Each symbol is charged ``-log2 p`` where ``p`` blends the counts at the
current LZ78 parse node with a Krichevsky-Trofimov estimate from the last
four symbols:

    p(a) = (c_node(a) + W * p_ctx(a)) / (c_node + W),   W = 16
    p_ctx(a) = (c_ctx(a) + 1/2) / (c_ctx + A/2)

The parse node follows the classic LZ78 incremental dictionary: walk the trie
while the next symbol extends the current phrase, otherwise add a leaf and
restart at the root.  Both the node and the context restart at the start of
every lane; the trie and the counts persist.
"""

from __future__ import annotations

import math

BLEND_WEIGHT = 16.0
CONTEXT_ORDER = 4


class LaneState:
    """Trie and counts of one predictor; copy() gives an independent fork."""

    __slots__ = ("A", "child", "cnt", "tot", "g", "gt", "nxt")

    def __init__(self, A: int):
        if A not in (2, 3):
            raise ValueError("alphabet size must be 2 or 3")
        self.A = A
        self.child: dict[int, int] = {}
        self.cnt: dict[int, int] = {}
        self.tot: dict[int, int] = {}
        self.g: dict[int, int] = {}
        self.gt: dict[int, int] = {}
        self.nxt = 1

    def copy(self) -> "LaneState":
        s = LaneState.__new__(LaneState)
        s.A = self.A
        s.child = self.child.copy()
        s.cnt = self.cnt.copy()
        s.tot = self.tot.copy()
        s.g = self.g.copy()
        s.gt = self.gt.copy()
        s.nxt = self.nxt
        return s

    def prime(self, lane: bytes) -> None:
        """Parse a whole lane without charging for it."""
        _advance(self, 0, 0, lane, 0, len(lane), 0.0, None)


def _advance(st: LaneState, node: int, ctx: int, lane, start: int, stop: int, bits: float, marks):
    """Code lane[start:stop]; returns (node, ctx, bits) and appends running totals to ``marks``."""
    A = st.A
    half_a = A * 0.5
    cmod = A**CONTEXT_ORDER
    W = BLEND_WEIGHT
    child, cnt, tot, g, gt = st.child, st.cnt, st.tot, st.g, st.gt
    log2 = math.log2
    nxt = st.nxt
    charge = marks is not None
    append = marks.append if charge else None
    for i in range(start, stop):
        ch = lane[i]
        key = node * 4 + ch
        c = cnt.get(key, 0)
        t = tot.get(node, 0)
        gk = ctx * 4 + ch
        gc = g.get(gk, 0)
        gtt = gt.get(ctx, 0)
        if charge:
            p0 = (gc + 0.5) / (gtt + half_a)
            bits -= log2((c + W * p0) / (t + W))
            append(bits)
        cnt[key] = c + 1
        tot[node] = t + 1
        g[gk] = gc + 1
        gt[ctx] = gtt + 1
        ctx = (ctx * A + ch) % cmod
        nx = child.get(key)
        if nx is None:
            child[key] = nxt
            nxt += 1
            node = 0
        else:
            node = nx
    st.nxt = nxt
    return node, ctx, bits


def lane_cost(st: LaneState, lane: bytes) -> float:
    """Bits to code ``lane`` from a copy of ``st`` (``st`` is left untouched)."""
    s = st.copy()
    return _advance(s, 0, 0, lane, 0, len(lane), 0.0, [])[2]


def lcp(a: bytes, b: bytes, lo: int = 0) -> int:
    """Length of the common prefix of ``a`` and ``b``, given that it is >= ``lo``."""
    hi = min(len(a), len(b))
    if a[lo:hi] == b[lo:hi]:
        return hi
    while hi - lo > 1:
        mid = (lo + hi) // 2
        if a[lo:mid] == b[lo:mid]:
            lo = mid
        else:
            hi = mid
    return lo


class Marks:
    """Running code length after each symbol of a lane, stored as shared segments."""

    __slots__ = ("segs", "length", "_flat")

    def __init__(self, segs: tuple, length: int):
        self.segs = segs
        self.length = length
        self._flat = None

    @property
    def total(self) -> float:
        for seg in reversed(self.segs):
            if seg:
                return seg[-1]
        return 0.0

    def upto(self, n: int) -> float:
        """Bits spent on the first ``n`` symbols."""
        if n <= 0:
            return 0.0
        if self._flat is None:
            flat = []
            for seg in self.segs:
                flat.extend(seg)
            self._flat = flat
        return self._flat[n - 1]


def code_lanes(base: LaneState, lanes) -> dict[bytes, Marks]:
    """Code every distinct lane from (a copy of) ``base``, sharing common prefixes.

    Lanes that agree on a prefix are coded once up to the point where they
    split; the predictor state is forked there.
    """
    group = sorted(set(lanes))
    out: dict[bytes, Marks] = {}
    if not group:
        return out

    def rec(st, node, ctx, bits, segs, grp, pos):
        end = lcp(grp[0], grp[-1], pos)
        if end > pos:
            seg: list = []
            node, ctx, bits = _advance(st, node, ctx, grp[0], pos, end, bits, seg)
            segs = segs + (seg,)
        rest = []
        for ln in grp:
            if len(ln) == end:
                out[ln] = Marks(segs, end)
            else:
                rest.append(ln)
        if not rest:
            return
        parts: list[list[bytes]] = []
        for ln in rest:
            if parts and parts[-1][0][end] == ln[end]:
                parts[-1].append(ln)
            else:
                parts.append([ln])
        for i, part in enumerate(parts):
            fork = st if i == len(parts) - 1 else st.copy()
            rec(fork, node, ctx, bits, segs, part, end)

    rec(base.copy(), 0, 0, 0.0, (), group, 0)
    return out
