"""Seeded point and set generators with known dimensions.

Random digits come from numpy's PCG64, one independent stream per
(seed, component, coordinate, chunk) through ``SeedSequence`` spawn keys, so
digit i of a coordinate is a pure function of the point spec and i.
The block-dilution schedule is described in docs/generators.md.
"""

from __future__ import annotations

import math
from dataclasses import asdict, dataclass, field
from fractions import Fraction
from typing import Any

import numpy as np

from dimlab.core import DyadicPoint
from dimlab.errors import InvalidSpec
from dimlab.sources import (
    CHUNK,
    BinaryDigits,
    Const,
    PointSource,
    Product,
    Sum,
    TernaryDigits,
    affine,
    join,
)

POINT_KINDS = ("AllZero", "Bernoulli", "BlockDilution", "Line", "JointCopy", "JointIndependent",
               "Cantor", "Constant", "Shift")
SET_KINDS = ("CantorMiddleThirds", "IFS", "SegmentFamily", "UnitCube", "Singleton")
DILUTION_CHUNK = 1024
SAMPLE_BITS = 64
DIRECTION_BITS = 48
SEGMENT_PARAM_BITS = 24


def stream(seed: int, *key: int) -> np.random.Generator:
    return np.random.Generator(np.random.PCG64(np.random.SeedSequence(seed, spawn_key=tuple(key))))


def parse_number(v) -> Fraction:
    """Exact value from an int, a decimal or 'a/b' string, or a float (taken exactly)."""
    if isinstance(v, bool):
        raise InvalidSpec(f"not a number: {v!r}")
    try:
        return Fraction(v) if not isinstance(v, str) else Fraction(v.strip())
    except (ValueError, ZeroDivisionError, TypeError) as e:
        raise InvalidSpec(f"not a number: {v!r}") from e


# block dilution schedule


def dilution_boundaries(upto: int) -> list[int]:
    """Block ends N_k = 2**(k*k + 2) until one reaches ``upto``.

    The exponent gaps grow (1, 3, 5, ...), so each block dwarfs everything
    before it and the running density swings all the way between the two
    block densities.
    """
    out = []
    k = 0
    while True:
        n = 1 << (k * k + 2)
        out.append(n)
        if n >= upto:
            return out
        k += 1


def _fraction_parts(f: Fraction) -> tuple[int, int]:
    return f.numerator, f.denominator


def dilution_mask(start: int, stop: int, alpha: Fraction, beta: Fraction,
                  chunk: int = DILUTION_CHUNK) -> np.ndarray:
    """Which positions in [start, stop) carry a random digit.

    Block k covers [N_{k-1}, N_k) and has density alpha for odd k, beta for
    even k.  Inside a block, chunk t of ``chunk`` positions opens its first
    floor((t+1) f chunk) - floor(t f chunk) positions.
    """
    idx = np.arange(start, stop, dtype=np.int64)
    if idx.size == 0:
        return np.zeros(0, dtype=bool)
    ends = np.array(dilution_boundaries(stop), dtype=np.int64)
    k = np.searchsorted(ends, idx, side="right")
    begins = np.concatenate([[0], ends])[k]
    off = idx - begins
    t = off // chunk
    within = off % chunk
    an, ad = _fraction_parts(alpha)
    bn, bd = _fraction_parts(beta)
    num = np.where(k % 2 == 1, an, bn).astype(np.int64)
    den = np.where(k % 2 == 1, ad, bd).astype(np.int64)
    cnt = ((t + 1) * num * chunk) // den - (t * num * chunk) // den
    return within < cnt


def dilution_open_count(n: int, alpha: Fraction, beta: Fraction, chunk: int = DILUTION_CHUNK) -> int:
    """Number of random positions among the first n, from the schedule alone."""
    total = 0
    lo = 0
    for k, hi in enumerate(dilution_boundaries(max(n, 1))):
        if lo >= n:
            break
        f = alpha if k % 2 == 1 else beta
        length = min(hi, n) - lo
        full, part = divmod(length, chunk)
        # chunk sizes telescope to floor(T f c) over complete chunks
        total += math.floor(full * f * chunk)
        if part:
            cnt = math.floor((full + 1) * f * chunk) - math.floor(full * f * chunk)
            total += min(part, cnt)
        lo = hi
    return total


# point specs


@dataclass
class PointSpec:
    kind: str
    seed: int = 0
    dim: int = 1
    params: dict = field(default_factory=dict)

    def to_dict(self) -> dict:
        return asdict(self)

    @classmethod
    def from_dict(cls, d: dict) -> "PointSpec":
        if not isinstance(d, dict) or "kind" not in d:
            raise InvalidSpec(f"point spec needs a kind: {d!r}")
        extra = set(d) - {"kind", "seed", "dim", "params"}
        if extra:
            raise InvalidSpec(f"unknown point spec fields {sorted(extra)}")
        return cls(d["kind"], int(d.get("seed", 0)), int(d.get("dim", 1)), dict(d.get("params", {})))


def _bernoulli_coord(p: float, seed: int, comp: int, coord: int) -> BinaryDigits:
    def chunk(j):
        return (stream(seed, comp, coord, j).random(CHUNK) < p).astype(np.uint8)

    return BinaryDigits(chunk)


def _dilution_coord(alpha: Fraction, beta: Fraction, c: int, seed: int, comp: int, coord: int) -> BinaryDigits:
    def chunk(j):
        bits = stream(seed, comp, coord, j).random(CHUNK) < 0.5
        mask = dilution_mask(j * CHUNK, (j + 1) * CHUNK, alpha, beta, c)
        return (bits & mask).astype(np.uint8)

    return BinaryDigits(chunk)


def _cantor_coord(seed: int, comp: int, coord: int) -> TernaryDigits:
    def chunk(j):
        return (2 * stream(seed, comp, coord, j).integers(0, 2, CHUNK)).astype(np.uint8)

    return TernaryDigits(chunk)


def _scalar(v, seed: int, comp: int) -> Any:
    """A 1-D source from a number or a nested spec."""
    if isinstance(v, dict):
        sub = PointSpec.from_dict({"seed": seed, **v})
        if sub.dim != 1:
            raise InvalidSpec("line parameters must be one-dimensional")
        return _build(sub, comp).coords[0]
    return Const(parse_number(v))


def _build(spec: PointSpec, comp: int = 0) -> PointSource:
    k, n, seed, p = spec.kind, spec.dim, spec.seed, spec.params
    if n < 1:
        raise InvalidSpec("dimension must be >= 1")
    if k == "AllZero":
        return PointSource([Const(0)] * n, "AllZero")
    if k == "Constant":
        vals = p.get("values")
        if not isinstance(vals, list) or len(vals) != n:
            raise InvalidSpec("Constant needs 'values' with one entry per coordinate")
        return PointSource([Const(parse_number(v)) for v in vals], "Constant")
    if k == "Bernoulli":
        prob = float(p.get("p", 0.5))
        if not 0.0 <= prob <= 1.0:
            raise InvalidSpec(f"Bernoulli p must lie in [0, 1], got {prob}")
        return PointSource([_bernoulli_coord(prob, seed, comp, i) for i in range(n)], f"Bernoulli({prob})")
    if k == "BlockDilution":
        a = parse_number(p.get("alpha", "0.3"))
        b = parse_number(p.get("beta", "0.9"))
        c = int(p.get("chunk", DILUTION_CHUNK))
        if not 0 <= a <= b <= 1:
            raise InvalidSpec("BlockDilution needs 0 <= alpha <= beta <= 1")
        if c < 1:
            raise InvalidSpec("chunk must be >= 1")
        return PointSource([_dilution_coord(a, b, c, seed, comp, i) for i in range(n)],
                           f"BlockDilution({a},{b})")
    if k == "Cantor":
        return PointSource([_cantor_coord(seed, comp, i) for i in range(n)], "Cantor")
    if k == "Line":
        if n != 2:
            raise InvalidSpec("Line points live in the plane (dim 2)")
        m = _scalar(p.get("m", {"kind": "Bernoulli"}), seed, comp * 8 + 1)
        b = _scalar(p.get("b", 0), seed, comp * 8 + 2)
        x = _scalar(p.get("x", {"kind": "Bernoulli"}), seed, comp * 8 + 3)
        if m.exact is not None and not 0 <= m.exact <= 1:
            raise InvalidSpec("slope m must lie in [0, 1]")
        pt = PointSource([x, affine(m, x, b)], "Line")
        pt.line = (m, b, x)
        return pt
    if k in ("JointCopy", "JointIndependent"):
        base = PointSpec.from_dict({"kind": "Bernoulli", "seed": seed, **p.get("base", {})})
        if 2 * base.dim != n:
            raise InvalidSpec(f"{k} of a {base.dim}-D base has dimension {2 * base.dim}")
        x = _build(base, comp * 8 + 1)
        y = x if k == "JointCopy" else _build(base, comp * 8 + 2)
        return join(x, y)
    if k == "Shift":
        base = PointSpec.from_dict({"seed": seed, **p.get("base", {"kind": "Bernoulli"})})
        q = [parse_number(v) for v in p.get("q", [])]
        if len(q) != base.dim or base.dim != n:
            raise InvalidSpec("Shift needs one offset per coordinate")
        return _build(base, comp).shifted(q)
    raise InvalidSpec(f"unknown point kind {k!r}; expected one of {POINT_KINDS}")


def generate_point(spec: PointSpec | dict) -> PointSource:
    """The digit source of a point spec (deterministic in its fields)."""
    if isinstance(spec, dict):
        spec = PointSpec.from_dict(spec)
    return _build(spec)


def pair_components(spec: PointSpec | dict) -> tuple[PointSource, PointSource]:
    """Split a joint spec of even dimension into its two halves (x, y)."""
    pt = generate_point(spec)
    if pt.dim % 2:
        raise InvalidSpec("pair specs need an even dimension")
    h = pt.dim // 2
    return pt.project(range(h)), pt.project(range(h, pt.dim))


# sets


@dataclass
class SetSpec:
    kind: str
    seed: int = 0
    params: dict = field(default_factory=dict)

    def to_dict(self) -> dict:
        return asdict(self)

    @classmethod
    def from_dict(cls, d: dict) -> "SetSpec":
        if not isinstance(d, dict) or "kind" not in d:
            raise InvalidSpec(f"set spec needs a kind: {d!r}")
        extra = set(d) - {"kind", "seed", "params"}
        if extra:
            raise InvalidSpec(f"unknown set spec fields {sorted(extra)}")
        return cls(d["kind"], int(d.get("seed", 0)), dict(d.get("params", {})))


@dataclass
class PointSample:
    points: list
    provenance: dict

    def __post_init__(self):
        if not self.points:
            raise InvalidSpec("a sample needs at least one point")
        dims = {p.dim for p in self.points}
        if len(dims) != 1:
            raise InvalidSpec("sample points differ in dimension")

    @property
    def dim(self) -> int:
        return self.points[0].dim

    def __len__(self):
        return len(self.points)


def _uniform_ints(rng: np.random.Generator, size, bits: int) -> list[int]:
    hi = rng.integers(0, 1 << 32, size=size, dtype=np.uint64)
    lo = rng.integers(0, 1 << 32, size=size, dtype=np.uint64)
    vals = (hi.astype(object) << 32) | lo.astype(object)
    return [int(v) >> (64 - bits) for v in np.ravel(vals)]


def segment_directions(n: int) -> list[tuple[int, int]]:
    """Numerators over 2**48 of (cos, sin) of i*pi/n, i < n."""
    out = []
    for i in range(n):
        th = i * math.pi / n
        out.append((round(math.cos(th) * (1 << DIRECTION_BITS)), round(math.sin(th) * (1 << DIRECTION_BITS))))
    return out


def _ifs_maps(p: dict) -> list[tuple[Fraction, tuple[Fraction, ...]]]:
    maps = p.get("maps")
    if not maps:
        raise InvalidSpec("IFS needs a non-empty 'maps' list of {ratio, offset}")
    out = []
    dim = None
    for m in maps:
        ratio = parse_number(m.get("ratio"))
        off = tuple(parse_number(v) for v in m.get("offset", []))
        if not 0 < ratio < 1:
            raise InvalidSpec(f"contraction ratio must lie in (0, 1), got {ratio}")
        if not off or (dim is not None and len(off) != dim):
            raise InvalidSpec("IFS offsets need one consistent dimension")
        dim = len(off)
        out.append((ratio, off))
    return out


def generate_set(spec: SetSpec | dict, count: int) -> PointSample:
    """A seeded finite sample of the set, as dyadic points."""
    if isinstance(spec, dict):
        spec = SetSpec.from_dict(spec)
    if count < 1:
        raise InvalidSpec("count must be >= 1")
    rng = stream(spec.seed, 99)
    p = spec.params
    prov = {"generator": spec.kind, "seed": spec.seed, "params": p, "count": count}
    pts: list[DyadicPoint] = []
    if spec.kind == "UnitCube":
        n = int(p.get("dim", 2))
        if n < 1:
            raise InvalidSpec("dimension must be >= 1")
        vals = _uniform_ints(rng, (count, n), SAMPLE_BITS)
        pts = [DyadicPoint(tuple(vals[i * n : (i + 1) * n]), SAMPLE_BITS) for i in range(count)]
    elif spec.kind == "CantorMiddleThirds":
        d = int(p.get("depth", 12))
        if d < 1:
            raise InvalidSpec("depth must be >= 1")
        trits = 2 * rng.integers(0, 2, size=(count, d))
        weights = [3 ** (d - 1 - i) for i in range(d)]
        den = 3**d
        for row in trits:
            a = sum(int(t) * w for t, w in zip(row, weights))
            # a quarter of the way into the depth-d interval, floored to the dyadic grid
            num = ((4 * a + 1) << SAMPLE_BITS) // (4 * den)
            pts.append(DyadicPoint((num,), SAMPLE_BITS))
    elif spec.kind == "IFS":
        maps = _ifs_maps(p)
        d = int(p.get("depth", 12))
        if d < 1:
            raise InvalidSpec("depth must be >= 1")
        addr = rng.integers(0, len(maps), size=(count, d))
        n = len(maps[0][1])
        for row in addr:
            x = [Fraction(0)] * n
            for a in row[::-1]:
                ratio, off = maps[int(a)]
                x = [ratio * xi + oi for xi, oi in zip(x, off)]
            pts.append(DyadicPoint(tuple(math.floor(v * (1 << SAMPLE_BITS)) for v in x), SAMPLE_BITS))
    elif spec.kind == "SegmentFamily":
        N = int(p.get("directions", 64))
        if N < 1:
            raise InvalidSpec("need at least one direction")
        dirs = segment_directions(N)
        which = rng.integers(0, N, size=count)
        ts = _uniform_ints(rng, count, SEGMENT_PARAM_BITS)
        half = 1 << (SEGMENT_PARAM_BITS - 1)
        for i, t in zip(which, ts):
            dx, dy = dirs[int(i)]
            # t/2^24 - 1/2 along the direction: exact at 72 bits
            tt = t - half
            pts.append(DyadicPoint((tt * dx, tt * dy), SEGMENT_PARAM_BITS + DIRECTION_BITS))
        prov["directions"] = [list(d) for d in dirs]
        prov["segment_index"] = [int(i) for i in which]
    elif spec.kind == "Singleton":
        vals = [parse_number(v) for v in p.get("point", [0])]
        pts = [DyadicPoint(tuple(math.floor(v * (1 << SAMPLE_BITS)) for v in vals), SAMPLE_BITS)] * count
    else:
        raise InvalidSpec(f"unknown set kind {spec.kind!r}; expected one of {SET_KINDS}")
    return PointSample(pts, prov)


def set_point_sampler(spec: SetSpec | dict):
    """Callable i -> PointSource for a generic point of the set (used by the point-to-set audit)."""
    if isinstance(spec, dict):
        spec = SetSpec.from_dict(spec)
    p = spec.params
    if spec.kind == "CantorMiddleThirds":
        return lambda i: PointSource([_cantor_coord(spec.seed, 50, i)], "Cantor")
    if spec.kind == "UnitCube":
        n = int(p.get("dim", 2))
        return lambda i: PointSource([_bernoulli_coord(0.5, spec.seed, 51 + j, i) for j in range(n)], "Cube")
    if spec.kind == "SegmentFamily":
        dirs = segment_directions(int(p.get("directions", 64)))

        def seg(i):
            dx, dy = dirs[i % len(dirs)]
            t = Sum(_bernoulli_coord(0.5, spec.seed, 52, i), Const(Fraction(-1, 2)))
            scale = Fraction(1, 1 << DIRECTION_BITS)
            return PointSource([Product(Const(dx * scale), t), Product(Const(dy * scale), t)], "Segment")

        return seg
    if spec.kind == "Singleton":
        vals = [parse_number(v) for v in p.get("point", [0])]
        return lambda i: PointSource.constant(vals, "Singleton")
    raise InvalidSpec(f"no point sampler for {spec.kind!r}")


def analytic_dimension(spec: SetSpec | dict) -> float | None:
    if isinstance(spec, dict):
        spec = SetSpec.from_dict(spec)
    if spec.kind == "CantorMiddleThirds":
        return math.log(2) / math.log(3)
    if spec.kind == "UnitCube":
        return float(spec.params.get("dim", 2))
    if spec.kind == "SegmentFamily":
        return 1.0  # finitely many segments
    if spec.kind == "IFS":
        # similarity dimension: sum ratio**s = 1 (exact under the open set condition)
        ratios = [float(r) for r, _ in _ifs_maps(spec.params)]
        lo, hi = 0.0, 64.0
        for _ in range(200):
            mid = (lo + hi) / 2
            lo, hi = (mid, hi) if sum(r**mid for r in ratios) > 1 else (lo, mid)
        return lo
    if spec.kind == "Singleton":
        return 0.0
    return None
