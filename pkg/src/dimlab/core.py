"""Exact dyadic point arithmetic and the ball/grid primitives built on it.

Every coordinate is an integer numerator over a shared power of two, so ball
membership (a strict inequality on squared distance) is decided exactly.
"""

from __future__ import annotations

from dataclasses import dataclass
from fractions import Fraction
from itertools import product
from typing import TYPE_CHECKING, Iterator

from dimlab.errors import CandidateExplosion

if TYPE_CHECKING:
    from dimlab.sources import PointSource

DEFAULT_GRID_CAP = 4096


def half_log_floor(n: int) -> int:
    """floor(log2(n) / 2) for n >= 1."""
    return (n.bit_length() - 1) // 2


@dataclass(frozen=True, eq=False)
class DyadicPoint:
    """Point of R^n with coordinates ``nums[i] / 2**prec``."""

    nums: tuple[int, ...]
    prec: int

    def __post_init__(self):
        if self.prec < 0:
            raise ValueError("precision exponent must be >= 0")
        if not self.nums:
            raise ValueError("a point needs at least one coordinate")
        object.__setattr__(self, "nums", tuple(int(v) for v in self.nums))

    @property
    def dim(self) -> int:
        return len(self.nums)

    @classmethod
    def from_fractions(cls, values, prec: int) -> "DyadicPoint":
        """Exact conversion; raises if a value is not a multiple of 2**-prec."""
        nums = []
        for v in values:
            v = Fraction(v) * (1 << prec)
            if v.denominator != 1:
                raise ValueError(f"{v / (1 << prec)} is not representable at precision {prec}")
            nums.append(v.numerator)
        return cls(tuple(nums), prec)

    def fractions(self) -> tuple[Fraction, ...]:
        return tuple(Fraction(v, 1 << self.prec) for v in self.nums)

    def at_precision(self, p: int) -> "DyadicPoint":
        """Same value with a larger exponent (no rounding ever happens)."""
        if p < self.prec:
            raise ValueError("cannot lower precision without rounding; use reduced()")
        shift = p - self.prec
        return DyadicPoint(tuple(v << shift for v in self.nums), p)

    def reduced(self) -> "DyadicPoint":
        """Smallest exponent representing the same rational point."""
        nums, p = self.nums, self.prec
        if not any(nums):
            return DyadicPoint(tuple(0 for _ in nums), 0)
        tz = min((v & -v).bit_length() - 1 for v in nums if v)
        tz = min(tz, p)
        if tz == 0:
            return self
        return DyadicPoint(tuple(v >> tz for v in nums), p - tz)

    def dist2(self, other: "DyadicPoint") -> Fraction:
        """Exact squared Euclidean distance."""
        p = max(self.prec, other.prec)
        a, b = self.at_precision(p), other.at_precision(p)
        return Fraction(sum((x - y) ** 2 for x, y in zip(a.nums, b.nums, strict=True)), 1 << (2 * p))

    def to_text(self) -> str:
        return " ".join(str(v) for v in (self.dim, self.prec, *self.nums))

    @classmethod
    def from_text(cls, text: str) -> "DyadicPoint":
        parts = [int(t) for t in text.split()]
        if len(parts) < 3 or parts[0] != len(parts) - 2:
            raise ValueError(f"malformed point text {text!r}")
        return cls(tuple(parts[2:]), parts[1])

    def _key(self):
        r = self.reduced()
        return r.nums, r.prec

    def __eq__(self, other):
        if not isinstance(other, DyadicPoint):
            return NotImplemented
        return self._key() == other._key()

    def __hash__(self):
        return hash(self._key())

    def __repr__(self):
        return f"DyadicPoint({self.to_text()!r})"


@dataclass(frozen=True)
class Ball:
    """Open ball of radius 2**-radius_exp."""

    center: DyadicPoint
    radius_exp: int

    def __post_init__(self):
        if self.radius_exp < 0:
            raise ValueError("radius exponent must be >= 0")

    def contains(self, point: DyadicPoint) -> bool:
        return point.dist2(self.center) < Fraction(1, 1 << (2 * self.radius_exp))

    def contains_fraction(self, coords) -> bool:
        d2 = sum((Fraction(a) - b) ** 2 for a, b in zip(coords, self.center.fractions(), strict=True))
        return d2 < Fraction(1, 1 << (2 * self.radius_exp))


def truncate(x: "PointSource", r: int) -> DyadicPoint:
    """Coordinatewise floor truncation ``2**-r * floor(x * 2**r)``."""
    if r < 0:
        raise ValueError("precision must be >= 0")
    return x.truncate(r)


def lattice_point_in_ball(b: Ball, m: int | None = None) -> DyadicPoint:
    """A point of the ``2**-(r + floor(log(m)/2) + 1)`` lattice strictly inside ``b``.

    Picks the lattice point nearest the center, rounding halves toward -inf.
    """
    m = b.center.dim if m is None else m
    if m != b.center.dim:
        raise ValueError("ambient dimension does not match the ball")
    e = b.radius_exp + half_log_floor(m) + 1
    c = b.center
    if c.prec <= e:
        return c.at_precision(e)
    shift = c.prec - e
    # ceil(v - 1/2) with v = num / 2**shift
    nums = tuple(-(((1 << shift) - 2 * v) // (1 << (shift + 1))) for v in c.nums)
    return DyadicPoint(nums, e)


def _grid_ranges(b: Ball, e: int):
    c = b.center
    p = max(c.prec, e, b.radius_exp)
    cen = c.at_precision(p).nums
    unit = 1 << (p - e)
    rad = 1 << (p - b.radius_exp)
    ranges = []
    for cv in cen:
        # unit * k in (cv - rad, cv + rad)
        lo = (cv - rad) // unit + 1
        hi = -((-(cv + rad)) // unit) - 1
        ranges.append(range(lo, hi + 1))
    return cen, unit, rad * rad, ranges


def iter_ball_grid(b: Ball, e: int) -> Iterator[DyadicPoint]:
    """All points of the 2**-e grid strictly inside ``b``, lexicographic order."""
    cen, unit, rad2, ranges = _grid_ranges(b, e)
    for ks in product(*ranges):
        if sum((k * unit - cv) ** 2 for k, cv in zip(ks, cen)) < rad2:
            yield DyadicPoint(ks, e)


def ball_grid(b: Ball, guard: int, cap: int = DEFAULT_GRID_CAP) -> list[DyadicPoint]:
    """Guarded dyadic grid inside ``b`` with spacing 2**-(radius_exp + guard).

    Raises CandidateExplosion once more than ``cap`` points are found.
    """
    if guard < 1:
        raise ValueError("guard must be >= 1")
    out = []
    for pt in iter_ball_grid(b, b.radius_exp + guard):
        out.append(pt)
        if len(out) > cap:
            raise CandidateExplosion(
                f"grid inside radius 2^-{b.radius_exp} ball at guard {guard} exceeds {cap} points"
            )
    return out
