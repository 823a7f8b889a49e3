"""Real-number sources that can be floored at any precision.

A source answers ``bounds(R)``: integers ``lo <= v * 2**R <= hi`` with
``hi - lo`` small.  Floors in radix 2 or 3 are resolved from those bounds by
refining ``R`` until both ends agree, so composite values (``m*x + b``) come out
exact without ever touching floating point.
"""

from __future__ import annotations

import math
from fractions import Fraction
from typing import Callable, Sequence

import numpy as np

from dimlab.core import DyadicPoint

CHUNK = 4096
# refinement stops this many bits past the requested precision; only a value
# sitting exactly on a grid boundary can exhaust it
MAX_EXTRA_BITS = 4096
LOG3_2 = math.log(2) / math.log(3)


def _ceil_shift(v: int, s: int) -> int:
    return -((-v) >> s)


def to_base3(k: int, width: int) -> bytes:
    """Base-3 digits of ``0 <= k < 3**width``, most significant first, as 0/1/2 bytes."""
    if k < 0 or (width and k >= 3**width) or (not width and k):
        raise ValueError("value does not fit in the requested width")
    out = bytearray(width)

    def fill(v, lo, n):
        if n <= 24:
            for i in range(lo + n - 1, lo - 1, -1):
                v, out[i] = divmod(v, 3)
            return
        half = n // 2
        hi_part, lo_part = divmod(v, 3**half)
        fill(hi_part, lo, n - half)
        fill(lo_part, lo + n - half, half)

    fill(k, 0, width)
    return bytes(out)


def from_base3(digits: bytes) -> int:
    """Inverse of ``to_base3``."""
    n = len(digits)
    if n <= 32:
        v = 0
        for d in digits:
            v = 3 * v + d
        return v
    half = n // 2
    return from_base3(digits[: n - half]) * 3**half + from_base3(digits[n - half :])


class RealSource:
    """A real number known through shrinking dyadic bounds."""

    exact: Fraction | None = None

    def bounds(self, R: int) -> tuple[int, int]:
        raise NotImplementedError

    def floor_at(self, r: int, radix: int = 2) -> int:
        """floor(v * radix**r)."""
        if self.exact is not None:
            return math.floor(self.exact * radix**r)
        scale = radix**r
        R = r * (2 if radix == 3 else 1) + 8
        while True:
            lo, hi = self.bounds(R)
            a, b = (lo * scale) >> R, (hi * scale) >> R
            if a == b or R > r * 2 + MAX_EXTRA_BITS:
                return a
            R += max(32, R // 4)

    def value_float(self) -> float:
        lo, hi = self.bounds(64)
        return (lo + hi) / 2**65


class Const(RealSource):
    def __init__(self, value):
        self.exact = Fraction(value)

    def bounds(self, R):
        v = self.exact * (1 << R)
        return math.floor(v), math.ceil(v)

    def __repr__(self):
        return f"Const({self.exact})"


class BinaryDigits(RealSource):
    """``int_part + 0.d1 d2 d3 ...`` with digits produced chunkwise by ``chunk_fn``."""

    def __init__(self, chunk_fn: Callable[[int], np.ndarray], int_part: int = 0):
        self.chunk_fn = chunk_fn
        self.int_part = int_part
        self._digits = np.zeros(0, dtype=np.uint8)
        self._prefix_cache: dict[int, int] = {}

    def digits(self, n: int) -> np.ndarray:
        """First ``n`` fractional digits."""
        while self._digits.size < n:
            j = self._digits.size // CHUNK
            chunk = np.asarray(self.chunk_fn(j), dtype=np.uint8)
            if chunk.size != CHUNK or chunk.max(initial=0) > 1:
                raise ValueError("digit chunk must hold CHUNK binary digits")
            self._digits = np.concatenate([self._digits, chunk])
        return self._digits[:n]

    def _prefix(self, r: int) -> int:
        v = self._prefix_cache.get(r)
        if v is None:
            if r == 0:
                return 0
            packed = np.packbits(self.digits(r)).tobytes()
            v = int.from_bytes(packed, "big") >> (8 * len(packed) - r)
            if len(self._prefix_cache) > 256:
                self._prefix_cache.clear()
            self._prefix_cache[r] = v
        return v

    def floor_at(self, r, radix=2):
        if radix == 2:
            return (self.int_part << r) | self._prefix(r)
        return super().floor_at(r, radix)

    def bounds(self, R):
        lo = (self.int_part << R) | self._prefix(R)
        return lo, lo + 1


class TernaryDigits(RealSource):
    """``int_part + sum t_i 3**-i`` with trits produced chunkwise."""

    def __init__(self, chunk_fn: Callable[[int], np.ndarray], int_part: int = 0):
        self.chunk_fn = chunk_fn
        self.int_part = int_part
        self._trits = np.zeros(0, dtype=np.uint8)

    def trits(self, n: int) -> np.ndarray:
        while self._trits.size < n:
            j = self._trits.size // CHUNK
            chunk = np.asarray(self.chunk_fn(j), dtype=np.uint8)
            if chunk.size != CHUNK or chunk.max(initial=0) > 2:
                raise ValueError("trit chunk must hold CHUNK ternary digits")
            self._trits = np.concatenate([self._trits, chunk])
        return self._trits[:n]

    def _prefix3(self, n: int) -> int:
        return self.int_part * 3**n + from_base3(self.trits(n).tobytes())

    def bounds(self, R):
        n = math.ceil(R * LOG3_2) + 2
        X = self._prefix3(n)
        den = 3**n
        # v in [X/3^n, (X+1)/3^n]
        return (X << R) // den, -((-((X + 1) << R)) // den)

    def floor_at(self, r, radix=2):
        if radix == 3:
            return self._prefix3(r)
        return super().floor_at(r, radix)


class Sum(RealSource):
    def __init__(self, a: RealSource, b: RealSource):
        self.a, self.b = a, b
        if a.exact is not None and b.exact is not None:
            self.exact = a.exact + b.exact

    def bounds(self, R):
        if self.exact is not None:
            return Const(self.exact).bounds(R)
        la, ha = self.a.bounds(R + 1)
        lb, hb = self.b.bounds(R + 1)
        return (la + lb) >> 1, _ceil_shift(ha + hb, 1)


class Product(RealSource):
    def __init__(self, a: RealSource, b: RealSource):
        self.a, self.b = a, b
        if a.exact is not None and b.exact is not None:
            self.exact = a.exact * b.exact

    def bounds(self, R):
        if self.exact is not None:
            return Const(self.exact).bounds(R)
        # magnitudes up to 2**g need g extra bits on each factor
        ga = max(abs(x) for x in self.a.bounds(0)).bit_length() + 1
        gb = max(abs(x) for x in self.b.bounds(0)).bit_length() + 1
        Ra, Rb = R + gb + 1, R + ga + 1
        la, ha = self.a.bounds(Ra)
        lb, hb = self.b.bounds(Rb)
        prods = (la * lb, la * hb, ha * lb, ha * hb)
        s = Ra + Rb - R
        return min(prods) >> s, _ceil_shift(max(prods), s)


def affine(m: RealSource, x: RealSource, b: RealSource) -> RealSource:
    """The source of ``m*x + b``."""
    return Sum(Product(m, x), b)


class PointSource:
    """A point of R^n given coordinatewise by real sources."""

    def __init__(self, coords: Sequence[RealSource], label: str = ""):
        if not coords:
            raise ValueError("a point needs at least one coordinate")
        self.coords = tuple(coords)
        self.label = label

    @property
    def dim(self) -> int:
        return len(self.coords)

    def truncate(self, r: int) -> DyadicPoint:
        return DyadicPoint(tuple(c.floor_at(r) for c in self.coords), r)

    def triadic_floor(self, n: int) -> tuple[int, ...]:
        """Numerators of the coordinatewise floor on the 3**-n grid."""
        return tuple(c.floor_at(n, 3) for c in self.coords)

    def project(self, idx: Sequence[int]) -> "PointSource":
        return PointSource([self.coords[i] for i in idx], self.label)

    def shifted(self, q: Sequence) -> "PointSource":
        if len(q) != self.dim:
            raise ValueError("shift dimension mismatch")
        return PointSource([Sum(c, Const(v)) for c, v in zip(self.coords, q)], self.label + "+q")

    @classmethod
    def constant(cls, values, label: str = "") -> "PointSource":
        return cls([Const(v) for v in values], label)

    def __repr__(self):
        return f"PointSource({self.label or '?'}, dim={self.dim})"


def join(*points: PointSource) -> PointSource:
    """The joint point (x, y, ...) in the product space."""
    coords = [c for p in points for c in p.coords]
    return PointSource(coords, ",".join(p.label for p in points))


def triadic_digits_needed(r: int) -> int:
    """Smallest n with 3**-n <= 2**-r."""
    n = math.ceil(r * LOG3_2)
    while 3**n < (1 << r):
        n += 1
    return n
