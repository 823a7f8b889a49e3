"""Bit serialization of rational points for the complexity models.

Layout (docs/encoding.md has the worked example)::

    nat(n) nat(p) radix-flag  [sign nat(int_i)]*n  interleaved fractional digits

``radix-flag`` is ``0`` for a point on the 2**-p grid and ``1`` for the 3**-p
grid.  Binary digits take one bit; ternary digits take two (``00 01 10``).
Digits are interleaved digit-by-digit across coordinates, so for nonnegative
points the body at precision r is a prefix of the body at any r' > r.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Sequence

import numpy as np

from dimlab.codes import decode_nat, encode_nat
from dimlab.core import DyadicPoint
from dimlab.errors import MalformedCode
from dimlab.sources import from_base3, to_base3

_TRIT_BITS = ("00", "01", "10")


def _bin_lane(frac: int, p: int) -> bytes:
    if p == 0:
        return b""
    return format(frac, f"0{p}b").encode().translate(bytes.maketrans(b"01", b"\x00\x01"))


@dataclass(frozen=True)
class PointEncoding:
    """A rational point split into header fields and per-coordinate digit lanes."""

    prec: int
    radix: int
    signs: tuple[int, ...]
    ints: tuple[int, ...]
    lanes: tuple[bytes, ...]

    def __post_init__(self):
        if self.radix not in (2, 3):
            raise ValueError("radix must be 2 or 3")
        if not (len(self.signs) == len(self.ints) == len(self.lanes) >= 1):
            raise ValueError("field lengths disagree")
        if any(len(ln) != self.prec for ln in self.lanes):
            raise ValueError("every lane must hold prec digits")

    @property
    def dim(self) -> int:
        return len(self.lanes)

    @classmethod
    def from_dyadic(cls, point: DyadicPoint, reduce: bool = True) -> "PointEncoding":
        if reduce:
            point = point.reduced()
        p = point.prec
        mask = (1 << p) - 1
        signs, ints, lanes = [], [], []
        for v in point.nums:
            a = abs(v)
            signs.append(1 if v < 0 else 0)
            ints.append(a >> p)
            lanes.append(_bin_lane(a & mask, p))
        return cls(p, 2, tuple(signs), tuple(ints), tuple(lanes))

    @classmethod
    def from_triadic(cls, nums: Sequence[int], n: int, reduce: bool = True) -> "PointEncoding":
        """The point ``nums / 3**n``."""
        nums = [int(v) for v in nums]
        if reduce:
            while n > 0 and all(v % 3 == 0 for v in nums):
                nums = [v // 3 for v in nums]
                n -= 1
        den = 3**n
        signs, ints, lanes = [], [], []
        for v in nums:
            a = abs(v)
            signs.append(1 if v < 0 else 0)
            q, rem = divmod(a, den)
            ints.append(q)
            lanes.append(to_base3(rem, n))
        return cls(n, 3, tuple(signs), tuple(ints), tuple(lanes))

    def header(self) -> str:
        out = [encode_nat(self.dim), encode_nat(self.prec), "1" if self.radix == 3 else "0"]
        for s, i in zip(self.signs, self.ints):
            out.append(str(s))
            out.append(encode_nat(i))
        return "".join(out)

    def body(self) -> str:
        if self.prec == 0:
            return ""
        mat = np.frombuffer(b"".join(self.lanes), dtype=np.uint8).reshape(self.dim, self.prec)
        digits = mat.T.ravel()
        if self.radix == 2:
            return (digits + ord("0")).tobytes().decode()
        return "".join(_TRIT_BITS[d] for d in digits)

    @property
    def bits(self) -> str:
        return self.header() + self.body()

    def numerators(self) -> tuple[int, ...]:
        """Signed numerators over radix**prec."""
        den = self.radix**self.prec
        out = []
        for s, i, ln in zip(self.signs, self.ints, self.lanes):
            if self.radix == 2:
                frac = 0
                if self.prec:
                    packed = np.packbits(np.frombuffer(ln, np.uint8)).tobytes()
                    frac = int.from_bytes(packed, "big") >> ((-self.prec) % 8)
            else:
                frac = from_base3(ln)
            v = i * den + frac
            out.append(-v if s else v)
        return tuple(out)

    def to_dyadic(self) -> DyadicPoint:
        if self.radix != 2:
            raise ValueError("a triadic point has no dyadic form")
        return DyadicPoint(self.numerators(), self.prec)

    @classmethod
    def from_bits(cls, bits: str) -> "PointEncoding":
        n, pos = decode_nat(bits)
        if n < 1:
            raise MalformedCode("dimension must be >= 1")
        p, pos = decode_nat(bits, pos)
        if pos >= len(bits):
            raise MalformedCode("missing radix flag")
        radix = 3 if bits[pos] == "1" else 2
        pos += 1
        signs, ints = [], []
        for _ in range(n):
            if pos >= len(bits):
                raise MalformedCode("missing sign bit")
            signs.append(int(bits[pos]))
            i, pos = decode_nat(bits, pos + 1)
            ints.append(i)
        width = 1 if radix == 2 else 2
        need = n * p * width
        if len(bits) - pos != need:
            raise MalformedCode(f"body holds {len(bits) - pos} bits, expected {need}")
        body = bits[pos:]
        lanes = [bytearray(p) for _ in range(n)]
        for k in range(n * p):
            chunk = body[k * width : (k + 1) * width]
            d = int(chunk, 2)
            if d >= radix:
                raise MalformedCode(f"invalid digit {chunk!r}")
            lanes[k % n][k // n] = d
        return cls(p, radix, tuple(signs), tuple(ints), tuple(bytes(ln) for ln in lanes))


def raw_lane(bits: str) -> bytes:
    """A bit string as a 0/1 byte lane."""
    return bits.encode().translate(bytes.maketrans(b"01", b"\x00\x01"))
