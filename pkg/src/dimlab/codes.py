"""Prefix-free codes: Elias delta for naturals, a norm-ordered lattice index, pairs.

Bit strings are plain ``str`` objects over ``"0"``/``"1"``.  Layouts are in
docs/codes.md.
"""

from __future__ import annotations

import math
from functools import lru_cache
from typing import Callable, Iterable, Sequence

import numpy as np

from dimlab.errors import MalformedCode


def _check_bits(bits: str):
    if any(c not in "01" for c in bits):
        raise ValueError("bit strings hold only '0' and '1'")


def encode_nat(j: int) -> str:
    """Elias delta code of ``j + 1``."""
    if j < 0:
        raise ValueError("naturals only")
    n = j + 1
    N = n.bit_length()
    L = N.bit_length() - 1
    out = "0" * L + "1"
    if L:
        out += format(N, "b")[1:]
    if N > 1:
        out += format(n, "b")[1:]
    return out


def nat_code_length(j: int) -> int:
    """``len(encode_nat(j))`` without building the string."""
    N = (j + 1).bit_length()
    return 2 * (N.bit_length() - 1) + N


def decode_nat(bits: str, pos: int = 0) -> tuple[int, int]:
    """Decode one codeword starting at ``pos``; returns (j, next position)."""
    L = 0
    while True:
        if pos + L >= len(bits):
            raise MalformedCode(f"unterminated length prefix at bit {pos}")
        c = bits[pos + L]
        if c == "1":
            break
        if c != "0":
            raise MalformedCode(f"non-binary symbol {c!r}")
        L += 1
    pos += L + 1
    if pos + L > len(bits):
        raise MalformedCode("truncated length field")
    N = int("1" + bits[pos : pos + L], 2)
    pos += L
    if pos + N - 1 > len(bits):
        raise MalformedCode("truncated value field")
    n = int("1" + bits[pos : pos + N - 1], 2)
    return n - 1, pos + N - 1


def decode_nat_exact(bits: str) -> int:
    j, pos = decode_nat(bits)
    if pos != len(bits):
        raise MalformedCode(f"{len(bits) - pos} trailing bits after codeword")
    return j


def delta_length_bound(j) -> np.ndarray | float:
    """log2(1+j) + 2 log2 log2(2+j), the shape every natural code length is held to."""
    j = np.asarray(j, dtype=float)
    return np.log2(1 + j) + 2 * np.log2(np.log2(2 + j))


def audit_nat_constant(limit: int) -> float:
    """Smallest c0 with |encode_nat(j)| <= bound(j) + c0 for every j < limit."""
    j = np.arange(limit, dtype=np.int64)
    N = np.floor(np.log2(j + 1)).astype(np.int64) + 1
    # guard against float log2 at exact powers of two
    N = np.where((np.int64(1) << N) <= j + 1, N + 1, N)
    N = np.where((np.int64(1) << (N - 1)) > j + 1, N - 1, N)
    L = np.floor(np.log2(N)).astype(np.int64)
    lengths = 2 * L + N
    return float(np.max(lengths - delta_length_bound(j)))


# lattice enumeration: Z^m ordered by squared norm, ties broken lexicographically


@lru_cache(maxsize=None)
def _count_le(t: int, m: int) -> int:
    """Number of a in Z^m with |a|^2 <= t."""
    if t < 0:
        return 0
    if m == 0:
        return 1
    x = math.isqrt(t)
    total = _count_le(t, m - 1)
    for v in range(1, x + 1):
        total += 2 * _count_le(t - v * v, m - 1)
    return total


def _count_eq(t: int, m: int) -> int:
    return _count_le(t, m) - _count_le(t - 1, m)


def lattice_index(a: Sequence[int]) -> int:
    """Position of ``a`` in the norm-then-lex enumeration of Z^m."""
    a = [int(v) for v in a]
    m = len(a)
    if m == 0:
        raise ValueError("dimension must be >= 1")
    t = sum(v * v for v in a)
    idx = _count_le(t - 1, m)
    rem = t
    for i, ai in enumerate(a):
        left = m - i - 1
        x = math.isqrt(rem)
        for v in range(-x, ai):
            idx += _count_eq(rem - v * v, left)
        rem -= ai * ai
    return idx


def _shell(t: int, m: int):
    """Vectors of Z^m with |a|^2 == t in lexicographic order."""
    if m == 1:
        x = math.isqrt(t)
        if x * x == t:
            yield from ((-x,), (x,)) if x else ((0,),)
        return
    x = math.isqrt(t)
    for v in range(-x, x + 1):
        for rest in _shell(t - v * v, m - 1):
            yield (v, *rest)


def lattice_point(index: int, m: int) -> tuple[int, ...]:
    """Inverse of ``lattice_index``."""
    if index < 0:
        raise ValueError("index must be >= 0")
    t = 0
    while _count_le(t, m) <= index:
        t += 1
    k = index - _count_le(t - 1, m)
    for j, pt in enumerate(_shell(t, m)):
        if j == k:
            return pt
    raise AssertionError("shell enumeration disagrees with shell count")


def encode_lattice(a: Sequence[int], m: int | None = None) -> str:
    if m is not None and m != len(a):
        raise ValueError("vector length does not match dimension")
    return encode_nat(lattice_index(a))


def decode_lattice(bits: str, m: int, pos: int = 0) -> tuple[tuple[int, ...], int]:
    j, pos = decode_nat(bits, pos)
    return lattice_point(j, m), pos


def lattice_length_bound(norm: float, m: int, c: float) -> float:
    """m log2(1+|a|) + c + 2 log2 log2(2+|a|)."""
    return m * math.log2(1 + norm) + c + 2 * math.log2(math.log2(2 + norm))


def audit_lattice_constant(m: int, radius: int) -> float:
    """Smallest c making the lattice length bound hold for all |a| <= radius."""
    worst = -math.inf
    r2 = radius * radius
    for a in np.ndindex(*([2 * radius + 1] * m)):
        a = tuple(v - radius for v in a)
        t = sum(v * v for v in a)
        if t > r2:
            continue
        norm = math.sqrt(t)
        slack = nat_code_length(lattice_index(a)) - lattice_length_bound(norm, m, 0.0)
        worst = max(worst, slack)
    return worst


def encode_pair(u: str, v: str) -> str:
    """Self-delimiting ``u`` followed by ``v``."""
    _check_bits(u)
    _check_bits(v)
    return encode_nat(len(u)) + u + v


def decode_pair(bits: str, v_decoder: Callable[[str, int], int] | None = None) -> tuple[str, str]:
    """Split an ``encode_pair`` output.

    With ``v_decoder`` (returning the end position of ``v``) trailing bits are an
    error; without it ``v`` is the rest of the string.
    """
    n, pos = decode_nat(bits)
    if pos + n > len(bits):
        raise MalformedCode("pair truncated inside its first component")
    u = bits[pos : pos + n]
    pos += n
    if v_decoder is None:
        return u, bits[pos:]
    end = v_decoder(bits, pos)
    if end != len(bits):
        raise MalformedCode("trailing bits after pair")
    return u, bits[pos:end]


def kraft_sum(codewords: Iterable[str]) -> float:
    from fractions import Fraction

    return float(sum(Fraction(1, 1 << len(w)) for w in codewords))


def is_prefix_free(codewords: Iterable[str]) -> bool:
    """No word is a proper prefix of another (sorted-neighbour check)."""
    words = sorted(set(codewords))
    return all(not b.startswith(a) for a, b in zip(words, words[1:]))


def nat_codewords_up_to(max_len: int) -> list[str]:
    """Every delta codeword of length <= max_len."""
    out = []
    j = 0
    # lengths are nondecreasing in j
    while nat_code_length(j) <= max_len:
        out.append(encode_nat(j))
        j += 1
    return out
