"""A small prefix machine whose shortest programs can be found exactly.

Grammar (2-bit opcode, then payload; naturals are Elias-delta coded):

    00 LITERAL   nat(l) b_1..b_l          emits b_1..b_l
    01 COPY-COND nat(off) nat(l)          emits v[off:off+l]
    10 REPEAT    nat(k) P                 emits out(P) k times
    11 CONCAT    P Q                      emits out(P) out(Q)

Every node costs one step and every emitted bit costs one more (a REPEAT
pays for all k copies).  Running out of steps, or copying past the end of
the condition, counts as divergence.

Two independent routes compute the shortest program: a dynamic program over
substrings of the target (``min_program_length``) and brute force over the
code tree (``enumerate_programs``).  They must agree.
"""

from __future__ import annotations

from dataclasses import dataclass
from functools import lru_cache
from typing import Iterator, Union

from dimlab.codes import decode_nat, encode_nat, nat_code_length
from dimlab.errors import MalformedCode

MAX_PROGRAM_BITS = 24


@dataclass(frozen=True)
class MachineBudget:
    max_len: int = 16
    max_steps: int = 10_000

    def __post_init__(self):
        if not 0 <= self.max_len <= MAX_PROGRAM_BITS:
            raise ValueError(f"max_len must lie in [0, {MAX_PROGRAM_BITS}]")
        if self.max_steps < 1:
            raise ValueError("max_steps must be >= 1")


@dataclass(frozen=True)
class Literal:
    bits: str


@dataclass(frozen=True)
class CopyCond:
    offset: int
    length: int


@dataclass(frozen=True)
class Repeat:
    count: int
    body: "Node"


@dataclass(frozen=True)
class Concat:
    left: "Node"
    right: "Node"


Node = Union[Literal, CopyCond, Repeat, Concat]


class _Diverged:
    _inst = None

    def __new__(cls):
        if cls._inst is None:
            cls._inst = super().__new__(cls)
        return cls._inst

    def __repr__(self):
        return "Diverged"

    def __bool__(self):
        return False


Diverged = _Diverged()


def encode(node: Node) -> str:
    if isinstance(node, Literal):
        return "00" + encode_nat(len(node.bits)) + node.bits
    if isinstance(node, CopyCond):
        return "01" + encode_nat(node.offset) + encode_nat(node.length)
    if isinstance(node, Repeat):
        return "10" + encode_nat(node.count) + encode(node.body)
    if isinstance(node, Concat):
        return "11" + encode(node.left) + encode(node.right)
    raise TypeError(f"not a program node: {node!r}")


def parse_prefix(bits: str, pos: int = 0) -> tuple[Node, int]:
    """Decode the program starting at ``pos``; returns (ast, end position)."""
    if pos + 2 > len(bits):
        raise MalformedCode("truncated opcode")
    op = bits[pos : pos + 2]
    pos += 2
    if op == "00":
        n, pos = decode_nat(bits, pos)
        if pos + n > len(bits):
            raise MalformedCode("truncated literal payload")
        return Literal(bits[pos : pos + n]), pos + n
    if op == "01":
        off, pos = decode_nat(bits, pos)
        n, pos = decode_nat(bits, pos)
        return CopyCond(off, n), pos
    if op == "10":
        k, pos = decode_nat(bits, pos)
        body, pos = parse_prefix(bits, pos)
        return Repeat(k, body), pos
    if op == "11":
        a, pos = parse_prefix(bits, pos)
        b, pos = parse_prefix(bits, pos)
        return Concat(a, b), pos
    raise MalformedCode(f"bad opcode {op!r}")


@dataclass(frozen=True)
class Program:
    code: str
    ast: Node

    @classmethod
    def from_bits(cls, bits: str) -> "Program":
        ast, end = parse_prefix(bits)
        if end != len(bits):
            raise MalformedCode(f"{len(bits) - end} bits after the program")
        return cls(bits, ast)

    @classmethod
    def from_ast(cls, ast: Node) -> "Program":
        return cls(encode(ast), ast)

    def __len__(self):
        return len(self.code)


class _OutOfSteps(Exception):
    pass


def _eval(node: Node, v: str, left: int) -> tuple[str, int]:
    """Returns (output, steps used); raises _OutOfSteps past ``left``."""
    if left < 1:
        raise _OutOfSteps
    if isinstance(node, Literal):
        used = 1 + len(node.bits)
        if used > left:
            raise _OutOfSteps
        return node.bits, used
    if isinstance(node, CopyCond):
        used = 1 + node.length
        if used > left:
            raise _OutOfSteps
        if node.offset + node.length > len(v):
            raise _OutOfSteps  # condition out of range diverges too
        return v[node.offset : node.offset + node.length], used
    if isinstance(node, Repeat):
        out, used = _eval(node.body, v, left - 1)
        used += 1 + node.count * len(out)
        if used > left:
            raise _OutOfSteps
        return out * node.count, used
    if isinstance(node, Concat):
        a, ua = _eval(node.left, v, left - 1)
        b, ub = _eval(node.right, v, left - 1 - ua)
        return a + b, 1 + ua + ub
    raise TypeError(f"not a program node: {node!r}")


def run_with_steps(p: Program | Node | str, v: str, budget: MachineBudget):
    if isinstance(p, str):
        p = Program.from_bits(p)
    node = p.ast if isinstance(p, Program) else p
    try:
        return _eval(node, v, budget.max_steps)
    except _OutOfSteps:
        return Diverged, None


def run(p: Program | Node | str, v: str, budget: MachineBudget):
    """Output bit string, or ``Diverged``."""
    return run_with_steps(p, v, budget)[0]


# exact shortest programs by dynamic programming over substrings


def _insert(front: list, length: int, steps: int) -> None:
    """Keep ``front`` a Pareto set of (length, steps) pairs."""
    for l0, s0 in front:
        if l0 <= length and s0 <= steps:
            return
    front[:] = [(l0, s0) for l0, s0 in front if not (length <= l0 and steps <= s0)]
    front.append((length, steps))


def _pareto_solver(v: str, max_len: int, max_steps: int):
    @lru_cache(maxsize=None)
    def front(s: str) -> tuple:
        n = len(s)
        out: list = []
        lit = 2 + nat_code_length(n) + n
        if lit <= max_len and 1 + n <= max_steps:
            _insert(out, lit, 1 + n)
        off = v.find(s)  # the first occurrence has the shortest offset code
        if off >= 0:
            cl = 2 + nat_code_length(off) + nat_code_length(n)
            if cl <= max_len and 1 + n <= max_steps:
                _insert(out, cl, 1 + n)
        if n >= 2:
            for d in range(1, n // 2 + 1):
                if n % d or s != s[:d] * (n // d):
                    continue
                k = n // d
                head = 2 + nat_code_length(k)
                for lu, su in front(s[:d]):
                    ln, st = head + lu, 1 + su + n
                    if ln <= max_len and st <= max_steps:
                        _insert(out, ln, st)
            for cut in range(1, n):
                fa = front(s[:cut])
                if not fa:
                    continue
                fb = front(s[cut:])
                for la, sa in fa:
                    for lb, sb in fb:
                        ln, st = 2 + la + lb, 1 + sa + sb
                        if ln <= max_len and st <= max_steps:
                            _insert(out, ln, st)
        return tuple(sorted(out))

    return front


def min_program_length(w: str, v: str, budget: MachineBudget) -> int | None:
    """Length of the shortest program of at most ``max_len`` bits that outputs ``w``
    from condition ``v`` within ``max_steps`` steps, or None."""
    fr = _pareto_solver(v, budget.max_len, budget.max_steps)(w)
    return fr[0][0] if fr else None


def literal_length(w: str) -> int:
    return 2 + nat_code_length(len(w)) + len(w)


# brute force over the code tree


def _programs(max_len: int) -> Iterator[tuple[str, Node]]:
    if max_len < 3:
        return
    room = max_len - 2
    n = 0
    while nat_code_length(n) + n <= room:
        head = "00" + encode_nat(n)
        for x in range(1 << n):
            b = format(x, f"0{n}b") if n else ""
            yield head + b, Literal(b)
        n += 1
    off = 0
    while nat_code_length(off) + 1 <= room:
        left = room - nat_code_length(off)
        n = 0
        while nat_code_length(n) <= left:
            yield "01" + encode_nat(off) + encode_nat(n), CopyCond(off, n)
            n += 1
        off += 1
    k = 0
    while nat_code_length(k) + 3 <= room:
        head = "10" + encode_nat(k)
        for code, body in _programs(room - nat_code_length(k)):
            yield head + code, Repeat(k, body)
        k += 1
    for ca, a in _programs(room - 3):
        for cb, b in _programs(room - len(ca)):
            yield "11" + ca + cb, Concat(a, b)


def enumerate_programs(budget: MachineBudget) -> Iterator[Program]:
    """Every syntactically valid program of at most ``max_len`` bits."""
    for code, ast in _programs(budget.max_len):
        yield Program(code, ast)


def min_program_length_enum(w: str, v: str, budget: MachineBudget) -> int | None:
    """Same answer as ``min_program_length`` by exhaustive search."""
    best = None
    for p in enumerate_programs(budget):
        if best is not None and len(p) >= best:
            continue
        if run(p, v, budget) == w:
            best = len(p)
    return best


def shortest_programs_table(v: str, budget: MachineBudget) -> dict[str, int]:
    """Exhaustive map output -> shortest program length over the whole code tree."""
    table: dict[str, int] = {}
    for p in enumerate_programs(budget):
        out = run(p, v, budget)
        if out is Diverged:
            continue
        if out not in table or len(p) < table[out]:
            table[out] = len(p)
    return table
