"""LFSR engine and GF(2)[x] polynomial services.

Polynomials are held as Python ints, bit ``i`` being the coefficient of
``x**i``.  Registers use the Fibonacci convention: stage 1 receives the
feedback bit, stage L is the output stage.  A feedback polynomial
``x^L + ... + x^e + ... + 1`` taps stage ``e`` for every exponent
``1 <= e <= L``; the new bit is the XOR of the tapped stages.

Register state is also an int, bit ``j - 1`` holding stage ``j``.
"""
from __future__ import annotations

import math
from dataclasses import dataclass
from pathlib import Path
from typing import Iterable, Sequence

from .seedstream import SeedStream


class FactorSetError(ValueError):
    """A factor table does not describe 2^L - 1."""


class SearchExhausted(RuntimeError):
    """No polynomial matching the request was found within the trial budget."""


@dataclass(frozen=True)
class FeedbackPoly:
    degree: int
    taps: frozenset[int]

    def __post_init__(self):
        if self.degree < 1:
            raise ValueError("degree must be positive")
        taps = frozenset(int(t) for t in self.taps)
        object.__setattr__(self, "taps", taps)
        if 0 not in taps or self.degree not in taps:
            raise ValueError("taps must contain 0 and the degree")
        if any(t < 0 or t > self.degree for t in taps):
            raise ValueError(f"tap exponent out of range [0, {self.degree}]")

    @classmethod
    def from_exponents(cls, exponents: Iterable[int]) -> "FeedbackPoly":
        exps = set(exponents)
        return cls(max(exps), frozenset(exps))

    @classmethod
    def from_int(cls, value: int) -> "FeedbackPoly":
        return cls.from_exponents(i for i in range(value.bit_length()) if value >> i & 1)

    def as_int(self) -> int:
        return sum(1 << t for t in self.taps)

    @property
    def weight(self) -> int:
        return len(self.taps)

    def feedback_mask(self) -> int:
        """State mask selecting the stages XORed into the feedback bit."""
        return sum(1 << (t - 1) for t in self.taps if t > 0)

    def exponents(self) -> list[int]:
        return sorted(self.taps, reverse=True)

    def __str__(self) -> str:
        terms = []
        for e in self.exponents():
            terms.append("1" if e == 0 else "x" if e == 1 else f"x^{e}")
        return " + ".join(terms)


@dataclass(frozen=True)
class FactorSet:
    """Prime factorisation of 2^L - 1, factors listed with multiplicity."""

    modulus_exponent: int
    prime_factors: tuple[int, ...]

    def __post_init__(self):
        object.__setattr__(self, "prime_factors", tuple(sorted(int(q) for q in self.prime_factors)))

    def validate(self) -> None:
        from sympy import isprime

        product = math.prod(self.prime_factors)
        if product != (1 << self.modulus_exponent) - 1:
            raise FactorSetError(
                f"factors of 2^{self.modulus_exponent}-1 multiply to {product}"
            )
        for q in self.prime_factors:
            if not isprime(q):
                raise FactorSetError(f"{q} is not prime")

    @property
    def distinct(self) -> list[int]:
        return sorted(set(self.prime_factors))

    def totient(self) -> int:
        """Euler phi of 2^L - 1."""
        phi = 1
        for q in self.distinct:
            k = self.prime_factors.count(q)
            phi *= (q - 1) * q ** (k - 1)
        return phi


class Lfsr:
    """Fibonacci LFSR; ``clock`` returns the stage-L bit, then shifts."""

    def __init__(self, poly: FeedbackPoly, state: int | Sequence[int], output_stage: int | None = None):
        self.poly = poly
        self.length = poly.degree
        self.output_stage = output_stage or self.length
        if not 1 <= self.output_stage <= self.length:
            raise ValueError("output stage out of range")
        if not isinstance(state, int):
            state = bits_to_state(state)
        if state >> self.length:
            raise ValueError(f"state wider than {self.length} bits")
        if state == 0:
            raise ValueError("all-zero state is a fixed point of the register")
        self.state = state
        self._mask = poly.feedback_mask()
        self._full = (1 << self.length) - 1

    def clock(self) -> int:
        s = self.state
        out = s >> (self.output_stage - 1) & 1
        fb = (s & self._mask).bit_count() & 1
        self.state = ((s << 1) & self._full) | fb
        return out

    def bits(self, n: int) -> list[int]:
        return [self.clock() for _ in range(n)]

    def stages(self) -> list[int]:
        """Stage contents, stage 1 first."""
        return state_to_bits(self.state, self.length)

    def copy(self) -> "Lfsr":
        return Lfsr(self.poly, self.state, self.output_stage)

    def advance(self, n: int) -> None:
        """Jump ``n`` clocks ahead without emitting output."""
        self.state = apply_rows(matrix_power(transition_rows(self.poly), n), self.state)

    def __repr__(self) -> str:
        return f"Lfsr(degree={self.length}, state=0x{self.state:x})"


def bits_to_state(bits: Sequence[int]) -> int:
    return sum((int(b) & 1) << i for i, b in enumerate(bits))


def state_to_bits(state: int, length: int) -> list[int]:
    return [state >> i & 1 for i in range(length)]


# --- GF(2) linear maps on register states -----------------------------------
# A matrix is a list of row masks: output bit i = parity(row[i] & input).

def transition_rows(poly: FeedbackPoly) -> list[int]:
    L = poly.degree
    return [poly.feedback_mask()] + [1 << (i - 1) for i in range(1, L)]


def apply_rows(rows: Sequence[int], state: int) -> int:
    return sum(((r & state).bit_count() & 1) << i for i, r in enumerate(rows))


def _compose(a: Sequence[int], b: Sequence[int]) -> list[int]:
    # rows of a∘b
    out = []
    for ra in a:
        acc = 0
        j = 0
        while ra:
            if ra & 1:
                acc ^= b[j]
            ra >>= 1
            j += 1
        out.append(acc)
    return out


def matrix_power(rows: Sequence[int], n: int) -> list[int]:
    result = [1 << i for i in range(len(rows))]
    base = list(rows)
    while n:
        if n & 1:
            result = _compose(result, base)
        base = _compose(base, base)
        n >>= 1
    return result


# --- polynomial arithmetic ----------------------------------------------------

def _reduce(r: int, p: int, deg: int) -> int:
    while True:
        top = r.bit_length() - 1
        if top < deg:
            return r
        r ^= p << (top - deg)


def _clmul(a: int, b: int) -> int:
    r = 0
    while b:
        low = b & -b
        r ^= a << (low.bit_length() - 1)
        b ^= low
    return r


def mulmod(a: int, b: int, p: int) -> int:
    deg = p.bit_length() - 1
    if a.bit_count() > b.bit_count():
        a, b = b, a
    return _reduce(_clmul(b, a), p, deg)


def _spread(a: int) -> int:
    # squaring over GF(2) interleaves zeros between coefficient bits
    out = 0
    shift = 0
    while a:
        out |= _SPREAD[a & 0xFF] << shift
        a >>= 8
        shift += 16
    return out


_SPREAD = [sum(((b >> i) & 1) << (2 * i) for i in range(8)) for b in range(256)]


def sqrmod(a: int, p: int) -> int:
    return _reduce(_spread(a), p, p.bit_length() - 1)


def powmod(base: int, e: int, p: int) -> int:
    result = 1
    base = _reduce(base, p, p.bit_length() - 1)
    for bit in bin(e)[2:]:
        result = sqrmod(result, p)
        if bit == "1":
            result = mulmod(result, base, p)
    return result


def polygcd(a: int, b: int) -> int:
    while b:
        a, b = b, _reduce(a, b, b.bit_length() - 1)
    return a


def is_irreducible(p: FeedbackPoly | int) -> bool:
    """Rabin's test."""
    pi = p.as_int() if isinstance(p, FeedbackPoly) else p
    L = pi.bit_length() - 1
    if L < 1:
        return False
    if L == 1:
        return True
    x = 2
    # x^(2^L) == x mod p
    r = x
    for _ in range(L):
        r = sqrmod(r, pi)
    if r != x:
        return False
    for q in _prime_divisors(L):
        r = x
        for _ in range(L // q):
            r = sqrmod(r, pi)
        if polygcd(pi, r ^ x) != 1:
            return False
    return True


def _prime_divisors(n: int) -> list[int]:
    out, d = [], 2
    while d * d <= n:
        if n % d == 0:
            out.append(d)
            while n % d == 0:
                n //= d
        d += 1
    if n > 1:
        out.append(n)
    return out


def is_primitive(p: FeedbackPoly, f: FactorSet) -> bool:
    """True iff ``p`` is irreducible and x has order exactly 2^L - 1 mod p."""
    if f.modulus_exponent != p.degree:
        raise FactorSetError(
            f"factor set is for degree {f.modulus_exponent}, polynomial has degree {p.degree}"
        )
    f.validate()
    pi = p.as_int()
    if not pi & 1:
        return False
    if not is_irreducible(pi):
        return False
    order = (1 << p.degree) - 1
    if powmod(2, order, pi) != 1:
        return False
    return all(powmod(2, order // q, pi) != 1 for q in f.distinct)


def weight_window(degree: int, target_weight: int) -> tuple[int, int]:
    """Accepted tap-count range: target within 10%, clamped to odd weights >= 3."""
    tol = max(1, int(0.1 * target_weight))
    lo, hi = target_weight - tol, target_weight + tol
    lo = max(lo, 3)
    hi = min(max(hi, lo), degree + 1)
    if lo > hi:
        lo = hi
    return lo, hi


def find_dense_primitive(
    L: int,
    target_weight: int,
    f: FactorSet,
    seed: bytes | str,
    max_trials: int = 200_000,
) -> FeedbackPoly:
    """Deterministic seeded search for a primitive polynomial of a given density.

    Candidates draw a tap count uniformly among the odd values of the weight
    window (even weights are divisible by x + 1) and middle exponents
    uniformly without replacement.
    """
    if L < 2:
        raise ValueError("degree must be at least 2")
    f.validate()
    if f.modulus_exponent != L:
        raise FactorSetError("factor set does not match degree")
    lo, hi = weight_window(L, target_weight)
    weights = [w for w in range(lo, hi + 1) if w % 2 == 1 and 3 <= w <= L + 1]
    if not weights:
        raise SearchExhausted(f"no odd tap count in [{lo}, {hi}] for degree {L}")
    stream = SeedStream(seed if isinstance(seed, bytes) else seed.encode())
    for _ in range(max_trials):
        w = weights[stream.randbelow(len(weights))]
        middle = stream.sample(range(1, L), w - 2)
        poly = FeedbackPoly(L, frozenset([0, L, *middle]))
        if is_irreducible(poly) and is_primitive(poly, f):
            return poly
    raise SearchExhausted(f"no primitive polynomial of degree {L} after {max_trials} trials")


def period_by_enumeration(poly: FeedbackPoly, state: int, limit: int | None = None) -> int:
    """Number of clocks until ``state`` recurs (brute force)."""
    reg = Lfsr(poly, state)
    limit = limit or (1 << poly.degree)
    start = reg.state
    for n in range(1, limit + 1):
        reg.clock()
        if reg.state == start:
            return n
    raise RuntimeError("period exceeds limit")


# --- fixture files ------------------------------------------------------------

def format_poly_line(p: FeedbackPoly) -> str:
    return f"{p.degree}: " + ",".join(str(e) for e in p.exponents())


def parse_poly_line(line: str) -> FeedbackPoly:
    head, _, body = line.partition(":")
    exps = [int(tok) for tok in body.split(",") if tok.strip()]
    poly = FeedbackPoly.from_exponents(exps)
    if poly.degree != int(head):
        raise ValueError(f"header degree {head} disagrees with exponents")
    if exps != sorted(set(exps), reverse=True):
        raise ValueError("exponents must be unique and listed in decreasing order")
    return poly


def read_poly_file(path: str | Path) -> list[FeedbackPoly]:
    lines = Path(path).read_text().splitlines()
    return [parse_poly_line(ln) for ln in lines if ln.strip() and not ln.startswith("#")]


def write_poly_file(path: str | Path, polys: Iterable[FeedbackPoly]) -> None:
    Path(path).write_text("".join(format_poly_line(p) + "\n" for p in polys))


def read_factor_file(path: str | Path) -> dict[int, FactorSet]:
    table = {}
    for line in Path(path).read_text().splitlines():
        if not line.strip() or line.startswith("#"):
            continue
        head, _, body = line.partition(":")
        L = int(head)
        table[L] = FactorSet(L, tuple(int(q) for q in body.split(",")))
    return table


def write_factor_file(path: str | Path, table: dict[int, FactorSet]) -> None:
    lines = [
        f"{L}: " + ",".join(str(q) for q in fs.prime_factors) for L, fs in sorted(table.items())
    ]
    Path(path).write_text("\n".join(lines) + "\n")
