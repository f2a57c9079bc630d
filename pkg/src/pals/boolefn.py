"""Boolean functions: truth tables, ANF, Walsh spectrum and certification.

Table index convention: input vector (x1, ..., xn) is the integer
``x1 + 2*x2 + ... + 2**(n-1)*xn``, so variable ``i`` is index bit ``i - 1``.
"""
from __future__ import annotations

from dataclasses import dataclass
from pathlib import Path

import numpy as np

from .seedstream import SeedStream

MAX_VARS = 20


class ConstructionError(RuntimeError):
    pass


@dataclass(frozen=True, eq=False)
class TruthTable:
    n_vars: int
    bits: np.ndarray

    def __post_init__(self):
        if not 0 <= self.n_vars <= MAX_VARS:
            raise ValueError(f"n_vars must be in [0, {MAX_VARS}]")
        bits = np.asarray(self.bits, dtype=np.uint8) & 1
        if bits.shape != (1 << self.n_vars,):
            raise ValueError(f"table must have exactly 2**{self.n_vars} entries")
        bits = bits.copy()
        bits.setflags(write=False)
        object.__setattr__(self, "bits", bits)

    def __eq__(self, other):
        return (
            isinstance(other, TruthTable)
            and self.n_vars == other.n_vars
            and np.array_equal(self.bits, other.bits)
        )

    def __hash__(self):
        return hash((self.n_vars, self.bits.tobytes()))

    def __call__(self, x: int) -> int:
        return int(self.bits[x])

    def __len__(self):
        return len(self.bits)

    @classmethod
    def from_function(cls, n: int, fn) -> "TruthTable":
        return cls(n, np.array([fn(x) for x in range(1 << n)], dtype=np.uint8))

    @classmethod
    def linear(cls, n: int, mask: int) -> "TruthTable":
        idx = np.arange(1 << n)
        return cls(n, np.array([bin(mask & int(i)).count("1") & 1 for i in idx], dtype=np.uint8))

    def weight(self) -> int:
        return int(self.bits.sum())

    def to_hex(self) -> str:
        value = int.from_bytes(np.packbits(self.bits, bitorder="little").tobytes(), "little")
        return f"{value:0{max(1, len(self.bits) // 4)}x}"

    @classmethod
    def from_hex(cls, n: int, text: str) -> "TruthTable":
        value = int(text, 16)
        size = 1 << n
        if value >> size:
            raise ValueError("hex table wider than 2**n bits")
        raw = value.to_bytes(max(1, (size + 7) // 8), "little")
        return cls(n, np.unpackbits(np.frombuffer(raw, dtype=np.uint8), bitorder="little")[:size])


@dataclass(frozen=True)
class Anf:
    """Set of monomials; each monomial is a frozenset of variable indices 1..n."""

    n_vars: int
    monomials: frozenset[frozenset[int]]

    def __post_init__(self):
        mons = frozenset(frozenset(m) for m in self.monomials)
        for m in mons:
            if any(not 1 <= v <= self.n_vars for v in m):
                raise ValueError(f"monomial {sorted(m)} uses a variable outside 1..{self.n_vars}")
        object.__setattr__(self, "monomials", mons)

    @property
    def degree(self) -> int:
        return max((len(m) for m in self.monomials), default=0)

    def __str__(self) -> str:
        if not self.monomials:
            return "0"
        terms = sorted(self.monomials, key=lambda m: (len(m), sorted(m)))
        return " + ".join("1" if not m else "".join(f"x{v}" for v in sorted(m)) for m in terms)


def _mobius(vec: np.ndarray) -> np.ndarray:
    a = vec.astype(np.uint8).copy()
    size = len(a)
    h = 1
    while h < size:
        a = a.reshape(-1, 2, h)
        a[:, 1, :] ^= a[:, 0, :]
        a = a.reshape(size)
        h *= 2
    return a


def _mask_of(mon) -> int:
    return sum(1 << (v - 1) for v in mon)


def _mon_of(mask: int) -> frozenset[int]:
    return frozenset(i + 1 for i in range(mask.bit_length()) if mask >> i & 1)


def anf_to_tt(a: Anf) -> TruthTable:
    coeffs = np.zeros(1 << a.n_vars, dtype=np.uint8)
    for m in a.monomials:
        coeffs[_mask_of(m)] = 1
    return TruthTable(a.n_vars, _mobius(coeffs))


def tt_to_anf(t: TruthTable) -> Anf:
    coeffs = _mobius(t.bits)
    return Anf(t.n_vars, frozenset(_mon_of(int(i)) for i in np.flatnonzero(coeffs)))


def algebraic_degree(t: TruthTable) -> int:
    coeffs = _mobius(t.bits)
    nz = np.flatnonzero(coeffs)
    if len(nz) == 0:
        return 0
    return int(max(bin(int(i)).count("1") for i in nz))


def walsh_spectrum(t: TruthTable) -> np.ndarray:
    """W(a) = sum_x (-1)^(f(x) xor a.x), by the fast Walsh-Hadamard butterfly."""
    w = 1 - 2 * t.bits.astype(np.int64)
    size = len(w)
    h = 1
    while h < size:
        w = w.reshape(-1, 2, h)
        lo, hi = w[:, 0, :].copy(), w[:, 1, :]
        w[:, 0, :] += hi
        w[:, 1, :] = lo - hi
        w = w.reshape(size)
        h *= 2
    return w


_POPCOUNT_CACHE: dict[int, np.ndarray] = {}


def _popcounts(n: int) -> np.ndarray:
    if n not in _POPCOUNT_CACHE:
        idx = np.arange(1 << n, dtype=np.int64)
        pc = np.zeros_like(idx)
        for i in range(n):
            pc += (idx >> i) & 1
        _POPCOUNT_CACHE[n] = pc
    return _POPCOUNT_CACHE[n]


@dataclass(frozen=True)
class SpectralReport:
    n_vars: int
    nonlinearity: int
    algebraic_degree: int
    ci_order: int
    balanced: bool
    resiliency_order: int
    max_walsh: int

    def as_dict(self) -> dict:
        return {
            "n_vars": self.n_vars,
            "nonlinearity": self.nonlinearity,
            "algebraic_degree": self.algebraic_degree,
            "ci_order": self.ci_order,
            "balanced": self.balanced,
            "resiliency_order": self.resiliency_order,
            "max_walsh": self.max_walsh,
        }


def correlation_immunity(spectrum: np.ndarray, n: int) -> int:
    """Largest m with W(a) = 0 for every a of weight 1..m (Xiao-Massey)."""
    pc = _popcounts(n)
    nonzero = pc[(spectrum != 0) & (pc > 0)]
    if len(nonzero) == 0:
        return n
    return int(nonzero.min()) - 1


def certify(t: TruthTable) -> SpectralReport:
    n = t.n_vars
    w = walsh_spectrum(t)
    balanced = bool(w[0] == 0)
    ci = correlation_immunity(w, n)
    max_w = int(np.abs(w).max())
    nl = (1 << (n - 1)) - max_w // 2 if n else 0
    deg = algebraic_degree(t)
    report = SpectralReport(
        n_vars=n,
        nonlinearity=nl,
        algebraic_degree=deg,
        ci_order=ci,
        balanced=balanced,
        resiliency_order=ci if balanced else -1,
        max_walsh=max_w,
    )
    _check_bounds(report)
    return report


def _check_bounds(r: SpectralReport) -> None:
    n, m = r.n_vars, r.resiliency_order
    # Siegenthaler: an m-resilient function with m <= n-2 has degree <= n-m-1
    if 0 <= m <= n - 2 and r.algebraic_degree > n - m - 1:
        raise AssertionError(f"Siegenthaler bound violated: {r}")
    if n % 2 == 0 and n > 0 and r.nonlinearity > (1 << (n - 1)) - (1 << (n // 2 - 1)):
        raise AssertionError(f"covering-radius bound violated: {r}")


def construct_resilient(
    n: int = 9,
    m: int = 2,
    d: int = 6,
    seed: bytes | str = b"",
    min_nonlinearity: int = 224,
    max_trials: int = 256,
) -> TruthTable:
    """Seeded concatenation construction of an m-resilient function of degree d.

    The table is split into 2^(n-k) blocks over the low k = n - d + 2
    variables.  Every block is itself an m-resilient k-variable function,
    which makes the concatenation m-resilient.  Most blocks are distinct
    linear functions u.x with weight(u) > m; an odd number of blocks are
    quadratic (x_a x_b plus a linear part of weight > m outside {a, b}),
    which lifts the degree to (n - k) + 2 = d.  The variables are then
    relabelled by a seeded permutation and the result is certified.
    """
    if d > n - m - 1:
        raise ValueError(f"degree {d} exceeds the Siegenthaler bound n-m-1 = {n - m - 1}")
    k = n - d + 2
    blocks = 1 << (n - k)
    if k > n or k < m + 3:
        raise ValueError(f"construction needs n - d + 2 >= m + 3 (got k={k})")
    vectors = [u for u in range(1 << k) if bin(u).count("1") > m]
    stream = SeedStream(seed if isinstance(seed, bytes) else seed.encode())
    xs = np.arange(1 << k)
    for _ in range(max_trials):
        n_quad = 1 + 2 * stream.randbelow(2)
        n_lin = blocks - n_quad
        if n_lin > len(vectors) or n_lin < 0:
            n_quad = blocks - len(vectors)
            n_quad += (n_quad + 1) % 2
            n_lin = blocks - n_quad
            if n_lin < 0:
                raise ConstructionError("not enough resilient linear blocks")
        parts = []
        for u in stream.sample(vectors, n_lin):
            parts.append(_parity(xs & u))
        for _ in range(n_quad):
            a, b = stream.sample(range(k), 2)
            rest = [v for v in range(k) if v not in (a, b)]
            lin = stream.sample(rest, m + 1 + stream.randbelow(len(rest) - m))
            u = sum(1 << v for v in lin) | (stream.getrandbits(1) << a) | (stream.getrandbits(1) << b)
            parts.append(((xs >> a) & (xs >> b) & 1) ^ _parity(xs & u))
        stream.shuffle(parts)
        table = np.concatenate(
            [p.astype(np.uint8) ^ stream.getrandbits(1) for p in parts]
        ).astype(np.uint8)
        table = _relabel(table, n, stream.permutation(n))
        tt = TruthTable(n, table)
        rep = certify(tt)
        if (
            rep.balanced
            and rep.ci_order >= m
            and rep.algebraic_degree == d
            and rep.nonlinearity >= min_nonlinearity
        ):
            return tt
    raise ConstructionError(f"no ({n},{m},{d}) function after {max_trials} trials")


def _parity(v: np.ndarray) -> np.ndarray:
    out = np.zeros_like(v)
    while np.any(v):
        out ^= v & 1
        v = v >> 1
    return out


def _relabel(table: np.ndarray, n: int, perm: list[int]) -> np.ndarray:
    """New table g(x) = f(y) where bit perm[i] of y is bit i of x."""
    idx = np.arange(1 << n)
    src = np.zeros_like(idx)
    for i, p in enumerate(perm):
        src |= ((idx >> i) & 1) << p
    return table[src]


def from_monomials(n: int, monomials) -> TruthTable:
    return anf_to_tt(Anf(n, frozenset(frozenset(m) for m in monomials)))


def xor_table(n: int) -> TruthTable:
    return TruthTable.linear(n, (1 << n) - 1)


# --- fixture files ------------------------------------------------------------

def write_table(path: str | Path, t: TruthTable) -> None:
    Path(path).write_text(f"n={t.n_vars}\n{t.to_hex()}\n")


def read_table(path: str | Path) -> TruthTable:
    lines = [ln.strip() for ln in Path(path).read_text().splitlines() if ln.strip()]
    if not lines or not lines[0].startswith("n="):
        raise ValueError(f"{path}: missing n=<n> header")
    return TruthTable.from_hex(int(lines[0][2:]), "".join(lines[1:]))
