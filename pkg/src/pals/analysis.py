"""Self-audit: linear complexity, randomness tests, avalanche, attack-cost formulas."""
from __future__ import annotations

import csv
import io
import math
from dataclasses import dataclass, field
from typing import Callable, Sequence

import numpy as np
from scipy.stats import chi2

from .galois import FactorSet

SIGNIFICANCE = 0.01
MIN_RANDOMNESS_BITS = 20_000


class InsufficientData(ValueError):
    pass


# --- linear complexity ----------------------------------------------------------

@dataclass(frozen=True)
class LinearComplexityProfile:
    final_lc: int
    profile: tuple[tuple[int, int], ...]  # (prefix length, lc) at each jump
    length: int


def berlekamp_massey(bits) -> LinearComplexityProfile:
    """Shortest LFSR generating ``bits`` (binary Berlekamp-Massey).

    Polynomials C, B and the reversed sequence window R are ints; bit i of
    R is s_(N-i), so the discrepancy is parity(C & R).
    """
    seq = [int(b) & 1 for b in np.asarray(bits).ravel()]
    if not seq:
        raise ValueError("empty sequence")
    C, B, L, m, R = 1, 1, 0, 1, 0
    profile = []
    for N, s in enumerate(seq):
        R = (R << 1) | s
        if (C & R).bit_count() & 1:
            T = C
            C ^= B << m
            if 2 * L <= N:
                L = N + 1 - L
                B = T
                m = 1
                profile.append((N + 1, L))
                continue
        m += 1
    return LinearComplexityProfile(L, tuple(profile), len(seq))


# --- randomness -----------------------------------------------------------------

@dataclass(frozen=True)
class TestResult:
    name: str
    statistic: float
    p_value: float
    passed: bool


@dataclass(frozen=True)
class RandomnessReport:
    n_bits: int
    results: dict[str, TestResult] = field(default_factory=dict)

    @property
    def passed(self) -> bool:
        return all(r.passed for r in self.results.values())

    def __getitem__(self, name: str) -> TestResult:
        return self.results[name]


def monobit_test(b: np.ndarray) -> TestResult:
    n = len(b)
    s = 2 * int(b.sum()) - n
    stat = abs(s) / math.sqrt(n)
    p = math.erfc(stat / math.sqrt(2))
    return TestResult("monobit", stat, p, p >= SIGNIFICANCE)


def runs_test(b: np.ndarray) -> TestResult:
    n = len(b)
    pi = float(b.mean())
    if abs(pi - 0.5) >= 2 / math.sqrt(n):
        # frequency prerequisite fails; the runs statistic is meaningless
        return TestResult("runs", float("nan"), 0.0, False)
    v = 1 + int(np.count_nonzero(b[1:] != b[:-1]))
    num = abs(v - 2 * n * pi * (1 - pi))
    den = 2 * math.sqrt(2 * n) * pi * (1 - pi)
    p = math.erfc(num / den)
    return TestResult("runs", float(v), p, p >= SIGNIFICANCE)


def poker_test(b: np.ndarray, m: int = 4) -> TestResult:
    k = len(b) // m
    words = b[: k * m].reshape(k, m).astype(np.int64) @ (1 << np.arange(m - 1, -1, -1))
    counts = np.bincount(words, minlength=1 << m)
    x = (1 << m) / k * float(np.sum(counts.astype(np.float64) ** 2)) - k
    p = float(chi2.sf(x, (1 << m) - 1))
    return TestResult("poker", x, p, p >= SIGNIFICANCE)


def randomness_suite(bits) -> RandomnessReport:
    b = np.asarray(bits, dtype=np.uint8).ravel()
    if len(b) < MIN_RANDOMNESS_BITS:
        raise InsufficientData(f"need at least {MIN_RANDOMNESS_BITS} bits, got {len(b)}")
    results = {t.name: t for t in (monobit_test(b), runs_test(b), poker_test(b))}
    return RandomnessReport(len(b), results)


# --- cost formulas --------------------------------------------------------------

@dataclass(frozen=True)
class CostReport:
    log2_time: float
    log2_memory: float
    formula_id: str
    extras: dict = field(default_factory=dict)

    def __post_init__(self):
        if self.formula_id not in ("keyspace", "tmto", "cube"):
            raise ValueError(f"unknown formula {self.formula_id!r}")
        for v in (self.log2_time, self.log2_memory):
            if not math.isfinite(v) or v < 0:
                raise ValueError("costs must be finite and non-negative")


def primitive_poly_count(L: int, f: FactorSet) -> int:
    """phi(2^L - 1) / L, exact."""
    if f.modulus_exponent != L:
        raise ValueError(f"factor set for {f.modulus_exponent} given for degree {L}")
    f.validate()
    phi = f.totient()
    if phi % L:
        raise ValueError("phi(2^L-1) not divisible by L; factor table is wrong")
    return phi // L


def keyspace_log2(lengths: Sequence[int], factors) -> CostReport:
    """Polynomial-and-state key count: product form and sum form.

    ``factors`` is a sequence aligned with ``lengths`` or a mapping by degree.
    """
    if isinstance(factors, dict):
        missing = [L for L in lengths if L not in factors]
        if missing:
            raise KeyError(f"no factorisation for degrees {missing}")
        factors = [factors[L] for L in lengths]
    if len(factors) != len(lengths):
        raise ValueError("one factor set per length required")
    terms = [primitive_poly_count(L, f) * ((1 << L) - 1) for L, f in zip(lengths, factors)]
    product_form = math.log2(math.prod(terms))
    sum_form = math.log2(sum(terms))
    return CostReport(
        sum_form,
        0.0,
        "keyspace",
        {"product_form": product_form, "sum_form": sum_form, "terms_log2": [math.log2(t) for t in terms]},
    )


def _log2_sum_pow2(a: float, b: float) -> float:
    hi, lo = max(a, b), min(a, b)
    return hi + math.log2(1 + 2 ** (lo - hi))


def tmto_cost(n: int) -> CostReport:
    """Birthday time-memory tradeoff with m = n/2 stored states."""
    if n < 2 or n % 2:
        raise ValueError("state size must be even and at least 2")
    m = n // 2
    log_t = math.log2(n + m * m) + _log2_sum_pow2(m, n - m)
    log_m = math.log2(n + m) + m
    return CostReport(log_t, log_m, "tmto", {"n": n, "m": m})


def cube_cost(d: int, n: int) -> CostReport:
    """log2(2^(d-1) n + n^2) bit operations."""
    if d < 1 or n < 1:
        raise ValueError("degree and variable count must be positive")
    return CostReport(math.log2((1 << (d - 1)) * n + n * n), 0.0, "cube", {"d": d, "n": n})


# --- avalanche ------------------------------------------------------------------

BatchFn = Callable[[np.ndarray], np.ndarray]


def avalanche_matrix(fn: BatchFn, in_bits: int, out_bits: int, trials: int, seed: int = 0) -> np.ndarray:
    """Entry (i, j): fraction of trials in which flipping input bit i flips output bit j.

    ``fn`` maps a (T, in_bits) 0/1 array to a (T, out_bits) 0/1 array.
    """
    if trials < 100:
        raise ValueError("at least 100 trials required")
    rng = np.random.default_rng(seed)
    x = rng.integers(0, 2, size=(trials, in_bits), dtype=np.uint8)
    base = np.asarray(fn(x), dtype=np.uint8)
    if base.shape != (trials, out_bits):
        raise ValueError(f"fn returned shape {base.shape}, expected {(trials, out_bits)}")
    matrix = np.zeros((in_bits, out_bits))
    for i in range(in_bits):
        flipped = x.copy()
        flipped[:, i] ^= 1
        matrix[i] = (np.asarray(fn(flipped), dtype=np.uint8) ^ base).mean(axis=0)
    return matrix


def words_from_bits(x: np.ndarray) -> np.ndarray:
    """(T, 32) bits, column i = weight 2^i -> uint32 words."""
    return (x.astype(np.uint64) << np.arange(x.shape[1], dtype=np.uint64)).sum(axis=1).astype(np.uint32)


def bits_from_words(w: np.ndarray, nbits: int = 32) -> np.ndarray:
    return ((np.asarray(w, dtype=np.uint64)[:, None] >> np.arange(nbits, dtype=np.uint64)) & 1).astype(np.uint8)


def scram5_fn(params) -> BatchFn:
    from .keyschedule import scram5

    return lambda x: bits_from_words(scram5(words_from_bits(x), params))


def session_key_fn(params, main) -> BatchFn:
    from .keyschedule import expand_message_key

    main_bits = np.unpackbits(np.frombuffer(main.value, np.uint8))

    def fn(x):
        words = expand_message_key(words_from_bits(x), params)
        raw = words.astype(">u4").tobytes()
        return np.unpackbits(np.frombuffer(raw, np.uint8)).reshape(len(x), 256) ^ main_bits

    return fn


def iv_fn(generator) -> BatchFn:
    return generator.run_bits


# --- report rows ----------------------------------------------------------------

@dataclass(frozen=True)
class Verdict:
    metric: str
    value: float
    threshold: str
    passed: bool

    @property
    def verdict(self) -> str:
        return "pass" if self.passed else "fail"


def format_text(rows: Sequence[Verdict]) -> str:
    width = max(len(r.metric) for r in rows)
    return "\n".join(f"{r.metric:<{width}}  {r.value:>14.6g}  {r.threshold:<22} {r.verdict}" for r in rows)


def format_csv(rows: Sequence[Verdict]) -> str:
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(["metric", "value", "threshold", "verdict"])
    for r in rows:
        w.writerow([r.metric, repr(float(r.value)), r.threshold, r.verdict])
    return buf.getvalue()
