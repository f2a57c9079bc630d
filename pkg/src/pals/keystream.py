"""The PALS keystream generator.

Eight irregularly clocked registers; an 8x8 S-box chosen from the register
outputs turns them into a control byte; a majority rule on that byte
decides which registers step.  Each register feeds a 9-input filter F_i
(eight tapped stages plus one control bit) and the combiner with memory
outputs ``F_1 ^ ... ^ F_8 ^ h_prev`` before updating ``h_prev`` through h.
"""
from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np

from . import _kernels
from .boolefn import TruthTable, from_monomials
from .bitutil import bytes_to_bits
from .galois import FeedbackPoly
from .ivgen import InitialVector, pack_stages, unpack_stages, word_masks
from .keyschedule import SessionKey

PRODUCTION_LENGTHS = (239, 163, 223, 181, 199, 173, 193, 229)
TOY_LENGTHS = (5, 7, 11, 13, 17, 19, 23, 29)
N_REGISTERS = 8
PLACEMENT_WINDOWS = 163

# Combiner update h, variables X0..X8 (X_k is table index bit k).
H_MONOMIALS = (
    (1,), (2,), (5,), (5, 3), (6, 4), (7, 0), (7, 1), (7, 5), (8, 0), (8, 2),
    (8, 7, 0), (8, 7, 1), (8, 7, 3, 2), (8, 7, 4, 2), (8, 7, 4, 3, 2),
    (8, 7, 5, 2), (8, 7, 5, 3, 2), (8, 7, 5, 4, 2), (8, 7, 5, 4, 3, 2),
    (8, 7, 6, 2), (8, 7, 6, 3, 2), (8, 7, 6, 4), (8, 7, 6, 4, 2),
    (8, 7, 6, 4, 3), (8, 7, 6, 4, 3, 2), (8, 7, 6, 5), (8, 7, 6, 5, 2),
    (8, 7, 6, 5, 3), (8, 7, 6, 5, 3, 2), (8, 7, 6, 5, 4), (8, 7, 6, 5, 4, 2),
    (8, 7, 6, 5, 4, 3), (8, 7, 6, 5, 4, 3, 2),
)


def h_table() -> TruthTable:
    return from_monomials(9, [[x + 1 for x in mon] for mon in H_MONOMIALS])


def g_table() -> TruthTable:
    """Output combiner: XOR of X0..X7 and the memory bit."""
    return TruthTable.linear(9, 0x1FF)


def default_taps(length: int) -> tuple[int, ...]:
    return tuple(math.ceil(k * length / 9) for k in range(1, 9))


def select_sbox(out_bits) -> int:
    """2*(o1^o3^o5^o7) + (o2^o4^o6^o8)."""
    o = [int(b) & 1 for b in out_bits]
    if len(o) != 8:
        raise ValueError("need one output bit per register")
    left = o[0] ^ o[2] ^ o[4] ^ o[6]
    right = o[1] ^ o[3] ^ o[5] ^ o[7]
    return 2 * left + right


def clock_control(control: int) -> frozenset[int]:
    """Registers (1..8) whose control bit equals the majority value; all on a tie.

    The most significant bit of ``control`` belongs to register 1.
    """
    bits = [(control >> (8 - r)) & 1 for r in range(1, 9)]
    ones = sum(bits)
    if ones == 4:
        return frozenset(range(1, 9))
    majority = 1 if ones > 4 else 0
    return frozenset(r for r, b in zip(range(1, 9), bits) if b == majority)


@dataclass(frozen=True, eq=False)
class CipherSuite:
    """Everything fixed about a generator instance (the public constants)."""

    polys: tuple[FeedbackPoly, ...]
    sboxes8: np.ndarray
    f_tables: tuple[TruthTable, ...]
    h: TruthTable
    tap_map: tuple[tuple[int, ...], ...] = ()

    def __post_init__(self):
        if len(self.polys) != N_REGISTERS or len(self.f_tables) != N_REGISTERS:
            raise ValueError("need eight registers and eight filter functions")
        if not self.tap_map:
            object.__setattr__(self, "tap_map", tuple(default_taps(p.degree) for p in self.polys))
        for p, taps in zip(self.polys, self.tap_map):
            if len(taps) != 8 or not all(1 <= s <= p.degree for s in taps):
                raise ValueError("each register needs eight taps inside its stages")
            if p.degree > 256:
                raise ValueError("registers are limited to 256 stages")
        object.__setattr__(self, "sboxes8", np.asarray(self.sboxes8, dtype=np.uint8))

    @property
    def lengths(self) -> tuple[int, ...]:
        return tuple(p.degree for p in self.polys)

    @property
    def total_stages(self) -> int:
        return sum(self.lengths)

    def _arrays(self):
        cached = getattr(self, "_cache", None)
        if cached is not None:
            return cached
        fbmask = np.zeros((8, 4), dtype=np.uint64)
        topmask = np.zeros((8, 4), dtype=np.uint64)
        out_word = np.zeros(8, dtype=np.int64)
        out_shift = np.zeros(8, dtype=np.uint64)
        tap_word = np.zeros((8, 8), dtype=np.int64)
        tap_shift = np.zeros((8, 8), dtype=np.uint64)
        for r, p in enumerate(self.polys):
            L = p.degree
            fbmask[r] = pack_stages([1 if (j + 1) in p.taps else 0 for j in range(L)])
            topmask[r] = word_masks(L)
            out_word[r], out_shift[r] = (L - 1) // 64, (L - 1) % 64
            for k, s in enumerate(self.tap_map[r]):
                tap_word[r, k], tap_shift[r, k] = (s - 1) // 64, (s - 1) % 64
        ftabs = np.stack([t.bits for t in self.f_tables]).astype(np.uint8)
        cached = (fbmask, topmask, out_word, out_shift, tap_word, tap_shift,
                  self.sboxes8, ftabs, self.h.bits.astype(np.uint8))
        object.__setattr__(self, "_cache", cached)
        return cached


@dataclass
class GeneratorState:
    suite: CipherSuite
    regs: np.ndarray  # (8, 4) uint64, packed stages
    h_prev: int = 0
    repairs: list[int] = field(default_factory=list)
    clock_counts: np.ndarray = field(default_factory=lambda: np.zeros(8, dtype=np.int64))

    @classmethod
    def from_registers(cls, suite: CipherSuite, registers, h_prev: int = 0) -> "GeneratorState":
        """Build from eight stage-bit sequences (stage 1 first); zero registers are repaired."""
        regs = np.zeros((8, 4), dtype=np.uint64)
        repairs = []
        for r, (bits, L) in enumerate(zip(registers, suite.lengths)):
            bits = np.array(bits, dtype=np.uint8)
            if len(bits) != L:
                raise ValueError(f"register {r + 1} needs {L} bits")
            if not bits.any():
                bits[L - 1] = 1
                repairs.append(r + 1)
            regs[r] = pack_stages(bits)
        return cls(suite, regs, h_prev, repairs)

    def register_bits(self, r: int) -> np.ndarray:
        """Stage contents of register ``r`` (0-based), stage 1 first."""
        return unpack_stages(self.regs[r], self.suite.lengths[r])

    def output_bits(self) -> list[int]:
        return [int(self.register_bits(r)[-1]) for r in range(8)]

    def clone(self) -> "GeneratorState":
        return GeneratorState(
            self.suite, self.regs.copy(), self.h_prev, list(self.repairs), self.clock_counts.copy()
        )

    def keystream(self, n: int) -> np.ndarray:
        if n < 0:
            raise ValueError("n must be non-negative")
        out = np.zeros(n, dtype=np.uint8)
        if n:
            self.h_prev = int(
                _kernels.keystream_run(self.regs, *self.suite._arrays(), self.h_prev, out, self.clock_counts)
            )
        return out

    def next_bit(self) -> int:
        return int(self.keystream(1)[0])

    def keystream_bytes(self, nbytes: int) -> bytes:
        """Packed keystream, first bit in the MSB of the first byte."""
        return np.packbits(self.keystream(8 * nbytes)).tobytes()


def keystream(st: GeneratorState, n: int) -> np.ndarray:
    return st.keystream(n)


def next_bit(st: GeneratorState) -> int:
    return st.next_bit()


@dataclass(frozen=True)
class PlacementPlan:
    assignments: tuple[int, ...]  # register index 0..7 per windowed IV bit
    fill_order: tuple[int, ...]  # stage (1-based) each windowed bit lands in


def placement_plan(sk: SessionKey, lengths=PRODUCTION_LENGTHS) -> PlacementPlan:
    """Overlapping 3-bit windows over session-key bits 1..165 pick registers."""
    b = bytes_to_bits(sk.value)
    fill = [0] * len(lengths)
    assignments, stages = [], []
    for j in range(PLACEMENT_WINDOWS):
        r = 4 * int(b[j]) + 2 * int(b[j + 1]) + int(b[j + 2])
        fill[r] += 1
        if fill[r] > lengths[r]:
            raise ValueError("placement overflowed a register")
        assignments.append(r)
        stages.append(fill[r])
    return PlacementPlan(tuple(assignments), tuple(stages))


def load_initial_state(sk: SessionKey, iv: InitialVector, suite: CipherSuite) -> GeneratorState:
    if suite.total_stages != len(iv.bits):
        raise ValueError(f"IV must have {suite.total_stages} bits")
    plan = placement_plan(sk, suite.lengths)
    regs = [np.zeros(L, dtype=np.uint8) for L in suite.lengths]
    filled = [np.zeros(L, dtype=bool) for L in suite.lengths]
    for j, (r, stage) in enumerate(zip(plan.assignments, plan.fill_order)):
        regs[r][stage - 1] = iv.bits[j]
        filled[r][stage - 1] = True
    pos = PLACEMENT_WINDOWS
    for r in range(N_REGISTERS):
        empty = np.flatnonzero(~filled[r])
        regs[r][empty] = iv.bits[pos : pos + len(empty)]
        pos += len(empty)
    assert pos == len(iv.bits)
    return GeneratorState.from_registers(suite, regs)


def resync(st: GeneratorState, iv: InitialVector) -> GeneratorState:
    """XOR the IV into registers 1..8 in order; the memory bit is cleared."""
    if st.suite.total_stages != len(iv.bits):
        raise ValueError(f"IV must have {st.suite.total_stages} bits")
    regs, pos = [], 0
    for r, L in enumerate(st.suite.lengths):
        regs.append(st.register_bits(r) ^ iv.bits[pos : pos + L])
        pos += L
    return GeneratorState.from_registers(st.suite, regs)


def serialize_registers(st: GeneratorState) -> np.ndarray:
    return np.concatenate([st.register_bits(r) for r in range(N_REGISTERS)])
