"""Message keys, the Scram-5 scrambler and session-key derivation.

Word convention: a 32-bit word is an int, bit ``i`` having weight 2**i.
Scram-5 nibble ``i`` is bits 4i..4i+3.  The P-box sends input bit ``i``
to output bit ``pbox[i]``.
"""
from __future__ import annotations

import re
from dataclasses import dataclass
from functools import lru_cache
from pathlib import Path

import numpy as np

from .bitutil import xor_bytes
from .galois import FeedbackPoly, Lfsr
from .sbox import generate_sboxes4, invert, is_bijection

MESSAGE_KEY_POLY = FeedbackPoly.from_exponents([32, 29, 24, 23, 21, 19, 17, 16, 14, 13, 11, 9, 6, 3, 0])
# one full period of the 32-bit register minus the starting state
MAX_MESSAGE_KEYS = 2**32 - 2
ROUNDS = 5
SESSION_WORDS = 8


class RekeyRequired(RuntimeError):
    """The message-key register has issued its full period under this main key."""


@dataclass(frozen=True)
class MainKey:
    value: bytes

    def __post_init__(self):
        if len(self.value) != 32:
            raise ValueError("main key must be 256 bits")
        if not any(self.value):
            raise ValueError("main key must not be all zero")

    @classmethod
    def from_hex(cls, text: str) -> "MainKey":
        return cls(bytes.fromhex(text))

    def hex(self) -> str:
        return self.value.hex()


@dataclass(frozen=True)
class SessionKey:
    value: bytes

    def __post_init__(self):
        if len(self.value) != 32:
            raise ValueError("session key must be 256 bits")

    def hex(self) -> str:
        return self.value.hex()


@dataclass(frozen=True)
class SpnParams:
    pbox: tuple[int, ...]
    sboxes4: tuple[tuple[int, ...], ...]
    rounds: int = ROUNDS

    def __post_init__(self):
        object.__setattr__(self, "pbox", tuple(int(v) for v in self.pbox))
        object.__setattr__(self, "sboxes4", tuple(tuple(int(v) for v in s) for s in self.sboxes4))
        if sorted(self.pbox) != list(range(32)):
            raise ValueError("pbox must be a permutation of 0..31")
        if len(self.sboxes4) != 8 or not all(is_bijection(s, 16) for s in self.sboxes4):
            raise ValueError("need eight bijective 4-bit S-boxes")
        if self.rounds != ROUNDS:
            raise ValueError("Scram-5 runs exactly 5 rounds")


def default_pbox() -> tuple[int, ...]:
    return tuple((5 * i + 1) % 32 for i in range(32))


def generate_spn_params() -> SpnParams:
    return SpnParams(default_pbox(), tuple(tuple(s) for s in generate_sboxes4(8)))


def write_spn_file(path: str | Path, p: SpnParams) -> None:
    lines = [" ".join(str(v) for v in p.pbox)]
    lines += ["".join(f"{v:x}" for v in s) for s in p.sboxes4]
    Path(path).write_text("\n".join(lines) + "\n")


def read_spn_file(path: str | Path) -> SpnParams:
    lines = [ln.strip() for ln in Path(path).read_text().splitlines() if ln.strip()]
    if len(lines) != 9:
        raise ValueError(f"{path}: expected pbox line plus eight S-box lines")
    pbox = [int(tok) for tok in lines[0].split()]
    sboxes = [[int(c, 16) for c in ln] for ln in lines[1:]]
    return SpnParams(tuple(pbox), tuple(tuple(s) for s in sboxes))


# --- Scram-5 -------------------------------------------------------------------

@lru_cache(maxsize=8)
def _tables(p: SpnParams):
    perm = np.zeros((4, 256), dtype=np.uint32)
    iperm = np.zeros((4, 256), dtype=np.uint32)
    inv_pbox = [0] * 32
    for i, j in enumerate(p.pbox):
        inv_pbox[j] = i
    for k in range(4):
        for v in range(256):
            fwd = inv = 0
            for b in range(8):
                if v >> b & 1:
                    fwd |= 1 << p.pbox[8 * k + b]
                    inv |= 1 << inv_pbox[8 * k + b]
            perm[k, v], iperm[k, v] = fwd, inv
    sub = np.zeros((4, 256), dtype=np.uint32)
    isub = np.zeros((4, 256), dtype=np.uint32)
    inv_boxes = [invert(s) for s in p.sboxes4]
    for k in range(4):
        lo, hi = p.sboxes4[2 * k], p.sboxes4[2 * k + 1]
        ilo, ihi = inv_boxes[2 * k], inv_boxes[2 * k + 1]
        for v in range(256):
            sub[k, v] = (lo[v & 15] | hi[v >> 4] << 4) << (8 * k)
            isub[k, v] = (ilo[v & 15] | ihi[v >> 4] << 4) << (8 * k)
    return perm, sub, iperm, isub


def _apply(tables, w):
    return (
        tables[0][w & 0xFF]
        | tables[1][(w >> 8) & 0xFF]
        | tables[2][(w >> 16) & 0xFF]
        | tables[3][(w >> 24) & 0xFF]
    )


def scram5(w, p: SpnParams):
    """Five rounds of (P-box, then eight parallel 4-bit S-boxes).

    Accepts an int or a numpy array of uint32 words.
    """
    perm, sub, _, _ = _tables(p)
    scalar = isinstance(w, (int, np.integer))
    x = np.uint32(w) if scalar else np.asarray(w, dtype=np.uint32)
    for _ in range(p.rounds):
        x = _apply(sub, _apply(perm, x))
    return int(x) if scalar else x


def scram5_inverse(w, p: SpnParams):
    _, _, iperm, isub = _tables(p)
    scalar = isinstance(w, (int, np.integer))
    x = np.uint32(w) if scalar else np.asarray(w, dtype=np.uint32)
    for _ in range(p.rounds):
        x = _apply(iperm, _apply(isub, x))
    return int(x) if scalar else x


def expand_message_key(mk, p: SpnParams):
    """Eight chained Scram-5 words: w_i = scram5(w_{i-1} xor i), w_0 = mk.

    For an int returns the 32-byte big-endian concatenation w_1..w_8; for
    an array of message keys returns a (B, 8) uint32 array.
    """
    scalar = isinstance(mk, (int, np.integer))
    w = np.asarray(mk, dtype=np.uint32)
    words = []
    for i in range(1, SESSION_WORDS + 1):
        w = scram5(w ^ np.uint32(i), p)
        words.append(w)
    if scalar:
        return b"".join(int(x).to_bytes(4, "big") for x in words)
    return np.stack(words, axis=-1)


def derive_session_key(mk: int, main: MainKey, p: SpnParams) -> SessionKey:
    return SessionKey(xor_bytes(expand_message_key(int(mk), p), main.value))


# --- message keys --------------------------------------------------------------

class MessageKeyState:
    """32-bit message-key register; each key is the state after 32 clocks."""

    def __init__(self, seed: int, counter: int = 0, poly: FeedbackPoly = MESSAGE_KEY_POLY):
        if not 0 <= counter <= MAX_MESSAGE_KEYS:
            raise ValueError("counter out of range")
        self.seed = seed
        self.register = Lfsr(poly, seed)
        self.counter = counter
        if counter:
            self.register.advance(poly.degree * counter)

    def next_message_key(self) -> int:
        if self.counter >= MAX_MESSAGE_KEYS:
            raise RekeyRequired("message-key period exhausted; a new main key is required")
        for _ in range(self.register.length):
            self.register.clock()
        self.counter += 1
        return self.register.state


# --- key file ------------------------------------------------------------------

@dataclass
class KeyFile:
    main_key: MainKey
    mk_seed: int
    mk_counter: int = 0

    def __post_init__(self):
        if not 0 < self.mk_seed < 2**32:
            raise ValueError("message-key seed must be a nonzero 32-bit value")
        if not 0 <= self.mk_counter <= MAX_MESSAGE_KEYS:
            raise ValueError("message-key counter out of range")

    def serialize(self) -> str:
        return (
            f"mainkey={self.main_key.hex()}\n"
            f"mkseed={self.mk_seed:08x}\n"
            f"mkcounter={self.mk_counter}\n"
        )

    _LINES = (
        re.compile(r"mainkey=([0-9a-fA-F]{64})"),
        re.compile(r"mkseed=([0-9a-fA-F]{8})"),
        re.compile(r"mkcounter=(\d+)"),
    )

    @classmethod
    def parse(cls, text: str) -> "KeyFile":
        lines = text.splitlines()
        if len(lines) != 3:
            raise ValueError("key file must have exactly three lines")
        groups = []
        for pattern, line in zip(cls._LINES, lines):
            m = pattern.fullmatch(line.strip())
            if not m:
                raise ValueError(f"malformed key file line: {line!r}")
            groups.append(m.group(1))
        return cls(MainKey.from_hex(groups[0]), int(groups[1], 16), int(groups[2]))

    def message_keys(self) -> MessageKeyState:
        return MessageKeyState(self.mk_seed, self.mk_counter)
