"""Session key -> 1600-bit initial vector."""
from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from . import _kernels
from .bitutil import bytes_to_bits
from .galois import FeedbackPoly
from .keyschedule import SessionKey

IV_BITS = 1600
DISCARD_BYTES = 40
MAX_STAGES = 256


class SeedError(ValueError):
    pass


def pack_stages(bits, nwords: int = 4) -> np.ndarray:
    """Stage bits (stage 1 first) -> little-endian uint64 words."""
    bits = np.asarray(bits, dtype=np.uint8)
    padded = np.zeros(64 * nwords, dtype=np.uint8)
    padded[: len(bits)] = bits
    return np.frombuffer(np.packbits(padded, bitorder="little").tobytes(), dtype="<u8").astype(np.uint64)


def word_masks(length: int) -> np.ndarray:
    """Per-word masks of the stages that exist in a register of ``length``."""
    out = np.zeros(4, dtype=np.uint64)
    for w in range(4):
        nb = max(0, min(64, length - 64 * w))
        out[w] = np.uint64(2**64 - 1) if nb == 64 else np.uint64((1 << nb) - 1)
    return out


def unpack_stages(words: np.ndarray, length: int) -> np.ndarray:
    raw = np.asarray(words, dtype="<u8").tobytes()
    return np.unpackbits(np.frombuffer(raw, dtype=np.uint8), bitorder="little")[:length]


def pack_stages_batch(bits: np.ndarray, nwords: int = 4) -> np.ndarray:
    bits = np.asarray(bits, dtype=np.uint8)
    padded = np.zeros((bits.shape[0], 64 * nwords), dtype=np.uint8)
    padded[:, : bits.shape[1]] = bits
    packed = np.packbits(padded, axis=1, bitorder="little")
    return np.ascontiguousarray(packed).view("<u8").astype(np.uint64)


@dataclass(frozen=True)
class InitialVector:
    bits: np.ndarray

    def __post_init__(self):
        bits = np.asarray(self.bits, dtype=np.uint8).copy()
        bits.setflags(write=False)
        object.__setattr__(self, "bits", bits)


@dataclass(frozen=True, eq=False)
class IvGenerator:
    """Register plus four 8x8 S-boxes.

    ``selector`` names the two stages (high bit first) that pick the S-box;
    stage 1 is the insertion end.
    """

    poly: FeedbackPoly
    sboxes8: np.ndarray
    selector: tuple[int, int] = (128, 129)
    discard_bytes: int = DISCARD_BYTES
    emit_bytes: int = IV_BITS // 8

    def __post_init__(self):
        sb = np.asarray(self.sboxes8, dtype=np.uint8)
        if sb.shape != (4, 256):
            raise ValueError("need four 8x8 S-boxes")
        object.__setattr__(self, "sboxes8", sb)
        L = self.poly.degree
        if not 8 <= L <= MAX_STAGES:
            raise ValueError(f"register length must be in [8, {MAX_STAGES}]")
        if not all(1 <= s <= L for s in self.selector):
            raise ValueError("selector stages outside the register")

    @property
    def length(self) -> int:
        return self.poly.degree

    def _masks(self):
        L = self.length
        fb = pack_stages([1 if (j + 1) in self.poly.taps else 0 for j in range(L)])
        return fb[None, :], word_masks(L)[None, :]

    def run(self, seed_bits: np.ndarray) -> np.ndarray:
        """Rows of seed bits (B, L) -> emitted bytes (B, emit_bytes)."""
        seed_bits = np.atleast_2d(np.asarray(seed_bits, dtype=np.uint8))
        if seed_bits.shape[1] != self.length:
            raise ValueError(f"seed rows must have {self.length} bits")
        if np.any(~seed_bits.any(axis=1)):
            raise SeedError("all-zero seed")
        fb, top = self._masks()
        out = np.zeros((seed_bits.shape[0], self.emit_bytes), dtype=np.uint8)
        _kernels.iv_run(
            pack_stages_batch(seed_bits),
            fb, top,
            self.selector[0], self.selector[1],
            self.sboxes8, self.discard_bytes, out,
        )
        return out

    def run_bits(self, seed_bits: np.ndarray) -> np.ndarray:
        return np.unpackbits(self.run(seed_bits), axis=1)


def generate_iv(sk: SessionKey, g: IvGenerator) -> InitialVector:
    """Seed the register with the session key (bit j -> stage j) and expand."""
    if g.length != 256:
        raise ValueError("the production IV generator has a 256-stage register")
    bits = bytes_to_bits(sk.value)
    if not bits.any():
        raise SeedError("all-zero session key")
    return InitialVector(g.run_bits(bits[None, :])[0])
