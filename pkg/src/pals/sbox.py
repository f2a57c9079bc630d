"""S-box suite: generation from the public seed stream, metrics, fixture files."""
from __future__ import annotations

from pathlib import Path

import numpy as np

from .seedstream import SeedStream

SBOX4_LABEL = b"PALS/sbox4"
SBOX8_LABEL = b"PALS/sbox8"


def is_bijection(sbox, size: int) -> bool:
    return sorted(int(v) for v in sbox) == list(range(size))


def invert(sbox) -> list[int]:
    inv = [0] * len(sbox)
    for x, y in enumerate(sbox):
        inv[int(y)] = x
    return inv


def differential_uniformity(sbox) -> int:
    s = np.asarray(sbox, dtype=np.int64)
    size = len(s)
    xs = np.arange(size)
    best = 0
    for dx in range(1, size):
        counts = np.bincount(s ^ s[xs ^ dx], minlength=size)
        best = max(best, int(counts.max()))
    return best


def linearity(sbox) -> int:
    """max |W| over component functions b.S, b != 0."""
    from .boolefn import TruthTable, walsh_spectrum

    s = np.asarray(sbox, dtype=np.int64)
    nbits = len(s).bit_length() - 1
    best = 0
    for b in range(1, len(s)):
        comp = np.zeros(len(s), dtype=np.uint8)
        v = s & b
        for i in range(nbits):
            comp ^= ((v >> i) & 1).astype(np.uint8)
        best = max(best, int(np.abs(walsh_spectrum(TruthTable(nbits, comp))).max()))
    return best


def has_single_bit_transition(sbox) -> bool:
    """True if some one-bit input difference can give a one-bit output difference."""
    size = len(sbox)
    for i in range(size.bit_length() - 1):
        for x in range(size):
            d = int(sbox[x]) ^ int(sbox[x ^ (1 << i)])
            if d & (d - 1) == 0:
                return True
    return False


# Optimal 4-bit S-box with no one-bit to one-bit differential (PRESENT).
BASE_SBOX4 = (0xC, 0x5, 0x6, 0xB, 0x9, 0x0, 0xA, 0xD, 0x3, 0xE, 0xF, 0x8, 0x4, 0x7, 0x1, 0x2)


def _permute_bits(v: int, perm) -> int:
    return sum(((v >> i) & 1) << perm[i] for i in range(len(perm)))


def generate_sboxes4(count: int = 8, label: bytes = SBOX4_LABEL) -> list[list[int]]:
    """Seeded variants S'(x) = P_out(S(P_in(x ^ a))) ^ b of ``BASE_SBOX4``.

    Bit permutations and XOR masks keep differential uniformity 4,
    linearity 8 and the absence of one-bit to one-bit transitions; random
    permutations with those properties are too rare (about 1e-5) to draw
    directly.  Variants with a fixed point or already drawn are skipped.
    """
    stream = SeedStream(label)
    out: list[list[int]] = []
    while len(out) < count:
        p_in, p_out = stream.permutation(4), stream.permutation(4)
        a, b = stream.getrandbits(4), stream.getrandbits(4)
        cand = [_permute_bits(BASE_SBOX4[_permute_bits(x ^ a, p_in)], p_out) ^ b for x in range(16)]
        if any(cand[x] == x for x in range(16)) or cand in out:
            continue
        out.append(cand)
    return out


def generate_sboxes8(count: int = 4, label: bytes = SBOX8_LABEL) -> list[list[int]]:
    stream = SeedStream(label)
    return [stream.permutation(256) for _ in range(count)]


def write_sbox8_file(path: str | Path, sboxes) -> None:
    blocks = []
    for s in sboxes:
        rows = [" ".join(f"{v:02x}" for v in s[r * 16 : r * 16 + 16]) for r in range(16)]
        blocks.append("\n".join(rows))
    Path(path).write_text("\n\n".join(blocks) + "\n")


def read_sbox8_file(path: str | Path) -> list[list[int]]:
    text = Path(path).read_text()
    blocks = [b for b in text.strip().split("\n\n") if b.strip()]
    sboxes = [[int(tok, 16) for tok in b.split()] for b in blocks]
    if len(sboxes) != 4 or any(not is_bijection(s, 256) for s in sboxes):
        raise ValueError(f"{path}: expected four bijective 8x8 S-boxes")
    return sboxes
