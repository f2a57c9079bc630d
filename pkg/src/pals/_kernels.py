"""Compiled bit-level cores for the keystream and IV generators.

Registers are packed little-endian into four uint64 words: stage j lives
in word (j-1)//64, bit (j-1)%64.  Unused high words carry zero masks.
Every constant is typed uint64 up front because numba promotes mixed
int64/uint64 arithmetic to float.
"""
import numpy as np
from numba import njit

U1 = np.uint64(1)
U63 = np.uint64(63)
S32, S16, S8, S4, S2 = (np.uint64(s) for s in (32, 16, 8, 4, 2))
LOWBYTE = np.uint64(0xFF)
NOT_LOWBYTE = ~np.uint64(0xFF)


@njit(cache=True, inline="always")
def _step(regs, r, fbmask, topmask):
    w0, w1, w2, w3 = regs[r, 0], regs[r, 1], regs[r, 2], regs[r, 3]
    x = (w0 & fbmask[r, 0]) ^ (w1 & fbmask[r, 1]) ^ (w2 & fbmask[r, 2]) ^ (w3 & fbmask[r, 3])
    x ^= x >> S32
    x ^= x >> S16
    x ^= x >> S8
    x ^= x >> S4
    x ^= x >> S2
    x ^= x >> U1
    regs[r, 0] = ((w0 << U1) | (x & U1)) & topmask[r, 0]
    regs[r, 1] = ((w1 << U1) | (w0 >> U63)) & topmask[r, 1]
    regs[r, 2] = ((w2 << U1) | (w1 >> U63)) & topmask[r, 2]
    regs[r, 3] = ((w3 << U1) | (w2 >> U63)) & topmask[r, 3]


@njit(cache=True)
def keystream_run(
    regs, fbmask, topmask, out_word, out_shift, tap_word, tap_shift,
    sboxes, ftabs, htab, hprev, out, clock_counts,
):
    """Advance the generator len(out) steps, one keystream bit per step.

    Returns the final memory bit.
    """
    for t in range(out.shape[0]):
        # register 1 is the most significant bit of the S-box input
        byte = 0
        for r in range(8):
            byte = (byte << 1) | np.int64((regs[r, out_word[r]] >> out_shift[r]) & U1)
        left = (byte >> 7) ^ (byte >> 5) ^ (byte >> 3) ^ (byte >> 1)
        right = (byte >> 6) ^ (byte >> 4) ^ (byte >> 2) ^ byte
        c = np.int64(sboxes[2 * (left & 1) + (right & 1), byte])
        ones = 0
        for r in range(8):
            ones += (c >> r) & 1
        if ones == 4:
            mask = 255
        elif ones > 4:
            mask = c
        else:
            mask = 255 ^ c
        for r in range(8):
            if (mask >> (7 - r)) & 1:
                clock_counts[r] += 1
                _step(regs, r, fbmask, topmask)
        z = hprev
        hidx = 0
        for i in range(8):
            # the least significant control bit feeds F1
            idx = ((c >> i) & 1) << 8
            for k in range(8):
                idx |= np.int64((regs[i, tap_word[i, k]] >> tap_shift[i, k]) & U1) << k
            fo = np.int64(ftabs[i, idx])
            z ^= fo
            hidx |= fo << i
        out[t] = z
        hprev = np.int64(htab[hidx | (hprev << 8)])
    return hprev


@njit(cache=True)
def iv_run(seeds, fbmask, topmask, sel_hi, sel_lo, sboxes, discard, out):
    """Byte-clocked S-box-filtered LFSR, one row of ``seeds`` per IV.

    Each byte-clock reads the selector stages, runs the linear recurrence
    eight steps, substitutes the eight new stages (the low byte of word 0)
    through the selected S-box and writes the result back.
    """
    emit = out.shape[1]
    hi_w, hi_s = (sel_hi - 1) // 64, np.uint64((sel_hi - 1) % 64)
    lo_w, lo_s = (sel_lo - 1) // 64, np.uint64((sel_lo - 1) % 64)
    regs = np.empty((1, 4), dtype=np.uint64)
    for b in range(seeds.shape[0]):
        for w in range(4):
            regs[0, w] = seeds[b, w]
        for clk in range(discard + emit):
            sel = 2 * np.int64((regs[0, hi_w] >> hi_s) & U1) + np.int64((regs[0, lo_w] >> lo_s) & U1)
            for _ in range(8):
                _step(regs, 0, fbmask, topmask)
            s = sboxes[sel, np.int64(regs[0, 0] & LOWBYTE)]
            regs[0, 0] = (regs[0, 0] & NOT_LOWBYTE) | np.uint64(s)
            if clk >= discard:
                out[b, clk - discard] = s
