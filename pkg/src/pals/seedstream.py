"""Deterministic byte stream used to derive every public constant.

All fixtures (S-boxes, feedback polynomials, filter functions) are drawn
from SHA-256 in counter mode keyed by a printable label, so anyone can
regenerate them from the label alone.
"""
from __future__ import annotations

import hashlib


class SeedStream:
    def __init__(self, label: bytes | str):
        if isinstance(label, str):
            label = label.encode()
        self.label = label
        self._counter = 0
        self._buf = b""

    def read(self, n: int) -> bytes:
        while len(self._buf) < n:
            block = hashlib.sha256(self.label + self._counter.to_bytes(8, "big")).digest()
            self._buf += block
            self._counter += 1
        out, self._buf = self._buf[:n], self._buf[n:]
        return out

    def getrandbits(self, k: int) -> int:
        if k <= 0:
            return 0
        nbytes = (k + 7) // 8
        return int.from_bytes(self.read(nbytes), "big") >> (8 * nbytes - k)

    def randbelow(self, n: int) -> int:
        """Uniform integer in [0, n) by rejection sampling."""
        if n <= 0:
            raise ValueError("n must be positive")
        k = (n - 1).bit_length()
        while True:
            r = self.getrandbits(k)
            if r < n:
                return r

    def shuffle(self, items: list) -> list:
        # Fisher-Yates, in place
        for i in range(len(items) - 1, 0, -1):
            j = self.randbelow(i + 1)
            items[i], items[j] = items[j], items[i]
        return items

    def sample(self, population, k: int) -> list:
        pool = list(population)
        if k > len(pool):
            raise ValueError("sample larger than population")
        for i in range(k):
            j = i + self.randbelow(len(pool) - i)
            pool[i], pool[j] = pool[j], pool[i]
        return pool[:k]

    def permutation(self, n: int) -> list[int]:
        return self.shuffle(list(range(n)))
