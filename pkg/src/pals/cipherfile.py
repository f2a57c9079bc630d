"""On-disk ciphertext: b"PALS" | version 0x01 | message key (4 bytes BE) | payload."""
from __future__ import annotations

from dataclasses import dataclass

MAGIC = b"PALS"
VERSION = 1
HEADER_LEN = 9


class FormatError(ValueError):
    pass


class TruncatedFile(FormatError):
    pass


@dataclass(frozen=True)
class CipherFile:
    message_key: int
    payload: bytes
    version: int = VERSION

    def to_bytes(self) -> bytes:
        return MAGIC + bytes([self.version]) + self.message_key.to_bytes(4, "big") + self.payload

    @classmethod
    def from_bytes(cls, data: bytes) -> "CipherFile":
        if len(data) < len(MAGIC) and MAGIC.startswith(bytes(data)):
            raise TruncatedFile(f"file is {len(data)} bytes, header needs {HEADER_LEN}")
        if data[:4] != MAGIC:
            raise FormatError("bad magic (not a PALS ciphertext)")
        if len(data) < 5:
            raise TruncatedFile(f"file is {len(data)} bytes, header needs {HEADER_LEN}")
        if data[4] != VERSION:
            raise FormatError(f"unsupported version {data[4]}")
        if len(data) < HEADER_LEN:
            raise TruncatedFile(f"file is {len(data)} bytes, header needs {HEADER_LEN}")
        return cls(int.from_bytes(data[5:9], "big"), bytes(data[9:]), data[4])
