"""End-to-end pipeline: (main key, message key) -> keystream -> ciphertext."""
from __future__ import annotations

import numpy as np

from . import fixtures
from .ivgen import generate_iv
from .keyschedule import MainKey, derive_session_key
from .keystream import GeneratorState, load_initial_state


def initial_state(main: MainKey, message_key: int) -> GeneratorState:
    sk = derive_session_key(message_key, main, fixtures.spn_params())
    iv = generate_iv(sk, fixtures.iv_generator())
    return load_initial_state(sk, iv, fixtures.production_suite())


def keystream_bits(main: MainKey, message_key: int, n: int) -> np.ndarray:
    return initial_state(main, message_key).keystream(n)


def apply_keystream(main: MainKey, message_key: int, data: bytes) -> bytes:
    """XOR ``data`` with the keystream; encryption and decryption are the same map."""
    ks = initial_state(main, message_key).keystream_bytes(len(data))
    return (np.frombuffer(data, np.uint8) ^ np.frombuffer(ks, np.uint8)).tobytes()
