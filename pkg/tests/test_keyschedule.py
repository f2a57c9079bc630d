import numpy as np
import pytest

from pals import fixtures
from pals.keyschedule import (
    MAX_MESSAGE_KEYS,
    KeyFile,
    MainKey,
    MessageKeyState,
    RekeyRequired,
    SpnParams,
    derive_session_key,
    expand_message_key,
    read_spn_file,
    scram5,
    scram5_inverse,
    write_spn_file,
)
from pals.sbox import (
    differential_uniformity,
    has_single_bit_transition,
    is_bijection,
    linearity,
)

# Frozen known answers under the shipped fixtures.
KAT_SCRAM5_ZERO = 0xA35B9882
KAT_MAIN = MainKey(bytes(range(1, 33)))
KAT_MK = 0x12345678
KAT_SESSION = "21d1a1f71bcb8c1c8048dc980d3a76eee4a5d7a173c3efe07319affc95ee3381"


def ref_scram5(w: int, p: SpnParams) -> int:
    """Bit-by-bit Scram-5: permute, then substitute nibble i through S-box i."""
    for _ in range(p.rounds):
        bits = [(w >> i) & 1 for i in range(32)]
        moved = [0] * 32
        for i, b in enumerate(bits):
            moved[p.pbox[i]] = b
        w = 0
        for i in range(8):
            nib = sum(moved[4 * i + k] << k for k in range(4))
            w |= p.sboxes4[i][nib] << (4 * i)
    return w


@pytest.fixture(scope="module")
def params():
    return fixtures.spn_params()


def test_scram5_matches_reference(params):
    rng = np.random.default_rng(7)
    words = rng.integers(0, 2**32, 300, dtype=np.uint64)
    fast = scram5(words.astype(np.uint32), params)
    for w, f in zip(words, fast):
        assert int(f) == ref_scram5(int(w), params)
    assert scram5(int(words[0]), params) == ref_scram5(int(words[0]), params)


def test_scram5_inverse_round_trip(params):
    rng = np.random.default_rng(1)
    words = rng.integers(0, 2**32, 1000, dtype=np.uint64).astype(np.uint32)
    assert np.array_equal(scram5_inverse(scram5(words, params), params), words)


def test_scram5_no_collisions(params):
    rng = np.random.default_rng(2)
    words = np.unique(rng.integers(0, 2**32, 1 << 20, dtype=np.uint64).astype(np.uint32))
    assert len(np.unique(scram5(words, params))) == len(words)


def test_scram5_mean_hamming_distance(params):
    rng = np.random.default_rng(3)
    words = rng.integers(0, 2**32, 2000, dtype=np.uint64).astype(np.uint32)
    base = scram5(words, params)
    dists = []
    for i in range(32):
        d = scram5(words ^ np.uint32(1 << i), params) ^ base
        dists.append(np.unpackbits(d.view(np.uint8)).sum() / len(words))
    assert 15.0 <= np.mean(dists) <= 17.0


def test_scram5_known_answer(params):
    assert scram5(0, params) == KAT_SCRAM5_ZERO


def test_session_key_known_answer(params):
    assert derive_session_key(KAT_MK, KAT_MAIN, params).hex() == KAT_SESSION


def test_expansion_chain_against_reference(params):
    mk = 0xDEADBEEF
    w, words = mk, []
    for i in range(1, 9):
        w = ref_scram5(w ^ i, params)
        words.append(w)
    assert expand_message_key(mk, params) == b"".join(x.to_bytes(4, "big") for x in words)
    batch = expand_message_key(np.array([mk], np.uint32), params)
    assert batch[0].tolist() == words


def test_session_key_xor_main_is_independent_of_main(params):
    a = derive_session_key(99, MainKey(b"\x01" * 32), params).value
    b = derive_session_key(99, MainKey(b"\x80" * 32), params).value
    exp = expand_message_key(99, params)
    assert bytes(x ^ 0x01 for x in a) == exp
    assert bytes(x ^ 0x80 for x in b) == exp


def test_zero_main_key_rejected():
    with pytest.raises(ValueError):
        MainKey(bytes(32))


def test_sboxes4_properties(params):
    assert len(set(params.sboxes4)) == 8
    for s in params.sboxes4:
        assert is_bijection(s, 16)
        assert differential_uniformity(s) == 4
        assert linearity(s) == 8
        assert not has_single_bit_transition(s)


def test_pbox_is_affine_full_cycle(params):
    assert params.pbox == tuple((5 * i + 1) % 32 for i in range(32))
    x, seen = 0, set()
    for _ in range(32):
        seen.add(x)
        x = params.pbox[x]
    assert len(seen) == 32


def test_spn_file_round_trip(tmp_path, params):
    write_spn_file(tmp_path / "spn.txt", params)
    assert read_spn_file(tmp_path / "spn.txt") == params


def test_message_keys_distinct_and_counted():
    s = MessageKeyState(0x1234)
    a, b = s.next_message_key(), s.next_message_key()
    assert a != b and s.counter == 2


def test_message_key_resume_from_counter():
    s = MessageKeyState(0xCAFE)
    keys = [s.next_message_key() for _ in range(10)]
    t = MessageKeyState(0xCAFE, counter=7)
    assert t.next_message_key() == keys[7]


def test_surrogate_register_full_period():
    poly = fixtures.toy_polys()[fixtures.SURROGATE_MK_DEGREE]
    s = MessageKeyState(1, poly=poly)
    keys = [s.next_message_key() for _ in range(255)]
    assert len(set(keys)) == 255 and 0 not in keys
    assert keys[-1] == 1


def test_zero_seed_rejected():
    with pytest.raises(ValueError):
        MessageKeyState(0)


def test_rekey_required_at_exhaustion():
    s = MessageKeyState(5, counter=MAX_MESSAGE_KEYS - 1)
    s.next_message_key()
    with pytest.raises(RekeyRequired):
        s.next_message_key()


def test_key_file_round_trip():
    kf = KeyFile(KAT_MAIN, 0xABCDEF01, 17)
    text = kf.serialize()
    assert KeyFile.parse(text).serialize() == text
    assert text.splitlines()[1] == "mkseed=abcdef01"


@pytest.mark.parametrize(
    "text",
    [
        "",
        "mainkey=00\nmkseed=00000001\nmkcounter=0\n",
        f"mainkey={'11' * 32}\nmkseed=00000000\nmkcounter=0\n",
        f"mainkey={'11' * 32}\nmkseed=00000001\nmkcounter=-1\n",
    ],
)
def test_key_file_rejects_malformed(text):
    with pytest.raises(ValueError):
        KeyFile.parse(text)
