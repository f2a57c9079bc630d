import numpy as np
import pytest
from scipy.stats import chisquare

from pals import fixtures
from pals.analysis import avalanche_matrix, iv_fn
from pals.bitutil import bytes_to_bits
from pals.ivgen import IV_BITS, IvGenerator, SeedError, generate_iv
from pals.keyschedule import SessionKey

IDENTITY = np.tile(np.arange(256, dtype=np.uint8), (4, 1))


def sim_iv(seed_bits, poly, sboxes, selector, discard, emit, trace=None):
    """Stage-list simulation: stage 1 is index 0, feedback enters there."""
    L = poly.degree
    taps = [e - 1 for e in poly.taps if e > 0]
    reg = [int(b) for b in seed_bits]
    assert len(reg) == L
    out = []
    for clk in range(discard + emit):
        sel = 2 * reg[selector[0] - 1] + reg[selector[1] - 1]
        if trace is not None:
            trace.append(sel)
        fb = []
        for _ in range(8):
            bit = 0
            for t in taps:
                bit ^= reg[t]
            fb.append(bit)
            reg = [bit] + reg[:-1]
        t_byte = 0
        for b in fb:
            t_byte = (t_byte << 1) | b
        s = int(sboxes[sel][t_byte])
        # shifting s in MSB first leaves its MSB at stage 8, LSB at stage 1
        reg = [(s >> k) & 1 for k in range(8)] + reg[8:]
        if clk >= discard:
            out.append(s)
    return out


@pytest.fixture(scope="module")
def gen():
    return fixtures.iv_generator()


def test_iv_length(gen):
    sk = SessionKey(bytes(range(32)))
    assert len(generate_iv(sk, gen).bits) == IV_BITS == 1600


def test_iv_deterministic(gen):
    sk = SessionKey(b"\x5a" * 32)
    assert np.array_equal(generate_iv(sk, gen).bits, generate_iv(sk, gen).bits)


def test_iv_matches_simulator(gen):
    rng = np.random.default_rng(11)
    for _ in range(3):
        raw = rng.integers(0, 256, 32, dtype=np.uint8).tobytes()
        expected = sim_iv(bytes_to_bits(raw), gen.poly, gen.sboxes8, (128, 129), 40, 200)
        got = generate_iv(SessionKey(raw), gen).bits
        assert np.array_equal(got, np.unpackbits(np.array(expected, np.uint8)))


def test_toy_iv_matches_simulator():
    g = fixtures.toy_iv_generator()
    seeds = np.random.default_rng(5).integers(0, 2, (20, 16), dtype=np.uint8)
    seeds[0] = 0
    seeds[0, 3] = 1
    out = g.run(seeds)
    for row, seed in zip(out, seeds):
        assert row.tolist() == sim_iv(seed, g.poly, g.sboxes8, (8, 9), 2, 16)


def test_zero_session_key_rejected(gen):
    with pytest.raises(SeedError):
        generate_iv(SessionKey(bytes(32)), gen)


def test_240_byte_clocks(gen):
    trace = []
    sim_iv(bytes_to_bits(b"\x01" * 32), gen.poly, gen.sboxes8, (128, 129), 40, 200, trace)
    assert len(trace) == 240


def test_selector_frequencies(gen):
    trace = []
    seed = bytes_to_bits(bytes(range(7, 39)))
    sim_iv(seed, gen.poly, gen.sboxes8, (128, 129), 0, 10_000, trace)
    counts = np.bincount(trace, minlength=4)
    assert np.all(np.abs(counts / 10_000 - 0.25) <= 0.02)
    assert chisquare(counts).pvalue >= 0.01


def test_superposition_holds_only_without_sboxes():
    rng = np.random.default_rng(9)
    linear = fixtures.toy_iv_generator(sboxes=IDENTITY)
    real = fixtures.toy_iv_generator()
    broken = 0
    for _ in range(20):
        a, b, c = rng.integers(0, 2, (3, 16), dtype=np.uint8)
        d = a ^ b ^ c
        if not (a.any() and b.any() and c.any() and d.any()):
            continue
        lin = linear.run_bits(np.stack([a, b, c, d]))
        assert np.array_equal(lin[0] ^ lin[1] ^ lin[2], lin[3])
        nl = real.run_bits(np.stack([a, b, c, d]))
        broken += not np.array_equal(nl[0] ^ nl[1] ^ nl[2], nl[3])
    assert broken > 0


def test_diffusion_column_means(gen):
    m = avalanche_matrix(iv_fn(gen), 256, IV_BITS, 500)
    col = m.mean(axis=0)
    assert col.min() >= 0.45 and col.max() <= 0.55
    assert 0.49 <= m.mean() <= 0.51


def test_generator_validates_shapes(gen):
    with pytest.raises(ValueError):
        IvGenerator(gen.poly, gen.sboxes8[:3])
    with pytest.raises(ValueError):
        gen.run(np.ones((1, 10), np.uint8))
