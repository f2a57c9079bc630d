"""``pals`` command line: keygen, encrypt, decrypt, keystream, audit.

Exit status
  0  success
  2  usage error (bad option, n below the audit minimum, bad hex)
  3  format error (bad key file, bad magic or version)
  4  message keys exhausted, rekey required
  5  I/O error (missing or unwritable file)
  6  truncated ciphertext
"""
from __future__ import annotations

import fcntl
import os
import secrets
import sys
from contextlib import contextmanager
from pathlib import Path

import click
import numpy as np

from . import analysis, cipher, fixtures
from .cipherfile import CipherFile, FormatError, TruncatedFile
from .keyschedule import KeyFile, MainKey, RekeyRequired
from .keystream import PRODUCTION_LENGTHS

EXIT_USAGE = 2
EXIT_FORMAT = 3
EXIT_REKEY = 4
EXIT_IO = 5
EXIT_TRUNCATED = 6

AUDIT_LC_PREFIX = 4096
AUDIT_AVALANCHE_TRIALS = 2000
KEYSPACE_BOUND = 477
EPILOG = (
    "Exit status: 0 ok, 2 usage, 3 format, 4 rekey required, 5 I/O, 6 truncated ciphertext."
)


class CliFailure(click.ClickException):
    def __init__(self, message: str, code: int):
        super().__init__(message)
        self.exit_code = code


def _fail(message: str, code: int):
    raise CliFailure(message, code)


def _read_key(path: Path) -> KeyFile:
    try:
        text = path.read_text()
    except OSError as e:
        _fail(f"cannot read key file: {e.strerror}", EXIT_IO)
    try:
        return KeyFile.parse(text)
    except ValueError as e:
        _fail(f"bad key file: {e}", EXIT_FORMAT)


def _read_bytes(path: Path) -> bytes:
    try:
        return path.read_bytes()
    except OSError as e:
        _fail(f"cannot read {path}: {e.strerror}", EXIT_IO)


def _write_bytes(path: Path, data: bytes) -> None:
    try:
        path.write_bytes(data)
    except OSError as e:
        _fail(f"cannot write {path}: {e.strerror}", EXIT_IO)


@contextmanager
def _locked(path: Path):
    """Exclusive lock on the key file for a read-modify-write of the counter."""
    try:
        fh = open(path, "r+")
    except OSError as e:
        _fail(f"cannot open key file: {e.strerror}", EXIT_IO)
    with fh:
        fcntl.flock(fh, fcntl.LOCK_EX)
        try:
            yield fh
        finally:
            fcntl.flock(fh, fcntl.LOCK_UN)


def _draw_message_key(path: Path) -> tuple[MainKey, int]:
    """Issue the next message key and persist the advanced counter."""
    with _locked(path) as fh:
        try:
            kf = KeyFile.parse(fh.read())
        except ValueError as e:
            _fail(f"bad key file: {e}", EXIT_FORMAT)
        state = kf.message_keys()
        try:
            mk = state.next_message_key()
        except RekeyRequired:
            _fail("message keys exhausted: rekey required (run keygen)", EXIT_REKEY)
        text = KeyFile(kf.main_key, kf.mk_seed, state.counter).serialize()
        fh.seek(0)
        fh.truncate()
        fh.write(text)
        fh.flush()
        os.fsync(fh.fileno())
    return kf.main_key, mk


def _peek_message_key(kf: KeyFile) -> int:
    try:
        return kf.message_keys().next_message_key()
    except RekeyRequired:
        _fail("message keys exhausted: rekey required (run keygen)", EXIT_REKEY)


def _parse_message_key(text: str) -> int:
    try:
        value = int(text, 16)
    except ValueError:
        _fail(f"message key must be hex, got {text!r}", EXIT_USAGE)
    if not 0 <= value < 2**32:
        _fail("message key must fit in 32 bits", EXIT_USAGE)
    return value


key_option = click.option(
    "--key", "key_path", required=True, type=click.Path(path_type=Path), help="Key file."
)


@click.group(epilog=EPILOG)
def main():
    """PALS clock-controlled stream cipher."""


@main.command(epilog=EPILOG)
@key_option
@click.option("--force", is_flag=True, help="Overwrite an existing key file.")
def keygen(key_path: Path, force: bool):
    """Write a fresh key file (random main key and message-key seed)."""
    if key_path.exists() and not force:
        _fail(f"{key_path} exists; use --force to overwrite", EXIT_USAGE)
    main_key = bytes(32)
    while not any(main_key):
        main_key = secrets.token_bytes(32)
    seed = 0
    while not seed:
        seed = secrets.randbits(32)
    text = KeyFile(MainKey(main_key), seed, 0).serialize()
    try:
        fd = os.open(key_path, os.O_WRONLY | os.O_CREAT | os.O_TRUNC, 0o600)
        with os.fdopen(fd, "w") as fh:
            fh.write(text)
    except OSError as e:
        _fail(f"cannot write key file: {e.strerror}", EXIT_IO)
    click.echo(f"wrote {key_path}")


@main.command(epilog=EPILOG)
@key_option
@click.argument("in_path", type=click.Path(path_type=Path))
@click.argument("out_path", type=click.Path(path_type=Path))
def encrypt(key_path: Path, in_path: Path, out_path: Path):
    """Encrypt IN_PATH under the next message key."""
    plaintext = _read_bytes(in_path)
    main_key, mk = _draw_message_key(key_path)
    payload = cipher.apply_keystream(main_key, mk, plaintext)
    _write_bytes(out_path, CipherFile(mk, payload).to_bytes())


@main.command(epilog=EPILOG)
@key_option
@click.argument("in_path", type=click.Path(path_type=Path))
@click.argument("out_path", type=click.Path(path_type=Path))
def decrypt(key_path: Path, in_path: Path, out_path: Path):
    """Decrypt a PALS ciphertext file."""
    data = _read_bytes(in_path)
    # header first: a malformed file is rejected before the key is read
    try:
        cf = CipherFile.from_bytes(data)
    except TruncatedFile as e:
        _fail(str(e), EXIT_TRUNCATED)
    except FormatError as e:
        _fail(str(e), EXIT_FORMAT)
    kf = _read_key(key_path)
    _write_bytes(out_path, cipher.apply_keystream(kf.main_key, cf.message_key, cf.payload))


@main.command(epilog=EPILOG)
@key_option
@click.option("--bits", "n_bits", required=True, type=click.IntRange(min=1), help="Number of keystream bits.")
@click.option("--message-key", "mk_hex", default=None, help="Message key (hex); default is the next unused one.")
@click.option("--format", "fmt", type=click.Choice(["hex", "bits", "raw"]), default="hex", show_default=True)
def keystream(key_path: Path, n_bits: int, mk_hex: str | None, fmt: str):
    """Dump keystream without touching the message-key counter."""
    kf = _read_key(key_path)
    mk = _peek_message_key(kf) if mk_hex is None else _parse_message_key(mk_hex)
    bits = cipher.keystream_bits(kf.main_key, mk, n_bits)
    if fmt == "bits":
        click.echo("".join(map(str, bits)))
    elif fmt == "hex":
        click.echo(np.packbits(bits).tobytes().hex())
    else:
        sys.stdout.buffer.write(np.packbits(bits).tobytes())
        sys.stdout.buffer.flush()


def audit_rows(main_key: MainKey, mk: int, n_bits: int) -> list[analysis.Verdict]:
    bits = cipher.keystream_bits(main_key, mk, n_bits)
    rows = []
    for r in analysis.randomness_suite(bits).results.values():
        rows.append(analysis.Verdict(f"{r.name}_p", r.p_value, f">= {analysis.SIGNIFICANCE}", r.passed))
    lc = analysis.berlekamp_massey(bits[:AUDIT_LC_PREFIX]).final_lc
    rows.append(analysis.Verdict(f"lc_{AUDIT_LC_PREFIX}", lc, "> 1024", lc > 1024))
    m = analysis.avalanche_matrix(analysis.scram5_fn(fixtures.spn_params()), 32, 32, AUDIT_AVALANCHE_TRIALS)
    rows.append(analysis.Verdict("scram5_avalanche_min", m.min(), ">= 0.45", m.min() >= 0.45))
    rows.append(analysis.Verdict("scram5_avalanche_max", m.max(), "<= 0.55", m.max() <= 0.55))
    ks = analysis.keyspace_log2(PRODUCTION_LENGTHS, fixtures.factor_table())
    sum_form = ks.extras["sum_form"]
    rows.append(analysis.Verdict("keyspace_log2_sum", sum_form, f"> {KEYSPACE_BOUND}", sum_form > KEYSPACE_BOUND))
    prod_form = ks.extras["product_form"]
    rows.append(analysis.Verdict("keyspace_log2_product", prod_form, f"> {KEYSPACE_BOUND}", prod_form > KEYSPACE_BOUND))
    tm = analysis.tmto_cost(sum(PRODUCTION_LENGTHS))
    rows.append(analysis.Verdict("tmto_log2_time", tm.log2_time, "[818.5, 821]", 818.5 <= tm.log2_time <= 821))
    rows.append(analysis.Verdict("tmto_log2_memory", tm.log2_memory, "[809, 812]", 809 <= tm.log2_memory <= 812))
    cube = analysis.cube_cost(163, 256)
    rows.append(analysis.Verdict("cube_log2_time", cube.log2_time, ">= 162", cube.log2_time >= 162))
    return rows


@main.command(epilog=EPILOG)
@key_option
@click.option("--bits", "n_bits", required=True, type=int, help=f"Keystream bits to test (>= {analysis.MIN_RANDOMNESS_BITS}).")
@click.option("--message-key", "mk_hex", default=None, help="Message key (hex); default is the next unused one.")
@click.option("--csv", "csv_path", type=click.Path(path_type=Path), default=None, help="Also write the report as CSV.")
def audit(key_path: Path, n_bits: int, mk_hex: str | None, csv_path: Path | None):
    """Randomness, linear complexity, avalanche and attack-cost report."""
    if n_bits < analysis.MIN_RANDOMNESS_BITS:
        _fail(f"--bits must be at least {analysis.MIN_RANDOMNESS_BITS}", EXIT_USAGE)
    kf = _read_key(key_path)
    mk = _peek_message_key(kf) if mk_hex is None else _parse_message_key(mk_hex)
    rows = audit_rows(kf.main_key, mk, n_bits)
    click.echo(f"message key {mk:08x}, {n_bits} bits")
    click.echo(analysis.format_text(rows))
    if csv_path is not None:
        _write_bytes(csv_path, analysis.format_csv(rows).encode())


if __name__ == "__main__":
    main()
