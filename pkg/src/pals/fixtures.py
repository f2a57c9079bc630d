"""Shipped public constants and how they were derived.

Every constant is reproducible with ``regenerate()``:

* feedback polynomials: ``find_dense_primitive(L, L // 2, factors[L], "PALS/poly/<L>")``
* 4-bit S-boxes: stream ``PALS/sbox4``, seeded bit-permutation and XOR variants of the PRESENT S-box
* 8-bit S-boxes: stream ``PALS/sbox8``, four Fisher-Yates shuffles
* filter functions F_i: ``construct_resilient(9, 2, 6, "PALS/F/<i>")``
* P-box: i -> 5i + 1 mod 32
"""
from __future__ import annotations

import json
from functools import lru_cache
from pathlib import Path

import numpy as np

from .boolefn import TruthTable, certify, construct_resilient, read_table, write_table
from .galois import (
    FactorSet,
    FeedbackPoly,
    find_dense_primitive,
    read_factor_file,
    read_poly_file,
    write_poly_file,
)
from .ivgen import IvGenerator
from .keyschedule import SpnParams, generate_spn_params, read_spn_file, write_spn_file
from .keystream import PRODUCTION_LENGTHS, TOY_LENGTHS, CipherSuite, g_table, h_table
from .sbox import generate_sboxes8, read_sbox8_file, write_sbox8_file

DATA_DIR = Path(__file__).parent / "data"
IV_DEGREE = 256
TOY_IV_DEGREE = 16
SURROGATE_MK_DEGREE = 8
TOY_DEGREES = tuple(sorted(set(TOY_LENGTHS) | {TOY_IV_DEGREE, SURROGATE_MK_DEGREE}))


class FixtureError(RuntimeError):
    pass


def poly_seed(L: int) -> str:
    return f"PALS/poly/{L}"


@lru_cache(maxsize=None)
def factor_table(data_dir: Path = DATA_DIR) -> dict[int, FactorSet]:
    return read_factor_file(data_dir / "factors.txt")


@lru_cache(maxsize=None)
def production_polys(data_dir: Path = DATA_DIR) -> dict[int, FeedbackPoly]:
    return {p.degree: p for p in read_poly_file(data_dir / "polys.txt")}


@lru_cache(maxsize=None)
def toy_polys(data_dir: Path = DATA_DIR) -> dict[int, FeedbackPoly]:
    return {p.degree: p for p in read_poly_file(data_dir / "toy_polys.txt")}


@lru_cache(maxsize=None)
def spn_params(data_dir: Path = DATA_DIR) -> SpnParams:
    return read_spn_file(data_dir / "spn.txt")


@lru_cache(maxsize=None)
def sboxes8(data_dir: Path = DATA_DIR) -> np.ndarray:
    arr = np.array(read_sbox8_file(data_dir / "sbox8.txt"), dtype=np.uint8)
    arr.setflags(write=False)
    return arr


@lru_cache(maxsize=None)
def f_tables(data_dir: Path = DATA_DIR) -> tuple[TruthTable, ...]:
    """Load F_1..F_8 and re-certify each one."""
    tables = []
    for i in range(1, 9):
        t = read_table(data_dir / f"f{i}.tt")
        rep = certify(t)
        if not (rep.balanced and rep.ci_order >= 2 and rep.algebraic_degree == 6 and rep.nonlinearity >= 224):
            raise FixtureError(f"f{i}.tt fails certification: {rep}")
        tables.append(t)
    return tuple(tables)


@lru_cache(maxsize=None)
def production_suite(data_dir: Path = DATA_DIR) -> CipherSuite:
    polys = production_polys(data_dir)
    return CipherSuite(
        tuple(polys[L] for L in PRODUCTION_LENGTHS),
        sboxes8(data_dir),
        f_tables(data_dir),
        read_table(data_dir / "h.tt"),
    )


@lru_cache(maxsize=None)
def toy_suite(data_dir: Path = DATA_DIR) -> CipherSuite:
    polys = toy_polys(data_dir)
    return CipherSuite(
        tuple(polys[L] for L in TOY_LENGTHS),
        sboxes8(data_dir),
        f_tables(data_dir),
        read_table(data_dir / "h.tt"),
    )


@lru_cache(maxsize=None)
def iv_generator(data_dir: Path = DATA_DIR) -> IvGenerator:
    return IvGenerator(production_polys(data_dir)[IV_DEGREE], sboxes8(data_dir))


def toy_iv_generator(data_dir: Path = DATA_DIR, sboxes: np.ndarray | None = None) -> IvGenerator:
    """16-stage variant with selector stages 8, 9 and a 2-byte discard."""
    return IvGenerator(
        toy_polys(data_dir)[TOY_IV_DEGREE],
        sboxes8(data_dir) if sboxes is None else sboxes,
        selector=(8, 9),
        discard_bytes=2,
        emit_bytes=16,
    )


def regenerate(out_dir: str | Path, factors: dict[int, FactorSet] | None = None) -> dict:
    """Rebuild every fixture file into ``out_dir``; returns the manifest."""
    out = Path(out_dir)
    out.mkdir(parents=True, exist_ok=True)
    factors = factors or factor_table()
    prod = [find_dense_primitive(L, L // 2, factors[L], poly_seed(L)) for L in (*PRODUCTION_LENGTHS, IV_DEGREE)]
    write_poly_file(out / "polys.txt", prod)
    toy = [find_dense_primitive(L, L // 2, factors[L], poly_seed(L)) for L in TOY_DEGREES]
    write_poly_file(out / "toy_polys.txt", toy)
    write_spn_file(out / "spn.txt", generate_spn_params())
    write_sbox8_file(out / "sbox8.txt", generate_sboxes8())
    manifest = {}
    tables = {f"f{i}": construct_resilient(9, 2, 6, f"PALS/F/{i}") for i in range(1, 9)}
    tables["h"] = h_table()
    tables["g"] = g_table()
    for name, t in tables.items():
        write_table(out / f"{name}.tt", t)
        manifest[name] = certify(t).as_dict()
    (out / "tables.json").write_text(json.dumps(manifest, indent=2, sort_keys=True) + "\n")
    return manifest


if __name__ == "__main__":
    import sys

    regenerate(sys.argv[1] if len(sys.argv) > 1 else DATA_DIR)
