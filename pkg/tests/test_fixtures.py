import filecmp

import numpy as np

from pals import fixtures
from pals.sbox import is_bijection


def test_regenerate_reproduces_shipped_files(tmp_path):
    fixtures.regenerate(tmp_path)
    for path in sorted(tmp_path.iterdir()):
        assert filecmp.cmp(path, fixtures.DATA_DIR / path.name, shallow=False), path.name


def test_factor_table_covers_every_degree():
    table = fixtures.factor_table()
    needed = set(fixtures.PRODUCTION_LENGTHS) | set(fixtures.TOY_DEGREES) | {fixtures.IV_DEGREE, 32}
    assert needed <= set(table)
    for f in table.values():
        f.validate()


def test_sboxes8_are_distinct_bijections():
    sb = fixtures.sboxes8()
    assert sb.shape == (4, 256)
    assert all(is_bijection(s, 256) for s in sb)
    assert len({s.tobytes() for s in sb}) == 4
    assert not sb.flags.writeable


def test_toy_suite_shape():
    suite = fixtures.toy_suite()
    assert suite.lengths == fixtures.TOY_LENGTHS
    assert np.array_equal(suite.sboxes8, fixtures.production_suite().sboxes8)
