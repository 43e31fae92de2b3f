from pathlib import Path

import pytest

from hrlopt import presets
from hrlopt.harness import read_config

CONFIG_DIR = Path(__file__).resolve().parent.parent / "configs"


@pytest.mark.parametrize("filename,builder", [
    ("table1_h001_a4.cfg", lambda: presets.table1_cell(0.01, 4.0)),
    ("table3_ahigh4.cfg", lambda: presets.table3(4.0)),
    ("figure2_a1.cfg", lambda: presets.figure2(1.0)),
    ("table2_n10.cfg", lambda: presets.table2(10, 4.0)),
])
def test_config_files_match_presets(filename, builder):
    assert read_config(CONFIG_DIR / filename) == builder()


def test_table2_requires_divisor():
    with pytest.raises(ValueError, match="does not divide"):
        presets.table2(3, 4.0)


def test_table2_effort_is_fixed():
    for n in (1, 10, 100, 1000):
        cfg = presets.table2(n, 12.0)
        assert cfg.n * cfg.k == 140_000
        assert cfg.m == 20
