import json
import pathlib
import sys
import time

import pytest

ROOT = pathlib.Path(__file__).resolve().parents[1]
sys.path.insert(0, str(ROOT / "src"))
sys.path.insert(0, str(ROOT / "tests"))

from qlskit import bench  # noqa: E402


def _run(config_name):
    cfg = bench.parse_config(str(ROOT / "configs" / config_name))
    t0 = time.perf_counter()
    records = bench.run_suite(cfg)
    return records, time.perf_counter() - t0


@pytest.fixture(scope="session")
def table_suite():
    """Records and wall time for the ten-row comparison harness."""
    return _run("table.json")


@pytest.fixture(scope="session")
def set_p_suite():
    """Records and wall time for the full benchmark set (8 solvers)."""
    return _run("set_p.json")


@pytest.fixture(scope="session")
def table_config():
    return json.loads((ROOT / "configs" / "table.json").read_text())
