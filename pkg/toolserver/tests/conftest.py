from pathlib import Path

import pytest

from cxr_tool_server import FixtureStore, ServerThread

GOLDEN = Path(__file__).resolve().parents[2] / "tests" / "data" / "golden"

FIXTURES = """\
# protocol test fixtures
s1\t__size__\t512,512
s1\tendotracheal tube\t100.0,200.0,100.0,200.0\t0.98
s1\tcarina\t100.0,260.0,100.0,260.0\t0.99
s1\tnodule\t10.0,10.0,50.0,30.0\t0.75
s1\tleft lung\tMASK\t512,512\t51400 30 482 30 482 30 482 30 482 30 208666
s2\tcarina\t40.0,40.0,40.0,40.0\t0.9
"""


@pytest.fixture(scope="session")
def golden_dir() -> Path:
    return GOLDEN


@pytest.fixture(scope="module")
def fixture_path(tmp_path_factory) -> Path:
    path = tmp_path_factory.mktemp("fixtures") / "fixtures.tsv"
    path.write_text(FIXTURES, encoding="utf-8")
    return path


@pytest.fixture(scope="module")
def server(fixture_path):
    with ServerThread(FixtureStore(fixture_path)) as running:
        yield running
