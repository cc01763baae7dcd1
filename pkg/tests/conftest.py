import sys
from pathlib import Path

import pytest

sys.path.insert(0, str(Path(__file__).parent))

from mutexlab import build_graph, build_protocol


@pytest.fixture(scope="session")
def protos():
    cache = {}

    def get(pid, n):
        key = (pid, n)
        if key not in cache:
            cache[key] = build_protocol(pid, n)
        return cache[key]

    return get


@pytest.fixture(scope="session")
def graphs(protos):
    cache = {}

    def get(pid, n, transitions=True):
        key = (pid, n, transitions)
        if key not in cache:
            cache[key] = build_graph(protos(pid, n), transitions=transitions)
        return cache[key]

    return get


DATA_DIR = Path(__file__).parent / "data"


@pytest.fixture(scope="session")
def data_dir():
    return DATA_DIR
