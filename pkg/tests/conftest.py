import os
import sys

import pytest

sys.path.append(os.path.abspath(os.path.join(os.path.dirname(__file__), '../')))
sys.path.append(os.path.abspath(os.path.dirname(__file__)))
from builders import mixed_graph  # noqa: E402
from src.repository.graphs import write_graph  # noqa: E402


@pytest.fixture()
def graph_file(tmp_path):
    path = tmp_path / "graph.txt"
    write_graph(mixed_graph(), path)
    return path


@pytest.fixture()
def out_dir(tmp_path, monkeypatch):
    monkeypatch.chdir(tmp_path)
    return tmp_path
