import sys
import xml.etree.ElementTree as ET
from pathlib import Path

import numpy as np
import pytest

# Add repo root to path so tests can import config and src
sys.path.insert(0, str(Path(__file__).parent.parent))

from src import synth  # noqa: E402


@pytest.fixture
def rng():
    return np.random.default_rng(12345)


@pytest.fixture
def exp1_file(tmp_path):
    """Experiment-1 dataset written as a plain event file; returns (path, dataset)."""
    dataset = synth.gen_experiment1(seed=3)
    path, _ = synth.write_dataset(dataset, tmp_path / "exp1" / "events.txt")
    return path, dataset


def _count_markers(group):
    # Large scatters are written as <use> references to one marker path,
    # small ones as one <path> per point
    uses = [el for el in group.iter() if el.tag.endswith("}use")]
    if uses:
        return len(uses)
    return sum(1 for el in group.iter() if el.tag.endswith("}path"))


@pytest.fixture
def svg_markers():
    """Parse an SVG string into {group id: marker count} for the cluster and noise groups."""
    def count(svg):
        root = ET.fromstring(svg.encode("utf-8"))
        return {
            el.get("id"): _count_markers(el) for el in root.iter()
            if el.get("id", "").startswith("cluster-") or el.get("id") == "noise"
        }
    return count


def pytest_terminal_summary(terminalreporter):
    slow = [item for item in terminalreporter.stats.get("deselected", [])
            if item.get_closest_marker("slow")]
    if slow:
        terminalreporter.write_line(
            f"{len(slow)} slow experiment reproductions deselected; run them with pytest -m slow"
        )
