import os
import sys
import tempfile

ROOT = os.path.dirname(os.path.dirname(os.path.abspath(__file__)))
if ROOT not in sys.path:
    sys.path.insert(0, ROOT)

# before config is imported anywhere
os.environ.setdefault("ENABLE_CLEANUP_SCHEDULER", "false")
os.environ.setdefault("RESULTS_FOLDER", tempfile.mkdtemp(prefix="workbench-results-"))
os.environ.setdefault("WORKBENCH_SEED", "0")

import pytest

from services.brooms import from_out_regular
from services.digraph import build, complete, cycle


@pytest.fixture
def path3():
    return build(3, [(0, 1), (1, 2)])


@pytest.fixture
def sink_tree():
    """Two sources pointing at one sink"""
    return build(3, [(0, 2), (1, 2)])


@pytest.fixture
def out_star():
    return build(3, [(0, 1), (0, 2)])


@pytest.fixture
def k3():
    return complete(3)


@pytest.fixture
def c3():
    return cycle(3)


@pytest.fixture
def k3_brooms():
    """Complete digraph on 3 vertices read as a (2,2)-broom digraph"""
    return from_out_regular(complete(3), 2)


@pytest.fixture
def subdivided_broom_arcs():
    return [(0, 1), (1, 2), (2, 3), (2, 4), (0, 5), (5, 6), (5, 7)]
