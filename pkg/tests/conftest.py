import sys
from pathlib import Path

import numpy as np
import pytest

sys.path.insert(0, str(Path(__file__).parent))

from twinview.dataio import make_blobs, prepare_split  # noqa: E402

DATA = Path(__file__).resolve().parent.parent / "data"

# Filled by test_acceptance; echoed at the end of the run.
ACCEPTANCE_LINES = []


@pytest.fixture(scope="session")
def data_dir():
    return DATA


@pytest.fixture(scope="session")
def blob_prepared():
    """Fixed-seed N=200 two-blob dataset split 70:30 with a PCA second view."""
    return prepare_split(make_blobs(200, seed=0), seed=0)


@pytest.fixture
def rng():
    return np.random.default_rng(12345)


def pytest_terminal_summary(terminalreporter):
    if ACCEPTANCE_LINES:
        terminalreporter.section("acceptance criteria")
        for line in ACCEPTANCE_LINES:
            terminalreporter.write_line(line)


@pytest.fixture(scope="session")
def blob_default_search(blob_prepared):
    """Default-grid 5-fold search for both models on the blob fixture (seed 1 folds)."""
    from twinview.evaluation import grid_search

    return {kind: grid_search(blob_prepared.train, kind, seed=1) for kind in ("tmvrkm", "mvrkm")}
