"""Shared fixtures, chiefly the deep size-distribution corpus.

The tail tests need far more cells than a per-test sampler can afford, so
they share one persisted corpus. Its parameters match the Pareto-marks
acceptance run exactly; whichever runs first pays the build cost once and
the file under data/acceptance/ is reused ever after.
"""

import os

import pytest

from hypermosaic import ProcessParams
from hypermosaic.cli import load_or_build_corpus

REPO_ROOT = os.path.dirname(os.path.dirname(os.path.abspath(__file__)))
DATA_DIR = os.path.join(REPO_ROOT, "data", "acceptance")


@pytest.fixture(scope="session")
def corpus300k():
    path = os.path.join(DATA_DIR, "size_corpus_d2_gamma1.csv")
    return load_or_build_corpus(ProcessParams(1.0, 2, 106), path, 300_000)
