import sys
from pathlib import Path

import pytest

sys.path.insert(0, str(Path(__file__).parent))

from storydance.elements import default_region_map
from storydance.library import Library
from storydance.reference import build_reference_library, canonical_skeleton


@pytest.fixture(scope="session")
def library_dir(tmp_path_factory) -> Path:
    d = tmp_path_factory.mktemp("reference_library")
    build_reference_library(d)
    return d


@pytest.fixture(scope="session")
def library(library_dir) -> Library:
    return Library(library_dir / "manifest.json")


@pytest.fixture(scope="session")
def skeleton():
    return canonical_skeleton()


@pytest.fixture(scope="session")
def regions(skeleton):
    return default_region_map(skeleton)
