from __future__ import annotations

import pytest

from tilelocal.systems import load_catalog


@pytest.fixture(scope="session")
def pd():
    """Period doubling: a -> ab, b -> aa."""
    return load_catalog("period_doubling")


@pytest.fixture(scope="session")
def chair():
    """Chair-style 2x2 arrow substitution with C4 symmetry."""
    return load_catalog("chair")
