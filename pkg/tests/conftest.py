import numpy as np
import pytest

from oscillant import catalog
from oscillant.experiments import Analysis, analyze
from oscillant.resonance import Phase

_cache = {}


def _memo(key, builder):
    if key not in _cache:
        _cache[key] = builder()
    return _cache[key]


@pytest.fixture(scope="session")
def kg_analysis() -> Analysis:
    return _memo("kg-equal", lambda: analyze(catalog.kg_equal()))


@pytest.fixture(scope="session")
def kg_diff_analysis():
    def get(iota):
        return _memo(("kg-diff", iota), lambda: analyze(catalog.kg_diff(iota=iota)))
    return get


@pytest.fixture(scope="session")
def three_wave_analysis():
    def get(b=(0.0, 1.0, 1.0), c=(1.0, 0.5, -0.5)):
        key = ("three-wave", tuple(b), tuple(c))
        return _memo(key, lambda: analyze(catalog.three_wave(c=c, b=b),
                                          phase=Phase(0.0, [0.0]),
                                          window=(-8.0, 8.0), grid_n=1024))
    return get


@pytest.fixture(scope="session")
def kg_branches(kg_analysis):
    return catalog.kg_branch_map(kg_analysis.spec, kg_analysis.field)


def assert_close(a, b, tol, msg=""):
    a, b = np.asarray(a), np.asarray(b)
    err = np.max(np.abs(a - b))
    assert err <= tol, f"{msg}: |diff| = {err:.3e} > {tol:.1e}"
