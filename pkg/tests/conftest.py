"""Shared fixtures: the two bundled device configurations and a small
truncation variant for cheap propagation tests."""

from dataclasses import replace
from importlib import resources

import pytest

from fluxgate.config import load_config


def _bundled(name):
    return load_config(str(resources.files("fluxgate.data") / name))


@pytest.fixture(scope="session")
def cfg500_path():
    return str(resources.files("fluxgate.data") / "set500.cfg")


@pytest.fixture(scope="session")
def rc500():
    return _bundled("set500.cfg")


@pytest.fixture(scope="session")
def rc300():
    return _bundled("set300.cfg")


@pytest.fixture(scope="session")
def params500(rc500):
    return rc500.params


@pytest.fixture(scope="session")
def params300(rc300):
    return rc300.params


@pytest.fixture(scope="session")
def params_small(params500):
    # Minimum legal truncation: 100-dim instead of 150-dim.
    return replace(params500, n_flux_levels=5, n_coupler_levels=4)
