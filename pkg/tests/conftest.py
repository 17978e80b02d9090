import numpy as np
import pytest

from doptomo import Scatterer, SceneConfig, synthesize_trace

PI = np.pi


def scene1(P=4096):
    return SceneConfig(
        6e9, PI, 60.0,
        [Scatterer.from_degrees(3.0, 130.0, 0.0, 2.0),
         Scatterer.from_degrees(2.0, 60.0, 0.0, 1.0),
         Scatterer.from_degrees(1.5, 300.0, 0.0, 3.0)],
        sample_count=P,
    )


def scene2(P=1024):
    return SceneConfig(6e8, PI, 60.0, [Scatterer.from_degrees(1.5, 300.0, 0.0, 3.0)], sample_count=P)


@pytest.fixture(scope="session")
def cfg1():
    return scene1()


@pytest.fixture(scope="session")
def trace1(cfg1):
    return synthesize_trace(cfg1)


@pytest.fixture(scope="session")
def cfg2():
    return scene2()


@pytest.fixture(scope="session")
def trace2(cfg2):
    return synthesize_trace(cfg2)


@pytest.fixture
def rng():
    return np.random.default_rng(1234)


def random_trace(rng, P=256, carrier=6e8):
    cfg = SceneConfig(carrier, PI, 60.0, (), sample_count=P)
    s = rng.standard_normal(P) + 1j * rng.standard_normal(P)
    return synthesize_trace(cfg).with_samples(s)
