import functools

import numpy as np
import pytest
from hypothesis import HealthCheck, settings

from mdrml.data_model import clean_csv, load_schema
from mdrml.features import encode_dataset, load_family_map
from mdrml.synth import SynthConfig, generate

settings.register_profile("default", deadline=None, max_examples=60,
                          suppress_health_check=[HealthCheck.too_slow])
settings.load_profile("default")


@functools.lru_cache(maxsize=None)
def synth_dataset(n=2000, seed=0, **kw):
    """Encoded synthetic dataset plus generator truth (cached per arguments)."""
    schema = load_schema()
    raw, truth = generate(SynthConfig(n_records=n, seed=seed, **kw), schema)
    records, report = clean_csv(raw, schema)
    ds = encode_dataset(records, load_family_map(), schema)
    return ds, truth, report


def xor_data(n=400, seed=0, noise=0.0):
    """Two uniform features on [-1, 1]; label is the sign of their product."""
    rng = np.random.default_rng(seed)
    X = rng.uniform(-1, 1, size=(n, 2))
    y = (X[:, 0] * X[:, 1] > 0).astype(np.int64)
    if noise:
        flip = rng.random(n) < noise
        y[flip] = 1 - y[flip]
    return X, y


@pytest.fixture(scope="session")
def schema():
    return load_schema()


@pytest.fixture(scope="session")
def fmap():
    return load_family_map()


def pytest_terminal_summary(terminalreporter):
    from . import test_acceptance

    if test_acceptance.RESULTS:
        terminalreporter.section("acceptance criteria")
        for number in sorted(test_acceptance.RESULTS):
            terminalreporter.write_line(test_acceptance.RESULTS[number])
