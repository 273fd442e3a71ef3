import csv
import io

import numpy as np
import pytest

from mdrml import classifiers, metrics, tuning
from mdrml.data_model import clean_csv
from mdrml.errors import ConfigError
from mdrml.rng import ALGORITHM
from mdrml.synth import SynthConfig, generate

from .conftest import synth_dataset


def test_same_seed_identical_bytes(schema):
    a, ta = generate(SynthConfig(n_records=300, seed=11), schema)
    b, tb = generate(SynthConfig(n_records=300, seed=11), schema)
    assert a == b and ta == tb
    assert ta["algorithm"] == ALGORITHM


def test_disjoint_seeds_differ(schema):
    a, _ = generate(SynthConfig(n_records=300, seed=1), schema)
    b, _ = generate(SynthConfig(n_records=300, seed=2), schema)
    ra = list(csv.reader(io.StringIO(a.decode())))[1:]
    rb = list(csv.reader(io.StringIO(b.decode())))[1:]
    cells = [(x, y) for r1, r2 in zip(ra, rb) for x, y in zip(r1[1:], r2[1:])]
    assert np.mean([x != y for x, y in cells]) >= 0.01


@pytest.mark.parametrize("seed", [0, 1, 2])
def test_cleans_without_drops(schema, seed):
    raw, _ = generate(SynthConfig(n_records=1000, seed=seed), schema)
    records, report = clean_csv(raw, schema)
    assert report.rows_in == report.rows_out == 1000 and not report.dropped


def test_noise_still_cleans(schema):
    raw, _ = generate(SynthConfig(n_records=500, seed=3, noise_rate=0.2), schema)
    assert clean_csv(raw, schema)[1].rows_out == 500


def test_missing_rate_drops_rows(schema):
    raw, _ = generate(SynthConfig(n_records=500, seed=3, missing_rate=0.05), schema)
    report = clean_csv(raw, schema)[1]
    assert report.rows_out < 500 and report.dropped["missing-value"] == 500 - report.rows_out


def test_prevalence_monte_carlo(schema):
    _, truth = generate(SynthConfig(n_records=10_000, seed=5, mdr_prevalence=0.35), schema)
    assert abs(np.mean(truth["labels"]) - 0.35) <= 0.02


def test_zero_signal_gives_chance_auc():
    ds, truth, _ = synth_dataset(n=4000, seed=9, signal_strength=0.0)
    y = np.asarray(truth["labels"])
    sp = tuning.stratified_split(y, 0.25, seed=0)
    model = classifiers.fit(classifiers.ClassifierSpec("gbdt_level_wise", {"n_rounds": 50}),
                            ds.X[sp.train], y[sp.train])
    auc = metrics.roc_auc(y[sp.test], classifiers.predict_proba(model, ds.X[sp.test])).auc
    assert abs(auc - 0.5) <= 0.05


def test_strong_signal_family_rule_tracks_truth():
    ds, truth, _ = synth_dataset(n=2000, seed=0)
    assert np.mean(ds.y == np.asarray(truth["labels"])) > 0.9


@pytest.mark.parametrize("kw", [
    {"n_records": 0}, {"n_records": 10, "mdr_prevalence": 1.5}, {"n_records": 10, "noise_rate": -0.1},
    {"n_records": 10, "signal_strength": -1.0}, {"n_records": 10, "taxa_mix": (1.0,)},
    {"n_records": 10, "taxa_mix": (0.5,) * 9},
])
def test_invalid_config(schema, kw):
    with pytest.raises(ConfigError):
        generate(SynthConfig(**kw), schema)


def test_taxa_mix_respected(schema):
    mix = (1.0,) + (0.0,) * 8
    raw, _ = generate(SynthConfig(n_records=200, seed=1, taxa_mix=mix), schema)
    records, _ = clean_csv(raw, schema)
    assert {r.species for r in records} == {schema.canonical_taxa[0]}
