"""Seeded synthetic isolate generator.

Each record carries a latent MDR class ``c ~ Bernoulli(mdr_prevalence)`` and
a continuous propensity ``c - 0.5 + 0.25 * N(0, 1)``; every antibiotic is
resistant with probability ``sigmoid(base_j + signal_strength * propensity)``.
The latent class is the ground truth written next to the CSV.
"""
import csv
import io
from dataclasses import asdict, dataclass

import numpy as np

from .errors import ConfigError
from .rng import ALGORITHM, make_rng

AGE_MEAN, AGE_SD = 52.0, 18.0
P_MALE = 0.5
P_DIABETES, P_HYPERTENSION, P_HOSPITAL = 0.22, 0.31, 0.36
FREQ_PROBS = np.array([0.4, 0.3, 0.2, 0.1])
FREQ_LABELS = ("never", "rare", "sometimes", "often")
P_INTERMEDIATE = 0.08
PROPENSITY_SD = 0.25


@dataclass(frozen=True)
class SynthConfig:
    n_records: int
    seed: int = 0
    mdr_prevalence: float = 0.35
    signal_strength: float = 6.0
    noise_rate: float = 0.0
    taxa_mix: tuple = None
    missing_rate: float = 0.0

    def validate(self, n_taxa):
        if self.n_records <= 0:
            raise ConfigError("n_records must be positive")
        for name in ("mdr_prevalence", "noise_rate", "missing_rate"):
            v = getattr(self, name)
            if not 0.0 <= v <= 1.0:
                raise ConfigError(f"{name} must lie in [0, 1], got {v}")
        if self.signal_strength < 0:
            raise ConfigError("signal_strength must be >= 0")
        if self.taxa_mix is not None:
            mix = np.asarray(self.taxa_mix, dtype=float)
            if len(mix) != n_taxa:
                raise ConfigError(f"taxa_mix needs {n_taxa} entries, got {len(mix)}")
            if np.any(mix < 0) or abs(mix.sum() - 1.0) > 1e-9:
                raise ConfigError("taxa_mix must be a probability vector")


def antibiotic_bases(n):
    """Per-antibiotic baseline log-odds, spread evenly over [-1.5, 0]."""
    return np.linspace(-1.5, 0.0, n)


def _sigmoid(z):
    return 1.0 / (1.0 + np.exp(-z))


def _species_spellings(schema):
    out = {}
    for taxon in schema.canonical_taxa:
        aliases = sorted(a for a, t in schema.species_aliases.items() if t == taxon)
        out[taxon] = [taxon] + aliases
    return out


def generate(config, schema):
    """Return ``(csv_bytes, truth)`` where ``truth`` holds labels and metadata."""
    taxa = list(schema.canonical_taxa)
    config.validate(len(taxa))
    rng = make_rng(config.seed)
    n = config.n_records
    n_abx = len(schema.antibiotics)

    latent = (rng.random(n) < config.mdr_prevalence).astype(np.int64)
    propensity = latent - 0.5 + PROPENSITY_SD * rng.standard_normal(n)

    mix = np.full(len(taxa), 1.0 / len(taxa)) if config.taxa_mix is None else np.asarray(config.taxa_mix)
    species_idx = rng.choice(len(taxa), size=n, p=mix)
    spelling_u = rng.random(n)
    age = np.clip(np.rint(rng.normal(AGE_MEAN, AGE_SD, n)), 1, 100).astype(int)
    male = rng.random(n) < P_MALE
    gender_first = rng.random(n) < 0.2
    diabetes = rng.random(n) < P_DIABETES
    hypertension = rng.random(n) < P_HYPERTENSION
    hospital = rng.random(n) < P_HOSPITAL
    freq = rng.choice(4, size=n, p=FREQ_PROBS)

    logits = antibiotic_bases(n_abx)[None, :] + config.signal_strength * propensity[:, None]
    resistant = rng.random((n, n_abx)) < _sigmoid(logits)
    intermediate = rng.random((n, n_abx)) < P_INTERMEDIATE
    results = np.where(resistant, 2, np.where(intermediate, 1, 0))

    flip = rng.random((n, n_abx)) < config.noise_rate
    shift = rng.integers(1, 3, size=(n, n_abx))
    results = np.where(flip, (results + shift) % 3, results)

    spellings = _species_spellings(schema)
    cm = schema.column_map
    header = ["ID"] + schema.required_columns() + ["Notes"]
    n_cols = len(header)
    missing = rng.random((n, n_cols)) < config.missing_rate
    missing[:, 0] = False
    missing[:, -1] = False

    buf = io.StringIO(newline="")
    writer = csv.writer(buf, lineterminator="\n")
    writer.writerow(header)
    letters = "SIR"
    for i in range(n):
        taxon = taxa[species_idx[i]]
        options = spellings[taxon]
        name = options[int(spelling_u[i] * len(options))]
        g = "M" if male[i] else "F"
        row = {
            "ID": f"S{i:06d}",
            cm["species"]: name,
            cm["age_gender"]: f"{g}/{age[i]}" if gender_first[i] else f"{age[i]}/{g}",
            cm["diabetes"]: "Yes" if diabetes[i] else "No",
            cm["hypertension"]: "Yes" if hypertension[i] else "No",
            cm["prior_hospitalization"]: "Yes" if hospital[i] else "No",
            cm["infection_frequency"]: FREQ_LABELS[freq[i]],
            "Notes": "",
        }
        for j, abx in enumerate(schema.antibiotics):
            row[schema.antibiotic_column(abx)] = letters[results[i, j]]
        writer.writerow(["" if missing[i, k] else row[h] for k, h in enumerate(header)])

    cfg = asdict(config)
    if cfg["taxa_mix"] is not None:
        cfg["taxa_mix"] = [float(v) for v in cfg["taxa_mix"]]
    truth = {
        "algorithm": ALGORITHM,
        "seed": int(config.seed),
        "config": cfg,
        "labels": [int(v) for v in latent],
    }
    return buf.getvalue().encode("utf-8"), truth
