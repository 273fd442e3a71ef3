"""Family-level resistance indicators, the MultiResistance label, and encoding.

Feature layout (in order): age, gender one-hot, the three binary risk
factors, infection frequency, species one-hot, one ordinal column per
antibiotic (S=0, I=1, R=2), one binary column per antibiotic family.
"""
import csv
import io
import json
from dataclasses import dataclass
from importlib import resources

import numpy as np

from .data_model import Gender, SusceptibilityResult
from .errors import ConfigError, DataError, EmptyDatasetError

DEFAULT_MDR_THRESHOLD = 3
LABEL_COLUMN = "MultiResistance"


class UnmappedAntibioticError(DataError):
    pass


@dataclass(frozen=True)
class FamilyMap:
    families: dict  # family id -> tuple of antibiotic ids
    order: tuple

    def __post_init__(self):
        seen = {}
        for fam in self.order:
            for abx in self.families[fam]:
                if abx in seen:
                    raise ConfigError(f"antibiotic {abx} in both {seen[abx]} and {fam}")
                seen[abx] = fam
        object.__setattr__(self, "_lookup", seen)

    def family_of(self, antibiotic):
        try:
            return self._lookup[antibiotic]
        except KeyError:
            raise UnmappedAntibioticError(f"antibiotic {antibiotic!r} has no family") from None

    def validate_against(self, schema):
        missing = [a for a in schema.antibiotics if a not in self._lookup]
        if missing:
            raise ConfigError(f"family map does not cover antibiotics {missing}")
        extra = sorted(set(self._lookup) - set(schema.antibiotics))
        if extra:
            raise ConfigError(f"family map names antibiotics absent from the schema: {extra}")

    @classmethod
    def from_dict(cls, doc):
        families = {str(k): tuple(v) for k, v in doc.items()}
        return cls(families=families, order=tuple(families))

    def to_dict(self):
        return {fam: list(self.families[fam]) for fam in self.order}


def load_family_map(path=None):
    if path is None:
        text = resources.files("mdrml.data").joinpath("default_families.json").read_text("utf-8")
    else:
        try:
            with open(path, encoding="utf-8") as fh:
                text = fh.read()
        except OSError as exc:
            raise ConfigError(f"cannot read family map {path}: {exc}") from None
    try:
        return FamilyMap.from_dict(json.loads(text))
    except json.JSONDecodeError as exc:
        raise ConfigError(f"family map is not valid JSON: {exc}") from None


def family_indicators(record, fmap):
    """1 for each family with at least one resistant (R) antibiotic, else 0."""
    out = {fam: 0 for fam in fmap.order}
    for abx, result in record.antibiogram.items():
        fam = fmap.family_of(abx)
        if result is SusceptibilityResult.R:
            out[fam] = 1
    return out


def mdr_label(indicators, threshold=DEFAULT_MDR_THRESHOLD):
    if threshold < 1:
        raise ConfigError("mdr threshold must be >= 1")
    return int(sum(indicators.values()) >= threshold)


def feature_names(schema, fmap):
    names = ["age", "gender=male", "gender=female", "diabetes", "hypertension",
             "prior_hospitalization", "infection_frequency"]
    names += [f"species={t}" for t in schema.canonical_taxa]
    names += list(schema.antibiotics)
    names += [f"family:{fam}" for fam in fmap.order]
    return names


@dataclass
class LabeledDataset:
    X: np.ndarray
    y: np.ndarray
    feature_names: list
    family_indicators: list
    mdr_threshold: int = DEFAULT_MDR_THRESHOLD

    def __len__(self):
        return len(self.y)

    def family_columns(self):
        return [i for i, n in enumerate(self.feature_names) if n.startswith("family:")]

    def to_csv(self):
        buf = io.StringIO(newline="")
        w = csv.writer(buf, lineterminator="\n")
        w.writerow(self.feature_names + [LABEL_COLUMN])
        for row, label in zip(self.X, self.y):
            w.writerow([_fmt(v) for v in row] + [int(label)])
        return buf.getvalue()

    @classmethod
    def from_csv(cls, text, mdr_threshold=DEFAULT_MDR_THRESHOLD):
        rows = list(csv.reader(io.StringIO(text, newline="")))
        if len(rows) < 2:
            raise EmptyDatasetError("dataset file has no rows")
        header = rows[0]
        if header[-1] != LABEL_COLUMN:
            raise DataError(f"last column must be {LABEL_COLUMN}")
        names = header[:-1]
        try:
            data = np.array([[float(v) for v in r] for r in rows[1:] if r], dtype=np.float64)
        except ValueError as exc:
            raise DataError(f"non-numeric dataset cell: {exc}") from None
        X, y = data[:, :-1], data[:, -1].astype(np.int64)
        fam_cols = [i for i, n in enumerate(names) if n.startswith("family:")]
        indicators = [
            {names[i][len("family:"):]: int(row[i]) for i in fam_cols} for row in X
        ]
        return cls(X=X, y=y, feature_names=names, family_indicators=indicators,
                   mdr_threshold=mdr_threshold)


def _fmt(v):
    return str(int(v)) if float(v).is_integer() else repr(float(v))


def encode_record(record, fmap, schema):
    ind = family_indicators(record, fmap)
    row = [
        float(record.age),
        float(record.gender is Gender.MALE),
        float(record.gender is Gender.FEMALE),
        float(record.diabetes),
        float(record.hypertension),
        float(record.prior_hospitalization),
        float(record.infection_frequency),
    ]
    row += [float(record.species == t) for t in schema.canonical_taxa]
    row += [float(record.antibiogram[a].ordinal) for a in schema.antibiotics]
    row += [float(ind[f]) for f in fmap.order]
    return row, ind


def encode_dataset(records, fmap, schema, mdr_threshold=DEFAULT_MDR_THRESHOLD):
    if not records:
        raise EmptyDatasetError("no records to encode")
    rows, inds, labels = [], [], []
    for rec in records:
        row, ind = encode_record(rec, fmap, schema)
        rows.append(row)
        inds.append(ind)
        labels.append(mdr_label(ind, mdr_threshold))
    return LabeledDataset(
        X=np.asarray(rows, dtype=np.float64),
        y=np.asarray(labels, dtype=np.int64),
        feature_names=feature_names(schema, fmap),
        family_indicators=inds,
        mdr_threshold=mdr_threshold,
    )
