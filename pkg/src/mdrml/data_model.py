"""Raw isolate CSV parsing and the cleaning/normalisation rules.

Rows are never repaired or imputed: anything that cannot be normalised is
dropped and counted under a reason code in the :class:`CleaningReport`.
"""
import csv
import enum
import io
import json
import re
from collections import Counter
from dataclasses import dataclass, field
from importlib import resources

from .errors import ConfigError, CSVParseError, SchemaError

LOGICAL_FIELDS = (
    "species",
    "age_gender",
    "diabetes",
    "hypertension",
    "prior_hospitalization",
    "infection_frequency",
)

TRUE_TOKENS = {"yes", "y", "1", "true"}
FALSE_TOKENS = {"no", "n", "0", "false"}

AGE_MIN, AGE_MAX = 0, 120

_AGE_FIRST = re.compile(r"^\s*(\d{1,3})\s*/\s*([mMfF])\s*$")
_GENDER_FIRST = re.compile(r"^\s*([mMfF])\s*/\s*(\d{1,3})\s*$")


class SusceptibilityResult(str, enum.Enum):
    S = "S"
    I = "I"  # noqa: E741
    R = "R"

    @property
    def ordinal(self):
        return _ORDINAL[self]

    @classmethod
    def parse(cls, token):
        text = str(token).strip().upper()
        try:
            return cls(text)
        except ValueError:
            raise ValueError(f"invalid susceptibility token {token!r}") from None


_ORDINAL = {SusceptibilityResult.S: 0, SusceptibilityResult.I: 1, SusceptibilityResult.R: 2}


class Gender(str, enum.Enum):
    MALE = "male"
    FEMALE = "female"


class DropReason(str, enum.Enum):
    MISSING_VALUE = "missing-value"
    INVALID_AGE_GENDER = "invalid-age-gender"
    AGE_OUT_OF_RANGE = "age-out-of-range"
    INVALID_BOOLEAN = "invalid-boolean"
    INVALID_INFECTION_FREQUENCY = "invalid-infection-frequency"
    UNRESOLVABLE_SPECIES = "unresolvable-species"
    INVALID_SUSCEPTIBILITY = "invalid-susceptibility"


class UnresolvableSpeciesError(ValueError):
    pass


@dataclass(frozen=True)
class SchemaConfig:
    """Column layout and vocabularies for one source file format.

    ``antibiotic_columns`` maps antibiotic id to the CSV header used for it;
    ids without an entry are looked up under their own name.
    """

    column_map: dict
    species_aliases: dict
    canonical_taxa: tuple
    antibiotics: tuple
    infection_frequency_map: dict
    drop_columns: tuple = ()
    antibiotic_columns: dict = field(default_factory=dict)

    def __post_init__(self):
        if not self.canonical_taxa:
            raise ConfigError("canonical_taxa must not be empty")
        if not self.antibiotics:
            raise ConfigError("antibiotics must not be empty")
        if len(set(self.antibiotics)) != len(self.antibiotics):
            raise ConfigError("antibiotics list contains duplicates")
        missing = [f for f in LOGICAL_FIELDS if f not in self.column_map]
        if missing:
            raise ConfigError(f"column_map lacks logical fields: {missing}")
        taxa = set(self.canonical_taxa)
        bad = {a: t for a, t in self.species_aliases.items() if t not in taxa}
        if bad:
            raise ConfigError(f"species aliases map outside canonical_taxa: {bad}")
        for key, level in self.infection_frequency_map.items():
            if level not in (0, 1, 2, 3):
                raise ConfigError(f"infection frequency {key!r} maps to {level}, expected 0-3")

    def antibiotic_column(self, antibiotic):
        return self.antibiotic_columns.get(antibiotic, antibiotic)

    def required_columns(self):
        cols = [self.column_map[f] for f in LOGICAL_FIELDS]
        cols.extend(self.antibiotic_column(a) for a in self.antibiotics)
        return cols

    @classmethod
    def from_dict(cls, doc):
        try:
            return cls(
                column_map=dict(doc["column_map"]),
                species_aliases={k.strip().casefold(): v for k, v in doc.get("species_aliases", {}).items()},
                canonical_taxa=tuple(doc["canonical_taxa"]),
                antibiotics=tuple(doc["antibiotics"]),
                infection_frequency_map={
                    str(k).strip().casefold(): int(v)
                    for k, v in doc.get("infection_frequency_map", {}).items()
                },
                drop_columns=tuple(doc.get("drop_columns", ())),
                antibiotic_columns=dict(doc.get("antibiotic_columns", {})),
            )
        except KeyError as exc:
            raise ConfigError(f"schema document lacks key {exc.args[0]!r}") from None

    def to_dict(self):
        return {
            "column_map": dict(self.column_map),
            "species_aliases": dict(self.species_aliases),
            "canonical_taxa": list(self.canonical_taxa),
            "antibiotics": list(self.antibiotics),
            "infection_frequency_map": dict(self.infection_frequency_map),
            "drop_columns": list(self.drop_columns),
            "antibiotic_columns": dict(self.antibiotic_columns),
        }


def load_schema(path=None):
    """Load a schema JSON document; ``None`` gives the bundled default."""
    if path is None:
        text = resources.files("mdrml.data").joinpath("default_schema.json").read_text("utf-8")
    else:
        try:
            with open(path, encoding="utf-8") as fh:
                text = fh.read()
        except OSError as exc:
            raise ConfigError(f"cannot read schema {path}: {exc}") from None
    try:
        doc = json.loads(text)
    except json.JSONDecodeError as exc:
        raise ConfigError(f"schema is not valid JSON: {exc}") from None
    return SchemaConfig.from_dict(doc)


@dataclass(frozen=True)
class RawRecord:
    row_index: int
    cells: dict


@dataclass(frozen=True)
class CleanRecord:
    species: str
    age: int
    gender: Gender
    diabetes: bool
    hypertension: bool
    prior_hospitalization: bool
    infection_frequency: int
    antibiogram: dict


@dataclass
class CleaningReport:
    rows_in: int = 0
    rows_out: int = 0
    dropped: Counter = field(default_factory=Counter)

    def to_dict(self):
        return {
            "rows_in": self.rows_in,
            "rows_out": self.rows_out,
            "dropped": {k: self.dropped[k] for k in sorted(self.dropped)},
        }


def parse_csv(data, schema):
    """Split a CSV document into :class:`RawRecord` objects.

    ``data`` may be bytes (decoded as UTF-8) or text. Columns listed in
    ``schema.drop_columns`` are removed from every record.
    """
    if isinstance(data, (bytes, bytearray)):
        try:
            data = bytes(data).decode("utf-8-sig")
        except UnicodeDecodeError as exc:
            raise CSVParseError(f"input is not UTF-8: {exc}") from None
    reader = csv.reader(io.StringIO(data, newline=""), strict=True)
    try:
        header = next(reader)
    except StopIteration:
        raise CSVParseError("empty input, header row required") from None
    except csv.Error as exc:
        raise CSVParseError(str(exc), row=0) from None
    header = [h.strip() for h in header]
    present = set(header)
    for col in schema.required_columns():
        if col not in present:
            raise SchemaError(f"missing required column {col!r}")
    dropped = set(schema.drop_columns)
    keep = [i for i, name in enumerate(header) if name not in dropped]

    records = []
    row = 0
    try:
        for row, values in enumerate(reader, start=1):
            if not values:
                continue
            if len(values) != len(header):
                raise CSVParseError(
                    f"expected {len(header)} fields, found {len(values)}", row=row
                )
            cells = {header[i]: values[i] for i in keep}
            records.append(RawRecord(row_index=len(records), cells=cells))
    except csv.Error as exc:
        raise CSVParseError(str(exc), row=row + 1) from None
    return records


def normalize_species(raw, schema):
    key = str(raw).strip().casefold()
    for taxon in schema.canonical_taxa:
        if key == taxon.casefold():
            return taxon
    try:
        return schema.species_aliases[key]
    except KeyError:
        raise UnresolvableSpeciesError(f"unknown species {raw!r}") from None


def _parse_bool(text):
    token = text.strip().casefold()
    if token in TRUE_TOKENS:
        return True
    if token in FALSE_TOKENS:
        return False
    raise ValueError(token)


def _parse_age_gender(text):
    m = _AGE_FIRST.match(text)
    if m:
        age, g = m.groups()
    else:
        m = _GENDER_FIRST.match(text)
        if not m:
            raise ValueError(text)
        g, age = m.groups()
    gender = Gender.MALE if g.upper() == "M" else Gender.FEMALE
    return int(age), gender


def clean_record(raw, schema):
    """Return a :class:`CleanRecord`, or a :class:`DropReason` if the row is unusable."""
    cells = raw.cells
    cm = schema.column_map

    for col in schema.required_columns():
        if cells.get(col, "").strip() == "":
            return DropReason.MISSING_VALUE

    try:
        species = normalize_species(cells[cm["species"]], schema)
    except UnresolvableSpeciesError:
        return DropReason.UNRESOLVABLE_SPECIES

    try:
        age, gender = _parse_age_gender(cells[cm["age_gender"]])
    except ValueError:
        return DropReason.INVALID_AGE_GENDER
    if not AGE_MIN <= age <= AGE_MAX:
        return DropReason.AGE_OUT_OF_RANGE

    try:
        diabetes = _parse_bool(cells[cm["diabetes"]])
        hypertension = _parse_bool(cells[cm["hypertension"]])
        hospital = _parse_bool(cells[cm["prior_hospitalization"]])
    except ValueError:
        return DropReason.INVALID_BOOLEAN

    freq_token = cells[cm["infection_frequency"]].strip().casefold()
    freq = schema.infection_frequency_map.get(freq_token)
    if freq is None:
        if freq_token in ("0", "1", "2", "3"):
            freq = int(freq_token)
        else:
            return DropReason.INVALID_INFECTION_FREQUENCY

    antibiogram = {}
    for abx in schema.antibiotics:
        try:
            antibiogram[abx] = SusceptibilityResult.parse(cells[schema.antibiotic_column(abx)])
        except ValueError:
            return DropReason.INVALID_SUSCEPTIBILITY

    return CleanRecord(
        species=species,
        age=age,
        gender=gender,
        diabetes=diabetes,
        hypertension=hypertension,
        prior_hospitalization=hospital,
        infection_frequency=freq,
        antibiogram=antibiogram,
    )


def clean_records(raw_records, schema):
    """Clean every row, preserving order. Returns ``(records, report)``."""
    report = CleaningReport(rows_in=len(raw_records))
    out = []
    for raw in raw_records:
        result = clean_record(raw, schema)
        if isinstance(result, DropReason):
            report.dropped[result.value] += 1
        else:
            out.append(result)
    report.rows_out = len(out)
    return out, report


def clean_csv(data, schema):
    return clean_records(parse_csv(data, schema), schema)


def render_record(record, schema, row_index=0):
    """Render a clean record back to source text (inverse of :func:`clean_record`)."""
    cm = schema.column_map
    g = "M" if record.gender is Gender.MALE else "F"
    cells = {
        cm["species"]: record.species,
        cm["age_gender"]: f"{record.age}/{g}",
        cm["diabetes"]: "Yes" if record.diabetes else "No",
        cm["hypertension"]: "Yes" if record.hypertension else "No",
        cm["prior_hospitalization"]: "Yes" if record.prior_hospitalization else "No",
        cm["infection_frequency"]: str(record.infection_frequency),
    }
    for abx in schema.antibiotics:
        cells[schema.antibiotic_column(abx)] = record.antibiogram[abx].value
    return RawRecord(row_index=row_index, cells=cells)


def write_csv(records, schema):
    """Serialise clean records as CSV text in the schema's column layout."""
    buf = io.StringIO(newline="")
    writer = csv.writer(buf, lineterminator="\n")
    header = schema.required_columns()
    writer.writerow(header)
    for i, rec in enumerate(records):
        cells = render_record(rec, schema, i).cells
        writer.writerow([cells[c] for c in header])
    return buf.getvalue()
