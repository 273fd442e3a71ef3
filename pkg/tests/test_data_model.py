import csv
import io

import pytest
from hypothesis import given
from hypothesis import strategies as st

from mdrml.data_model import (
    CleanRecord,
    DropReason,
    Gender,
    RawRecord,
    SchemaConfig,
    SusceptibilityResult,
    UnresolvableSpeciesError,
    clean_csv,
    clean_record,
    normalize_species,
    parse_csv,
    render_record,
    write_csv,
)
from mdrml.errors import ConfigError, CSVParseError, SchemaError


def base_cells(schema, **overrides):
    cm = schema.column_map
    cells = {
        cm["species"]: "EscherichiaColi",
        cm["age_gender"]: "34/F",
        cm["diabetes"]: "Yes",
        cm["hypertension"]: "no",
        cm["prior_hospitalization"]: "0",
        cm["infection_frequency"]: "rare",
    }
    for abx in schema.antibiotics:
        cells[schema.antibiotic_column(abx)] = "S"
    for key, value in overrides.items():
        col = cm.get(key) or schema.antibiotic_column(key)
        cells[col] = value
    return cells


def to_csv(rows, header):
    buf = io.StringIO(newline="")
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(header)
    for r in rows:
        w.writerow([r.get(h, "") for h in header])
    return buf.getvalue().encode("utf-8")


class TestSusceptibility:
    def test_parse_trims_and_uppercases(self):
        assert SusceptibilityResult.parse(" r ") is SusceptibilityResult.R
        assert SusceptibilityResult.parse("i") is SusceptibilityResult.I

    def test_ordinals(self):
        assert [s.ordinal for s in SusceptibilityResult] == [0, 1, 2]

    @pytest.mark.parametrize("token", ["X", "", "RR", "resistant"])
    def test_rejects_other_tokens(self, token):
        with pytest.raises(ValueError):
            SusceptibilityResult.parse(token)


class TestSchema:
    def test_default_shape(self, schema):
        assert len(schema.canonical_taxa) == 9
        assert len(schema.antibiotics) == 15
        assert {"ID", "Name", "Address", "Notes"} <= set(schema.drop_columns)

    def test_alias_outside_taxa_rejected(self, schema):
        doc = schema.to_dict()
        doc["species_aliases"]["foo"] = "NotATaxon"
        with pytest.raises(ConfigError):
            SchemaConfig.from_dict(doc)

    def test_duplicate_antibiotics_rejected(self, schema):
        doc = schema.to_dict()
        doc["antibiotics"] = doc["antibiotics"] + doc["antibiotics"][:1]
        with pytest.raises(ConfigError):
            SchemaConfig.from_dict(doc)

    def test_empty_taxa_rejected(self, schema):
        doc = schema.to_dict()
        doc["canonical_taxa"] = []
        doc["species_aliases"] = {}
        with pytest.raises(ConfigError):
            SchemaConfig.from_dict(doc)

    def test_roundtrip(self, schema):
        assert SchemaConfig.from_dict(schema.to_dict()) == schema


class TestParseCsv:
    def test_count_preserved(self, schema):
        header = schema.required_columns()
        data = to_csv([base_cells(schema)] * 3, header)
        assert len(parse_csv(data, schema)) == 3

    def test_missing_species_column(self, schema):
        header = [h for h in schema.required_columns() if h != schema.column_map["species"]]
        with pytest.raises(SchemaError, match=schema.column_map["species"]):
            parse_csv(to_csv([base_cells(schema)], header), schema)

    def test_drop_columns_removed(self, schema):
        header = ["ID"] + schema.required_columns() + ["Notes"]
        rows = [dict(base_cells(schema), ID="7", Notes="call back")]
        rec = parse_csv(to_csv(rows, header), schema)[0]
        assert "Notes" not in rec.cells and "ID" not in rec.cells

    def test_ragged_row_reports_row_number(self, schema):
        header = schema.required_columns()
        text = to_csv([base_cells(schema)] * 2, header).decode() + "a,b\n"
        with pytest.raises(CSVParseError) as err:
            parse_csv(text, schema)
        assert err.value.row == 3

    def test_quoted_fields(self, schema):
        header = schema.required_columns() + ["Notes"]
        rows = [dict(base_cells(schema), Notes='says "hi", twice')]
        assert len(parse_csv(to_csv(rows, header), schema)) == 1

    def test_empty_input(self, schema):
        with pytest.raises(CSVParseError):
            parse_csv(b"", schema)


class TestNormalizeSpecies:
    def test_alias_with_whitespace_and_case(self, schema):
        assert normalize_species("  e.COLI ", schema) == "EscherichiaColi"

    def test_canonical_identity(self, schema):
        assert normalize_species("KlebsiellaPneumoniae", schema) == "KlebsiellaPneumoniae"

    def test_unknown(self, schema):
        with pytest.raises(UnresolvableSpeciesError):
            normalize_species("unknownspecies", schema)


class TestCleanRecord:
    def test_documented_example(self, schema):
        rec = clean_record(RawRecord(0, base_cells(schema, CIP="r")), schema)
        assert isinstance(rec, CleanRecord)
        assert rec.age == 34 and rec.gender is Gender.FEMALE
        assert rec.diabetes is True and rec.hypertension is False
        assert rec.antibiogram["CIP"] is SusceptibilityResult.R

    def test_gender_first_format(self, schema):
        rec = clean_record(RawRecord(0, base_cells(schema, age_gender="m/71")), schema)
        assert rec.age == 71 and rec.gender is Gender.MALE

    def test_frequency_often(self, schema):
        rec = clean_record(RawRecord(0, base_cells(schema, infection_frequency="often")), schema)
        assert rec.infection_frequency == 3

    def test_frequency_digit_passthrough(self, schema):
        rec = clean_record(RawRecord(0, base_cells(schema, infection_frequency="2")), schema)
        assert rec.infection_frequency == 2

    @pytest.mark.parametrize("field,value,reason", [
        ("CIP", "X", DropReason.INVALID_SUSCEPTIBILITY),
        ("species", "unknownspecies", DropReason.UNRESOLVABLE_SPECIES),
        ("age_gender", "34", DropReason.INVALID_AGE_GENDER),
        ("age_gender", "130/M", DropReason.AGE_OUT_OF_RANGE),
        ("diabetes", "maybe", DropReason.INVALID_BOOLEAN),
        ("infection_frequency", "weekly", DropReason.INVALID_INFECTION_FREQUENCY),
        ("GEN", " ", DropReason.MISSING_VALUE),
    ])
    def test_drop_reasons(self, schema, field, value, reason):
        assert clean_record(RawRecord(0, base_cells(schema, **{field: value})), schema) is reason

    @pytest.mark.parametrize("token,expected", [
        ("YES", True), ("y", True), ("1", True), ("True", True),
        ("No", False), ("N", False), ("0", False), ("false", False),
    ])
    def test_boolean_tokens(self, schema, token, expected):
        rec = clean_record(RawRecord(0, base_cells(schema, hypertension=token)), schema)
        assert rec.hypertension is expected


class TestCleaningReport:
    def test_conservation(self, schema):
        header = schema.required_columns()
        rows = [base_cells(schema), base_cells(schema, CIP="X"), base_cells(schema, species="zz"),
                base_cells(schema, age_gender="200/F"), base_cells(schema)]
        records, report = clean_csv(to_csv(rows, header), schema)
        assert report.rows_in == 5 and report.rows_out == len(records) == 2
        assert report.rows_in == report.rows_out + sum(report.dropped.values())
        assert report.to_dict()["dropped"] == {
            "age-out-of-range": 1, "invalid-susceptibility": 1, "unresolvable-species": 1}


cell_text = st.one_of(
    st.sampled_from(["S", "I", "R", "s", " r", "X", "", "yes", "NO", "1", "often", "rare",
                     "34/F", "m/7", "121/F", "e.coli", "EscherichiaColi", "zzz", "3"]),
    st.text(max_size=6),
)


@given(st.data())
def test_totality_over_fuzzed_rows(schema, data):
    cells = {}
    for col in schema.required_columns():
        cells[col] = data.draw(cell_text)
    result = clean_record(RawRecord(0, cells), schema)
    if isinstance(result, CleanRecord):
        assert 0 <= result.age <= 120
        assert result.infection_frequency in (0, 1, 2, 3)
        assert set(result.antibiogram) == set(schema.antibiotics)
        assert result.species in schema.canonical_taxa
    else:
        assert isinstance(result, DropReason)


@given(
    age=st.integers(0, 120),
    male=st.booleans(),
    flags=st.tuples(st.booleans(), st.booleans(), st.booleans()),
    freq=st.integers(0, 3),
    taxon=st.integers(0, 8),
    results=st.lists(st.sampled_from(list(SusceptibilityResult)), min_size=15, max_size=15),
)
def test_render_then_clean_is_identity(schema, age, male, flags, freq, taxon, results):
    rec = CleanRecord(
        species=schema.canonical_taxa[taxon], age=age,
        gender=Gender.MALE if male else Gender.FEMALE,
        diabetes=flags[0], hypertension=flags[1], prior_hospitalization=flags[2],
        infection_frequency=freq, antibiogram=dict(zip(schema.antibiotics, results)),
    )
    assert clean_record(render_record(rec, schema), schema) == rec


def test_write_csv_reparses(schema):
    rec = clean_record(RawRecord(0, base_cells(schema, CIP="R", GEN="I")), schema)
    records, report = clean_csv(write_csv([rec, rec], schema).encode(), schema)
    assert records == [rec, rec] and report.rows_out == 2
