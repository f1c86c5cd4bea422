from __future__ import annotations

import io
import random

import pytest
from hypothesis import given
from hypothesis import strategies as st

from firmprod import (
    CsvSchema,
    Dataset,
    FirmRecord,
    MergePolicy,
    SynthSpec,
    filter_dataset,
    gen_cobb_douglas_firms,
    merge_datasets,
    parse_firm_records,
    write_firm_records,
)
from firmprod.errors import (
    MergeConflictError,
    RowError,
    SchemaError,
    UnitMismatchError,
    ValidationError,
)

HEADER = (
    "firm_id,year,country,sector,sector_class,revenue,cogs,workers,"
    "total_labor_cost,capital,ordinary_income,financial_expense,"
    "tax_public_charge,depreciation"
)


def parse(text: str, schema: CsvSchema | None = None, **kwargs):
    return parse_firm_records(io.StringIO(text), schema, **kwargs)


def roundtrip(dataset: Dataset) -> Dataset:
    buffer = io.StringIO()
    write_firm_records(dataset, buffer)
    schema = CsvSchema(currency_unit=dataset.currency_unit)
    return parse(buffer.getvalue(), schema).dataset


# ---------------------------------------------------------------------------
# parsing
# ---------------------------------------------------------------------------


def test_header_only_gives_empty_dataset():
    report = parse(HEADER + "\n")
    assert len(report.dataset) == 0
    assert report.n_skipped == 0


def test_single_row_passes_through():
    report = parse(HEADER + "\nF1,2003,JP,steel,manufacturing,100,40,10,30,50,,,,\n")
    (record,) = report.dataset.records
    assert record.revenue == 100.0
    assert record.cogs == 40.0
    assert record.workers == 10
    assert record.total_labor_cost == 30.0
    assert record.capital == 50.0
    assert record.year == 2003
    assert record.ordinary_income is None
    assert record.depreciation is None


def test_row_order_preserved():
    rows = "\n".join(
        f"F{i},2003,JP,steel,manufacturing,{100 + i},40,10,,,,,," for i in range(5)
    )
    report = parse(HEADER + "\n" + rows + "\n")
    assert [r.firm_id for r in report.dataset.records] == [f"F{i}" for i in range(5)]


def test_missing_mandatory_column_names_the_column():
    header = HEADER.replace("workers,", "")
    with pytest.raises(SchemaError, match="workers"):
        parse(header + "\nF1,2003,JP,steel,manufacturing,100,40,30,50,,,,\n")


def test_optional_columns_may_be_entirely_absent():
    header = "firm_id,year,country,sector,sector_class,revenue,cogs,workers"
    report = parse(header + "\nF1,2003,JP,steel,manufacturing,100,40,10\n")
    (record,) = report.dataset.records
    assert record.total_labor_cost is None
    assert record.capital is None


def test_unparseable_cell_is_skipped_with_line_number():
    text = HEADER + "\nF1,2003,JP,steel,manufacturing,abc,40,10,,,,,,\n"
    report = parse(text)
    assert len(report.dataset) == 0
    (issue,) = report.skipped
    assert issue.line == 2
    assert "revenue" in issue.reason


def test_strict_mode_raises_on_first_bad_row():
    text = HEADER + "\nF1,2003,JP,steel,manufacturing,abc,40,10,,,,,,\n"
    with pytest.raises(RowError, match="line 2"):
        parse(text, strict=True)


def test_negative_mandatory_money_is_a_row_error():
    text = HEADER + "\nF1,2003,JP,steel,manufacturing,-5,40,10,,,,,,\n"
    report = parse(text)
    assert report.n_skipped == 1
    assert "revenue" in report.skipped[0].reason


def test_negative_ordinary_income_is_allowed():
    text = HEADER + "\nF1,2003,JP,steel,manufacturing,100,40,10,,,-25,,,\n"
    report = parse(text)
    assert report.dataset.records[0].ordinary_income == -25.0


def test_year_outside_configured_range_is_a_row_error():
    text = HEADER + "\nF1,1905,JP,steel,manufacturing,100,40,10,,,,,,\n"
    report = parse(text)
    assert report.n_skipped == 1
    assert "year" in report.skipped[0].reason

    wide = CsvSchema(year_range=(1900, 2030))
    assert len(parse(text, wide).dataset) == 1


def test_duplicate_key_within_file_is_a_row_error():
    text = (
        HEADER
        + "\nF1,2003,JP,steel,manufacturing,100,40,10,,,,,,"
        + "\nF1,2003,JP,steel,manufacturing,200,40,10,,,,,,\n"
    )
    report = parse(text)
    assert len(report.dataset) == 1
    assert report.dataset.records[0].revenue == 100.0
    assert report.n_skipped == 1


def test_comment_and_blank_lines_are_skipped():
    text = (
        "# generated file\n\n"
        + HEADER
        + "\n# mid comment\nF1,2003,JP,steel,manufacturing,100,40,10,,,,,,\n"
    )
    report = parse(text)
    assert len(report.dataset) == 1


def test_custom_column_mapping_and_tab_delimiter():
    schema = CsvSchema(
        columns={"firm_id": "ID", "revenue": "Sales"},
        delimiter="\t",
        currency_unit="kUSD",
    )
    header = HEADER.replace(",", "\t").replace("firm_id", "ID").replace("revenue", "Sales")
    text = header + "\nF9\t2003\tUS\tretail\tnon_manufacturing\t77\t40\t10\t\t\t\t\t\t\n"
    report = parse(text, schema)
    (record,) = report.dataset.records
    assert record.firm_id == "F9"
    assert record.revenue == 77.0
    assert report.dataset.currency_unit == "kUSD"


def test_unknown_schema_field_rejected():
    with pytest.raises(SchemaError, match="unknown"):
        CsvSchema(columns={"nonexistent": "X"})


# ---------------------------------------------------------------------------
# serialization round trip
# ---------------------------------------------------------------------------


def test_roundtrip_of_synthetic_population():
    spec = SynthSpec(n=1000, noise_sigma=0.1, labor_share=0.4, seed=11)
    dataset = gen_cobb_douglas_firms(spec)
    assert roundtrip(dataset).records == dataset.records


def test_parse_serialize_parse_is_identity(make_record, make_dataset):
    dataset = make_dataset(
        make_record(firm_id="a", ordinary_income=-3.5, depreciation=None),
        make_record(firm_id="b", total_labor_cost=None, capital=None),
        make_record(firm_id="c", revenue=0.1 + 0.2),  # non-terminating binary float
    )
    once = roundtrip(dataset)
    assert once.records == dataset.records
    assert roundtrip(once).records == once.records


# ---------------------------------------------------------------------------
# merge
# ---------------------------------------------------------------------------

_ids = st.sampled_from(["a", "b", "c", "d", "e"])
_years = st.integers(2000, 2004)
_money = st.floats(min_value=0.0, max_value=1e6, allow_nan=False, allow_infinity=False)


@st.composite
def datasets(draw, currency: str = "kJPY") -> Dataset:
    keys = draw(st.sets(st.tuples(_ids, _years), max_size=6))
    records = tuple(
        FirmRecord(
            firm_id=fid,
            year=year,
            country="JP",
            sector=draw(st.sampled_from(["s1", "s2"])),
            sector_class="manufacturing",
            revenue=draw(_money),
            cogs=draw(_money),
            workers=draw(st.integers(0, 50)),
        )
        for fid, year in sorted(keys)
    )
    return Dataset(records=records, currency_unit=currency)


def _merge_oracle(a: Dataset, b: Dataset, policy: MergePolicy) -> dict:
    # Independent key-scan: build the expected winner per key.
    out = {r.key: r for r in a.records}
    for r in b.records:
        if r.key in out:
            if policy is MergePolicy.PREFER_B:
                out[r.key] = r
        else:
            out[r.key] = r
    return out


def test_merge_with_empty_is_identity(make_record, make_dataset):
    d = make_dataset(make_record(firm_id="a"), make_record(firm_id="b"))
    empty = make_dataset()
    assert merge_datasets(d, empty).records == d.records
    assert merge_datasets(empty, d).records == d.records


def test_merge_disjoint_sizes_add(make_record, make_dataset):
    a = make_dataset(*(make_record(firm_id=f"a{i}") for i in range(3)))
    b = make_dataset(*(make_record(firm_id=f"b{i}") for i in range(4)))
    assert len(merge_datasets(a, b)) == 7


@given(datasets(), datasets(), st.sampled_from([MergePolicy.PREFER_A, MergePolicy.PREFER_B]))
def test_merge_matches_key_scan_oracle(a, b, policy):
    merged = merge_datasets(a, b, policy)
    assert {r.key: r for r in merged.records} == _merge_oracle(a, b, policy)


@given(datasets(), datasets())
def test_merge_size_bound(a, b):
    merged = merge_datasets(a, b, MergePolicy.PREFER_A)
    assert len(merged) <= len(a) + len(b)
    disjoint = not ({r.key for r in a.records} & {r.key for r in b.records})
    assert (len(merged) == len(a) + len(b)) == disjoint


@given(datasets(), datasets(), datasets())
def test_merge_associative_for_disjoint_prefer_a(a, b, c):
    keys_a = {r.key for r in a.records}
    keys_b = {r.key for r in b.records}
    keys_c = {r.key for r in c.records}
    if keys_a & keys_b or keys_a & keys_c or keys_b & keys_c:
        return  # associativity is claimed for key-disjoint inputs only
    left = merge_datasets(merge_datasets(a, b), c)
    right = merge_datasets(a, merge_datasets(b, c))
    assert {r.key: r for r in left.records} == {r.key: r for r in right.records}


def test_merge_prefer_b_wins_on_conflict(make_record, make_dataset):
    a = make_dataset(make_record(revenue=100.0))
    b = make_dataset(make_record(revenue=999.0))
    merged = merge_datasets(a, b, MergePolicy.PREFER_B)
    assert merged.records[0].revenue == 999.0


def test_merge_reject_conflict_lists_keys(make_record, make_dataset):
    a = make_dataset(make_record())
    b = make_dataset(make_record(revenue=1.0))
    with pytest.raises(MergeConflictError, match="F000001"):
        merge_datasets(a, b, MergePolicy.REJECT_CONFLICT)


def test_merge_currency_mismatch(make_record):
    a = Dataset(records=(make_record(),), currency_unit="kJPY")
    b = Dataset(records=(make_record(firm_id="x"),), currency_unit="kUSD")
    with pytest.raises(UnitMismatchError):
        merge_datasets(a, b)


def test_merge_concatenates_provenance(make_record):
    a = Dataset(records=(make_record(),), currency_unit="kJPY", provenance=("one",))
    b = Dataset(records=(make_record(firm_id="x"),), currency_unit="kJPY", provenance=("two",))
    assert merge_datasets(a, b).provenance == ("one", "two")


# ---------------------------------------------------------------------------
# filter
# ---------------------------------------------------------------------------


def test_empty_predicate_is_identity(make_record, make_dataset):
    d = make_dataset(make_record(firm_id="a"), make_record(firm_id="b"))
    filtered = filter_dataset(d)
    assert filtered.records == d.records
    assert filtered.records[0] is d.records[0]  # records never copied or altered


def test_min_workers_threshold_is_inclusive(make_record, make_dataset):
    d = make_dataset(
        make_record(firm_id="a", workers=5),
        make_record(firm_id="b", workers=10),
        make_record(firm_id="c", workers=20),
    )
    kept = filter_dataset(d, min_workers=10)
    assert [r.workers for r in kept.records] == [10, 20]


def test_require_positive_drops_absent_and_nonpositive(make_record, make_dataset):
    d = make_dataset(
        make_record(firm_id="a", capital=None),
        make_record(firm_id="b", capital=0.0),
        make_record(firm_id="c", capital=2.0, ordinary_income=3.0),
        make_record(firm_id="d", ordinary_income=-1.0),
    )
    kept = filter_dataset(d, require_positive=("capital",))
    assert [r.firm_id for r in kept.records] == ["c", "d"]
    kept2 = filter_dataset(d, require_positive=("capital", "ordinary_income"))
    assert [r.firm_id for r in kept2.records] == ["c"]


def test_require_positive_unknown_field():
    with pytest.raises(ValueError, match="unknown field"):
        filter_dataset(Dataset(records=()), require_positive=("nope",))


def test_composed_filters_commute(make_record, make_dataset):
    rng = random.Random(101)
    records = [
        make_record(
            firm_id=f"f{i}",
            year=rng.choice([2002, 2003]),
            country=rng.choice(["JP", "US"]),
            sector_class=rng.choice(["manufacturing", "non_manufacturing"]),
            workers=rng.randint(0, 30),
            capital=rng.choice([None, 0.0, 5.0]),
        )
        for i in range(100)
    ]
    d = make_dataset(*records)
    one = filter_dataset(
        filter_dataset(d, year=2003, min_workers=5), country="JP", require_positive=("capital",)
    )
    other = filter_dataset(
        filter_dataset(d, require_positive=("capital",), country="JP"), min_workers=5, year=2003
    )
    combined = filter_dataset(
        d, year=2003, country="JP", min_workers=5, require_positive=("capital",)
    )
    assert one.records == other.records == combined.records
    # brute-force oracle
    expected = tuple(
        r
        for r in records
        if r.year == 2003 and r.country == "JP" and r.workers >= 5
        and r.capital is not None and r.capital > 0
    )
    assert combined.records == expected


# ---------------------------------------------------------------------------
# record and dataset invariants
# ---------------------------------------------------------------------------


def test_record_rejects_negative_money(make_record):
    with pytest.raises(ValidationError):
        make_record(revenue=-1.0)
    with pytest.raises(ValidationError):
        make_record(depreciation=-0.5)


def test_record_rejects_bad_workers(make_record):
    with pytest.raises(ValidationError):
        make_record(workers=-1)
    with pytest.raises(ValidationError):
        make_record(workers=2.5)


def test_record_rejects_unknown_sector_class(make_record):
    with pytest.raises(ValidationError):
        make_record(sector_class="services")


def test_dataset_rejects_duplicate_keys(make_record):
    with pytest.raises(ValidationError, match="duplicate"):
        Dataset(records=(make_record(), make_record(revenue=1.0)))


def test_parse_accepts_byte_streams():
    raw = (HEADER + "\nF1,2003,JP,steel,manufacturing,100,40,10,,,,,,\n").encode("utf-8")
    report = parse_firm_records(io.BytesIO(raw))
    assert len(report.dataset) == 1
    assert report.dataset.records[0].firm_id == "F1"
