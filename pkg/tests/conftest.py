from __future__ import annotations

import pytest

from firmprod import Dataset, FirmRecord, MacroContext


@pytest.fixture
def make_record():
    """Factory for valid firm records with sensible defaults."""

    def make(**overrides) -> FirmRecord:
        values = dict(
            firm_id="F000001",
            year=2003,
            country="JP",
            sector="steel",
            sector_class="manufacturing",
            revenue=100.0,
            cogs=40.0,
            workers=10,
            total_labor_cost=30.0,
            capital=50.0,
        )
        values.update(overrides)
        return FirmRecord(**values)

    return make


@pytest.fixture
def make_dataset():
    def make(*records: FirmRecord, currency_unit: str = "kJPY") -> Dataset:
        return Dataset(records=tuple(records), currency_unit=currency_unit)

    return make


@pytest.fixture
def macro_jp2003():
    return MacroContext.from_rows(
        [{"country": "JP", "year": 2003, "labor_share": 1.0 / 3.0, "gdp": 1000.0}]
    )
