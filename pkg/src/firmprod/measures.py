"""Productivity and added-value measures, sector aggregates, and size sweeps.

Added value is computed either from gross margin and a macroeconomic labor
share (gross_margin / (1 - labor_share)) or as the five-component accounting
sum (ordinary income + labor cost + financial expense + taxes and public
charges + depreciation). Per-worker productivity divides the chosen value
by the full-time worker count.

All summations run left to right in record order, so aggregate results are
bit-stable for a given dataset.
"""

from __future__ import annotations

import json
from collections.abc import Iterable, Mapping, Sequence
from dataclasses import dataclass
from enum import Enum
from pathlib import Path

from .errors import (
    ConfigError,
    DegenerateShareError,
    IncompleteRecordError,
    MacroContextError,
    ValidationError,
    ZeroWorkersError,
)
from .ingest import Dataset, FirmRecord


class ValueBasis(Enum):
    """Which value measure feeds the productivity numerator."""

    GROSS_MARGIN = "gross_margin"
    ADDED_VALUE_LABOR_SHARE = "added_value_labor_share"
    ADDED_VALUE_COMPONENTS = "added_value_components"


_ADDED_VALUE_BASES = (ValueBasis.ADDED_VALUE_LABOR_SHARE, ValueBasis.ADDED_VALUE_COMPONENTS)

#: Components of the accounting-sum added value, in summation order.
COMPONENT_FIELDS = (
    "ordinary_income",
    "total_labor_cost",
    "financial_expense",
    "tax_public_charge",
    "depreciation",
)


@dataclass(frozen=True)
class MacroEntry:
    """Macro quantities for one (country, year): labor share, GDP, FX rate."""

    labor_share: float
    gdp: float | None = None
    exchange_rate: float | None = None

    def __post_init__(self) -> None:
        if self.labor_share < 0:
            raise ValidationError(f"labor_share must be >= 0, got {self.labor_share}")
        if self.labor_share >= 1:
            raise DegenerateShareError(
                f"labor_share must be < 1, got {self.labor_share}"
            )
        if self.gdp is not None and self.gdp <= 0:
            raise ValidationError(f"gdp must be > 0 where present, got {self.gdp}")
        if self.exchange_rate is not None and self.exchange_rate <= 0:
            raise ValidationError(f"exchange_rate must be > 0, got {self.exchange_rate}")


class MacroContext:
    """Lookup table of :class:`MacroEntry` keyed by (country, year)."""

    def __init__(self, entries: Mapping[tuple[str, int], MacroEntry]):
        self._entries = dict(entries)

    @classmethod
    def from_rows(cls, rows: Iterable[Mapping[str, object]]) -> MacroContext:
        entries: dict[tuple[str, int], MacroEntry] = {}
        for row in rows:
            try:
                country = str(row["country"])
                year = int(row["year"])  # type: ignore[arg-type]
                entry = MacroEntry(
                    labor_share=float(row["labor_share"]),  # type: ignore[arg-type]
                    gdp=None if row.get("gdp") is None else float(row["gdp"]),  # type: ignore[arg-type]
                    exchange_rate=(
                        None
                        if row.get("exchange_rate") is None
                        else float(row["exchange_rate"])  # type: ignore[arg-type]
                    ),
                )
            except (KeyError, TypeError, ValueError) as exc:
                raise ConfigError(f"bad macro entry {row!r}: {exc}") from exc
            entries[(country, year)] = entry
        return cls(entries)

    @classmethod
    def from_json(cls, path: str | Path) -> MacroContext:
        with open(path, encoding="utf-8") as fh:
            raw = json.load(fh)
        if isinstance(raw, dict) and "entries" in raw:
            raw = raw["entries"]
        if not isinstance(raw, list):
            raise ConfigError(f"{path}: macro file must be a JSON list of entries")
        return cls.from_rows(raw)

    def entry(self, country: str, year: int) -> MacroEntry:
        try:
            return self._entries[(country, year)]
        except KeyError:
            raise MacroContextError(f"no macro entry for ({country}, {year})") from None

    def labor_share(self, country: str, year: int) -> float:
        return self.entry(country, year).labor_share

    def gdp(self, country: str, year: int) -> float:
        gdp = self.entry(country, year).gdp
        if gdp is None:
            raise MacroContextError(f"no GDP recorded for ({country}, {year})")
        return gdp

    def keys(self) -> tuple[tuple[str, int], ...]:
        return tuple(sorted(self._entries))


@dataclass(frozen=True)
class ProductivityMeasure:
    """Per-worker value for one record under a declared basis."""

    basis: ValueBasis
    value: float
    workers: int

    def __post_init__(self) -> None:
        if self.workers <= 0:
            raise ValidationError(f"workers must be > 0, got {self.workers}")


@dataclass(frozen=True)
class SectorAggregate:
    """Pooled totals and productivity for one sector."""

    total_value: float
    total_workers: int
    productivity: float
    n_firms: int


def gross_margin(r: FirmRecord) -> float:
    """Revenue minus cost of goods sold; negative margins pass through."""
    return r.revenue - r.cogs


def added_value(r: FirmRecord, basis: ValueBasis, ctx: MacroContext | None = None) -> float:
    """Added value under the chosen definition.

    The labor-share form needs a macro context entry for the record's
    (country, year); the components form needs every accounting component
    present on the record.
    """
    if basis is ValueBasis.ADDED_VALUE_LABOR_SHARE:
        if ctx is None:
            raise MacroContextError("labor-share added value requires a MacroContext")
        share = ctx.labor_share(r.country, r.year)
        if share >= 1:
            raise DegenerateShareError(f"labor_share must be < 1, got {share}")
        return gross_margin(r) / (1.0 - share)
    if basis is ValueBasis.ADDED_VALUE_COMPONENTS:
        missing = [name for name in COMPONENT_FIELDS if getattr(r, name) is None]
        if missing:
            raise IncompleteRecordError(
                f"record ({r.firm_id}, {r.year}) lacks components: {', '.join(missing)}"
            )
        total = 0.0
        for name in COMPONENT_FIELDS:
            total += getattr(r, name)
        return total
    raise ValueError(f"not an added-value basis: {basis}")


def _value(r: FirmRecord, basis: ValueBasis, ctx: MacroContext | None) -> float:
    if basis is ValueBasis.GROSS_MARGIN:
        return gross_margin(r)
    return added_value(r, basis, ctx)


def labor_productivity(
    r: FirmRecord,
    basis: ValueBasis = ValueBasis.GROSS_MARGIN,
    ctx: MacroContext | None = None,
) -> ProductivityMeasure:
    """Value per worker. Records with zero workers are refused, never inf."""
    if r.workers == 0:
        raise ZeroWorkersError(f"record ({r.firm_id}, {r.year}) has zero workers")
    return ProductivityMeasure(
        basis=basis,
        value=_value(r, basis, ctx) / r.workers,
        workers=r.workers,
    )


def aggregate_by_sector(
    d: Dataset,
    basis: ValueBasis = ValueBasis.GROSS_MARGIN,
    ctx: MacroContext | None = None,
    mode: str = "pooled",
) -> dict[str, SectorAggregate]:
    """Group records by sector and compute sector-level productivity.

    ``pooled`` (default) treats the sector as one firm: sum of values over
    sum of workers. ``mean`` averages per-firm ratios instead. Sectors with
    no records simply do not appear.
    """
    if mode not in ("pooled", "mean"):
        raise ValueError(f"mode must be 'pooled' or 'mean', got {mode!r}")
    groups: dict[str, list[FirmRecord]] = {}
    for record in d.records:
        groups.setdefault(record.sector, []).append(record)

    out: dict[str, SectorAggregate] = {}
    for sector, members in groups.items():
        total_value = 0.0
        total_workers = 0
        ratio_sum = 0.0
        for record in members:
            if record.workers == 0:
                raise ZeroWorkersError(
                    f"record ({record.firm_id}, {record.year}) has zero workers; "
                    "filter with require_positive=('workers',) first"
                )
            value = _value(record, basis, ctx)
            total_value += value
            total_workers += record.workers
            ratio_sum += value / record.workers
        if mode == "pooled":
            productivity = total_value / total_workers
        else:
            productivity = ratio_sum / len(members)
        out[sector] = SectorAggregate(
            total_value=total_value,
            total_workers=total_workers,
            productivity=productivity,
            n_firms=len(members),
        )
    return out


def gdp_coverage(
    d: Dataset,
    ctx: MacroContext,
    year: int,
    basis: ValueBasis = ValueBasis.ADDED_VALUE_LABOR_SHARE,
    country: str | None = None,
) -> float:
    """Aggregated added value of the covered firms divided by GDP.

    Not clamped: a value above 1 is reported as is. An empty selection
    yields 0 without requiring a GDP entry.
    """
    records = [r for r in d.records if r.year == year]
    if country is not None:
        records = [r for r in records if r.country == country]
    if not records:
        return 0.0
    countries = {r.country for r in records}
    if len(countries) > 1:
        raise ValueError(
            f"records for year {year} span countries {sorted(countries)}; pass country="
        )
    (resolved,) = countries
    total = 0.0
    for record in records:
        total += added_value(record, basis, ctx)
    return total / ctx.gdp(resolved, year)


def backout_nonmanufacturing_ratio(
    share_mfg: float,
    mfg_ratio: float,
    overall_ratio: float,
) -> float:
    """Solve the convex combination share*mfg + (1 - share)*x = overall for x.

    Recovers the non-manufacturing productivity ratio implied by an overall
    ratio, the manufacturing ratio, and manufacturing's output share.
    """
    if not 0.0 < share_mfg < 1.0:
        raise ValueError(
            f"share_mfg must lie strictly between 0 and 1, got {share_mfg}"
            + (" (division degenerates at 1)" if share_mfg == 1.0 else "")
        )
    return (overall_ratio - share_mfg * mfg_ratio) / (1.0 - share_mfg)


def size_sweep(
    d: Dataset,
    thresholds: Sequence[int],
    basis: ValueBasis = ValueBasis.GROSS_MARGIN,
    ctx: MacroContext | None = None,
    mode: str = "pooled",
) -> dict[int, float | None]:
    """Productivity of firms at or above each worker-count threshold.

    Thresholds must be strictly ascending; the cut is inclusive
    (workers >= t). A threshold excluding every firm maps to ``None``.
    """
    if mode not in ("pooled", "mean"):
        raise ValueError(f"mode must be 'pooled' or 'mean', got {mode!r}")
    if any(b <= a for a, b in zip(thresholds, thresholds[1:])):
        raise ValueError(f"thresholds must be strictly ascending, got {list(thresholds)}")

    out: dict[int, float | None] = {}
    for threshold in thresholds:
        total_value = 0.0
        total_workers = 0
        ratio_sum = 0.0
        n = 0
        for record in d.records:
            if record.workers < threshold or record.workers == 0:
                continue
            value = _value(record, basis, ctx)
            total_value += value
            total_workers += record.workers
            ratio_sum += value / record.workers
            n += 1
        if n == 0:
            out[threshold] = None
        elif mode == "pooled":
            out[threshold] = total_value / total_workers
        else:
            out[threshold] = ratio_sum / n
    return out
