"""Firm-level labor productivity analytics.

Covers the full pipeline from delimited firm financials to plot-ready data:
productivity and added-value measures, Cobb-Douglas production-function
estimation, rank-size / power-law tail analysis, a wage-equalization
reallocation simulator, and a seeded synthetic-economy generator used to
validate every estimator against known ground truth.
"""

from .equilibrium import (
    AdaptiveStep,
    DispersionStats,
    FixedStep,
    MarketContext,
    ReallocationTrace,
    TheoryFirm,
    TraceStep,
    equilibrium_dispersion,
    marginal_labor_productivity,
    optimal_labor,
    output,
    profit,
    simulate_reallocation,
)
from .ingest import (
    CsvSchema,
    Dataset,
    FirmRecord,
    MergePolicy,
    ParseReport,
    filter_dataset,
    merge_datasets,
    parse_firm_records,
    write_firm_records,
)
from .measures import (
    MacroContext,
    MacroEntry,
    ProductivityMeasure,
    SectorAggregate,
    ValueBasis,
    added_value,
    aggregate_by_sector,
    backout_nonmanufacturing_ratio,
    gdp_coverage,
    gross_margin,
    labor_productivity,
    size_sweep,
)
from .pareto import (
    ParetoFit,
    RankSizeSeries,
    TailSpec,
    fit_pareto,
    hill_estimate,
    pareto_time_series,
    rank_size,
)
from .production import (
    LogDesign,
    ProductionFit,
    ReturnsToScale,
    ScaleRegime,
    classify_returns,
    fit_by_stratum,
    fit_cobb_douglas,
    log_design,
    productivity_from_capital_ratio,
)
from .synth import (
    CapitalRule,
    FixedSize,
    LognormalSize,
    ParetoSize,
    SynthSpec,
    gen_cobb_douglas_firms,
    gen_pareto_sample,
    gen_size_graded_economy,
)

__version__ = "0.1.0"

__all__ = [
    "AdaptiveStep",
    "CapitalRule",
    "CsvSchema",
    "Dataset",
    "DispersionStats",
    "FirmRecord",
    "FixedSize",
    "FixedStep",
    "LogDesign",
    "LognormalSize",
    "MacroContext",
    "MacroEntry",
    "MarketContext",
    "MergePolicy",
    "ParetoFit",
    "ParetoSize",
    "ParseReport",
    "ProductionFit",
    "ProductivityMeasure",
    "RankSizeSeries",
    "ReallocationTrace",
    "ReturnsToScale",
    "ScaleRegime",
    "SectorAggregate",
    "SynthSpec",
    "TailSpec",
    "TheoryFirm",
    "TraceStep",
    "ValueBasis",
    "added_value",
    "aggregate_by_sector",
    "backout_nonmanufacturing_ratio",
    "classify_returns",
    "equilibrium_dispersion",
    "filter_dataset",
    "fit_by_stratum",
    "fit_cobb_douglas",
    "fit_pareto",
    "gdp_coverage",
    "gen_cobb_douglas_firms",
    "gen_pareto_sample",
    "gen_size_graded_economy",
    "gross_margin",
    "hill_estimate",
    "labor_productivity",
    "log_design",
    "marginal_labor_productivity",
    "merge_datasets",
    "optimal_labor",
    "output",
    "pareto_time_series",
    "parse_firm_records",
    "productivity_from_capital_ratio",
    "profit",
    "rank_size",
    "simulate_reallocation",
    "size_sweep",
    "write_firm_records",
]
