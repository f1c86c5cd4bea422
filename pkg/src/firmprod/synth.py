"""Synthetic firm populations with known ground truth.

Every estimator in this package is validated against data generated here:
the Cobb-Douglas generator plants exact (log_a, alpha, beta), the tail
sampler plants an exact power-law exponent, and the size-graded generator
plants a known productivity-size gradient.

Randomness uses numpy's PCG64 consumed in firm-major order: each firm owns
four consecutive uniform draws (size, size auxiliary, and a Box-Muller pair
for capital scatter and value noise), always all four. Growing n only
appends draws, so earlier firms are bit-identical across population sizes,
and output is stable across runs and platforms.
"""

from __future__ import annotations

import json
from dataclasses import dataclass, field, replace
from pathlib import Path

import numpy as np

from .errors import ConfigError, ValidationError
from .ingest import SECTOR_CLASSES, Dataset, FirmRecord


@dataclass(frozen=True)
class ParetoSize:
    """Worker counts from a power-law tail: P(X > x) = (x/xmin)**-mu."""

    mu: float
    xmin: float

    def __post_init__(self) -> None:
        if self.mu <= 0 or self.xmin <= 0:
            raise ValidationError("ParetoSize needs mu > 0 and xmin > 0")


@dataclass(frozen=True)
class LognormalSize:
    """Worker counts from exp(Normal(mean_log, sigma_log)) (natural log)."""

    mean_log: float
    sigma_log: float

    def __post_init__(self) -> None:
        if self.sigma_log < 0:
            raise ValidationError("sigma_log must be >= 0")


@dataclass(frozen=True)
class FixedSize:
    """Every firm gets the same worker count."""

    workers: float

    def __post_init__(self) -> None:
        if self.workers < 1:
            raise ValidationError("fixed size must be >= 1")


SizeDist = ParetoSize | LognormalSize | FixedSize


@dataclass(frozen=True)
class CapitalRule:
    """Capital from workers: coeff * L**exponent * 10**Normal(0, sigma).

    ``sigma`` adds independent log10 scatter; without it capital would be an
    exact function of workers and the log regression design would be rank
    deficient.
    """

    coeff: float = 1.0
    exponent: float = 1.0
    sigma: float = 0.3

    def __post_init__(self) -> None:
        if self.coeff <= 0:
            raise ValidationError("coeff must be > 0")
        if self.sigma < 0:
            raise ValidationError("sigma must be >= 0")


@dataclass(frozen=True)
class SynthSpec:
    """Ground truth and sampling plan for one synthetic firm population."""

    n: int
    log_a: float = 0.0
    alpha: float = 0.35
    beta: float = 0.6
    noise_sigma: float = 0.0
    size_dist: SizeDist = field(default_factory=lambda: LognormalSize(3.0, 1.0))
    capital_rule: CapitalRule = field(default_factory=CapitalRule)
    labor_share: float = 0.0
    seed: int = 0
    year: int = 2003
    country: str = "JP"
    sector_class: str = "manufacturing"
    n_sectors: int = 1
    currency_unit: str = "synthetic"

    def __post_init__(self) -> None:
        if self.n < 1:
            raise ValidationError(f"n must be >= 1, got {self.n}")
        if self.noise_sigma < 0:
            raise ValidationError("noise_sigma must be >= 0")
        if not 0 <= self.labor_share < 1:
            raise ValidationError(f"labor_share must lie in [0, 1), got {self.labor_share}")
        if self.seed < 0:
            raise ValidationError("seed must be a non-negative integer")
        if self.n_sectors < 1:
            raise ValidationError("n_sectors must be >= 1")
        if self.sector_class not in SECTOR_CLASSES:
            raise ValidationError(f"sector_class must be one of {SECTOR_CLASSES}")

    @classmethod
    def from_json(cls, path: str | Path) -> SynthSpec:
        with open(path, encoding="utf-8") as fh:
            raw = json.load(fh)
        if not isinstance(raw, dict):
            raise ConfigError(f"{path}: synth spec must be a JSON object")
        try:
            if "size_dist" in raw:
                raw["size_dist"] = _size_dist_from_json(raw["size_dist"])
            if "capital_rule" in raw:
                raw["capital_rule"] = CapitalRule(**raw["capital_rule"])
            return cls(**raw)
        except (TypeError, ValidationError) as exc:
            raise ConfigError(f"{path}: bad synth spec: {exc}") from exc


def _size_dist_from_json(raw: dict) -> SizeDist:
    kinds = {"pareto": ParetoSize, "lognormal": LognormalSize, "fixed": FixedSize}
    kind = raw.get("kind")
    if kind not in kinds:
        raise ConfigError(f"size_dist kind must be one of {sorted(kinds)}, got {kind!r}")
    params = {k: v for k, v in raw.items() if k != "kind"}
    return kinds[kind](**params)


def pareto_inverse_cdf(u: float | np.ndarray, mu: float, xmin: float) -> float | np.ndarray:
    """Map u in (0, 1] to the value with survival probability u: xmin * u**(-1/mu)."""
    return xmin * u ** (-1.0 / mu)


def gen_pareto_sample(mu: float, xmin: float, n: int, seed: int = 0) -> np.ndarray:
    """n inverse-transform draws from a power-law tail; all values >= xmin."""
    if mu <= 0 or xmin <= 0:
        raise ValidationError("gen_pareto_sample needs mu > 0 and xmin > 0")
    if n < 1:
        raise ValidationError("n must be >= 1")
    rng = np.random.default_rng(seed)
    u = 1.0 - rng.random(n)  # uniform on (0, 1]
    return pareto_inverse_cdf(u, mu, xmin)


def _box_muller(u1: np.ndarray, u2: np.ndarray) -> tuple[np.ndarray, np.ndarray]:
    """Two independent standard-normal arrays from two uniform arrays."""
    radius = np.sqrt(-2.0 * np.log1p(-u1))  # 1 - u1 lies in (0, 1], log is finite
    angle = 2.0 * np.pi * u2
    return radius * np.cos(angle), radius * np.sin(angle)


def _draw_all_workers(dist: SizeDist, u_size: np.ndarray, u_aux: np.ndarray) -> np.ndarray:
    if isinstance(dist, ParetoSize):
        raw = pareto_inverse_cdf(1.0 - u_size, dist.mu, dist.xmin)
    elif isinstance(dist, LognormalSize):
        z, _ = _box_muller(u_size, u_aux)
        raw = np.exp(dist.mean_log + dist.sigma_log * z)
    else:
        raw = np.full(len(u_size), float(dist.workers))
    return np.maximum(1, np.rint(raw)).astype(int)


def _money_fields(value: float, labor_share: float) -> dict[str, float]:
    """Financial fields whose measures reproduce ``value`` exactly.

    Gross margin equals ``value`` (revenue = 2v, cogs = v), labor cost makes
    the realized labor share equal the configured one, and the accounting
    components sum to the same added value as the labor-share form.
    """
    labor_cost = value * labor_share / (1.0 - labor_share)
    return {
        "revenue": 2.0 * value,
        "cogs": value,
        "total_labor_cost": labor_cost,
        "ordinary_income": value,
        "financial_expense": 0.0,
        "tax_public_charge": 0.0,
        "depreciation": 0.0,
    }


def gen_cobb_douglas_firms(spec: SynthSpec) -> Dataset:
    """Generate firm records satisfying the planted log-linear model.

    Per firm: draw workers from ``size_dist``, derive capital from
    ``capital_rule``, then set
    log10(value) = log_a + alpha*log10(capital) + beta*log10(workers) + eps
    with eps ~ Normal(0, noise_sigma). The worker and capital draws do not
    depend on ``noise_sigma``, so noisy and noiseless populations share the
    same firms.
    """
    rng = np.random.default_rng(spec.seed)
    draws = rng.random((spec.n, 4))
    workers = _draw_all_workers(spec.size_dist, draws[:, 0], draws[:, 1])
    z_capital, z_noise = _box_muller(draws[:, 2], draws[:, 3])

    rule = spec.capital_rule
    capital = rule.coeff * workers.astype(float) ** rule.exponent
    capital = capital * 10.0 ** (rule.sigma * z_capital)
    log_values = (
        spec.log_a
        + spec.alpha * np.log10(capital)
        + spec.beta * np.log10(workers.astype(float))
        + spec.noise_sigma * z_noise
    )
    values = 10.0 ** log_values

    records = []
    for i in range(spec.n):
        records.append(
            FirmRecord(
                firm_id=f"F{i:06d}",
                year=spec.year,
                country=spec.country,
                sector=f"S{i % spec.n_sectors:02d}",
                sector_class=spec.sector_class,
                workers=int(workers[i]),
                capital=float(capital[i]),
                **_money_fields(float(values[i]), spec.labor_share),
            )
        )
    return Dataset(
        records=tuple(records),
        currency_unit=spec.currency_unit,
        provenance=(f"synth(seed={spec.seed})",),
    )


def gen_size_graded_economy(base: SynthSpec, gradient: float) -> Dataset:
    """Rescale each firm's value by (workers / median_workers)**gradient.

    A positive gradient makes larger firms more productive; zero reproduces
    :func:`gen_cobb_douglas_firms` exactly. Capital is left untouched, so
    this generator targets size-dependence analyses, not fitting.
    """
    dataset = gen_cobb_douglas_firms(base)
    median_workers = float(np.median([r.workers for r in dataset.records]))
    graded = []
    for record in dataset.records:
        factor = (record.workers / median_workers) ** gradient
        value = (record.revenue - record.cogs) * factor
        graded.append(replace(record, **_money_fields(value, base.labor_share)))
    return Dataset(
        records=tuple(graded),
        currency_unit=dataset.currency_unit,
        provenance=(f"synth(seed={base.seed}, gradient={gradient})",),
    )
