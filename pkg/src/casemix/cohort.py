"""Deterministic synthetic burn cohort generator.

Stands in for the proprietary patient extract: produces records whose
log(LOS), log(cost) and log(TBSA) are positively correlated, with a severity
mixture that leaves minority classes for oversampling to fix, plus injected
outliers and unclassifiable (no recorded burn) episodes.

Randomness is a counter-based generator (Philox) keyed by
(seed, record index, field tag), so generation is order-independent: any
record can be produced in isolation and parallel generation is byte-identical
to sequential. The marginal distributions are admitted fiction; only the
correlation structure and the injected edge cases are load-bearing.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, replace

import numpy as np

from .domain import (
    CATEGORICAL,
    N_SITES,
    NUMERIC,
    SITE_CODES,
    BurnSiteEntry,
    Dataset,
    Depth,
    PatientRecord,
)
from .errors import InvalidArgument

# Field tags for RNG keying. Values are stable identifiers; do not reorder.
_TAG_SEVERITY = 0
_TAG_TBSA = 1
_TAG_SITES = 2
_TAG_LOS = 3
_TAG_COST = 4
_TAG_THEATRE = 5
_TAG_EXTRAS = 6
_TAG_SPECIAL = 7
_TAG_MISSING = 8

# Natural LOS/cost are truncated at the outlier thresholds, so every record
# beyond them was injected; this keeps the injection rate observable.
LOS_OUTLIER_THRESHOLD = 360.0
COST_OUTLIER_THRESHOLD = 1_000_000.0

EXTRA_SCHEMA: dict[str, str] = {
    "sex": CATEGORICAL,
    "burn_mechanism": CATEGORICAL,
    "inhalation_injury": CATEGORICAL,
    "ventilation_days": NUMERIC,
    "skin_graft": CATEGORICAL,
    "admission_year": NUMERIC,
    "care_setting": CATEGORICAL,
}

_MECHANISMS = ("scald", "flame", "contact", "chemical", "electrical")
_MECHANISM_P = (
    (0.62, 0.10, 0.18, 0.06, 0.04),  # minor
    (0.45, 0.32, 0.13, 0.06, 0.04),  # moderate
    (0.20, 0.62, 0.08, 0.06, 0.04),  # major
)
_DEPTH_P = (
    (0.72, 0.26, 0.02),  # minor: superficial / partial / full
    (0.40, 0.50, 0.10),
    (0.18, 0.52, 0.30),
)
_INHALATION_P = (0.01, 0.05, 0.30)


@dataclass(frozen=True)
class CohortConfig:
    """Generator knobs; all randomness flows from ``seed``."""

    n: int
    seed: int
    severity_weights: tuple[float, float, float] = (0.6, 0.3, 0.1)
    los_noise: float = 0.5
    cost_noise: float = 0.45
    outlier_rate: float = 0.01
    unclassifiable_rate: float = 0.02

    def __post_init__(self):
        if not isinstance(self.n, int) or isinstance(self.n, bool):
            raise InvalidArgument(f"cohort size must be an integer, got {self.n!r}")
        if not isinstance(self.seed, int) or isinstance(self.seed, bool):
            raise InvalidArgument(f"seed must be an integer, got {self.seed!r}")
        for name in ("los_noise", "cost_noise", "outlier_rate", "unclassifiable_rate"):
            if not isinstance(getattr(self, name), (int, float)):
                raise InvalidArgument(f"{name} must be a number, got {getattr(self, name)!r}")
        if self.n < 1:
            raise InvalidArgument(f"cohort size must be >= 1, got {self.n}")
        if len(self.severity_weights) != 3 or not all(
            isinstance(w, (int, float)) and w >= 0 for w in self.severity_weights
        ):
            raise InvalidArgument("severity_weights must be three non-negative numbers")
        if abs(sum(self.severity_weights) - 1.0) > 1e-9:
            raise InvalidArgument("severity_weights must sum to 1")
        if self.los_noise <= 0 or self.cost_noise <= 0:
            raise InvalidArgument("noise scales must be positive")
        for name in ("outlier_rate", "unclassifiable_rate"):
            v = getattr(self, name)
            if not 0.0 <= v <= 1.0:
                raise InvalidArgument(f"{name} must be in [0, 1], got {v}")
        if self.outlier_rate + self.unclassifiable_rate > 1.0:
            raise InvalidArgument("outlier_rate + unclassifiable_rate must be <= 1")

    @classmethod
    def from_dict(cls, d: dict) -> "CohortConfig":
        kwargs = dict(d)
        if "severity_weights" in kwargs:
            kwargs["severity_weights"] = tuple(kwargs["severity_weights"])
        try:
            return cls(**kwargs)
        except (TypeError, ValueError) as e:
            raise InvalidArgument(f"bad cohort config: {e}")

    def to_dict(self) -> dict:
        return {
            "n": self.n,
            "seed": self.seed,
            "severity_weights": list(self.severity_weights),
            "los_noise": self.los_noise,
            "cost_noise": self.cost_noise,
            "outlier_rate": self.outlier_rate,
            "unclassifiable_rate": self.unclassifiable_rate,
        }


def _rng(seed: int, index: int, tag: int) -> np.random.Generator:
    ss = np.random.SeedSequence(entropy=seed, spawn_key=(index, tag))
    return np.random.Generator(np.random.Philox(ss))


def _draw_tbsa(severity: int, g: np.random.Generator) -> float:
    if severity == 0:
        raw = 0.1 + g.gamma(2.0, 0.7)
    elif severity == 1:
        raw = 3.0 + g.gamma(2.5, 2.0)
    else:
        raw = 12.0 + g.gamma(2.2, 8.0)
    return min(raw, 92.0)


def _draw_sites(severity: int, tbsa: float, g: np.random.Generator):
    n_sites = 1 + int(g.poisson(0.35 + 0.09 * tbsa))
    n_sites = min(n_sites, N_SITES)
    chosen = sorted(int(i) for i in g.choice(N_SITES, size=n_sites, replace=False))
    props = g.dirichlet(np.full(n_sites, 1.5))
    areas = [round(float(p) * tbsa, 2) for p in props]
    if sum(areas) == 0.0:
        areas[0] = max(round(tbsa, 2), 0.01)
    p_sup, p_part, p_full = _DEPTH_P[severity]
    depths = [
        (Depth.SUPERFICIAL, Depth.PARTIAL, Depth.FULL)[int(g.choice(3, p=(p_sup, p_part, p_full)))]
        for _ in chosen
    ]
    sites = []
    it = iter(zip(chosen, areas, depths))
    nxt = next(it, None)
    for i in range(N_SITES):
        if nxt is not None and nxt[0] == i:
            sites.append(BurnSiteEntry(SITE_CODES[i], nxt[1], nxt[2]))
            nxt = next(it, None)
        else:
            sites.append(BurnSiteEntry(SITE_CODES[i], 0.0, Depth.NONE))
    return tuple(sites)


def _empty_sites() -> tuple[BurnSiteEntry, ...]:
    return tuple(BurnSiteEntry(code, 0.0, Depth.NONE) for code in SITE_CODES)


def _generate_record(config: CohortConfig, index: int) -> PatientRecord:
    seed = config.seed
    severity = int(
        _rng(seed, index, _TAG_SEVERITY).choice(3, p=np.asarray(config.severity_weights))
    )
    g_tbsa = _rng(seed, index, _TAG_TBSA)
    tbsa_raw = _draw_tbsa(severity, g_tbsa)
    sites = _draw_sites(severity, tbsa_raw, _rng(seed, index, _TAG_SITES))
    tbsa = sum(s.area_pct for s in sites)

    g_los = _rng(seed, index, _TAG_LOS)
    if severity == 0 and g_los.uniform() < 0.35:
        los = 0.0  # day attendance, no overnight stay
    else:
        mu = 0.4 + 1.05 * math.log1p(tbsa)
        los = round(max(math.expm1(g_los.normal(mu, config.los_noise)), 0.0), 1)
        los = min(los, LOS_OUTLIER_THRESHOLD)

    theatre = int(_rng(seed, index, _TAG_THEATRE).poisson(0.15 + 0.22 * tbsa))

    g_cost = _rng(seed, index, _TAG_COST)
    mu_c = (
        5.8
        + 0.45 * math.log1p(tbsa)
        + 0.5 * math.log1p(los)
        + 0.4 * math.log1p(theatre)
    )
    cost = round(math.exp(g_cost.normal(mu_c, config.cost_noise)), 2)
    cost = min(cost, COST_OUTLIER_THRESHOLD)

    g = _rng(seed, index, _TAG_EXTRAS)
    sex = "F" if g.uniform() < 0.5 else "M"
    mechanism = _MECHANISMS[int(g.choice(5, p=_MECHANISM_P[severity]))]
    inhalation = "yes" if g.uniform() < _INHALATION_P[severity] else "no"
    if severity == 2 and g.uniform() < 0.45:
        ventilation = round(float(g.gamma(2.0, max(tbsa / 12.0, 0.5))), 1)
    elif severity == 1 and g.uniform() < 0.06:
        ventilation = round(float(g.gamma(1.5, 1.0)), 1)
    else:
        ventilation = 0.0
    full_area = sum(s.area_pct for s in sites if s.depth is Depth.FULL)
    graft = "yes" if g.uniform() < 1.0 - math.exp(-full_area / 6.0) else "no"
    year = 2003 + int(g.integers(0, 17))
    age = round(float(g.uniform(0.1, 15.9)), 1)

    extras: dict[str, float | str | None] = {
        "sex": sex,
        "burn_mechanism": mechanism,
        "inhalation_injury": inhalation,
        "ventilation_days": ventilation,
        "skin_graft": graft,
        "admission_year": float(year),
        "care_setting": "specialist",
    }

    g_special = _rng(seed, index, _TAG_SPECIAL)
    u = g_special.uniform()
    if u < config.outlier_rate:
        if g_special.uniform() < 0.5:
            los = round(361.0 + float(g_special.gamma(2.0, 60.0)), 1)
        else:
            cost = round(1_000_001.0 + float(g_special.gamma(2.0, 300_000.0)), 2)
    elif u < config.outlier_rate + config.unclassifiable_rate:
        # Episode with no recorded burn: ineligible for burn-tariff grouping.
        sites = _empty_sites()
        tbsa = 0.0
        los = round(float(g_special.uniform(0.0, 0.4)), 1)
        cost = round(float(g_special.uniform(50.0, 400.0)), 2)
        theatre = 0
        extras["ventilation_days"] = 0.0
        extras["inhalation_injury"] = "no"
        extras["skin_graft"] = "no"

    return PatientRecord(
        id=f"P{index:06d}",
        age_years=age,
        los_days=los,
        total_cost=cost,
        tbsa_pct=tbsa,
        theatre_visits=theatre,
        burn_sites=sites,
        extra_features=extras,
    )


def generate_cohort(config: CohortConfig) -> Dataset:
    """Generate ``config.n`` records deterministically from ``config.seed``."""
    if config.n < 1:
        raise InvalidArgument(f"cohort size must be >= 1, got {config.n}")
    records = tuple(_generate_record(config, i) for i in range(config.n))
    return Dataset(records=records, extra_schema=dict(EXTRA_SCHEMA))


def _eligible_cells(record: PatientRecord) -> list[str]:
    """Cells that may be blanked: those whose value is the zero/none the
    imputation step would restore (fields are left empty when the value is
    zero or not applicable)."""
    cells = []
    for name in ("los_days", "total_cost", "tbsa_pct"):
        if getattr(record, name) == 0.0:
            cells.append(name)
    if record.theatre_visits == 0:
        cells.append("theatre_visits")
    for i, site in enumerate(record.burn_sites):
        if site.area_pct == 0.0:
            cells.append(f"area:{i}")
        if site.depth is Depth.NONE:
            cells.append(f"depth:{i}")
    for name, value in record.extra_features.items():
        if value == 0.0 or value == "none":
            cells.append(f"extra:{name}")
    return cells


def _blank_cells(record: PatientRecord, cells: set[str]) -> PatientRecord:
    kwargs: dict = {}
    for name in ("los_days", "total_cost", "tbsa_pct"):
        if name in cells:
            kwargs[name] = None
    if "theatre_visits" in cells:
        kwargs["theatre_visits"] = None
    sites = list(record.burn_sites)
    for i, site in enumerate(sites):
        area = None if f"area:{i}" in cells else site.area_pct
        depth = None if f"depth:{i}" in cells else site.depth
        if area is not site.area_pct or depth is not site.depth:
            sites[i] = BurnSiteEntry(site.site_code, area, depth)
    extras = dict(record.extra_features)
    for name in record.extra_features:
        if f"extra:{name}" in cells:
            extras[name] = None
    return replace(record, burn_sites=tuple(sites), extra_features=extras, **kwargs)


def inject_missingness(ds: Dataset, rate: float, seed: int) -> Dataset:
    """Blank a fraction of eligible cells (those holding zero/none values),
    deterministically per seed. rate=0 is the identity; rate=1 blanks every
    eligible cell."""
    if not 0.0 <= rate <= 1.0:
        raise InvalidArgument(f"missingness rate must be in [0, 1], got {rate}")
    if rate == 0.0:
        return ds
    records = []
    for i, rec in enumerate(ds.records):
        eligible = _eligible_cells(rec)
        if not eligible:
            records.append(rec)
            continue
        g = _rng(seed, i, _TAG_MISSING)
        draws = g.uniform(size=len(eligible))
        chosen = {cell for cell, u in zip(eligible, draws) if u < rate}
        records.append(_blank_cells(rec, chosen) if chosen else rec)
    return Dataset(records=tuple(records), extra_schema=dict(ds.extra_schema), labels=ds.labels)
