"""Core domain types: patient records, datasets, and misclassification cost matrices.

Ranked class labels are plain integers in ``[1, k]`` throughout the package,
with rank 1 the least severe/costly group and rank ``k`` the most severe/costly.
Missing values are represented as ``None`` (never a numeric sentinel), so
zero-imputation is an explicit, auditable transform.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from enum import Enum

import numpy as np

from .errors import InvalidArgument

#: Anatomical burn-site labels for the 27 recorded sites. The exact site list
#: is configuration, not clinical truth; only the count is load-bearing.
SITE_CODES: tuple[str, ...] = (
    "head", "face", "neck", "chest", "abdomen", "upper_back", "lower_back",
    "buttocks", "perineum", "genitalia", "left_shoulder", "right_shoulder",
    "left_upper_arm", "right_upper_arm", "left_forearm", "right_forearm",
    "left_hand", "right_hand", "left_hip", "right_hip", "left_thigh",
    "right_thigh", "left_lower_leg", "right_lower_leg", "left_foot",
    "right_foot", "airway",
)

N_SITES = len(SITE_CODES)

CORE_NUMERIC_FIELDS = ("age_years", "los_days", "total_cost", "tbsa_pct", "theatre_visits")

#: The three resource/severity factors that drive target engineering.
FACTOR_FIELDS = ("los_days", "total_cost", "tbsa_pct")

NUMERIC = "numeric"
CATEGORICAL = "categorical"

#: Fill level used when a missing categorical cell is imputed.
CATEGORICAL_FILL = "none"


class Depth(str, Enum):
    """Recorded burn depth at one site; NONE means no burn at that site."""

    NONE = "none"
    SUPERFICIAL = "superficial"
    PARTIAL = "partial"
    FULL = "full"


@dataclass(frozen=True)
class BurnSiteEntry:
    """Burned area and depth at one of the 27 anatomical sites.

    ``area_pct`` / ``depth`` are None when the cell is missing (not yet
    imputed); ``Depth.NONE`` is the explicit "no burn here" value.
    """

    site_code: str
    area_pct: float | None
    depth: Depth | None


@dataclass(frozen=True)
class PatientRecord:
    """One burn-care episode.

    All numeric fields may be None (missing). ``extra_features`` holds any
    additional columns keyed by feature name; numeric extras are floats,
    categorical extras are strings.
    """

    id: str
    age_years: float | None
    los_days: float | None
    total_cost: float | None
    tbsa_pct: float | None
    theatre_visits: int | None
    burn_sites: tuple[BurnSiteEntry, ...]
    extra_features: dict[str, float | str | None] = field(default_factory=dict)


@dataclass(frozen=True)
class Dataset:
    """Ordered, immutable collection of records plus the extra-feature schema.

    ``extra_schema`` maps feature name to "numeric" or "categorical" in column
    order. ``labels`` optionally carries a ranked class per record.
    """

    records: tuple[PatientRecord, ...]
    extra_schema: dict[str, str] = field(default_factory=dict)
    labels: tuple[int, ...] | None = None

    def __post_init__(self):
        if self.labels is not None and len(self.labels) != len(self.records):
            raise InvalidArgument(
                f"labels length {len(self.labels)} != record count {len(self.records)}"
            )
        for name, kind in self.extra_schema.items():
            if kind not in (NUMERIC, CATEGORICAL):
                raise InvalidArgument(f"unknown schema kind {kind!r} for feature {name!r}")

    def __len__(self) -> int:
        return len(self.records)

    def factor_values(self, factor: str) -> np.ndarray:
        """Column of one core numeric field as float64 (missing -> nan)."""
        if factor not in CORE_NUMERIC_FIELDS:
            raise InvalidArgument(f"unknown factor {factor!r}")
        vals = [getattr(r, factor) for r in self.records]
        return np.array([np.nan if v is None else float(v) for v in vals], dtype=np.float64)


def validate_record(
    record: PatientRecord,
    extra_schema: dict[str, str],
    *,
    check_site_sum: bool = False,
) -> list[str]:
    """Check a record against the domain invariants.

    Returns a list of violation descriptions; an empty list means the record
    is valid. Never raises on bad data. ``check_site_sum`` additionally
    requires the site areas to sum to tbsa_pct within 1e-6 (a guarantee of
    the synthetic generator, not of arbitrary external data).
    """
    violations: list[str] = []
    if len(record.burn_sites) != N_SITES:
        violations.append(f"burn_sites count: expected {N_SITES}, got {len(record.burn_sites)}")
    codes = [s.site_code for s in record.burn_sites]
    if len(set(codes)) != len(codes):
        violations.append("burn_sites: duplicate site codes")
    if record.tbsa_pct is not None and not (0.0 <= record.tbsa_pct <= 100.0):
        violations.append(f"tbsa range: {record.tbsa_pct} not in [0, 100]")
    for name in ("age_years", "los_days", "total_cost"):
        v = getattr(record, name)
        if v is not None and v < 0:
            violations.append(f"{name} negative: {v}")
    if record.theatre_visits is not None and record.theatre_visits < 0:
        violations.append(f"theatre_visits negative: {record.theatre_visits}")
    for site in record.burn_sites:
        if site.area_pct is not None and site.area_pct < 0:
            violations.append(f"site {site.site_code} area negative: {site.area_pct}")

    for name, value in record.extra_features.items():
        if name not in extra_schema:
            violations.append(f"extra feature not in schema: {name}")
        elif value is not None:
            kind = extra_schema[name]
            if kind == NUMERIC and not isinstance(value, (int, float)):
                violations.append(f"extra feature {name}: expected numeric, got {value!r}")
            elif kind == CATEGORICAL and not isinstance(value, str):
                violations.append(f"extra feature {name}: expected categorical, got {value!r}")
    for name in extra_schema:
        if name not in record.extra_features:
            violations.append(f"extra feature missing: {name}")

    if check_site_sum and record.tbsa_pct is not None:
        areas = [s.area_pct for s in record.burn_sites]
        if all(a is not None for a in areas):
            total = sum(areas)
            if abs(total - record.tbsa_pct) > 1e-6:
                violations.append(
                    f"site areas sum {total} differs from tbsa_pct {record.tbsa_pct}"
                )
    return violations


@dataclass(frozen=True)
class CostMatrix:
    """K x K misclassification penalty; entry [i][j] is the cost of
    predicting rank j+1 when the true rank is i+1 (zero diagonal)."""

    entries: np.ndarray

    def __post_init__(self):
        arr = np.asarray(self.entries, dtype=np.float64)
        if arr.ndim != 2 or arr.shape[0] != arr.shape[1]:
            raise InvalidArgument(f"cost matrix must be square, got shape {arr.shape}")
        if arr.shape[0] < 1:
            raise InvalidArgument("cost matrix must have at least one class")
        if np.any(arr < 0):
            raise InvalidArgument("cost matrix entries must be non-negative")
        if np.any(np.diagonal(arr) != 0.0):
            raise InvalidArgument("cost matrix diagonal must be zero")
        object.__setattr__(self, "entries", arr)

    @property
    def k(self) -> int:
        return self.entries.shape[0]

    def cost(self, true_rank: int, pred_rank: int) -> float:
        """Penalty for predicting ``pred_rank`` when the truth is ``true_rank``."""
        return float(self.entries[true_rank - 1, pred_rank - 1])


def linear_cost_matrix(k: int) -> CostMatrix:
    """Default penalty: cost grows linearly with class distance, |i - j|."""
    if k < 2:
        raise InvalidArgument(f"linear cost matrix needs k >= 2, got {k}")
    idx = np.arange(k)
    return CostMatrix(np.abs(np.subtract.outer(idx, idx)).astype(np.float64))


def zero_one_cost_matrix(k: int) -> CostMatrix:
    """Plain misclassification loss: 1 off the diagonal, 0 on it."""
    if k < 2:
        raise InvalidArgument(f"zero-one cost matrix needs k >= 2, got {k}")
    return CostMatrix(np.ones((k, k)) - np.eye(k))
