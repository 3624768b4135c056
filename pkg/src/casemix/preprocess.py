"""Cohort cleaning: variable pruning, zero-imputation, exclusions, log transform.

The full pipeline runs in a fixed order:

1. drop extra columns that are administrative or mostly missing (missingness
   must be assessed before imputation hides it),
2. impute zeros (missing numeric -> 0, missing categorical -> "none"),
3. remove unclassifiable records (no burn area or depth at any site),
4. remove outliers (LOS > 360 or cost > 1,000,000, strict),
5. drop extra columns that are constant or duplicates on the surviving rows.

Running the composition a second time is the identity.
"""

from __future__ import annotations

from dataclasses import dataclass, field, replace

import numpy as np

from .domain import CATEGORICAL_FILL, BurnSiteEntry, Dataset, Depth, PatientRecord
from .errors import InvalidArgument

LOS_OUTLIER = 360.0
COST_OUTLIER = 1_000_000.0

DEFAULT_MISSING_THRESHOLD = 0.6
DEFAULT_ADMIN_FIELDS = ("admission_year",)

_ALL_CRITERIA = ("administrative", "missing", "constant", "duplicate")


@dataclass
class PreprocessReport:
    """Row/column accounting for one preprocessing pass.

    Invariant: rows_out == rows_in - outliers_removed - unclassifiable_removed.
    """

    rows_in: int = 0
    rows_out: int = 0
    outliers_removed: int = 0
    outliers_by_reason: dict[str, int] = field(default_factory=dict)
    unclassifiable_removed: int = 0
    variables_dropped: dict[str, str] = field(default_factory=dict)
    cells_imputed: int = 0

    def reconciles(self) -> bool:
        return self.rows_out == self.rows_in - self.outliers_removed - self.unclassifiable_removed

    def to_dict(self) -> dict:
        return {
            "rows_in": self.rows_in,
            "rows_out": self.rows_out,
            "outliers_removed": self.outliers_removed,
            "outliers_by_reason": dict(self.outliers_by_reason),
            "unclassifiable_removed": self.unclassifiable_removed,
            "variables_dropped": dict(self.variables_dropped),
            "cells_imputed": self.cells_imputed,
        }


def count_missing_cells(ds: Dataset) -> int:
    total = 0
    for rec in ds.records:
        for name in ("age_years", "los_days", "total_cost", "tbsa_pct", "theatre_visits"):
            if getattr(rec, name) is None:
                total += 1
        for site in rec.burn_sites:
            total += (site.area_pct is None) + (site.depth is None)
        total += sum(1 for v in rec.extra_features.values() if v is None)
    return total


def _impute_record(rec: PatientRecord, extra_schema: dict[str, str]) -> PatientRecord:
    kwargs: dict = {}
    for name in ("age_years", "los_days", "total_cost", "tbsa_pct"):
        if getattr(rec, name) is None:
            kwargs[name] = 0.0
    if rec.theatre_visits is None:
        kwargs["theatre_visits"] = 0
    sites = tuple(
        BurnSiteEntry(
            s.site_code,
            0.0 if s.area_pct is None else s.area_pct,
            Depth.NONE if s.depth is None else s.depth,
        )
        for s in rec.burn_sites
    )
    extras = dict(rec.extra_features)
    for name, value in extras.items():
        if value is None:
            extras[name] = 0.0 if extra_schema.get(name) == "numeric" else CATEGORICAL_FILL
    return replace(rec, burn_sites=sites, extra_features=extras, **kwargs)


def impute_zeros(ds: Dataset) -> Dataset:
    """Replace every missing numeric cell with 0 and every missing
    categorical cell with the designated "none" level."""
    records = tuple(_impute_record(r, ds.extra_schema) for r in ds.records)
    return Dataset(records=records, extra_schema=dict(ds.extra_schema), labels=ds.labels)


def _is_unclassifiable(rec: PatientRecord) -> bool:
    return all(s.area_pct == 0.0 for s in rec.burn_sites) and all(
        s.depth is Depth.NONE for s in rec.burn_sites
    )


def remove_unclassifiable(ds: Dataset) -> tuple[Dataset, PreprocessReport]:
    """Drop records with no burn area and no burn depth at any of the 27
    sites. Expects zero-imputed data (missing cells do not count as zero)."""
    keep = [not _is_unclassifiable(r) for r in ds.records]
    records = tuple(r for r, k in zip(ds.records, keep) if k)
    labels = tuple(l for l, k in zip(ds.labels, keep) if k) if ds.labels is not None else None
    report = PreprocessReport(
        rows_in=len(ds.records),
        rows_out=len(records),
        unclassifiable_removed=len(ds.records) - len(records),
    )
    return Dataset(records, dict(ds.extra_schema), labels), report


def remove_outliers(ds: Dataset) -> tuple[Dataset, PreprocessReport]:
    """Drop records with LOS > 360 or cost > 1,000,000 (strict inequalities;
    boundary values are kept)."""
    keep = []
    by_reason = {"los_gt_360": 0, "cost_gt_1m": 0}
    for rec in ds.records:
        los_out = rec.los_days is not None and rec.los_days > LOS_OUTLIER
        cost_out = rec.total_cost is not None and rec.total_cost > COST_OUTLIER
        if los_out:
            by_reason["los_gt_360"] += 1
        if cost_out:
            by_reason["cost_gt_1m"] += 1
        keep.append(not (los_out or cost_out))
    records = tuple(r for r, k in zip(ds.records, keep) if k)
    labels = tuple(l for l, k in zip(ds.labels, keep) if k) if ds.labels is not None else None
    report = PreprocessReport(
        rows_in=len(ds.records),
        rows_out=len(records),
        outliers_removed=len(ds.records) - len(records),
        outliers_by_reason=by_reason,
    )
    return Dataset(records, dict(ds.extra_schema), labels), report


def _drop_columns(ds: Dataset, names: dict[str, str]) -> Dataset:
    if not names:
        return ds
    schema = {n: k for n, k in ds.extra_schema.items() if n not in names}
    records = tuple(
        replace(r, extra_features={n: v for n, v in r.extra_features.items() if n not in names})
        for r in ds.records
    )
    return Dataset(records, schema, ds.labels)


def drop_irrelevant_variables(
    ds: Dataset,
    missing_threshold: float = DEFAULT_MISSING_THRESHOLD,
    admin_fields: tuple[str, ...] = DEFAULT_ADMIN_FIELDS,
    criteria: tuple[str, ...] = _ALL_CRITERIA,
) -> tuple[Dataset, PreprocessReport]:
    """Remove extra-feature columns that are administrative, mostly missing,
    constant, or exact duplicates of an earlier column (first seen kept).

    Criteria are applied in that order and can be restricted via ``criteria``
    (the full pipeline assesses missingness before imputation and
    constants/duplicates after row exclusions).
    """
    n = len(ds.records)
    dropped: dict[str, str] = {}
    if "administrative" in criteria:
        for name in ds.extra_schema:
            if name in admin_fields:
                dropped[name] = "administrative"
    if "missing" in criteria and n > 0:
        for name in ds.extra_schema:
            if name in dropped:
                continue
            miss = sum(1 for r in ds.records if r.extra_features.get(name) is None)
            if miss / n > missing_threshold:
                dropped[name] = f"missing_fraction {miss / n:.3f} > {missing_threshold}"
    if "constant" in criteria and n > 0:
        for name in ds.extra_schema:
            if name in dropped:
                continue
            values = {r.extra_features.get(name) for r in ds.records}
            if len(values) <= 1:
                dropped[name] = "constant"
    if "duplicate" in criteria:
        seen: dict[tuple, str] = {}
        for name in ds.extra_schema:
            if name in dropped:
                continue
            column = tuple(r.extra_features.get(name) for r in ds.records)
            if column in seen:
                dropped[name] = f"duplicate_of:{seen[column]}"
            else:
                seen[column] = name
    out = _drop_columns(ds, dropped)
    report = PreprocessReport(rows_in=n, rows_out=n, variables_dropped=dropped)
    return out, report


def log1p_factor(values) -> np.ndarray:
    """Elementwise log(1 + x); strictly monotone, defined at 0 so
    zero-imputed factors stay in the domain."""
    arr = np.asarray(values, dtype=np.float64)
    if arr.size and np.nanmin(arr) < 0:
        raise InvalidArgument("log1p_factor requires non-negative values")
    return np.log1p(arr)


def preprocess(
    ds: Dataset,
    missing_threshold: float = DEFAULT_MISSING_THRESHOLD,
    admin_fields: tuple[str, ...] = DEFAULT_ADMIN_FIELDS,
) -> tuple[Dataset, PreprocessReport]:
    """Full cleaning pass in the fixed order documented in the module docstring."""
    rows_in = len(ds.records)
    ds1, rep_pre = drop_irrelevant_variables(
        ds, missing_threshold, admin_fields, criteria=("administrative", "missing")
    )
    cells = count_missing_cells(ds1)
    ds2 = impute_zeros(ds1)
    ds3, rep_uncls = remove_unclassifiable(ds2)
    ds4, rep_out = remove_outliers(ds3)
    ds5, rep_post = drop_irrelevant_variables(
        ds4, missing_threshold, admin_fields, criteria=("constant", "duplicate")
    )
    report = PreprocessReport(
        rows_in=rows_in,
        rows_out=len(ds5.records),
        outliers_removed=rep_out.outliers_removed,
        outliers_by_reason=rep_out.outliers_by_reason,
        unclassifiable_removed=rep_uncls.unclassifiable_removed,
        variables_dropped={**rep_pre.variables_dropped, **rep_post.variables_dropped},
        cells_imputed=cells,
    )
    assert report.reconciles(), "preprocess row accounting failed to reconcile"
    return ds5, report
