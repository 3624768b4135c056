"""Ordered-rule grouper replicating the shape of HRG-style if-else methodology.

Rules are evaluated strictly in order, first match wins. A record with no
burn area and no burn depth at any site is unclassifiable regardless of the
ruleset (a prerequisite for burn-tariff grouping). The genuine NHS rules are
unpublished; the packaged reference ruleset is a stand-in calibrated on the
synthetic generator so that all 13 ranks are populated.
"""

from __future__ import annotations

import json
from collections import Counter
from dataclasses import dataclass
from importlib import resources
from pathlib import Path

from .domain import CATEGORICAL, CORE_NUMERIC_FIELDS, NUMERIC, Dataset, Depth, PatientRecord
from .errors import InvalidArgument, RulesetError

RULESET_FORMAT_VERSION_KEY = "version"

OPERATORS = ("<", "<=", ">", ">=", "==", "!=", "in")

#: Features computed from the burn-site entries, available to rules alongside
#: the core numeric fields and any extra feature.
DERIVED_FEATURES: dict[str, str] = {
    "full_thickness_area": NUMERIC,
    "burned_site_count": NUMERIC,
}

UNCLASSIFIABLE = "U"

#: Kind used for extra features of an empty dataset, where numeric vs
#: categorical cannot be inferred; type checks are skipped for it.
UNKNOWN_KIND = "unknown"


@dataclass(frozen=True)
class Condition:
    feature: str
    op: str
    value: float | str | tuple

    def to_dict(self) -> dict:
        value = list(self.value) if isinstance(self.value, tuple) else self.value
        return {"feature": self.feature, "op": self.op, "value": value}


@dataclass(frozen=True)
class Rule:
    """Conjunction of atomic comparisons; empty conditions = catch-all."""

    conditions: tuple[Condition, ...]
    target_rank: int

    def to_dict(self) -> dict:
        return {"if": [c.to_dict() for c in self.conditions], "then": self.target_rank}


@dataclass(frozen=True)
class Ruleset:
    rules: tuple[Rule, ...]
    k: int
    version: str
    default_rank: int | None = None

    def to_dict(self) -> dict:
        d = {
            "version": self.version,
            "k": self.k,
            "rules": [r.to_dict() for r in self.rules],
        }
        if self.default_rank is not None:
            d["default"] = self.default_rank
        return d


def ruleset_from_dict(d: dict) -> Ruleset:
    try:
        rules = tuple(
            Rule(
                conditions=tuple(
                    Condition(
                        feature=c["feature"],
                        op=c["op"],
                        value=tuple(c["value"]) if isinstance(c["value"], list) else c["value"],
                    )
                    for c in r["if"]
                ),
                target_rank=int(r["then"]),
            )
            for r in d["rules"]
        )
        return Ruleset(
            rules=rules,
            k=int(d["k"]),
            version=str(d["version"]),
            default_rank=d.get("default"),
        )
    except (KeyError, TypeError) as e:
        raise RulesetError(f"malformed ruleset document: {e}")


def ruleset_to_json(rs: Ruleset) -> str:
    return json.dumps(rs.to_dict(), indent=2) + "\n"


def load_ruleset(path: str | Path) -> Ruleset:
    try:
        d = json.loads(Path(path).read_text(encoding="utf-8"))
    except json.JSONDecodeError as e:
        raise RulesetError(f"ruleset JSON parse error: {e}")
    return ruleset_from_dict(d)


def save_ruleset(rs: Ruleset, path: str | Path) -> None:
    Path(path).write_text(ruleset_to_json(rs), encoding="utf-8")


def reference_ruleset() -> Ruleset:
    """The packaged 13-class stand-in ruleset (TBSA bands plus depth and
    ventilation modifiers)."""
    text = resources.files("casemix").joinpath("data/reference_ruleset.json").read_text("utf-8")
    return ruleset_from_dict(json.loads(text))


def rule_feature_schema(ds: Dataset) -> dict[str, str]:
    """Feature name -> kind map a ruleset may reference for this dataset.
    Extra-feature kinds of an empty dataset are unknowable (CSV kind
    inference needs at least one value) and marked as such."""
    schema = {name: NUMERIC for name in CORE_NUMERIC_FIELDS}
    schema.update(DERIVED_FEATURES)
    if ds.records:
        schema.update(ds.extra_schema)
    else:
        schema.update({name: UNKNOWN_KIND for name in ds.extra_schema})
    return schema


def _feature_value(record: PatientRecord, name: str):
    if name in CORE_NUMERIC_FIELDS:
        return getattr(record, name)
    if name == "full_thickness_area":
        return sum(
            s.area_pct for s in record.burn_sites if s.depth is Depth.FULL and s.area_pct
        )
    if name == "burned_site_count":
        return sum(1 for s in record.burn_sites if s.area_pct)
    if name in record.extra_features:
        return record.extra_features[name]
    raise RulesetError(f"rule references unknown feature {name!r}")


def _condition_holds(cond: Condition, record: PatientRecord) -> bool:
    value = _feature_value(record, cond.feature)
    if value is None:
        return False  # missing never matches
    op = cond.op
    if op == "<":
        return value < cond.value
    if op == "<=":
        return value <= cond.value
    if op == ">":
        return value > cond.value
    if op == ">=":
        return value >= cond.value
    if op == "==":
        return value == cond.value
    if op == "!=":
        return value != cond.value
    if op == "in":
        return value in cond.value
    raise RulesetError(f"unknown operator {cond.op!r}")


def is_unclassifiable(record: PatientRecord) -> bool:
    """No burn area and no burn depth recorded at any of the 27 sites
    (missing cells count as unrecorded)."""
    return all(s.area_pct is None or s.area_pct == 0.0 for s in record.burn_sites) and all(
        s.depth is None or s.depth is Depth.NONE for s in record.burn_sites
    )


def classify(record: PatientRecord, rs: Ruleset) -> int | None:
    """First-match rank in [1, k], or None when the record is unclassifiable."""
    if is_unclassifiable(record):
        return None
    for rule in rs.rules:
        if all(_condition_holds(c, record) for c in rule.conditions):
            return rule.target_rank
    if rs.default_rank is not None:
        return rs.default_rank
    raise RulesetError("no rule matched and the ruleset declares no default rank")


def validate_ruleset(rs: Ruleset, schema: dict[str, str]) -> list[str]:
    """Check rank coverage, exhaustiveness, feature references, and operator
    typing; returns all violations (empty list = valid)."""
    violations: list[str] = []
    if rs.k < 1:
        violations.append(f"class count must be >= 1, got {rs.k}")
    covered = set()
    for i, rule in enumerate(rs.rules):
        if not 1 <= rule.target_rank <= rs.k:
            violations.append(f"rule {i}: target rank {rule.target_rank} outside [1, {rs.k}]")
        else:
            covered.add(rule.target_rank)
        for cond in rule.conditions:
            if cond.op not in OPERATORS:
                violations.append(f"rule {i}: unknown operator {cond.op!r}")
                continue
            if cond.feature not in schema:
                violations.append(f"rule {i}: unknown feature {cond.feature!r}")
                continue
            kind = schema[cond.feature]
            if kind == UNKNOWN_KIND:
                continue
            if cond.op == "in":
                if not isinstance(cond.value, tuple):
                    violations.append(f"rule {i}: 'in' needs a list value")
                    continue
                members = cond.value
            else:
                members = (cond.value,)
            for v in members:
                if kind == NUMERIC and not isinstance(v, (int, float)):
                    violations.append(
                        f"rule {i}: feature {cond.feature!r} is numeric, got {v!r}"
                    )
                elif kind == CATEGORICAL and not isinstance(v, str):
                    violations.append(
                        f"rule {i}: feature {cond.feature!r} is categorical, got {v!r}"
                    )
            if cond.op in ("<", "<=", ">", ">=") and kind == CATEGORICAL:
                violations.append(
                    f"rule {i}: ordering comparison on categorical feature {cond.feature!r}"
                )
    if rs.default_rank is not None and not 1 <= rs.default_rank <= rs.k:
        violations.append(f"default rank {rs.default_rank} outside [1, {rs.k}]")
    has_catch_all = any(not r.conditions for r in rs.rules) or rs.default_rank is not None
    if not has_catch_all:
        violations.append("non-exhaustive: no catch-all rule and no default rank")
    if rs.default_rank is None:
        # A declared default rank stands in for any number of missing
        # per-rank rules; without one, every rank needs at least one rule.
        uncovered = sorted(set(range(1, rs.k + 1)) - covered)
        if uncovered:
            violations.append(f"ranks with no rule and no default: {uncovered}")
    return violations


def classify_dataset(ds: Dataset, rs: Ruleset) -> tuple[list[int | None], dict]:
    """Classify every record; returns labels (None = unclassifiable) and a
    histogram over ranks plus the "U" bucket. Validates the ruleset first."""
    violations = validate_ruleset(rs, rule_feature_schema(ds))
    if violations:
        raise InvalidArgument("invalid ruleset: " + "; ".join(violations))
    labels = [classify(rec, rs) for rec in ds.records]
    histogram = Counter(UNCLASSIFIABLE if l is None else l for l in labels)
    return labels, dict(sorted(histogram.items(), key=lambda kv: (isinstance(kv[0], str), kv[0])))
