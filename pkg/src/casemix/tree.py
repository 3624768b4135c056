"""Cost-sensitive CART over mixed numeric/categorical features.

Cost sensitivity enters twice: split quality is the generalized Gini
impurity sum(L[i][j] * p_i * p_j) under an arbitrary zero-diagonal loss
matrix, and each leaf is labeled with the rank minimizing expected
misclassification cost. Pruning is weakest-link cost-complexity with the
same expected-cost risk functional.

Determinism contract: candidate splits are scanned in schema order, numeric
thresholds ascending, categorical subsets in canonical order; ties keep the
first candidate. Identical inputs always produce identical trees.
"""

from __future__ import annotations

import json
import math
from dataclasses import dataclass, field

import numpy as np

from .domain import CATEGORICAL, NUMERIC, CostMatrix
from .errors import InvalidArgument, TreeFormatError

TREE_FORMAT_VERSION = "1"

#: Categorical features with more levels than this use the ordered scan
#: (levels sorted by mean label rank, prefix subsets) instead of an
#: exhaustive subset scan.
MAX_EXHAUSTIVE_LEVELS = 10


@dataclass(frozen=True)
class TreeParams:
    min_split: int = 20
    min_leaf: int = 7
    max_depth: int = 30
    cp: float = 0.01

    def __post_init__(self):
        if self.min_leaf < 1:
            raise InvalidArgument(f"min_leaf must be >= 1, got {self.min_leaf}")
        if self.min_split < 2 * self.min_leaf:
            raise InvalidArgument(
                f"min_split ({self.min_split}) must be >= 2 * min_leaf ({self.min_leaf})"
            )
        if self.max_depth < 1:
            raise InvalidArgument(f"max_depth must be >= 1, got {self.max_depth}")
        if self.cp < 0:
            raise InvalidArgument(f"cp must be >= 0, got {self.cp}")

    def to_dict(self) -> dict:
        return {
            "min_split": self.min_split,
            "min_leaf": self.min_leaf,
            "max_depth": self.max_depth,
            "cp": self.cp,
        }

    @classmethod
    def from_dict(cls, d: dict) -> "TreeParams":
        return cls(
            min_split=int(d["min_split"]),
            min_leaf=int(d["min_leaf"]),
            max_depth=int(d["max_depth"]),
            cp=float(d["cp"]),
        )


@dataclass(frozen=True)
class FeatureTable:
    """Column store the tree trains on: float64 arrays for numeric features
    (nan = missing), object arrays of str/None for categorical."""

    names: tuple[str, ...]
    kinds: tuple[str, ...]
    columns: tuple[np.ndarray, ...]

    def __post_init__(self):
        if not (len(self.names) == len(self.kinds) == len(self.columns)):
            raise InvalidArgument("names, kinds and columns must align")
        lengths = {len(c) for c in self.columns}
        if len(lengths) > 1:
            raise InvalidArgument("all columns must have the same length")

    @property
    def n_rows(self) -> int:
        return len(self.columns[0]) if self.columns else 0

    def column(self, name: str) -> np.ndarray:
        return self.columns[self.names.index(name)]

    def kind(self, name: str) -> str:
        return self.kinds[self.names.index(name)]

    def take(self, indices) -> "FeatureTable":
        idx = np.asarray(indices)
        return FeatureTable(self.names, self.kinds, tuple(c[idx] for c in self.columns))

    def select(self, names) -> "FeatureTable":
        keep = [self.names.index(n) for n in names]
        return FeatureTable(
            tuple(self.names[i] for i in keep),
            tuple(self.kinds[i] for i in keep),
            tuple(self.columns[i] for i in keep),
        )

    @classmethod
    def from_items(cls, items) -> "FeatureTable":
        """Build from an iterable of (name, kind, values)."""
        names, kinds, cols = [], [], []
        for name, kind, values in items:
            names.append(name)
            kinds.append(kind)
            if kind == NUMERIC:
                cols.append(np.asarray(values, dtype=np.float64))
            else:
                cols.append(np.asarray(list(values), dtype=object))
        return cls(tuple(names), tuple(kinds), tuple(cols))


@dataclass
class Leaf:
    label: int
    n: int
    class_counts: np.ndarray
    expected_cost: float


@dataclass
class Internal:
    feature: str
    kind: str
    threshold: float | None           # numeric: go left if value < threshold
    categories: tuple[str, ...] | None  # categorical: go left if member
    left: "Node"
    right: "Node"
    n: int
    class_counts: np.ndarray
    impurity: float
    decrease: float


Node = Leaf | Internal


@dataclass
class DecisionTree:
    root: Node
    params: TreeParams
    k: int
    feature_names: tuple[str, ...]
    feature_kinds: tuple[str, ...]
    feature_levels: dict[str, tuple[str, ...]] = field(default_factory=dict)
    n_rows: int = 0
    depth: int = 0
    leaf_count: int = 0


# ---------------------------------------------------------------------------
# Impurity and leaf labeling
# ---------------------------------------------------------------------------

def gini_loss_impurity(class_counts, loss: CostMatrix) -> float:
    """Generalized Gini: sum over class pairs of loss[i][j] * p_i * p_j.
    Reduces to 1 - sum(p^2) under 0-1 loss."""
    counts = np.asarray(class_counts, dtype=np.float64)
    n = counts.sum()
    if n <= 0:
        raise InvalidArgument("class counts must not be all zero")
    p = counts / n
    return float(p @ loss.entries @ p)


def leaf_label(class_counts, loss: CostMatrix) -> tuple[int, float]:
    """Rank minimizing expected misclassification cost (ties -> lowest rank)
    and that minimum expected cost per case."""
    counts = np.asarray(class_counts, dtype=np.float64)
    n = counts.sum()
    if n <= 0:
        raise InvalidArgument("class counts must not be all zero")
    costs = counts @ loss.entries  # costs[j] = sum_i counts[i] * L[i][j]
    j = int(np.argmin(costs))
    return j + 1, float(costs[j] / n)


# ---------------------------------------------------------------------------
# Split search
# ---------------------------------------------------------------------------

@dataclass
class Split:
    feature: str
    kind: str
    threshold: float | None
    categories: tuple[str, ...] | None
    decrease: float
    left_mask: np.ndarray


def _impurity_terms(counts_left: np.ndarray, totals: np.ndarray, L: np.ndarray):
    """Weighted child impurities n_L*I(L) + n_R*I(R) for a batch of
    candidate left-count matrices."""
    counts_right = totals[None, :] - counts_left
    n_left = counts_left.sum(axis=1)
    n_right = counts_right.sum(axis=1)
    with np.errstate(invalid="ignore", divide="ignore"):
        pl = counts_left / n_left[:, None]
        pr = counts_right / n_right[:, None]
    il = np.einsum("mi,ij,mj->m", pl, L, pl)
    ir = np.einsum("mi,ij,mj->m", pr, L, pr)
    return n_left, n_right, n_left * il + n_right * ir


def _scan_numeric(values, y0, k, loss, min_leaf, parent_term):
    order = np.argsort(values, kind="stable")
    sv = values[order]
    sy = y0[order]
    change = np.flatnonzero(sv[:-1] != sv[1:])
    if change.size == 0:
        return None
    one_hot = np.zeros((len(sv), k))
    one_hot[np.arange(len(sv)), sy] = 1.0
    cum = one_hot.cumsum(axis=0)
    counts_left = cum[change]
    totals = cum[-1]
    n_left, n_right, child_term = _impurity_terms(counts_left, totals, loss.entries)
    decreases = parent_term - child_term
    ok = (n_left >= min_leaf) & (n_right >= min_leaf)
    if not ok.any():
        return None
    decreases = np.where(ok, decreases, -np.inf)
    best = int(np.argmax(decreases))  # thresholds ascend, so ties pick the lowest
    if decreases[best] <= 0.0:
        return None
    threshold = float((sv[change[best]] + sv[change[best] + 1]) / 2.0)
    return threshold, None, float(decreases[best])


def _level_counts(values, y0, k):
    levels, codes = np.unique(values.astype("U"), return_inverse=True)
    counts = np.zeros((len(levels), k))
    np.add.at(counts, (codes, y0), 1.0)
    return [str(l) for l in levels], codes, counts


def _scan_categorical(values, y0, k, loss, min_leaf, parent_term):
    levels, codes, counts = _level_counts(values, y0, k)
    n_levels = len(levels)
    if n_levels < 2:
        return None
    if n_levels <= MAX_EXHAUSTIVE_LEVELS:
        # All subsets containing the first level (complements are equivalent),
        # in ascending bitmask order for a total tie-break.
        masks = [m for m in range(1, 2 ** n_levels - 1) if m & 1]
        bits = np.array([[(m >> b) & 1 for b in range(n_levels)] for m in masks], dtype=np.float64)
        candidates = [tuple(levels[b] for b in range(n_levels) if (m >> b) & 1) for m in masks]
    else:
        # Order levels by mean label rank (ties by level name) and scan prefixes.
        mean_rank = counts @ (np.arange(k) + 1.0) / counts.sum(axis=1)
        order = sorted(range(n_levels), key=lambda i: (mean_rank[i], levels[i]))
        bits = np.zeros((n_levels - 1, n_levels))
        for j in range(n_levels - 1):
            bits[j, order[: j + 1]] = 1.0
        candidates = [tuple(sorted(levels[i] for i in order[: j + 1])) for j in range(n_levels - 1)]
    counts_left = bits @ counts
    totals = counts.sum(axis=0)
    n_left, n_right, child_term = _impurity_terms(counts_left, totals, loss.entries)
    decreases = parent_term - child_term
    ok = (n_left >= min_leaf) & (n_right >= min_leaf)
    if not ok.any():
        return None
    decreases = np.where(ok, decreases, -np.inf)
    best = int(np.argmax(decreases))
    if decreases[best] <= 0.0:
        return None
    return None, candidates[best], float(decreases[best])


def best_split(table: FeatureTable, labels, loss: CostMatrix, params: TreeParams) -> Split | None:
    """Exhaustive scan over features and candidate splits; returns the split
    maximizing n*I(parent) - n_L*I(left) - n_R*I(right), or None when no
    candidate has a strictly positive decrease."""
    y = np.asarray(labels, dtype=np.int64)
    n = table.n_rows
    if len(y) != n:
        raise InvalidArgument("labels must align with the feature table")
    if n < params.min_split:
        return None
    k = loss.k
    y0 = y - 1
    counts = np.bincount(y0, minlength=k).astype(np.float64)
    parent_term = n * gini_loss_impurity(counts, loss)
    best: Split | None = None
    for name, kind, col in zip(table.names, table.kinds, table.columns):
        if kind == NUMERIC:
            if np.isnan(col).any():
                raise InvalidArgument(f"training column {name!r} contains missing values")
            found = _scan_numeric(col, y0, k, loss, params.min_leaf, parent_term)
        else:
            if any(v is None for v in col):
                raise InvalidArgument(f"training column {name!r} contains missing values")
            found = _scan_categorical(col, y0, k, loss, params.min_leaf, parent_term)
        if found is None:
            continue
        threshold, categories, decrease = found
        if best is None or decrease > best.decrease:
            if kind == NUMERIC:
                left_mask = col < threshold
            else:
                cat_set = set(categories)
                left_mask = np.array([v in cat_set for v in col])
            best = Split(name, kind, threshold, categories, decrease, left_mask)
    return best


# ---------------------------------------------------------------------------
# Growing and pruning
# ---------------------------------------------------------------------------

def _make_leaf(counts: np.ndarray, loss: CostMatrix) -> Leaf:
    label, expected = leaf_label(counts, loss)
    return Leaf(label=label, n=int(counts.sum()), class_counts=counts.copy(), expected_cost=expected)


def _grow(table, rows, y0, k, loss, params, depth):
    counts = np.bincount(y0[rows], minlength=k).astype(np.float64)
    impurity = gini_loss_impurity(counts, loss)
    if depth >= params.max_depth or len(rows) < params.min_split or impurity == 0.0:
        return _make_leaf(counts, loss)
    split = best_split(table.take(rows), y0[rows] + 1, loss, params)
    if split is None:
        return _make_leaf(counts, loss)
    left_rows = rows[split.left_mask]
    right_rows = rows[~split.left_mask]
    return Internal(
        feature=split.feature,
        kind=split.kind,
        threshold=split.threshold,
        categories=split.categories,
        left=_grow(table, left_rows, y0, k, loss, params, depth + 1),
        right=_grow(table, right_rows, y0, k, loss, params, depth + 1),
        n=len(rows),
        class_counts=counts,
        impurity=impurity,
        decrease=split.decrease,
    )


def _leaf_risk(counts: np.ndarray, loss: CostMatrix) -> float:
    return float((counts @ loss.entries).min())


def _weakest_link(root, loss):
    """Collect (g, preorder_index, node, parent, side) for every internal
    node, where g is the expected-cost reduction per extra leaf of the
    node's subtree. Preorder indices make the min-g tie-break total."""
    results = []
    counter = [0]

    def walk(nd, par, sd):
        idx = counter[0]
        counter[0] += 1
        if isinstance(nd, Leaf):
            return _leaf_risk(nd.class_counts, loss), 1
        rl, cl = walk(nd.left, nd, "left")
        rr, cr = walk(nd.right, nd, "right")
        subtree_risk = rl + rr
        leaves = cl + cr
        g = max((_leaf_risk(nd.class_counts, loss) - subtree_risk) / (leaves - 1), 0.0)
        results.append((g, idx, nd, par, sd))
        return subtree_risk, leaves

    walk(root, None, None)
    return results


def _prune(tree: DecisionTree, loss: CostMatrix) -> None:
    """Weakest-link cost-complexity pruning in place: repeatedly collapse the
    internal node with the smallest risk-reduction-per-extra-leaf while it
    falls below cp times the root's single-leaf risk."""
    root_risk = _leaf_risk(tree.root.class_counts, loss)
    threshold = math.inf if math.isinf(tree.params.cp) else tree.params.cp * root_risk
    while isinstance(tree.root, Internal):
        links = _weakest_link(tree.root, loss)
        g, _, node, parent, side = min(links, key=lambda t: (t[0], t[1]))
        if not g < threshold:
            break
        collapsed = _make_leaf(node.class_counts, loss)
        if parent is None:
            tree.root = collapsed
        else:
            setattr(parent, side, collapsed)


def _summary(node: Node) -> tuple[int, int]:
    """(depth in split levels: a lone leaf is depth 0, leaf count)."""
    if isinstance(node, Leaf):
        return 0, 1
    dl, ll = _summary(node.left)
    dr, lr = _summary(node.right)
    return 1 + max(dl, dr), ll + lr


def _collect_levels(table: FeatureTable) -> dict[str, tuple[str, ...]]:
    levels = {}
    for name, kind, col in zip(table.names, table.kinds, table.columns):
        if kind == CATEGORICAL:
            levels[name] = tuple(str(v) for v in sorted(np.unique(col.astype("U"))))
    return levels


def build_tree(table: FeatureTable, labels, loss: CostMatrix, params: TreeParams) -> DecisionTree:
    """Grow by recursive partitioning, then apply cost-complexity pruning."""
    y = np.asarray(labels, dtype=np.int64)
    if table.n_rows == 0 or len(table.names) == 0:
        raise InvalidArgument("training data must be non-empty")
    if len(y) != table.n_rows:
        raise InvalidArgument("labels must align with the feature table")
    if y.min() < 1 or y.max() > loss.k:
        raise InvalidArgument(f"labels must lie in [1, {loss.k}]")
    for name, kind, col in zip(table.names, table.kinds, table.columns):
        if kind == NUMERIC:
            if np.isnan(col).any():
                raise InvalidArgument(f"training column {name!r} contains missing values")
        elif any(v is None for v in col):
            raise InvalidArgument(f"training column {name!r} contains missing values")
    y0 = y - 1
    root = _grow(table, np.arange(table.n_rows), y0, loss.k, loss, params, depth=0)
    tree = DecisionTree(
        root=root,
        params=params,
        k=loss.k,
        feature_names=table.names,
        feature_kinds=table.kinds,
        feature_levels=_collect_levels(table),
        n_rows=table.n_rows,
    )
    _prune(tree, loss)
    tree.depth, tree.leaf_count = _summary(tree.root)
    return tree


# ---------------------------------------------------------------------------
# Prediction
# ---------------------------------------------------------------------------

def _majority_side(node: Internal) -> Node:
    return node.left if node.left.n >= node.right.n else node.right


def predict_record(tree: DecisionTree, record: dict) -> int:
    """Route one record (feature name -> value; None/nan = missing) to its leaf."""
    node = tree.root
    while isinstance(node, Internal):
        value = record.get(node.feature)
        missing = value is None or (
            node.kind == NUMERIC and isinstance(value, float) and math.isnan(value)
        )
        if missing:
            node = _majority_side(node)
        elif node.kind == NUMERIC:
            node = node.left if value < node.threshold else node.right
        else:
            node = node.left if value in node.categories else node.right
    return node.label


def predict(tree: DecisionTree, table: FeatureTable) -> np.ndarray:
    """Vectorized prediction; missing values route to the larger child."""
    for name, kind in zip(tree.feature_names, tree.feature_kinds):
        if name not in table.names:
            raise InvalidArgument(f"feature {name!r} missing from prediction data")
        if table.kind(name) != kind:
            raise InvalidArgument(f"feature {name!r} kind mismatch")
    out = np.empty(table.n_rows, dtype=np.int64)

    def route(node: Node, idx: np.ndarray):
        if isinstance(node, Leaf):
            out[idx] = node.label
            return
        col = table.column(node.feature)[idx]
        if node.kind == NUMERIC:
            vals = col.astype(np.float64)
            missing = np.isnan(vals)
            go_left = ~missing & (vals < node.threshold)
        else:
            missing = np.array([v is None for v in col])
            cat_set = set(node.categories)
            go_left = np.array([(v in cat_set) if v is not None else False for v in col])
        major_left = _majority_side(node) is node.left
        left_sel = go_left | (missing & major_left)
        route(node.left, idx[left_sel])
        route(node.right, idx[~left_sel])

    route(tree.root, np.arange(table.n_rows))
    return out


# ---------------------------------------------------------------------------
# Importance and rule extraction
# ---------------------------------------------------------------------------

def variable_importance(tree: DecisionTree) -> list[tuple[str, float]]:
    """Total impurity decrease credited to each feature, descending; unused
    features are omitted."""
    scores: dict[str, float] = {}

    def walk(node: Node):
        if isinstance(node, Internal):
            scores[node.feature] = scores.get(node.feature, 0.0) + node.decrease
            walk(node.left)
            walk(node.right)

    walk(tree.root)
    order = {name: i for i, name in enumerate(tree.feature_names)}
    return sorted(scores.items(), key=lambda kv: (-kv[1], order[kv[0]]))


@dataclass(frozen=True)
class RuleCondition:
    feature: str
    kind: str
    lo: float = -math.inf        # numeric: lo <= value
    hi: float = math.inf         # numeric: value < hi
    categories: tuple[str, ...] | None = None  # categorical: value in categories

    def render(self) -> str:
        if self.kind == NUMERIC:
            if self.lo == -math.inf:
                return f"{self.feature} < {self.hi:g}"
            if self.hi == math.inf:
                return f"{self.feature} >= {self.lo:g}"
            return f"{self.lo:g} <= {self.feature} < {self.hi:g}"
        if len(self.categories) == 1:
            return f"{self.feature} = {self.categories[0]}"
        return f"{self.feature} in {{{', '.join(self.categories)}}}"


@dataclass(frozen=True)
class LeafRule:
    conditions: tuple[RuleCondition, ...]
    label: int
    support: int
    expected_cost: float

    def render(self) -> str:
        cond = " AND ".join(c.render() for c in self.conditions) if self.conditions else "always"
        return f"{cond} -> class {self.label} (n={self.support}, cost={self.expected_cost:.4f})"


def extract_rules(tree: DecisionTree) -> list[LeafRule]:
    """One rule per leaf: the root-to-leaf conditions with redundant bounds
    on the same feature merged to the tightest. Rules partition the space of
    complete records over the training feature levels."""
    rules: list[LeafRule] = []
    order = {name: i for i, name in enumerate(tree.feature_names)}

    def walk(node: Node, bounds: dict, cats: dict):
        if isinstance(node, Leaf):
            conditions = []
            for name in sorted(set(bounds) | set(cats), key=order.get):
                if name in bounds:
                    lo, hi = bounds[name]
                    conditions.append(RuleCondition(name, NUMERIC, lo=lo, hi=hi))
                else:
                    conditions.append(
                        RuleCondition(name, CATEGORICAL, categories=tuple(sorted(cats[name])))
                    )
            rules.append(
                LeafRule(tuple(conditions), node.label, node.n, node.expected_cost)
            )
            return
        if node.kind == NUMERIC:
            lo, hi = bounds.get(node.feature, (-math.inf, math.inf))
            left_bounds = {**bounds, node.feature: (lo, min(hi, node.threshold))}
            right_bounds = {**bounds, node.feature: (max(lo, node.threshold), hi)}
            walk(node.left, left_bounds, cats)
            walk(node.right, right_bounds, cats)
        else:
            allowed = cats.get(node.feature, frozenset(tree.feature_levels[node.feature]))
            split_set = frozenset(node.categories)
            walk(node.left, bounds, {**cats, node.feature: allowed & split_set})
            walk(node.right, bounds, {**cats, node.feature: allowed - split_set})

    walk(tree.root, {}, {})
    return rules


def classify_with_rules(rules: list[LeafRule], table: FeatureTable) -> np.ndarray:
    """Apply extracted rules as a standalone classifier to complete records.
    Raises if any record matches zero or multiple rules (the rules of a valid
    tree partition the complete-record space)."""
    n = table.n_rows
    out = np.zeros(n, dtype=np.int64)
    matched = np.zeros(n, dtype=np.int64)
    for rule in rules:
        mask = np.ones(n, dtype=bool)
        for cond in rule.conditions:
            col = table.column(cond.feature)
            if cond.kind == NUMERIC:
                vals = col.astype(np.float64)
                mask &= (vals >= cond.lo) & (vals < cond.hi)
            else:
                allowed = set(cond.categories)
                mask &= np.array([v in allowed for v in col])
        out[mask] = rule.label
        matched += mask
    if not np.all(matched == 1):
        bad = int(np.flatnonzero(matched != 1)[0])
        raise InvalidArgument(f"record {bad} matched {int(matched[bad])} rules, expected 1")
    return out


# ---------------------------------------------------------------------------
# Serialization
# ---------------------------------------------------------------------------

def _node_to_dict(node: Node) -> dict:
    if isinstance(node, Leaf):
        return {
            "type": "leaf",
            "label": node.label,
            "n": node.n,
            "counts": [int(c) for c in node.class_counts],
            "expected_cost": node.expected_cost,
        }
    d = {
        "type": "internal",
        "feature": node.feature,
        "kind": node.kind,
        "n": node.n,
        "counts": [int(c) for c in node.class_counts],
        "impurity": node.impurity,
        "decrease": node.decrease,
        "left": _node_to_dict(node.left),
        "right": _node_to_dict(node.right),
    }
    if node.kind == NUMERIC:
        d["threshold"] = node.threshold
    else:
        d["categories"] = list(node.categories)
    return d


def serialize_tree(tree: DecisionTree) -> str:
    doc = {
        "version": TREE_FORMAT_VERSION,
        "k": tree.k,
        "params": tree.params.to_dict(),
        "schema": [
            {"name": n, "kind": kd} for n, kd in zip(tree.feature_names, tree.feature_kinds)
        ],
        "levels": {name: list(lv) for name, lv in tree.feature_levels.items()},
        "summary": {"n": tree.n_rows, "depth": tree.depth, "leaf_count": tree.leaf_count},
        "root": _node_to_dict(tree.root),
    }
    return json.dumps(doc, indent=2) + "\n"


def _node_from_dict(d: dict, k: int, path: str) -> Node:
    try:
        node_type = d["type"]
        counts = np.asarray(d["counts"], dtype=np.float64)
        if len(counts) != k:
            raise TreeFormatError(f"{path}: counts length {len(counts)} != k {k}")
        if node_type == "leaf":
            return Leaf(
                label=int(d["label"]),
                n=int(d["n"]),
                class_counts=counts,
                expected_cost=float(d["expected_cost"]),
            )
        if node_type == "internal":
            kind = d["kind"]
            return Internal(
                feature=str(d["feature"]),
                kind=kind,
                threshold=float(d["threshold"]) if kind == NUMERIC else None,
                categories=tuple(d["categories"]) if kind != NUMERIC else None,
                left=_node_from_dict(d["left"], k, path + ".left"),
                right=_node_from_dict(d["right"], k, path + ".right"),
                n=int(d["n"]),
                class_counts=counts,
                impurity=float(d["impurity"]),
                decrease=float(d["decrease"]),
            )
        raise TreeFormatError(f"{path}: unknown node type {node_type!r}")
    except KeyError as e:
        raise TreeFormatError(f"{path}: missing field {e}")
    except (TypeError, ValueError) as e:
        raise TreeFormatError(f"{path}: {e}")


def deserialize_tree(text: str) -> DecisionTree:
    try:
        doc = json.loads(text)
    except json.JSONDecodeError as e:
        raise TreeFormatError(f"tree JSON parse error at line {e.lineno} column {e.colno}: {e.msg}")
    if not isinstance(doc, dict):
        raise TreeFormatError("tree document must be a JSON object")
    version = doc.get("version")
    if version != TREE_FORMAT_VERSION:
        raise TreeFormatError(
            f"unsupported tree format version {version!r}, expected {TREE_FORMAT_VERSION!r}"
        )
    try:
        k = int(doc["k"])
        schema = doc["schema"]
        names = tuple(str(c["name"]) for c in schema)
        kinds = tuple(str(c["kind"]) for c in schema)
        levels = {name: tuple(lv) for name, lv in doc["levels"].items()}
        params = TreeParams.from_dict(doc["params"])
        summary = doc["summary"]
        tree = DecisionTree(
            root=_node_from_dict(doc["root"], k, "root"),
            params=params,
            k=k,
            feature_names=names,
            feature_kinds=kinds,
            feature_levels=levels,
            n_rows=int(summary["n"]),
            depth=int(summary["depth"]),
            leaf_count=int(summary["leaf_count"]),
        )
    except KeyError as e:
        raise TreeFormatError(f"tree document missing field {e}")
    except (TypeError, ValueError) as e:
        raise TreeFormatError(f"tree document malformed: {e}")
    return tree
