"""Sequential CART synthesizer.

Variables listed in a visit sequence are replaced one at a time: a binary
tree is grown for the variable (response = its current values, predictors =
every other column of the working table, so earlier-synthesized variables
feed later models), then each record's synthetic value is drawn uniformly
from the donor rows of the leaf the record lands in.  Unlisted variables are
copied through unchanged, which is what makes the release partially
synthetic.

Tree growing is plain greedy recursive partitioning: variance reduction for
a continuous response, Gini impurity decrease for a categorical one.  A
split must leave at least ``min_bucket`` rows on each side, nodes smaller
than ``min_split`` are not split, and a split is kept only if its impurity
decrease, relative to the root node's impurity, reaches
``complexity_threshold`` (the rpart cp scaling).  Categorical predictors are
split on level subsets: exhaustive search up to 10 observed levels, beyond
that levels are ordered by response mean (continuous response) or by the
node-majority-class share (categorical response) and only prefix subsets of
that ordering are scanned.  Rows whose level was unseen at the node are sent
right.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Sequence

import numpy as np

from ._parallel import pmap
from .dataset import Dataset, VariableSpec

_EXHAUSTIVE_LEVEL_CAP = 10


@dataclass(frozen=True)
class SynthesisPlan:
    visit_sequence: tuple[str, ...]
    m: int = 1
    min_bucket: int = 5
    min_split: int = 10
    complexity_threshold: float = 1e-8
    seed: int | None = None

    def __post_init__(self) -> None:
        object.__setattr__(self, "visit_sequence", tuple(str(v) for v in self.visit_sequence))
        if self.m < 1:
            raise ValueError("m must be at least 1")
        if self.min_bucket < 1:
            raise ValueError("min_bucket must be at least 1")
        if self.min_split < 2:
            raise ValueError("min_split must be at least 2")
        if self.complexity_threshold < 0:
            raise ValueError("complexity_threshold must be nonnegative")


@dataclass
class CartNode:
    """Internal node carries a split rule; leaf carries donor row indices."""

    var: str | None = None
    threshold: float | None = None
    left_levels: frozenset[int] | None = None
    left: "CartNode | None" = None
    right: "CartNode | None" = None
    donors: np.ndarray | None = None

    @property
    def is_leaf(self) -> bool:
        return self.var is None


@dataclass
class CartTree:
    response: str
    root: CartNode
    _leaves: list[CartNode] = field(default_factory=list)

    def leaves(self) -> list[CartNode]:
        """Leaves in depth-first left-to-right order."""
        if not self._leaves:
            stack = [self.root]
            while stack:
                node = stack.pop()
                if node.is_leaf:
                    self._leaves.append(node)
                else:
                    stack.append(node.right)  # type: ignore[arg-type]
                    stack.append(node.left)  # type: ignore[arg-type]
        return self._leaves

    def apply(self, data: Dataset) -> np.ndarray:
        """Leaf ordinal (index into leaves()) for every row of data."""
        leaf_ids = {id(leaf): k for k, leaf in enumerate(self.leaves())}
        out = np.empty(data.n_rows, dtype=np.int64)
        stack: list[tuple[CartNode, np.ndarray]] = [(self.root, np.arange(data.n_rows))]
        while stack:
            node, rows = stack.pop()
            if node.is_leaf:
                out[rows] = leaf_ids[id(node)]
                continue
            col = data.column(node.var)[rows]
            if node.threshold is not None:
                go_left = col <= node.threshold
            else:
                go_left = np.isin(col, np.fromiter(sorted(node.left_levels), np.int64, len(node.left_levels)))
            stack.append((node.left, rows[go_left]))
            stack.append((node.right, rows[~go_left]))
        return out

    def draw(self, data: Dataset, donor_values: np.ndarray, rng: np.random.Generator) -> np.ndarray:
        """A synthetic value per row: uniform draw from the row's leaf donors.

        donor_values is indexed by training row number, i.e. the response
        column the tree was fit on.
        """
        ids = self.apply(data)
        out = np.empty(data.n_rows, dtype=donor_values.dtype)
        for k, leaf in enumerate(self.leaves()):
            rows = np.flatnonzero(ids == k)
            if rows.size:
                picks = rng.integers(0, leaf.donors.size, rows.size)
                out[rows] = donor_values[leaf.donors[picks]]
        return out


@dataclass
class _Split:
    var: str
    decrease: float
    threshold: float | None = None
    left_levels: frozenset[int] | None = None


class _ResponseStats:
    """Impurity bookkeeping for one response column.

    risk(rows) is the node impurity mass: sum of squared deviations for a
    continuous response, node_size * gini for a categorical one.  Both are
    additive over a partition, so split quality is risk(parent) minus the
    children's risks.
    """

    def __init__(self, y: np.ndarray, spec: VariableSpec):
        self.continuous = spec.is_continuous
        if self.continuous:
            # centering leaves every SSE unchanged but keeps the cumulative
            # moment formulas in prefix_risks well conditioned
            self.y = y.astype(np.float64)
            if self.y.size:
                self.y = self.y - self.y.mean()
        else:
            self.y = y.astype(np.int64)
            self.n_classes = len(spec.levels)

    def pure(self, rows: np.ndarray) -> bool:
        sub = self.y[rows]
        return bool(sub.min() == sub.max())

    def risk(self, rows: np.ndarray) -> float:
        sub = self.y[rows]
        if self.continuous:
            return float(((sub - sub.mean()) ** 2).sum())
        counts = np.bincount(sub, minlength=self.n_classes).astype(np.float64)
        return float(rows.size - counts @ counts / rows.size)

    def prefix_risks(self, y_sorted: np.ndarray) -> tuple[np.ndarray, np.ndarray]:
        """risk of the first k rows and of the rest, for k = 1..n-1."""
        n = y_sorted.size
        k = np.arange(1, n, dtype=np.float64)
        if self.continuous:
            c1 = np.cumsum(y_sorted)[:-1]
            c2 = np.cumsum(y_sorted * y_sorted)[:-1]
            tot1, tot2 = c1[-1] + y_sorted[-1], c2[-1] + y_sorted[-1] ** 2
            return c2 - c1 * c1 / k, (tot2 - c2) - (tot1 - c1) ** 2 / (n - k)
        onehot = np.zeros((n, self.n_classes))
        onehot[np.arange(n), y_sorted] = 1.0
        cum = np.cumsum(onehot, axis=0)
        top, tot = cum[:-1], cum[-1]
        return k - np.einsum("ij,ij->i", top, top) / k, (n - k) - np.einsum("ij,ij->i", tot - top, tot - top) / (n - k)

    def level_tables(self, codes: np.ndarray, rows: np.ndarray, n_levels: int) -> tuple[np.ndarray, np.ndarray]:
        """Per-predictor-level row counts and response aggregates.

        Aggregate is (sum, sum of squares) columns for a continuous response,
        per-class counts for a categorical one.
        """
        g = codes[rows]
        counts = np.bincount(g, minlength=n_levels).astype(np.float64)
        if self.continuous:
            sub = self.y[rows]
            agg = np.column_stack([
                np.bincount(g, weights=sub, minlength=n_levels),
                np.bincount(g, weights=sub * sub, minlength=n_levels),
            ])
        else:
            sub = self.y[rows]
            agg = np.zeros((n_levels, self.n_classes))
            np.add.at(agg, (g, sub), 1.0)
        return counts, agg

    def group_risk(self, counts: np.ndarray, agg: np.ndarray) -> np.ndarray:
        """Risk of each group described by (counts row, agg row), vectorized."""
        with np.errstate(invalid="ignore", divide="ignore"):
            if self.continuous:
                r = agg[..., 1] - agg[..., 0] ** 2 / counts
            else:
                r = counts - np.einsum("...j,...j->...", agg, agg) / counts
        return np.where(counts > 0, r, 0.0)


def _best_continuous_split(x: np.ndarray, rows: np.ndarray, stats: _ResponseStats,
                           risk_node: float, min_bucket: int) -> tuple[float, float] | None:
    sub = x[rows]
    order = np.argsort(sub, kind="stable")
    xs = sub[order]
    n = xs.size
    k = np.arange(1, n)
    valid = (xs[1:] != xs[:-1]) & (k >= min_bucket) & (n - k >= min_bucket)
    if not valid.any():
        return None
    left_r, right_r = stats.prefix_risks(stats.y[rows][order])
    dec = np.where(valid, risk_node - left_r - right_r, -np.inf)
    best = int(np.argmax(dec))
    lo, hi = xs[best], xs[best + 1]
    thr = 0.5 * (lo + hi)
    if thr >= hi:  # midpoint rounded up to the right value; fall back
        thr = float(lo)
    return float(dec[best]), float(thr)


def _best_categorical_split(codes: np.ndarray, rows: np.ndarray, n_levels: int, stats: _ResponseStats,
                            risk_node: float, min_bucket: int) -> tuple[float, frozenset[int]] | None:
    counts, agg = stats.level_tables(codes, rows, n_levels)
    present = np.flatnonzero(counts > 0)
    p = present.size
    if p < 2:
        return None
    n = rows.size
    if p <= _EXHAUSTIVE_LEVEL_CAP:
        # every proper bipartition, pinning the first present level to the left
        bits = np.arange(2 ** (p - 1) - 1)
        member = np.zeros((bits.size, p))
        member[:, 0] = 1.0
        for j in range(p - 1):
            member[:, j + 1] = (bits >> j) & 1
    else:
        if stats.continuous:
            score = np.where(counts[present] > 0, agg[present, 0] / counts[present], 0.0)
        else:
            majority = int(np.argmax(np.sum(agg[present], axis=0)))
            score = agg[present, majority] / counts[present]
        order = np.argsort(score, kind="stable")
        member = (np.arange(1, p)[:, None] > np.argsort(order)[None, :]).astype(np.float64)
    left_cnt = member @ counts[present]
    right_cnt = n - left_cnt
    valid = (left_cnt >= min_bucket) & (right_cnt >= min_bucket)
    if not valid.any():
        return None
    left_agg = member @ agg[present]
    left_r = stats.group_risk(left_cnt, left_agg)
    right_r = stats.group_risk(right_cnt, agg[present].sum(axis=0) - left_agg)
    dec = np.where(valid, risk_node - left_r - right_r, -np.inf)
    best = int(np.argmax(dec))
    left_set = frozenset(int(present[j]) for j in range(p) if member[best, j] > 0)
    return float(dec[best]), left_set


def fit_tree(data: Dataset, response: str, predictors: Sequence[str], plan: SynthesisPlan) -> CartTree:
    """Grow one tree; donor row indices are stored at the leaves.

    Returns a single-leaf tree when there is nothing to split on: no
    predictors, a constant response, or no candidate split clearing the
    size and complexity gates.
    """
    schema = data.schema
    stats = _ResponseStats(data.column(response), schema.var(response))
    predictors = [str(p) for p in predictors]
    for p in predictors:
        schema.var(p)
    cols = {p: data.column(p) for p in predictors}

    all_rows = np.arange(data.n_rows)
    root = CartNode()
    root_risk = stats.risk(all_rows) if data.n_rows else 0.0
    gate = plan.complexity_threshold * root_risk
    stack: list[tuple[CartNode, np.ndarray]] = [(root, all_rows)]
    while stack:
        node, rows = stack.pop()
        if (rows.size < plan.min_split or not predictors or root_risk <= 0.0
                or stats.pure(rows)):
            node.donors = rows
            continue
        risk_node = stats.risk(rows)
        best: _Split | None = None
        for name in predictors:
            spec = schema.var(name)
            if spec.is_continuous:
                found = _best_continuous_split(cols[name], rows, stats, risk_node, plan.min_bucket)
                if found and (best is None or found[0] > best.decrease):
                    best = _Split(name, found[0], threshold=found[1])
            else:
                found = _best_categorical_split(cols[name], rows, len(spec.levels), stats, risk_node, plan.min_bucket)
                if found and (best is None or found[0] > best.decrease):
                    best = _Split(name, found[0], left_levels=found[1])
        if best is None or best.decrease < gate:
            node.donors = rows
            continue
        col = cols[best.var][rows]
        if best.threshold is not None:
            go_left = col <= best.threshold
        else:
            go_left = np.isin(col, np.fromiter(sorted(best.left_levels), np.int64, len(best.left_levels)))
        node.var = best.var
        node.threshold = best.threshold
        node.left_levels = best.left_levels
        node.left, node.right = CartNode(), CartNode()
        stack.append((node.right, rows[~go_left]))
        stack.append((node.left, rows[go_left]))
    return CartTree(response, root)


def synthesize(orig: Dataset, plan: SynthesisPlan, threads: int = 1) -> list[Dataset]:
    """m partially synthetic replicates of orig.

    Each replicate runs the visit sequence start to finish on its own
    working copy and its own RNG stream, so results are reproducible for a
    fixed seed no matter how many threads are used.
    """
    missing = [v for v in plan.visit_sequence if v not in orig.schema]
    if missing:
        raise ValueError(f"visit_sequence variables not in schema: {missing}")
    streams = np.random.SeedSequence(plan.seed).spawn(plan.m)

    def one(stream: np.random.SeedSequence) -> Dataset:
        rng = np.random.default_rng(stream)
        work = {name: orig.column(name) for name in orig.schema.names}
        for v in plan.visit_sequence:
            table = Dataset(orig.schema, work)
            predictors = [name for name in orig.schema.names if name != v]
            tree = fit_tree(table, v, predictors, plan)
            work[v] = tree.draw(table, table.column(v), rng)
        return Dataset(orig.schema, work)

    return pmap(one, streams, threads)
