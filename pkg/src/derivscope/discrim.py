"""Which rules tell reference derivations apart from model derivations.

Each derivation becomes a bag-of-rules count vector; a logistic regression
without an intercept, fitted under an L1 penalty, separates reference rows
(+1) from model rows (-1). The solver minimizes

    F(w) = ||w||_1 + C * sum_i log(1 + exp(-y_i * w.x_i))

by cyclic coordinate descent. Each coordinate step minimizes a quadratic
majorant of the loss (curvature bounded by C/4 * sum_i x_ij^2) and applies
soft-thresholding, so the objective never increases. Everything is
deterministic: feature columns are the sorted rule labels and coordinates
are visited cyclically.
"""

from __future__ import annotations

import csv
import math
import random
from dataclasses import dataclass
from typing import Sequence

import numpy as np

from .derivation import Derivation, bag_of_rules
from .errors import ConfigError, DataError, SchemaError

__all__ = [
    "RuleDataset",
    "L1LogRegModel",
    "EvalResult",
    "vectorize",
    "split_train_val",
    "fit",
    "evaluate",
    "discriminative_rules",
    "write_model_tsv",
    "read_model_tsv",
]


@dataclass
class RuleDataset:
    """Sparse bag-of-rules rows with +1 (reference) / -1 (model) labels."""

    feature_index: dict[str, int]
    rows: list[dict[int, int]]
    labels: list[int]

    def __post_init__(self):
        if len(self.rows) != len(self.labels):
            raise DataError("rows and labels must have equal length")

    def __len__(self) -> int:
        return len(self.rows)

    def subset(self, indices: Sequence[int]) -> "RuleDataset":
        return RuleDataset(
            feature_index=self.feature_index,
            rows=[self.rows[i] for i in indices],
            labels=[self.labels[i] for i in indices],
        )


def vectorize(
    ref_derivs: Sequence[Derivation],
    nmt_derivs: Sequence[Derivation],
    binary: bool = False,
) -> RuleDataset:
    """Bag-of-rules dataset: all reference rows first, then all model rows.

    The feature space is the union of rule labels over both sets, columns in
    sorted label order. ``binary`` collapses counts to presence indicators.
    """
    if not ref_derivs or not nmt_derivs:
        raise ConfigError("both derivation sets must be non-empty")
    bags = [bag_of_rules(d) for d in ref_derivs] + [bag_of_rules(d) for d in nmt_derivs]
    labels = [1] * len(ref_derivs) + [-1] * len(nmt_derivs)
    feature_index = {
        rule: col for col, rule in enumerate(sorted(set().union(*[set(b) for b in bags])))
    }
    rows = []
    for bag in bags:
        row = {feature_index[rule]: (1 if binary else count) for rule, count in bag.items()}
        rows.append(row)
    return RuleDataset(feature_index=feature_index, rows=rows, labels=labels)


def split_train_val(
    dataset: RuleDataset, train_fraction: float = 0.8, seed: int = 0
) -> tuple[RuleDataset, RuleDataset]:
    """Seeded uniform shuffle then slice; the two parts partition the rows."""
    if not 0.0 < train_fraction < 1.0:
        raise ConfigError("train_fraction must be strictly between 0 and 1")
    indices = list(range(len(dataset)))
    random.Random(seed).shuffle(indices)
    cut = int(len(indices) * train_fraction)
    return dataset.subset(indices[:cut]), dataset.subset(indices[cut:])


@dataclass
class L1LogRegModel:
    weights: dict[str, float]
    c: float
    tol: float
    iterations: int
    objective_trace: list[float]
    tie_break_class: int  # majority training class; used when a score is exactly 0

    def nonzero_weights(self) -> dict[str, float]:
        return {rule: w for rule, w in self.weights.items() if w != 0.0}


def _log1p_exp(z: np.ndarray) -> np.ndarray:
    # log(1 + exp(z)) computed stably
    return np.logaddexp(0.0, z)


def _sigmoid(z: np.ndarray) -> np.ndarray:
    out = np.empty_like(z)
    pos = z >= 0
    out[pos] = 1.0 / (1.0 + np.exp(-z[pos]))
    ez = np.exp(z[~pos])
    out[~pos] = ez / (1.0 + ez)
    return out


def fit(
    train: RuleDataset,
    c: float = 0.01,
    tol: float = 1e-6,
    max_iter: int = 1000,
) -> L1LogRegModel:
    """L1-penalized, intercept-free logistic regression by coordinate descent.

    Stops when the largest coordinate update in a full sweep falls below
    ``tol`` or after ``max_iter`` sweeps. The recorded objective trace is
    nonincreasing by construction.
    """
    if len(train) == 0:
        raise ConfigError("training set is empty")
    label_set = set(train.labels)
    if label_set != {1, -1}:
        raise DataError(f"training data must contain both classes, got labels {sorted(label_set)}")
    if c <= 0:
        raise ConfigError("c must be > 0")

    n_features = len(train.feature_index)
    y = np.asarray(train.labels, dtype=float)
    # column-major sparse views
    col_rows: list[list[int]] = [[] for _ in range(n_features)]
    col_vals: list[list[float]] = [[] for _ in range(n_features)]
    for i, row in enumerate(train.rows):
        for j, value in row.items():
            col_rows[j].append(i)
            col_vals[j].append(float(value))
    cols = []
    for j in range(n_features):
        idx = np.asarray(col_rows[j], dtype=np.intp)
        vals = np.asarray(col_vals[j], dtype=float)
        lipschitz = 0.25 * c * float(np.dot(vals, vals))
        cols.append((idx, vals, lipschitz))

    w = np.zeros(n_features)
    margins = np.zeros(len(train))  # y_i * (w . x_i)

    def objective() -> float:
        return float(np.abs(w).sum() + c * _log1p_exp(-margins).sum())

    trace = [objective()]
    iterations = 0
    for _ in range(max_iter):
        iterations += 1
        max_delta = 0.0
        for j in range(n_features):
            idx, vals, lipschitz = cols[j]
            if lipschitz == 0.0:
                continue
            # d(loss)/dw_j = C * sum_i -y_i x_ij * sigmoid(-margin_i)
            grad = c * float(np.dot(-y[idx] * vals, _sigmoid(-margins[idx])))
            z = w[j] - grad / lipschitz
            shrink = 1.0 / lipschitz
            new_w = math.copysign(max(abs(z) - shrink, 0.0), z)
            delta = new_w - w[j]
            if delta != 0.0:
                margins[idx] += delta * y[idx] * vals
                w[j] = new_w
                max_delta = max(max_delta, abs(delta))
        trace.append(objective())
        if max_delta < tol:
            break

    by_label = sorted(train.feature_index, key=train.feature_index.get)
    weights = {rule: float(w[train.feature_index[rule]]) for rule in by_label}
    majority = 1 if train.labels.count(1) >= train.labels.count(-1) else -1
    return L1LogRegModel(
        weights=weights,
        c=c,
        tol=tol,
        iterations=iterations,
        objective_trace=trace,
        tie_break_class=majority,
    )


def _score(model: L1LogRegModel, row: dict[int, int], by_column: dict[int, str]) -> float:
    total = 0.0
    for col, value in row.items():
        weight = model.weights.get(by_column[col])
        if weight:
            total += weight * value
    return total


@dataclass(frozen=True)
class EvalResult:
    accuracy: float
    majority_baseline: float
    n: int


def evaluate(model: L1LogRegModel, val: RuleDataset) -> EvalResult:
    """Validation accuracy of sign(w.x) against the majority-class share.

    A score of exactly zero (e.g. the all-zero model) predicts the majority
    class of the training set.
    """
    if len(val) == 0:
        raise DataError("validation set is empty")
    by_column = {col: rule for rule, col in val.feature_index.items()}
    correct = 0
    for row, label in zip(val.rows, val.labels):
        score = _score(model, row, by_column)
        predicted = model.tie_break_class if score == 0.0 else (1 if score > 0 else -1)
        if predicted == label:
            correct += 1
    positives = val.labels.count(1)
    baseline = max(positives, len(val) - positives) / len(val)
    return EvalResult(accuracy=correct / len(val), majority_baseline=baseline, n=len(val))


def discriminative_rules(
    model: L1LogRegModel, k: int = 10
) -> tuple[list[tuple[str, float]], list[tuple[str, float]]]:
    """Top-k reference-discriminating (positive weight) and
    model-discriminating (negative weight) rules; zero weights are skipped."""
    nonzero = model.nonzero_weights().items()
    positives = sorted(
        ((r, w) for r, w in nonzero if w > 0), key=lambda item: (-item[1], item[0])
    )
    negatives = sorted(
        ((r, w) for r, w in nonzero if w < 0), key=lambda item: (item[1], item[0])
    )
    return positives[:k], negatives[:k]


def write_model_tsv(model: L1LogRegModel, path) -> None:
    """Nonzero weights as TSV, metadata on the leading comment line."""
    with open(path, "w", encoding="utf-8", newline="") as handle:
        handle.write(
            f"# c={model.c!r}\ttol={model.tol!r}\titerations={model.iterations}"
            f"\tobjective={model.objective_trace[-1]!r}\ttie_break={model.tie_break_class}\n"
        )
        writer = csv.writer(handle, delimiter="\t", lineterminator="\n")
        writer.writerow(["rule", "weight"])
        ordered = sorted(model.nonzero_weights().items(), key=lambda kv: (-kv[1], kv[0]))
        for rule, weight in ordered:
            writer.writerow([rule, repr(weight)])


def read_model_tsv(path) -> L1LogRegModel:
    with open(path, encoding="utf-8") as handle:
        lines = handle.read().splitlines()
    if not lines or not lines[0].startswith("# "):
        raise SchemaError(path, 1, "missing model metadata line")
    meta = {}
    for field in lines[0][2:].split("\t"):
        key, _, value = field.partition("=")
        meta[key] = value
    try:
        c = float(meta["c"])
        tol = float(meta["tol"])
        iterations = int(meta["iterations"])
        objective = float(meta["objective"])
        tie_break = int(meta["tie_break"])
    except (KeyError, ValueError) as exc:
        raise SchemaError(path, 1, f"bad model metadata: {exc}") from None
    if len(lines) < 2 or lines[1].split("\t") != ["rule", "weight"]:
        raise SchemaError(path, 2, "missing 'rule\\tweight' header")
    weights = {}
    for line_no, line in enumerate(lines[2:], start=3):
        if not line:
            continue
        parts = line.split("\t")
        if len(parts) != 2:
            raise SchemaError(path, line_no, "expected 2 columns")
        try:
            weights[parts[0]] = float(parts[1])
        except ValueError:
            raise SchemaError(path, line_no, f"bad weight {parts[1]!r}") from None
    return L1LogRegModel(
        weights=weights,
        c=c,
        tol=tol,
        iterations=iterations,
        objective_trace=[objective],
        tie_break_class=tie_break,
    )
