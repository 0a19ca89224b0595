"""Surface statistics of translations and their correlation with parseability.

Seven per-sentence statistics are computed from the generation model's
log probability and two unigram language models (source-side and
target-side), then correlated against the binary parseability outcome with
Pearson's r. With a binary variable this is the point-biserial coefficient.
"""

from __future__ import annotations

import logging
import math
from dataclasses import dataclass
from typing import Iterable, Sequence

import numpy as np

from .corpus import ParallelExample
from .errors import (
    ConfigError,
    DataError,
    DegenerateRowError,
    UndefinedCorrelationError,
)
from .derivation import Completeness, Derivation, Formality, RootCondition
from .gateway import ParseOutcome, ParseResult

log = logging.getLogger(__name__)

__all__ = [
    "UnigramModel",
    "FeatureRow",
    "FEATURE_ORDER",
    "train_unigram",
    "feature_row",
    "build_feature_rows",
    "pearson",
    "CorrelationEntry",
    "correlation_report",
    "RootDistribution",
    "root_distribution",
]

# Report order for the seven statistics.
FEATURE_ORDER = (
    "lp_nmt",
    "lp_uni_src",
    "lp_uni_ref",
    "lp_uni_out",
    "len_out",
    "mean_lp",
    "norm_lp",
)


@dataclass(frozen=True)
class UnigramModel:
    """Maximum-likelihood unigram model with a floor for unseen tokens."""

    probs: dict[str, float]
    oov_floor: float

    def prob(self, token: str) -> float:
        return self.probs.get(token, self.oov_floor)

    def log_prob(self, sentence: Sequence[str]) -> float:
        return sum(math.log(self.prob(token)) for token in sentence)


def train_unigram(corpus: Iterable[Sequence[str]]) -> UnigramModel:
    """MLE token probabilities; unseen tokens get 1/(N + V)."""
    counts: dict[str, int] = {}
    total = 0
    for sentence in corpus:
        for token in sentence:
            counts[token] = counts.get(token, 0) + 1
            total += 1
    if total == 0:
        raise ConfigError("cannot train a unigram model on an empty corpus")
    probs = {token: count / total for token, count in counts.items()}
    return UnigramModel(probs=probs, oov_floor=1.0 / (total + len(counts)))


@dataclass(frozen=True)
class FeatureRow:
    id: int
    lp_nmt: float
    lp_uni_src: float
    lp_uni_ref: float
    lp_uni_out: float
    len_out: int
    mean_lp: float
    norm_lp: float
    parseable: int

    def value(self, feature: str) -> float:
        return getattr(self, feature)


def feature_row(
    example: ParallelExample,
    result: ParseResult,
    source_model: UnigramModel,
    target_model: UnigramModel,
) -> FeatureRow:
    """The seven statistics for one example plus its parseability label.

    mean_lp and norm_lp are stored as their defining quotients of the other
    columns, so the identities mean_lp = lp_nmt/len_out and
    norm_lp = -lp_nmt/lp_uni_out hold bit-exactly.
    """
    if example.output is None or example.model_lp is None:
        raise DataError(f"example {example.id}: output and model_lp are required")
    length = len(example.output)
    if length == 0:
        raise DegenerateRowError(f"example {example.id}: empty output")
    lp_uni_out = target_model.log_prob(example.output)
    if lp_uni_out == 0.0:
        raise DegenerateRowError(
            f"example {example.id}: unigram probability of output is 1; norm_lp undefined"
        )
    lp_nmt = example.model_lp
    return FeatureRow(
        id=example.id,
        lp_nmt=lp_nmt,
        lp_uni_src=source_model.log_prob(example.source),
        lp_uni_ref=target_model.log_prob(example.reference),
        lp_uni_out=lp_uni_out,
        len_out=length,
        mean_lp=lp_nmt / length,
        norm_lp=-lp_nmt / lp_uni_out,
        parseable=1 if result.outcome is ParseOutcome.PARSEABLE else 0,
    )


def build_feature_rows(
    examples: Sequence[ParallelExample],
    results: Sequence[ParseResult],
    source_model: UnigramModel,
    target_model: UnigramModel,
    negatives: str = "all",
) -> tuple[list[FeatureRow], int]:
    """Feature rows for a corpus; degenerate rows are logged and skipped.

    ``negatives="exhausted"`` restricts the negative class to exhaustively
    unparseable sentences, dropping resource-limit and parser-error rows.
    """
    if negatives not in ("all", "exhausted"):
        raise ConfigError(f"unknown negatives policy {negatives!r}")
    by_id = {result.id: result for result in results}
    rows = []
    skipped = 0
    for example in examples:
        result = by_id.get(example.id)
        if result is None:
            raise DataError(f"no parse result for example {example.id}")
        if negatives == "exhausted" and result.outcome in (
            ParseOutcome.RESOURCE_LIMIT,
            ParseOutcome.PARSER_ERROR,
        ):
            skipped += 1
            continue
        try:
            rows.append(feature_row(example, result, source_model, target_model))
        except DegenerateRowError as exc:
            log.info("skipping degenerate row: %s", exc)
            skipped += 1
    return rows, skipped


def pearson(x: Sequence[float], y: Sequence[float]) -> float:
    """Product-moment correlation; errors out when undefined."""
    if len(x) != len(y):
        raise DataError(f"length mismatch: {len(x)} vs {len(y)}")
    if len(x) < 2:
        raise UndefinedCorrelationError("need at least 2 observations")
    xs = np.asarray(x, dtype=float)
    ys = np.asarray(y, dtype=float)
    xd = xs - xs.mean()
    yd = ys - ys.mean()
    sx = float(np.sqrt(np.dot(xd, xd)))
    sy = float(np.sqrt(np.dot(yd, yd)))
    if sx == 0.0 or sy == 0.0:
        raise UndefinedCorrelationError("zero variance")
    r = float(np.dot(xd, yd) / (sx * sy))
    return max(-1.0, min(1.0, r))


@dataclass(frozen=True)
class CorrelationEntry:
    feature: str
    r: float
    n_used: int
    n_excluded: int


def correlation_report(rows: Sequence[FeatureRow]) -> list[CorrelationEntry]:
    """Pearson's r of each feature against parseability, in report order.

    Rows with a non-finite value for a feature are excluded for that feature
    only, and the exclusion count is reported alongside.
    """
    if not rows:
        raise UndefinedCorrelationError("no rows")
    labels = [row.parseable for row in rows]
    if len(set(labels)) < 2:
        raise UndefinedCorrelationError("both parseability classes are required")
    report = []
    for feature in FEATURE_ORDER:
        xs, ys = [], []
        excluded = 0
        for row in rows:
            value = float(row.value(feature))
            if math.isfinite(value):
                xs.append(value)
                ys.append(float(row.parseable))
            else:
                excluded += 1
        report.append(
            CorrelationEntry(
                feature=feature, r=pearson(xs, ys), n_used=len(xs), n_excluded=excluded
            )
        )
    return report


_CONDITION_COLUMNS = (
    RootCondition(Formality.STRICT, Completeness.FULL),
    RootCondition(Formality.STRICT, Completeness.FRAGMENT),
    RootCondition(Formality.INFORMAL, Completeness.FULL),
    RootCondition(Formality.INFORMAL, Completeness.FRAGMENT),
)

ROOT_COLUMNS = (
    "strict_full",
    "strict_frag",
    "informal_full",
    "informal_frag",
    "unparseable",
)


@dataclass(frozen=True)
class RootDistribution:
    """Percentage rows over root conditions plus the unparseable share."""

    ref_row: tuple[float, ...]
    nmt_row: tuple[float, ...]

    @property
    def delta_row(self) -> tuple[float, ...]:
        return tuple(n - r for n, r in zip(self.nmt_row, self.ref_row))


def _condition_percentages(conditions: Sequence[RootCondition | None], total: int):
    cells = [0] * 5
    for condition in conditions:
        if condition is None:
            cells[4] += 1
        else:
            cells[_CONDITION_COLUMNS.index(condition)] += 1
    return tuple(100.0 * count / total for count in cells)


def root_distribution(
    ref_derivs: Sequence[Derivation], nmt_results: Sequence[ParseResult]
) -> RootDistribution:
    """Root-condition distribution for references and model output.

    References come pre-filtered to parseable sentences, so their
    unparseable cell is exactly zero; model results may be unparseable.
    """
    if not ref_derivs or not nmt_results:
        raise DataError("root distribution requires non-empty inputs")
    for derivation in ref_derivs:
        if derivation.root is None:
            raise DataError("reference derivation lacks a root condition")
    ref_row = _condition_percentages([d.root for d in ref_derivs], len(ref_derivs))
    nmt_conditions = [
        result.derivation.root if result.derivation is not None else None
        for result in nmt_results
    ]
    nmt_row = _condition_percentages(nmt_conditions, len(nmt_results))
    return RootDistribution(ref_row=ref_row, nmt_row=nmt_row)
