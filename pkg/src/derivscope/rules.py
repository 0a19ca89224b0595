"""Rule-usage statistics across reference and model derivation sets.

Counts ignore tree context: a rule occurrence is one internal node carrying
that label. Ranks are computed on the reference side (descending count,
ties lexicographic) and the per-rule ratio is model count over reference
count.
"""

from __future__ import annotations

import statistics
from collections import Counter
from dataclasses import dataclass
from typing import Iterable, Mapping, Sequence

from .derivation import Derivation, bag_of_rules
from .errors import ConfigError

__all__ = [
    "RuleStats",
    "RuleTable",
    "count_rules",
    "build_rule_table",
    "top_k",
    "ratio_table",
    "ratio_dispersion",
]


def count_rules(
    derivations: Iterable[Derivation],
    include_root: bool = False,
    include_lexical: bool = False,
) -> Counter:
    """Total rule-label counts over a set of derivations."""
    total: Counter = Counter()
    for derivation in derivations:
        total.update(bag_of_rules(derivation, include_root, include_lexical))
    return total


@dataclass(frozen=True)
class RuleStats:
    rule: str
    count_ref: int
    count_nmt: int
    rank_ref: int | None  # None when the rule never occurs on the reference side

    @property
    def ratio(self) -> float | None:
        if self.count_ref == 0:
            return None
        return self.count_nmt / self.count_ref


@dataclass(frozen=True)
class RuleTable:
    rows: tuple[RuleStats, ...]

    def __getitem__(self, rule: str) -> RuleStats:
        for row in self.rows:
            if row.rule == rule:
                return row
        raise KeyError(rule)

    def ranked(self) -> list[RuleStats]:
        """Rows with a reference rank, in rank order."""
        return sorted(
            (row for row in self.rows if row.rank_ref is not None),
            key=lambda row: row.rank_ref,
        )


def build_rule_table(ref_counts: Mapping[str, int], nmt_counts: Mapping[str, int]) -> RuleTable:
    ranked = sorted(
        ((rule, count) for rule, count in ref_counts.items() if count > 0),
        key=lambda item: (-item[1], item[0]),
    )
    rank_of = {rule: i for i, (rule, _) in enumerate(ranked, start=1)}
    labels = sorted(set(ref_counts) | set(nmt_counts))
    rows = tuple(
        RuleStats(
            rule=rule,
            count_ref=ref_counts.get(rule, 0),
            count_nmt=nmt_counts.get(rule, 0),
            rank_ref=rank_of.get(rule),
        )
        for rule in labels
    )
    return RuleTable(rows=rows)


def top_k(counts: Mapping[str, int], k: int) -> list[tuple[str, int]]:
    """The k most frequent rules, descending, ties lexicographic."""
    if k < 1:
        raise ConfigError("k must be >= 1")
    ordered = sorted(counts.items(), key=lambda item: (-item[1], item[0]))
    return ordered[:k]


def ratio_table(table: RuleTable, min_ref_count: int = 1000) -> list[tuple[int, str, float]]:
    """(rank, rule, ratio) rows for rules used strictly more than
    ``min_ref_count`` times on the reference side, in rank order."""
    return [
        (row.rank_ref, row.rule, row.ratio)
        for row in table.ranked()
        if row.count_ref > min_ref_count
    ]


def ratio_dispersion(
    table: RuleTable, bucket_size: int
) -> list[tuple[int, int, float]]:
    """Sample variance of ratios within consecutive rank buckets.

    Returns (first_rank, last_rank, variance) per bucket; buckets with fewer
    than two rules are skipped.
    """
    if bucket_size < 2:
        raise ConfigError("bucket_size must be >= 2")
    ranked = table.ranked()
    buckets = []
    for start in range(0, len(ranked), bucket_size):
        chunk = ranked[start : start + bucket_size]
        if len(chunk) < 2:
            continue
        ratios = [row.ratio for row in chunk]
        buckets.append(
            (chunk[0].rank_ref, chunk[-1].rank_ref, statistics.variance(ratios))
        )
    return buckets
