"""Seeded samplers for manual annotation studies, plus annotation-file I/O.

Two samplers: exhaustively-unparseable model output for grammaticality
judgments, and reference/model pairs contrasting on a single rule for
qualitative review. Annotation files are TSV; the sampler writes judgment
columns blank and the summarizer re-reads the completed file.
"""

from __future__ import annotations

import csv
import random
from dataclasses import dataclass
from typing import Mapping, Sequence

from .corpus import ParallelExample
from .derivation import Derivation, bag_of_rules
from .errors import DataError, IncompleteAnnotationError, InventoryError, SchemaError
from .gateway import ParseOutcome, ParseResult

__all__ = [
    "AnnotationRecord",
    "UnparseableSample",
    "GrammaticalitySummary",
    "sample_exhaustive_unparseable",
    "summarize_grammaticality",
    "sample_rule_contrast",
    "write_annotation_template",
    "read_annotation_file",
]

ANNOTATION_HEADER = [
    "id",
    "text",
    "grammatical",
    "sv_agreement_error",
    "np_agreement_error",
    "excluded",
    "exclusion_reason",
]


@dataclass(frozen=True)
class AnnotationRecord:
    id: int
    text: str
    grammatical: int | None = None  # 1/0, None while unjudged or excluded
    sv_agreement_error: int = 0
    np_agreement_error: int = 0
    excluded: int = 0
    exclusion_reason: str = ""

    def __post_init__(self):
        if self.excluded and self.grammatical is not None:
            raise DataError(f"record {self.id}: excluded records carry no judgment")


@dataclass(frozen=True)
class UnparseableSample:
    items: tuple[tuple[int, str], ...]
    requested: int

    @property
    def short(self) -> bool:
        """True when fewer sentences qualified than were requested."""
        return len(self.items) < self.requested


def sample_exhaustive_unparseable(
    results: Sequence[ParseResult],
    outputs: Mapping[int, Sequence[str]],
    max_words: int = 10,
    n: int = 100,
    seed: int = 0,
) -> UnparseableSample:
    """Uniform sample of short, exhaustively unparseable model sentences.

    Qualifying sentences have the exhausted outcome and strictly fewer than
    ``max_words`` tokens. When fewer than ``n`` qualify the whole pool is
    returned and the sample reports itself short.
    """
    pool = []
    for result in results:
        if result.outcome is not ParseOutcome.EXHAUSTED:
            continue
        tokens = outputs.get(result.id)
        if tokens is None:
            raise DataError(f"no output sentence for result {result.id}")
        if len(tokens) < max_words:
            pool.append((result.id, " ".join(tokens)))
    if len(pool) <= n:
        chosen = list(pool)
    else:
        chosen = random.Random(seed).sample(pool, n)
    chosen.sort(key=lambda item: item[0])
    return UnparseableSample(items=tuple(chosen), requested=n)


@dataclass(frozen=True)
class GrammaticalitySummary:
    total: int
    grammatical: int
    ungrammatical: int
    excluded: int
    fixable: int  # ungrammatical records with an agreement flag, counted once

    @property
    def included(self) -> int:
        return self.total - self.excluded

    @property
    def grammatical_share(self) -> float | None:
        return self.grammatical / self.included if self.included else None

    @property
    def fixable_share(self) -> float | None:
        return self.fixable / self.ungrammatical if self.ungrammatical else None


def summarize_grammaticality(records: Sequence[AnnotationRecord]) -> GrammaticalitySummary:
    """Counts and shares from a completed annotation file.

    Every non-excluded record must carry a judgment. A record with both
    agreement flags set still counts once toward the fixable total.
    """
    grammatical = ungrammatical = excluded = fixable = 0
    for record in records:
        if record.excluded:
            excluded += 1
            continue
        if record.grammatical is None:
            raise IncompleteAnnotationError(f"record {record.id} has no grammaticality judgment")
        if record.grammatical:
            grammatical += 1
        else:
            ungrammatical += 1
            if record.sv_agreement_error or record.np_agreement_error:
                fixable += 1
    return GrammaticalitySummary(
        total=len(records),
        grammatical=grammatical,
        ungrammatical=ungrammatical,
        excluded=excluded,
        fixable=fixable,
    )


@dataclass(frozen=True)
class ContrastPair:
    example: ParallelExample
    ref_derivation: Derivation
    nmt_derivation: Derivation


def sample_rule_contrast(
    rule: str,
    pairs: Sequence[ContrastPair],
    max_len: int = 12,
    n: int = 20,
    seed: int = 0,
) -> list[tuple[tuple[str, ...], tuple[str, ...], tuple[str, ...]]]:
    """Sample pairs where the reference uses ``rule`` and the model does not.

    Pairs qualify when the reference derivation contains the rule, the model
    derivation does not, and the reference has strictly fewer than
    ``max_len`` tokens. Returns (source, reference, output) triples.
    """
    inventory = set()
    qualifying = []
    for pair in pairs:
        ref_bag = bag_of_rules(pair.ref_derivation)
        nmt_bag = bag_of_rules(pair.nmt_derivation)
        inventory.update(ref_bag)
        inventory.update(nmt_bag)
        if (
            rule in ref_bag
            and rule not in nmt_bag
            and len(pair.example.reference) < max_len
        ):
            qualifying.append(pair)
    if rule not in inventory:
        raise InventoryError(
            f"rule {rule!r} does not occur in the supplied derivations"
        )
    if len(qualifying) <= n:
        chosen = list(qualifying)
    else:
        chosen = random.Random(seed).sample(qualifying, n)
    chosen.sort(key=lambda pair: pair.example.id)
    return [
        (pair.example.source, pair.example.reference, pair.example.output or ())
        for pair in chosen
    ]


def write_annotation_template(sample: UnparseableSample, path) -> None:
    with open(path, "w", encoding="utf-8", newline="") as handle:
        writer = csv.writer(handle, delimiter="\t", lineterminator="\n")
        writer.writerow(ANNOTATION_HEADER)
        for idx, text in sample.items:
            writer.writerow([idx, text, "", "", "", "0", ""])


def _parse_flag(value: str, default: int = 0) -> int:
    if value == "":
        return default
    if value in ("0", "1"):
        return int(value)
    raise ValueError(f"expected 0/1/empty, got {value!r}")


def read_annotation_file(path) -> list[AnnotationRecord]:
    records = []
    with open(path, encoding="utf-8", newline="") as handle:
        reader = csv.reader(handle, delimiter="\t")
        header = next(reader, None)
        if header != ANNOTATION_HEADER:
            raise SchemaError(path, 1, f"bad annotation header: {header}")
        for line_no, row in enumerate(reader, start=2):
            if not row:
                continue
            if len(row) != len(ANNOTATION_HEADER):
                raise SchemaError(path, line_no, f"expected {len(ANNOTATION_HEADER)} columns")
            try:
                grammatical = None if row[2] == "" else _parse_flag(row[2])
                record = AnnotationRecord(
                    id=int(row[0]),
                    text=row[1],
                    grammatical=grammatical,
                    sv_agreement_error=_parse_flag(row[3]),
                    np_agreement_error=_parse_flag(row[4]),
                    excluded=_parse_flag(row[5]),
                    exclusion_reason=row[6],
                )
            except (ValueError, DataError) as exc:
                raise SchemaError(path, line_no, str(exc)) from None
            records.append(record)
    return records
