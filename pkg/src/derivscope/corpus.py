"""Parallel-corpus ingestion: loading, vocabularies, UNK handling, splits.

Corpus files are UTF-8 plain text, one sentence per line, aligned by line
number; tokenization is whitespace splitting. Vocabulary files are TSV
``token<TAB>count<TAB>rank`` ordered by rank.
"""

from __future__ import annotations

import csv
import random
from collections import Counter
from dataclasses import dataclass, replace
from typing import Iterable, Mapping, Sequence

from .errors import AlignmentError, ConfigError, DataError, MissingResultError, SchemaError
from .derivation import Derivation
from .gateway import ParseOutcome, ParseResult

__all__ = [
    "ParallelExample",
    "Vocabulary",
    "SplitSpec",
    "UNK_TOKEN",
    "DEFAULT_GENERIC_CLASSES",
    "load_lines",
    "load_parallel",
    "attach_outputs",
    "build_vocab",
    "apply_source_unk",
    "apply_typed_target_unk",
    "filter_parseable",
    "split_dataset",
    "write_vocab",
    "read_vocab",
]

UNK_TOKEN = "<unk>"

# Open lexical classes eligible for typed replacement tokens (generic_adj etc).
DEFAULT_GENERIC_CLASSES = frozenset({"adj", "noun", "verb", "adv", "card", "prep"})


@dataclass(frozen=True)
class ParallelExample:
    """One aligned test item; id equals the 0-based line number of origin."""

    id: int
    source: tuple[str, ...]
    reference: tuple[str, ...]
    output: tuple[str, ...] | None = None
    model_lp: float | None = None

    def __post_init__(self):
        if self.model_lp is not None:
            if not (self.model_lp == self.model_lp) or self.model_lp in (
                float("inf"),
                float("-inf"),
            ):
                raise DataError(f"example {self.id}: model_lp must be finite")
            if self.model_lp > 0:
                raise DataError(f"example {self.id}: log probability must be <= 0")


@dataclass(frozen=True)
class Vocabulary:
    """Frequency-ranked token inventory; ranks are 1-based, ties lexicographic."""

    entries: tuple[tuple[str, int], ...]

    def __post_init__(self):
        object.__setattr__(
            self, "rank", {token: i for i, (token, _) in enumerate(self.entries, start=1)}
        )

    def __contains__(self, token: str) -> bool:
        return token in self.rank

    def __len__(self) -> int:
        return len(self.entries)


@dataclass(frozen=True)
class SplitSpec:
    train: int
    valid: int
    analysis: int
    seed: int = 0

    def __post_init__(self):
        if min(self.train, self.valid, self.analysis) < 0:
            raise ConfigError("split sizes must be >= 0")


def load_lines(path) -> list[list[str]]:
    """Whitespace-tokenized lines; decode failures name the line."""
    sentences = []
    with open(path, "rb") as handle:
        for line_no, raw in enumerate(handle, start=1):
            try:
                text = raw.decode("utf-8")
            except UnicodeDecodeError as exc:
                raise SchemaError(path, line_no, f"invalid UTF-8: {exc.reason}") from None
            sentences.append(text.split())
    return sentences


def load_parallel(source_path, target_path) -> list[ParallelExample]:
    """Read aligned source/target files into examples, ids by line number.

    Empty lines become empty token sequences and are kept; downstream stages
    flag them rather than silently dropping lines.
    """
    source = load_lines(source_path)
    target = load_lines(target_path)
    if len(source) != len(target):
        raise AlignmentError(
            f"line-count mismatch: {source_path} has {len(source)} lines, "
            f"{target_path} has {len(target)}"
        )
    return [
        ParallelExample(id=i, source=tuple(src), reference=tuple(ref))
        for i, (src, ref) in enumerate(zip(source, target))
    ]


def attach_outputs(
    examples: Sequence[ParallelExample], output_path, scores_path=None
) -> list[ParallelExample]:
    """Attach model translations (and per-sentence log probabilities) by line.

    The scores file carries one decimal natural-log probability per line,
    aligned with the outputs file; a blank line means the score is
    unavailable.
    """
    outputs = load_lines(output_path)
    if len(outputs) != len(examples):
        raise AlignmentError(
            f"line-count mismatch: {output_path} has {len(outputs)} lines, "
            f"corpus has {len(examples)}"
        )
    scores: list[float | None] = [None] * len(examples)
    if scores_path is not None:
        with open(scores_path, encoding="utf-8") as handle:
            raw_scores = handle.read().splitlines()
        if len(raw_scores) != len(examples):
            raise AlignmentError(
                f"line-count mismatch: {scores_path} has {len(raw_scores)} lines, "
                f"corpus has {len(examples)}"
            )
        for line_no, text in enumerate(raw_scores, start=1):
            text = text.strip()
            if not text:
                continue
            try:
                scores[line_no - 1] = float(text)
            except ValueError:
                raise SchemaError(scores_path, line_no, f"not a number: {text!r}") from None
    return [
        replace(ex, output=tuple(out), model_lp=score)
        for ex, out, score in zip(examples, outputs, scores)
    ]


def build_vocab(sentences: Iterable[Sequence[str]], max_rank: int) -> Vocabulary:
    """Keep the ``max_rank`` most frequent tokens, ties broken lexicographically."""
    if max_rank < 1:
        raise ConfigError("max_rank must be >= 1")
    counts = Counter()
    for sentence in sentences:
        counts.update(sentence)
    ordered = sorted(counts.items(), key=lambda item: (-item[1], item[0]))
    return Vocabulary(entries=tuple(ordered[:max_rank]))


def apply_source_unk(sentence: Sequence[str], vocab: Vocabulary) -> list[str]:
    """Replace out-of-vocabulary tokens with the UNK literal; idempotent."""
    return [token if token in vocab else UNK_TOKEN for token in sentence]


def apply_typed_target_unk(
    sentence: Sequence[str],
    vocab: Vocabulary,
    lexentries: Sequence[str | None] | Mapping[str, str] | None,
    generic_classes: frozenset[str] = DEFAULT_GENERIC_CLASSES,
) -> list[str]:
    """Replace rare target tokens with class-typed generics.

    A rare token whose best-parse lexical entry falls in an open class
    becomes ``generic_<class>``; rare tokens without usable lexical-entry
    information fall back to the plain UNK literal. ``lexentries`` is the
    per-position class list recorded from the sentence's best parse (a
    token->class mapping is also accepted).
    """
    def class_at(position: int, token: str) -> str | None:
        if lexentries is None:
            return None
        if isinstance(lexentries, Mapping):
            return lexentries.get(token)
        if position < len(lexentries):
            return lexentries[position]
        return None

    replaced = []
    for position, token in enumerate(sentence):
        if token in vocab:
            replaced.append(token)
            continue
        cls = class_at(position, token)
        if cls in generic_classes:
            replaced.append(f"generic_{cls}")
        else:
            replaced.append(UNK_TOKEN)
    return replaced


def filter_parseable(
    examples: Sequence[ParallelExample],
    parse_results: Mapping[int, ParseResult],
) -> tuple[list[ParallelExample], list[Derivation]]:
    """Keep examples whose reference parsed, paired with the best derivations."""
    kept = []
    derivations = []
    for example in examples:
        try:
            result = parse_results[example.id]
        except KeyError:
            raise MissingResultError(f"no parse result for example {example.id}") from None
        if result.outcome is ParseOutcome.PARSEABLE:
            kept.append(example)
            derivations.append(result.derivation)
    return kept, derivations


def split_dataset(
    examples: Sequence[ParallelExample], spec: SplitSpec
) -> tuple[list[ParallelExample], list[ParallelExample], list[ParallelExample]]:
    """Seeded uniform shuffle, then contiguous train/valid/analysis slices."""
    total = spec.train + spec.valid + spec.analysis
    if total != len(examples):
        raise ConfigError(
            f"split sizes {spec.train}+{spec.valid}+{spec.analysis} != corpus size {len(examples)}"
        )
    shuffled = list(examples)
    random.Random(spec.seed).shuffle(shuffled)
    train = shuffled[: spec.train]
    valid = shuffled[spec.train : spec.train + spec.valid]
    analysis = shuffled[spec.train + spec.valid :]
    return train, valid, analysis


def write_vocab(vocab: Vocabulary, path) -> None:
    with open(path, "w", encoding="utf-8", newline="") as handle:
        writer = csv.writer(handle, delimiter="\t", lineterminator="\n")
        writer.writerow(["token", "count", "rank"])
        for rank, (token, count) in enumerate(vocab.entries, start=1):
            writer.writerow([token, count, rank])


def read_vocab(path) -> Vocabulary:
    entries = []
    with open(path, encoding="utf-8", newline="") as handle:
        reader = csv.reader(handle, delimiter="\t")
        header = next(reader, None)
        if header != ["token", "count", "rank"]:
            raise SchemaError(path, 1, f"bad vocabulary header: {header}")
        for line_no, row in enumerate(reader, start=2):
            try:
                token, count, rank = row[0], int(row[1]), int(row[2])
            except (IndexError, ValueError) as exc:
                raise SchemaError(path, line_no, f"bad vocabulary row: {exc}") from None
            if rank != len(entries) + 1:
                raise SchemaError(path, line_no, f"rank {rank} out of order")
            entries.append((token, count))
    return Vocabulary(entries=tuple(entries))
