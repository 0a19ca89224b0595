"""Bundled toy chart-parser backend.

A small context-free grammar with rule-labeled unary/binary productions and a
class-typed lexicon stands in for a real precision-grammar backend in tests
and demos. Parsing is an exhaustive bottom-up chart parse; among all
derivations of a root category the backend reports the best one under a fixed
rule-weight score, with ties broken by the lexicographically smallest tree.

Root-condition semantics: a parse rooted in the ``full`` start category is a
full sentence, one rooted in the ``fragment`` category is a fragment; the
sentence is ``strict`` iff its raw form starts with a capitalized token and
ends in terminal punctuation, else ``informal``.
"""

from __future__ import annotations

import re
import time
from dataclasses import dataclass
from functools import lru_cache
from importlib import resources
from typing import Sequence

from .derivation import (
    Completeness,
    Formality,
    Leaf,
    Node,
    RootCondition,
    Tree,
    encode_tree,
    leaf_classes,
    root_label_for,
)
from .errors import GrammarError

__all__ = ["Production", "ToyGrammar", "load_toy_grammar", "toy_backend_parse"]


@dataclass(frozen=True)
class Production:
    label: str
    lhs: str
    rhs: tuple[str, ...]
    weight: float


@dataclass
class ToyGrammar:
    starts: dict[str, Completeness]
    productions: list[Production]
    lexicon: dict[str, list[tuple[str, str]]]  # lowercased token -> (category, class)
    regex_entries: list[tuple[re.Pattern, str, str]]

    def __post_init__(self):
        self.binary: dict[tuple[str, str], list[Production]] = {}
        self.unary: dict[str, list[Production]] = {}
        for prod in self.productions:
            if len(prod.rhs) == 2:
                self.binary.setdefault((prod.rhs[0], prod.rhs[1]), []).append(prod)
            else:
                self.unary.setdefault(prod.rhs[0], []).append(prod)
        self.terminal_punct = {
            tok for tok, entries in self.lexicon.items() if any(cat == "PT" for cat, _ in entries)
        }
        self._check_unary_acyclic()

    def _check_unary_acyclic(self):
        edges: dict[str, set[str]] = {}
        for prod in self.productions:
            if len(prod.rhs) == 1:
                edges.setdefault(prod.rhs[0], set()).add(prod.lhs)
        seen_path: set[str] = set()
        done: set[str] = set()

        def visit(cat: str):
            if cat in done:
                return
            if cat in seen_path:
                raise GrammarError(f"unary rule cycle through category {cat!r}")
            seen_path.add(cat)
            for nxt in edges.get(cat, ()):
                visit(nxt)
            seen_path.discard(cat)
            done.add(cat)

        for cat in list(edges):
            visit(cat)

    def lex_entries(self, token: str) -> list[tuple[str, str]]:
        """Lexical categories for a raw token (case-insensitive lookup)."""
        found = list(self.lexicon.get(token.lower(), ()))
        for pattern, cat, cls in self.regex_entries:
            if pattern.match(token) and (cat, cls) not in found:
                found.append((cat, cls))
        return found


def _parse_grammar_text(text: str, origin: str) -> ToyGrammar:
    starts: dict[str, Completeness] = {}
    productions: list[Production] = []
    lexicon: dict[str, list[tuple[str, str]]] = {}
    regex_entries: list[tuple[re.Pattern, str, str]] = []
    for line_no, raw in enumerate(text.splitlines(), start=1):
        line = raw.strip()
        if not line or line.startswith("#"):
            continue
        fields = line.split()
        kind = fields[0]
        try:
            if kind == "start":
                _, completeness, cat = fields
                starts[cat] = Completeness(completeness)
            elif kind == "rule":
                weight = float(fields[1])
                label = fields[2]
                lhs = fields[3]
                if fields[4] != "->":
                    raise ValueError("expected '->'")
                rhs = tuple(fields[5:])
                if not 1 <= len(rhs) <= 2:
                    raise ValueError("productions must be unary or binary")
                productions.append(Production(label=label, lhs=lhs, rhs=rhs, weight=weight))
            elif kind == "lex":
                cat, cls = fields[1], fields[2]
                for token in fields[3:]:
                    lexicon.setdefault(token.lower(), []).append((cat, cls))
            elif kind == "rlex":
                cat, cls, pattern = fields[1], fields[2], fields[3]
                regex_entries.append((re.compile(pattern), cat, cls))
            else:
                raise ValueError(f"unknown directive {kind!r}")
        except (ValueError, IndexError) as exc:
            raise GrammarError(f"{origin}:{line_no}: {exc}") from None
    if not starts:
        raise GrammarError(f"{origin}: no start categories declared")
    return ToyGrammar(
        starts=starts, productions=productions, lexicon=lexicon, regex_entries=regex_entries
    )


@lru_cache(maxsize=4)
def load_toy_grammar(path: str | None = None) -> ToyGrammar:
    """Load the bundled grammar, or one from ``path`` for experiments."""
    if path is None:
        text = resources.files("derivscope.data").joinpath("toy_grammar.txt").read_text("utf-8")
        origin = "toy_grammar.txt"
    else:
        with open(path, encoding="utf-8") as handle:
            text = handle.read()
        origin = str(path)
    return _parse_grammar_text(text, origin)


class _Deadline(Exception):
    pass


@dataclass
class _Item:
    score: float
    order: str  # deterministic tiebreak key; smaller wins on equal score
    tree: Tree

    def beats(self, other: "_Item | None") -> bool:
        if other is None:
            return True
        if self.score != other.score:
            return self.score > other.score
        return self.order < other.order


def _leaf_item(token: str, cls: str) -> _Item:
    return _Item(score=0.0, order=f"({token})", tree=Leaf(token=token, le=cls))


def _apply(prod: Production, children: tuple[_Item, ...]) -> _Item:
    score = prod.weight + sum(child.score for child in children)
    order = f"({prod.label} " + " ".join(child.order for child in children) + ")"
    tree = Node(label=prod.label, children=tuple(child.tree for child in children))
    return _Item(score=score, order=order, tree=tree)


def _viterbi_chart(tokens: Sequence[str], grammar: ToyGrammar, deadline: float | None):
    """Best-scoring item per (span, category); None when a token has no entry."""
    n = len(tokens)
    chart: dict[tuple[int, int], dict[str, _Item]] = {}

    def close_unary(cell: dict[str, _Item]):
        changed = True
        while changed:
            changed = False
            for cat in list(cell):
                for prod in grammar.unary.get(cat, ()):
                    candidate = _apply(prod, (cell[cat],))
                    if candidate.beats(cell.get(prod.lhs)):
                        cell[prod.lhs] = candidate
                        changed = True

    for i, token in enumerate(tokens):
        entries = grammar.lex_entries(token)
        if not entries:
            return None
        cell: dict[str, _Item] = {}
        for cat, cls in entries:
            item = _leaf_item(token, cls)
            if item.beats(cell.get(cat)):
                cell[cat] = item
        close_unary(cell)
        chart[(i, i + 1)] = cell

    for length in range(2, n + 1):
        if deadline is not None and time.perf_counter() > deadline:
            raise _Deadline
        for i in range(0, n - length + 1):
            j = i + length
            cell = {}
            for k in range(i + 1, j):
                left = chart[(i, k)]
                right = chart[(k, j)]
                for lcat, litem in left.items():
                    for rcat, ritem in right.items():
                        for prod in grammar.binary.get((lcat, rcat), ()):
                            candidate = _apply(prod, (litem, ritem))
                            if candidate.beats(cell.get(prod.lhs)):
                                cell[prod.lhs] = candidate
            close_unary(cell)
            chart[(i, j)] = cell
    return chart


def _formality(tokens: Sequence[str], grammar: ToyGrammar) -> Formality:
    starts_upper = bool(tokens) and tokens[0][:1].isupper()
    ends_punct = bool(tokens) and tokens[-1] in grammar.terminal_punct
    return Formality.STRICT if (starts_upper and ends_punct) else Formality.INFORMAL


def toy_backend_parse(
    tokens: Sequence[str],
    grammar: ToyGrammar | None = None,
    timeout_ms: int = 60_000,
) -> dict:
    """Parse one sentence; returns a backend reply in the wire format.

    Status is ``ok`` with the best derivation, ``no_parse`` after the whole
    derivation space is exhausted, or ``resource`` when the wall clock passes
    ``timeout_ms``.
    """
    grammar = grammar or load_toy_grammar()
    started = time.perf_counter()
    if timeout_ms <= 0:
        return {"status": "resource"}
    deadline = started + timeout_ms / 1000.0

    try:
        chart = _viterbi_chart(tokens, grammar, deadline)
    except _Deadline:
        return {"status": "resource"}
    if chart is None or not tokens:
        return {"status": "no_parse"}

    span = (0, len(tokens))
    best: _Item | None = None
    best_cat: str | None = None
    for cat in sorted(grammar.starts):
        item = chart[span].get(cat)
        if item is not None and item.beats(best):
            best = item
            best_cat = cat
    if best is None:
        return {"status": "no_parse"}
    if time.perf_counter() > deadline:
        return {"status": "resource"}

    condition = RootCondition(
        formality=_formality(tokens, grammar),
        completeness=grammar.starts[best_cat],
    )
    return {
        "status": "ok",
        "derivation": encode_tree(best.tree),
        "lexentries": leaf_classes(best.tree),
        "root": root_label_for(condition),
    }
