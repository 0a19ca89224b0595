"""Brute-force derivation enumerator used as an independent test oracle.

Re-reads the grammar text with its own tiny parser and enumerates every
derivation of every root category by exhaustive recursion. Shares nothing
with the production chart parser beyond the grammar file format, so
agreement between the two is meaningful.
"""

from __future__ import annotations

import re
from functools import lru_cache


class OracleGrammar:
    def __init__(self, text: str):
        self.starts = {}  # category -> "full" | "fragment"
        self.rules = []  # (label, lhs, rhs tuple, weight)
        self.lexicon = {}  # lowercased token -> [(cat, class)]
        self.regexes = []  # (compiled, cat, class)
        for raw in text.splitlines():
            line = raw.strip()
            if not line or line.startswith("#"):
                continue
            parts = line.split()
            if parts[0] == "start":
                self.starts[parts[2]] = parts[1]
            elif parts[0] == "rule":
                weight, label, lhs = float(parts[1]), parts[2], parts[3]
                assert parts[4] == "->"
                self.rules.append((label, lhs, tuple(parts[5:]), weight))
            elif parts[0] == "lex":
                cat, cls = parts[1], parts[2]
                for token in parts[3:]:
                    self.lexicon.setdefault(token.lower(), []).append((cat, cls))
            elif parts[0] == "rlex":
                self.regexes.append((re.compile(parts[3]), parts[1], parts[2]))
            else:
                raise AssertionError(f"oracle cannot read line: {line}")

    def entries(self, token: str):
        found = list(self.lexicon.get(token.lower(), []))
        for pattern, cat, cls in self.regexes:
            if pattern.match(token) and (cat, cls) not in found:
                found.append((cat, cls))
        return found


def all_derivations(grammar: OracleGrammar, tokens, cap: int = 100_000):
    """Every derivation per root category: {category: [tree, ...]}.

    Trees are tuples ("leaf", token, class) / (label, child, ...). Raises
    if the derivation space exceeds ``cap`` (a grammar design problem).
    """
    tokens = list(tokens)
    n = len(tokens)
    unary = {}
    binary = {}
    for label, lhs, rhs, _ in grammar.rules:
        if len(rhs) == 1:
            unary.setdefault(rhs[0], []).append((label, lhs))
        else:
            binary.setdefault(rhs, []).append((label, lhs))

    total = 0

    @lru_cache(maxsize=None)
    def derive(i: int, j: int, cat: str):
        nonlocal total
        found = []
        if j - i == 1:
            for entry_cat, cls in grammar.entries(tokens[i]):
                if entry_cat == cat:
                    found.append(("leaf", tokens[i], cls))
        for k in range(i + 1, j):
            for (left_cat, right_cat), prods in binary.items():
                for label, lhs in prods:
                    if lhs != cat:
                        continue
                    lefts = derive(i, k, left_cat)
                    if not lefts:
                        continue
                    rights = derive(k, j, right_cat)
                    for left in lefts:
                        for right in rights:
                            found.append((label, left, right))
        # unary rules producing cat (chains recurse; the grammar is acyclic)
        for child_cat, prods in unary.items():
            for label, lhs in prods:
                if lhs != cat or child_cat == cat:
                    continue
                for child in derive(i, j, child_cat):
                    found.append((label, child))
        total += len(found)
        if total > cap:
            raise AssertionError("oracle derivation space exceeded cap")
        return tuple(found)

    return {cat: list(derive(0, n, cat)) for cat in grammar.starts} if n else {
        cat: [] for cat in grammar.starts
    }


def derivation_count(grammar: OracleGrammar, tokens) -> int:
    by_cat = all_derivations(grammar, tokens)
    return sum(len(trees) for trees in by_cat.values())


def oracle_leaf_tokens(tree) -> list:
    if tree[0] == "leaf":
        return [tree[1]]
    out = []
    for child in tree[1:]:
        out.extend(oracle_leaf_tokens(child))
    return out
