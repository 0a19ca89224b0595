"""Derivation trees: parsing, serialization, root conditions, rule bags.

A derivation records which grammar rules licensed a sentence. Internal nodes
carry a rule label and at least one child; leaves carry the surface token and
the lexical-entry class the parser assigned to it. The wire encoding is a
nested JSON array ``["rule_label", child, ...]`` with leaf objects
``{"token": ..., "le": ...}``.
"""

from __future__ import annotations

import json
from collections import Counter
from dataclasses import dataclass
from enum import Enum
from typing import Iterator, Union

from .errors import RootLabelError, TreeFormatError

__all__ = [
    "Leaf",
    "Node",
    "Tree",
    "Formality",
    "Completeness",
    "RootCondition",
    "Derivation",
    "DEFAULT_ROOT_LABELS",
    "parse_tree",
    "parse_derivation",
    "encode_tree",
    "serialize_tree",
    "canonical_encoding",
    "root_condition",
    "root_label_for",
    "leaf_tokens",
    "leaf_classes",
    "bag_of_rules",
    "is_lexical_rule",
]


@dataclass(frozen=True)
class Leaf:
    token: str
    le: str | None = None


@dataclass(frozen=True)
class Node:
    label: str
    children: tuple["Tree", ...]

    def __post_init__(self):
        if not self.children:
            raise TreeFormatError(f"internal node {self.label!r} has no children")


Tree = Union[Node, Leaf]


class Formality(Enum):
    STRICT = "strict"
    INFORMAL = "informal"


class Completeness(Enum):
    FULL = "full"
    FRAGMENT = "fragment"


@dataclass(frozen=True)
class RootCondition:
    formality: Formality
    completeness: Completeness


# Root wrapper labels as emitted by the parser, mapped to the four conditions.
DEFAULT_ROOT_LABELS: dict[str, RootCondition] = {
    "root_strict": RootCondition(Formality.STRICT, Completeness.FULL),
    "root_frag": RootCondition(Formality.STRICT, Completeness.FRAGMENT),
    "root_informal": RootCondition(Formality.INFORMAL, Completeness.FULL),
    "root_inffrag": RootCondition(Formality.INFORMAL, Completeness.FRAGMENT),
}

_ROOT_LABEL_BY_CONDITION = {cond: label for label, cond in DEFAULT_ROOT_LABELS.items()}

# Suffix convention for non-syntactic rules (inflection, orthography,
# punctuation attachment). Rule bags skip these unless asked not to.
_LEXICAL_RULE_SUFFIXES = ("_plr", "_ilr", "_olr")


@dataclass(frozen=True)
class Derivation:
    """A parsed sentence's rule tree plus its root condition.

    ``root`` is None for trees that arrived without a root-condition wrapper
    (e.g. the bare tree encodings used in files and on the wire carry the
    root label in a separate field).
    """

    tree: Node
    root: RootCondition | None = None

    def tokens(self) -> list[str]:
        return leaf_tokens(self.tree)


def root_condition(label: str, mapping: dict[str, RootCondition] | None = None) -> RootCondition:
    """Map a root wrapper label to its (formality, completeness) condition."""
    table = DEFAULT_ROOT_LABELS if mapping is None else mapping
    try:
        return table[label]
    except KeyError:
        known = ", ".join(sorted(table))
        raise RootLabelError(f"unknown root label {label!r}; known labels: {known}") from None


def root_label_for(condition: RootCondition) -> str:
    """Inverse of :func:`root_condition` under the default mapping."""
    return _ROOT_LABEL_BY_CONDITION[condition]


def is_lexical_rule(label: str) -> bool:
    """True for rule labels that are lexical/orthographic by naming convention."""
    return label.endswith(_LEXICAL_RULE_SUFFIXES)


def _build_tree(obj, where: str) -> Tree:
    if isinstance(obj, dict):
        if "token" not in obj:
            raise TreeFormatError("leaf object lacks 'token'", where)
        token = obj["token"]
        if not isinstance(token, str):
            raise TreeFormatError("leaf 'token' must be a string", where)
        le = obj.get("le")
        if le is not None and not isinstance(le, str):
            raise TreeFormatError("leaf 'le' must be a string or null", where)
        extra = set(obj) - {"token", "le"}
        if extra:
            raise TreeFormatError(f"unexpected leaf keys {sorted(extra)}", where)
        return Leaf(token=token, le=le)
    if isinstance(obj, list):
        if not obj:
            raise TreeFormatError("empty node array", where)
        label = obj[0]
        if not isinstance(label, str):
            raise TreeFormatError("node label must be a string", where)
        if len(obj) < 2:
            raise TreeFormatError(f"node {label!r} has no children", where)
        children = tuple(
            _build_tree(child, f"{where}[{i}]") for i, child in enumerate(obj[1:], start=1)
        )
        return Node(label=label, children=children)
    raise TreeFormatError(f"expected array or leaf object, got {type(obj).__name__}", where)


def parse_tree(encoded) -> Tree:
    """Decode a wire-format tree (JSON text or already-decoded structure).

    Raises TreeFormatError with the offending position for malformed input.
    """
    if isinstance(encoded, (str, bytes)):
        try:
            obj = json.loads(encoded)
        except json.JSONDecodeError as exc:
            raise TreeFormatError(f"invalid JSON: {exc.msg}", f"offset {exc.pos}") from None
    else:
        obj = encoded
    return _build_tree(obj, "$")


def parse_derivation(encoded, mapping: dict[str, RootCondition] | None = None) -> Derivation:
    """Decode a tree into a Derivation.

    If the top node is a root-condition wrapper (e.g. ``root_strict``), it is
    split off into the root condition; otherwise the root is left unset.
    """
    tree = parse_tree(encoded)
    table = DEFAULT_ROOT_LABELS if mapping is None else mapping
    if isinstance(tree, Node) and tree.label in table:
        if len(tree.children) != 1 or not isinstance(tree.children[0], Node):
            raise TreeFormatError(
                f"root wrapper {tree.label!r} must have exactly one internal child", "$"
            )
        return Derivation(tree=tree.children[0], root=table[tree.label])
    if isinstance(tree, Leaf):
        raise TreeFormatError("a derivation must have at least one rule node", "$")
    return Derivation(tree=tree)


def _encode(tree: Tree):
    if isinstance(tree, Leaf):
        return {"le": tree.le, "token": tree.token}
    return [tree.label, *(_encode(child) for child in tree.children)]


def encode_tree(tree: Tree):
    """Wire structure for a tree: nested lists with leaf dicts."""
    return _encode(tree)


def serialize_tree(tree: Tree) -> str:
    """Canonical wire encoding: compact JSON with sorted leaf keys."""
    return json.dumps(_encode(tree), sort_keys=True, separators=(",", ":"))


def canonical_encoding(encoded) -> str:
    """Canonical form of an encoded tree without interpreting it further."""
    return serialize_tree(parse_tree(encoded))


def iter_leaves(tree: Tree) -> Iterator[Leaf]:
    if isinstance(tree, Leaf):
        yield tree
        return
    for child in tree.children:
        yield from iter_leaves(child)


def leaf_tokens(tree: Tree) -> list[str]:
    """Left-to-right surface tokens; reproduces the parsed sentence."""
    return [leaf.token for leaf in iter_leaves(tree)]


def leaf_classes(tree: Tree) -> list[str | None]:
    """Per-token lexical-entry classes, aligned with :func:`leaf_tokens`."""
    return [leaf.le for leaf in iter_leaves(tree)]


def bag_of_rules(
    derivation: Derivation | Node,
    include_root: bool = False,
    include_lexical: bool = False,
) -> Counter:
    """Multiset of rule labels over the derivation's internal nodes.

    The root-condition wrapper is not part of the stored tree; with
    ``include_root`` the derivation's root label is counted as one extra
    occurrence. Lexical/orthographic rules (see :func:`is_lexical_rule`)
    are skipped unless ``include_lexical`` is set.
    """
    if isinstance(derivation, Derivation):
        tree = derivation.tree
        root = derivation.root
    else:
        tree = derivation
        root = None
    bag: Counter = Counter()

    def visit(node: Tree):
        if isinstance(node, Leaf):
            return
        if include_lexical or not is_lexical_rule(node.label):
            bag[node.label] += 1
        for child in node.children:
            visit(child)

    visit(tree)
    if include_root and root is not None:
        bag[root_label_for(root)] += 1
    return bag
