"""Generic syntax tree shared by every language adapter."""

from __future__ import annotations

import hashlib
import re
from dataclasses import dataclass
from typing import Iterator

DEFAULT = "Default"
PRIMITIVE = "Primitive"
COMMENT = "Comment"
SPECIAL = "Special"
CATEGORIES = (DEFAULT, PRIMITIVE, COMMENT, SPECIAL)

FUNCTION_KINDS = frozenset(
    {"Function", "FunctionDef", "AsyncFunctionDef", "Method", "MethodDeclaration",
     "FunctionDeclaration"}
)

_SPECIAL_WORDS = {"if", "while", "for", "foreach", "asyncfor", "dowhile",
                  "switch", "match", "try", "return", "break", "continue"}
_PRIMITIVE_WORDS = {
    "string", "str", "number", "num", "numeric", "integer", "int", "float",
    "decimal", "byte", "bytes", "char", "character", "boolean", "bool",
    "true", "false", "templatestring",
}
_SUFFIXES = ("statement", "stmt", "literal", "lit", "clause", "expression", "expr")


def _normalize(kind: str) -> str:
    word = re.sub(r"[^a-z0-9]", "", kind.lower())
    for suffix in _SUFFIXES:
        if word.endswith(suffix) and len(word) > len(suffix):
            return word[: -len(suffix)]
    return word


def classify_kind(kind: str) -> str:
    """Map a node kind to one of the four change categories.

    Control-flow kinds are Special, literal kinds are Primitive, anything
    mentioning a comment is Comment and the rest falls through to Default.
    """
    lowered = kind.lower()
    if "comment" in lowered:
        return COMMENT
    word = _normalize(kind)
    if word in _SPECIAL_WORDS:
        return SPECIAL
    if word in _PRIMITIVE_WORDS:
        return PRIMITIVE
    return DEFAULT


class AstNode:
    """One syntax tree node.

    Nodes compare by identity; use :meth:`shape` or :func:`structurally_equal`
    for structural comparison.
    """

    __slots__ = ("kind", "label", "children", "line_span", "category", "_digest", "_size",
                 "_height")

    def __init__(self, kind, label=None, children=None, line_span=(0, 0)):
        self.kind = kind
        self.label = label
        self.children = list(children) if children else []
        self.line_span = tuple(line_span)
        self.category = classify_kind(kind)
        self._digest = None
        self._size = None
        self._height = None

    def __repr__(self):
        if self.label is None:
            return f"AstNode({self.kind!r}, {len(self.children)} children)"
        return f"AstNode({self.kind!r}, {self.label!r}, {len(self.children)} children)"

    def preorder(self) -> Iterator[AstNode]:
        stack = [self]
        while stack:
            node = stack.pop()
            yield node
            stack.extend(reversed(node.children))

    def size(self) -> int:
        if self._size is None:
            self._size = 1 + sum(child.size() for child in self.children)
        return self._size

    def height(self) -> int:
        if self._height is None:
            self._height = 1 + max((c.height() for c in self.children), default=0)
        return self._height

    def digest(self) -> bytes:
        """Structural hash over kind, label and children (stable across runs)."""
        if self._digest is None:
            h = hashlib.blake2b(digest_size=16)
            h.update(self.kind.encode())
            h.update(b"\x00")
            if self.label is not None:
                h.update(b"L" + str(self.label).encode())
            h.update(b"\x01")
            for child in self.children:
                h.update(child.digest())
            self._digest = h.digest()
        return self._digest

    def shape(self):
        """Nested tuple (kind, label, children...) for structural comparison."""
        return (self.kind, self.label, tuple(child.shape() for child in self.children))

    def dump(self, indent: str = "  ") -> str:
        lines = []

        def walk(node, level):
            text = node.kind if node.label is None else f"{node.kind}({node.label})"
            lines.append(f"{indent * level}{text} [{node.category}] {node.line_span}")
            for child in node.children:
                walk(child, level + 1)

        walk(self, 0)
        return "\n".join(lines)


def structurally_equal(a: AstNode, b: AstNode) -> bool:
    return a.digest() == b.digest()


def is_function(node: AstNode) -> bool:
    return node.kind in FUNCTION_KINDS


@dataclass(frozen=True)
class MethodInfo:
    name: str
    line_span: tuple
    loc: int
    subtree: AstNode


def extract_methods(tree: AstNode) -> list[MethodInfo]:
    """Every function declaration in source (pre-)order, nested ones included."""
    methods = []
    for node in tree.preorder():
        if is_function(node):
            start, end = node.line_span
            methods.append(MethodInfo(str(node.label), (start, end), end - start + 1, node))
    return methods
