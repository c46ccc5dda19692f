"""Shared generators for the test suite."""

import random

from jitdp.syntax.nodes import AstNode

LEAF_KINDS = [("Identifier", "abcxy"), ("NumberLit", "0127"), ("StringLit", ["'a'", "'b'"]),
              ("Comment", ["// x", "// y"])]
INNER_KINDS = ["Block", "Return", "If", "While", "BinaryOp", "Call", "Assign", "Function"]


def random_tree(rng: random.Random, depth: int = 4, fanout: int = 3) -> AstNode:
    """A Program root over a random MiniLang-shaped tree."""
    return AstNode("Program", None, [_node(rng, depth, fanout) for _ in range(rng.randint(0, fanout))])


def _node(rng, depth, fanout):
    if depth == 0 or rng.random() < 0.3:
        kind, labels = rng.choice(LEAF_KINDS)
        return AstNode(kind, rng.choice(list(labels)))
    kind = rng.choice(INNER_KINDS)
    label = rng.choice("fgh") if kind in ("Function", "Call") else (
        rng.choice("+-*") if kind == "BinaryOp" else None)
    kids = [_node(rng, depth - 1, fanout) for _ in range(rng.randint(1, fanout))]
    return AstNode(kind, label, kids)


def clone(node: AstNode) -> AstNode:
    return AstNode(node.kind, node.label, [clone(c) for c in node.children], node.line_span)


def mutate(rng: random.Random, tree: AstNode, edits: int = 3) -> AstNode:
    """Copy ``tree`` and apply a few random inserts, deletes and relabels."""
    out = clone(tree)
    for _ in range(edits):
        nodes = list(out.preorder())
        target = rng.choice(nodes)
        op = rng.random()
        if op < 0.4:
            target.children.insert(rng.randint(0, len(target.children)), _node(rng, 1, 2))
        elif op < 0.7 and target.children:
            target.children.pop(rng.randrange(len(target.children)))
        elif target.label is not None:
            target.label = target.label + "'"
    # sizes and digests are cached; rebuild to drop stale caches
    return clone(out)


def random_pair(rng: random.Random):
    a = random_tree(rng)
    b = mutate(rng, a, rng.randint(0, 4)) if rng.random() < 0.7 else random_tree(rng)
    return a, b
