"""Edit scripts between two syntax trees.

Matching runs in two phases:

1. identical subtrees (same structural digest, height >= 2) are paired
   greedily, tallest first; candidates sharing a digest pair up in preorder;
2. starting from the matched roots, the still-unmatched children of every
   matched pair are aligned by a longest common subsequence on ``kind``
   and the procedure recurses into the new pairs.

Unmatched after-nodes become adds, unmatched before-nodes deletes and
matched pairs whose labels differ updates. The matcher treats both inputs
the same way, so swapping them mirrors the script.
"""

from __future__ import annotations

import json
from collections import defaultdict
from dataclasses import dataclass, field

from jitdp.syntax.nodes import AstNode, is_function

ADD, DELETE, UPDATE = "add", "delete", "update"


@dataclass(frozen=True)
class Action:
    node: AstNode
    category: str
    depth: int


@dataclass(frozen=True)
class Update:
    before: AstNode
    after: AstNode
    category: str
    depth: int


@dataclass
class EditScript:
    adds: list[Action] = field(default_factory=list)
    deletes: list[Action] = field(default_factory=list)
    updates: list[Update] = field(default_factory=list)
    match_map: dict[int, AstNode] = field(default_factory=dict)

    def is_empty(self) -> bool:
        return not (self.adds or self.deletes or self.updates)

    def to_jsonl(self) -> str:
        rows = []
        for action, items in ((ADD, self.adds), (DELETE, self.deletes)):
            for item in items:
                rows.append({"action": action, "kind": item.node.kind, "category": item.category,
                             "depth": item.depth, "line": item.node.line_span[0]})
        for item in self.updates:
            rows.append({"action": UPDATE, "kind": item.after.kind, "category": item.category,
                         "depth": item.depth, "line": item.after.line_span[0]})
        return "".join(json.dumps(row) + "\n" for row in rows)


def change_depths(root: AstNode) -> dict[int, int]:
    """Edge count from each node to its nearest enclosing function (or the root)."""
    depths = {id(root): 0}
    stack = [(root, 0)]
    while stack:
        node, depth = stack.pop()
        # children of a function are measured from that function
        base = 0 if is_function(node) else depth
        for child in node.children:
            depths[id(child)] = base + 1
            stack.append((child, base + 1))
    return depths


def _match_subtree(a: AstNode, b: AstNode, fwd: dict, bwd: dict) -> None:
    for x, y in zip(a.preorder(), b.preorder()):
        fwd[id(x)] = y
        bwd[id(y)] = x


def _lcs_pairs(xs: list[AstNode], ys: list[AstNode]) -> list[tuple[int, int]]:
    n, m = len(xs), len(ys)
    if not n or not m:
        return []
    # table[i][j] = LCS length of xs[i:], ys[j:]
    table = [[0] * (m + 1) for _ in range(n + 1)]
    for i in range(n - 1, -1, -1):
        row, below = table[i], table[i + 1]
        kind = xs[i].kind
        for j in range(m - 1, -1, -1):
            if kind == ys[j].kind:
                row[j] = below[j + 1] + 1
            else:
                row[j] = max(below[j], row[j + 1])
    pairs = []
    i = j = 0
    while i < n and j < m:
        if xs[i].kind == ys[j].kind and table[i][j] == table[i + 1][j + 1] + 1:
            pairs.append((i, j))
            i += 1
            j += 1
        elif table[i + 1][j] >= table[i][j + 1]:
            i += 1
        else:
            j += 1
    return pairs


def _align(xs: list[AstNode], ys: list[AstNode]) -> list[tuple[int, int]]:
    # canonical argument order keeps the alignment mirror-symmetric
    key_x = [x.digest() for x in xs]
    key_y = [y.digest() for y in ys]
    if (len(xs), key_x) <= (len(ys), key_y):
        return _lcs_pairs(xs, ys)
    return [(i, j) for j, i in _lcs_pairs(ys, xs)]


def match_trees(before: AstNode, after: AstNode) -> dict[int, AstNode]:
    """Return the before-node-id -> after-node correspondence."""
    fwd: dict[int, AstNode] = {}
    bwd: dict[int, AstNode] = {}

    # phase 1: identical subtrees, tallest first
    by_height_b = defaultdict(list)
    by_height_a = defaultdict(list)
    for node in before.preorder():
        if node.height() >= 2:
            by_height_b[node.height()].append(node)
    for node in after.preorder():
        if node.height() >= 2:
            by_height_a[node.height()].append(node)
    for height in sorted(set(by_height_b) & set(by_height_a), reverse=True):
        groups_b = defaultdict(list)
        groups_a = defaultdict(list)
        for node in by_height_b[height]:
            if id(node) not in fwd:
                groups_b[node.digest()].append(node)
        for node in by_height_a[height]:
            if id(node) not in bwd:
                groups_a[node.digest()].append(node)
        for digest, nodes_b in groups_b.items():
            for x, y in zip(nodes_b, groups_a.get(digest, ())):
                _match_subtree(x, y, fwd, bwd)

    # phase 2: top-down child alignment below matched parents
    # roots always correspond
    if id(before) not in fwd and id(after) not in bwd:
        fwd[id(before)] = after
        bwd[id(after)] = before
    queue = [(before, after)] if fwd.get(id(before)) is after else []
    while queue:
        x, y = queue.pop()
        free_x = [c for c in x.children if id(c) not in fwd]
        free_y = [c for c in y.children if id(c) not in bwd]
        for i, j in _align(free_x, free_y):
            cx, cy = free_x[i], free_y[j]
            fwd[id(cx)] = cy
            bwd[id(cy)] = cx
        for cx in x.children:
            cy = fwd.get(id(cx))
            if cy is not None and cx.children:
                queue.append((cx, cy))
    return fwd


def diff_trees(before: AstNode, after: AstNode) -> EditScript:
    fwd = match_trees(before, after)
    matched_after = {id(node) for node in fwd.values()}
    depth_b = change_depths(before)
    depth_a = change_depths(after)
    script = EditScript(match_map=fwd)
    for node in before.preorder():
        partner = fwd.get(id(node))
        if partner is None:
            script.deletes.append(Action(node, node.category, depth_b[id(node)]))
        elif node.label != partner.label:
            depth = max(depth_b[id(node)], depth_a[id(partner)])
            script.updates.append(Update(node, partner, partner.category, depth))
    for node in after.preorder():
        if id(node) not in matched_after:
            script.adds.append(Action(node, node.category, depth_a[id(node)]))
    return script


def max_change_depth(script: EditScript, action: str) -> int:
    items = {ADD: script.adds, DELETE: script.deletes, UPDATE: script.updates}[action]
    return max((item.depth for item in items), default=0)
