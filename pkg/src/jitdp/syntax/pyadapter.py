"""Python adapter built on the standard library parser.

Comments are recovered with :mod:`tokenize` and placed in the innermost
statement list whose span covers them.
"""

from __future__ import annotations

import ast
import io
import tokenize

from jitdp.syntax.minilang import ParseFailed
from jitdp.syntax.nodes import AstNode

_LABEL_FIELDS = ("name", "id", "arg", "attr", "module")


def _constant_kind(value) -> str:
    if isinstance(value, bool):
        return "BoolLit"
    if isinstance(value, (int, float, complex)):
        return "NumberLit"
    if isinstance(value, bytes):
        return "BytesLit"
    if isinstance(value, str):
        return "StringLit"
    return "Constant"


def _span(node, default):
    start = getattr(node, "lineno", None)
    if start is None:
        return default
    return (start, getattr(node, "end_lineno", None) or start)


def _label(node):
    if isinstance(node, ast.Constant):
        return repr(node.value)
    for field in _LABEL_FIELDS:
        value = getattr(node, field, None)
        if isinstance(value, str):
            return value
    op = getattr(node, "op", None)
    if op is not None:
        return type(op).__name__
    return None


def _convert(node, parent_span) -> AstNode:
    span = _span(node, parent_span)
    kind = _constant_kind(node.value) if isinstance(node, ast.Constant) else type(node).__name__
    children = []
    for child in ast.iter_child_nodes(node):
        if isinstance(child, (ast.expr_context, ast.operator, ast.unaryop, ast.cmpop, ast.boolop)):
            continue
        children.append(_convert(child, span))
    return AstNode(kind, _label(node), children, span)


def _place_comment(node: AstNode, comment: AstNode) -> bool:
    line = comment.line_span[0]
    start, end = node.line_span
    if not start <= line <= end:
        return False
    for child in node.children:
        if child.children and _place_comment(child, comment):
            return True
    if node.kind in ("Program", "FunctionDef", "AsyncFunctionDef", "ClassDef", "If", "For",
                     "While", "With", "Try"):
        pos = 0
        while pos < len(node.children) and node.children[pos].line_span[0] <= line:
            pos += 1
        node.children.insert(pos, comment)
        return True
    return False


def parse_python(source: str) -> AstNode:
    try:
        tree = ast.parse(source)
    except SyntaxError as exc:
        raise ParseFailed(exc.msg or "syntax error", exc.lineno or 1, exc.offset or 0) from None
    n_lines = max(1, len(source.splitlines()))
    body = _convert(tree, (1, n_lines))
    root = AstNode("Program", None, body.children, (1, n_lines))
    comments = []
    try:
        for tok in tokenize.generate_tokens(io.StringIO(source).readline):
            if tok.type == tokenize.COMMENT:
                comments.append(AstNode("Comment", tok.string, line_span=(tok.start[0], tok.start[0])))
    except tokenize.TokenError:
        pass
    for comment in comments:
        _place_comment(root, comment)
    return root
