"""Language adapters producing category-tagged syntax trees."""

from __future__ import annotations

from pathlib import PurePosixPath
from typing import Callable

from jitdp.syntax.minilang import ParseFailed, parse_minilang
from jitdp.syntax.nodes import (
    CATEGORIES,
    COMMENT,
    DEFAULT,
    PRIMITIVE,
    SPECIAL,
    AstNode,
    MethodInfo,
    classify_kind,
    extract_methods,
    structurally_equal,
)
from jitdp.syntax.pyadapter import parse_python

ADAPTERS: dict[str, Callable[[str], AstNode]] = {
    "minilang": parse_minilang,
    "python": parse_python,
}
EXTENSIONS: dict[str, str] = {".mini": "minilang", ".py": "python"}


def register_adapter(tag: str, parser: Callable[[str], AstNode], extensions=()) -> None:
    ADAPTERS[tag] = parser
    for ext in extensions:
        EXTENSIONS[ext if ext.startswith(".") else "." + ext] = tag


def language_for(path: str) -> str:
    return EXTENSIONS.get(PurePosixPath(path).suffix, "unknown")


def parse(source: str, language: str) -> AstNode:
    """Parse ``source`` with the adapter registered under ``language``."""
    try:
        adapter = ADAPTERS[language]
    except KeyError:
        raise KeyError(f"no syntax adapter registered for {language!r}") from None
    return adapter(source)


__all__ = [
    "ADAPTERS", "AstNode", "CATEGORIES", "COMMENT", "DEFAULT", "EXTENSIONS", "MethodInfo",
    "PRIMITIVE", "ParseFailed", "SPECIAL", "classify_kind", "extract_methods", "language_for",
    "parse", "register_adapter", "structurally_equal",
]
