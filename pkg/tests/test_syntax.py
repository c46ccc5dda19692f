import pytest
from hypothesis import given, strategies as st

from jitdp.syntax import (COMMENT, DEFAULT, PRIMITIVE, SPECIAL, ParseFailed, classify_kind,
                          extract_methods, language_for, parse, structurally_equal)
from jitdp.syntax.minilang import tokenize


def kinds(tree):
    return [n.kind for n in tree.preorder()]


def test_empty_source_is_bare_program():
    tree = parse("", "minilang")
    assert tree.kind == "Program"
    assert tree.children == []


def test_hand_derived_return_chain():
    tree = parse("fn f() { return 1; }", "minilang")
    assert kinds(tree) == ["Program", "Function", "Block", "Return", "NumberLit"]
    assert tree.children[0].label == "f"


def test_missing_close_brace():
    with pytest.raises(ParseFailed) as err:
        parse("fn f() {\n  x = 1;\n", "minilang")
    assert err.value.line >= 1


def test_stray_close_brace_reports_its_line():
    with pytest.raises(ParseFailed) as err:
        parse("fn f() {\n  return 1;\n}\n}\n", "minilang")
    assert err.value.line == 4


@pytest.mark.parametrize("kind, category", [
    ("If", SPECIAL), ("While", SPECIAL), ("For", SPECIAL), ("Return", SPECIAL),
    ("Break", SPECIAL), ("Continue", SPECIAL), ("Switch", SPECIAL), ("Try", SPECIAL),
    ("IfStatement", SPECIAL), ("StringLit", PRIMITIVE), ("NumberLit", PRIMITIVE),
    ("BooleanLiteral", PRIMITIVE), ("Bytes", PRIMITIVE), ("Comment", COMMENT),
    ("LineComment", COMMENT), ("Identifier", DEFAULT), ("Call", DEFAULT), ("Weird", DEFAULT),
])
def test_categories(kind, category):
    assert classify_kind(kind) == category


@given(st.text(max_size=20))
def test_classify_is_total(kind):
    assert classify_kind(kind) in (DEFAULT, PRIMITIVE, COMMENT, SPECIAL)


def test_no_functions_no_methods():
    assert extract_methods(parse("x = 1;\n", "minilang")) == []


def test_two_three_line_functions():
    src = "fn a() {\n  return 1;\n}\nfn b() {\n  return 2;\n}\n"
    methods = extract_methods(parse(src, "minilang"))
    assert [(m.name, m.loc) for m in methods] == [("a", 3), ("b", 3)]


def test_nested_function_counts_both():
    src = "fn outer() {\n  fn inner() {\n    return 1;\n  }\n  return 2;\n}\n"
    methods = extract_methods(parse(src, "minilang"))
    assert [(m.name, m.loc) for m in methods] == [("outer", 6), ("inner", 3)]


def test_comments_and_literals_become_nodes():
    tree = parse('// note\nfn g(s) {\n  if (s == "x") {\n    return true;\n  }\n}\n', "minilang")
    cats = {n.kind: n.category for n in tree.preorder()}
    assert cats["Comment"] == COMMENT
    assert cats["If"] == SPECIAL
    assert cats["StringLit"] == PRIMITIVE


SOURCES = [
    "fn f(a, b) {\n  while (a < b) {\n    a = a + 1;\n  }\n  return a;\n}\n",
    "for (i = 0; i < 3; i = i + 1) { print(i); }\n",
    "x = -1 * (2 + 3) % 4;\nif (x != 0 && !false) { x = 0; } else { x = 1; }\n",
]


@pytest.mark.parametrize("src", SOURCES)
def test_parse_is_deterministic(src):
    assert parse(src, "minilang").shape() == parse(src, "minilang").shape()
    assert structurally_equal(parse(src, "minilang"), parse(src, "minilang"))


def test_whitespace_does_not_change_structure():
    a = parse("fn f() { return 1; }", "minilang")
    b = parse("fn f()\n{\n    return   1 ;\n}\n", "minilang")
    assert structurally_equal(a, b)


def test_tokenizer_rejects_unknown_character():
    with pytest.raises(ParseFailed):
        tokenize("x = 1 @ 2;")


def test_python_adapter():
    tree = parse("# hi\ndef f(x):\n    if x:\n        return 'a'\n", "python")
    cats = [n.category for n in tree.preorder()]
    assert COMMENT in cats and SPECIAL in cats and PRIMITIVE in cats
    assert [m.name for m in extract_methods(tree)] == ["f"]


def test_python_syntax_error_is_parse_failed():
    with pytest.raises(ParseFailed):
        parse("def f(:\n", "python")


def test_language_for():
    assert language_for("src/a.mini") == "minilang"
    assert language_for("pkg/x.py") == "python"
    assert language_for("README.md") == "unknown"
