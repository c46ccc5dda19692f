import random
from collections import Counter

from hypothesis import given, strategies as st

from helpers import clone, random_pair, random_tree
from jitdp.syntax import parse
from jitdp.syntax.nodes import AstNode
from jitdp.treediff import ADD, DELETE, UPDATE, diff_trees, max_change_depth


def mini(src):
    return parse(src, "minilang")


def test_identity_is_empty():
    tree = mini("fn f(a) {\n  return a + 1;\n}\n")
    assert diff_trees(tree, tree).is_empty()
    assert diff_trees(tree, clone(tree)).is_empty()


def test_insertion_into_empty_program():
    after = mini("fn f(a) {\n  if (a) {\n    return 1;\n  }\n}\n")
    script = diff_trees(mini(""), after)
    assert len(script.adds) == after.size() - 1
    assert script.deletes == [] and script.updates == []


def test_literal_insertion_without_new_line():
    # the textual diff replaces one line; the tree gains exactly one literal
    before = mini("fn f(a) {\n  return g(a);\n}\n")
    after = mini("fn f(a) {\n  return g(a, 1);\n}\n")
    script = diff_trees(before, after)
    assert [a.node.kind for a in script.adds] == ["NumberLit"]
    assert script.deletes == [] and script.updates == []
    assert max_change_depth(script, ADD) == 4


def test_changed_literal_is_an_update():
    script = diff_trees(mini("x = 2;"), mini("x = 3;"))
    assert [(u.before.label, u.after.label) for u in script.updates] == [("2", "3")]
    assert not script.adds and not script.deletes


def test_depth_of_empty_script_is_zero():
    tree = mini("x = 1;")
    script = diff_trees(tree, tree)
    assert all(max_change_depth(script, a) == 0 for a in (ADD, DELETE, UPDATE))


def test_direct_child_of_function_has_depth_one():
    before = AstNode("Program", None, [AstNode("Function", "f", [AstNode("Block")])])
    after = AstNode("Program", None, [AstNode("Function", "f", [AstNode("Block"),
                                                                 AstNode("Comment", "// c")])])
    script = diff_trees(before, after)
    assert [(a.node.kind, a.depth) for a in script.adds] == [("Comment", 1)]


def test_deterministic_jsonl():
    rng = random.Random(3)
    a, b = random_pair(rng)
    assert diff_trees(a, b).to_jsonl() == diff_trees(clone(a), clone(b)).to_jsonl()


def check_pair(a, b):
    """Identity, node conservation and add/delete symmetry for one pair."""
    assert diff_trees(a, clone(a)).is_empty()
    fwd = diff_trees(a, b)
    matched = len(fwd.match_map)
    assert matched + len(fwd.deletes) == a.size()
    assert matched + len(fwd.adds) == b.size()
    back = diff_trees(b, a)
    assert Counter(x.node.kind for x in fwd.adds) == Counter(x.node.kind for x in back.deletes)
    assert Counter(x.node.kind for x in fwd.deletes) == Counter(x.node.kind for x in back.adds)
    assert len(fwd.updates) == len(back.updates)


@given(st.randoms(use_true_random=False))
def test_random_pairs(rng):
    a, b = random_pair(rng)
    check_pair(a, b)


@given(st.integers(0, 10_000))
def test_unrelated_trees(seed):
    rng = random.Random(seed)
    check_pair(random_tree(rng), random_tree(rng))
