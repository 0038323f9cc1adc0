from __future__ import annotations

import numpy as np
import pytest

from tilelocal.errors import StructuralError
from tilelocal.systems import (
    RotationAction,
    SubstitutionSystem,
    rotate_block_cell_ccw,
    system_from_dict,
)

# === independent oracles ==============================================
# Plain-python expansion, no arrays, no shared code with the package.


def word_expand(rules: dict[str, str], letter: str, level: int) -> str:
    w = letter
    for _ in range(level):
        w = "".join(rules[c] for c in w)
    return w


PD_RULES = {"a": "ab", "b": "aa"}


def grid_expand(rules, label, level):
    """d=2 oracle: returns dict {(x, y): label} for the level-k supertile."""
    cells = {(0, 0): label}
    for k in range(level):
        nxt = {}
        for (x, y), lb in cells.items():
            for (dx, dy), child in rules[lb].items():
                nxt[(2 * x + dx, 2 * y + dy)] = child
        cells = nxt
    return cells


CHAIR_RULES = {
    "ne": {(0, 0): "ne", (1, 0): "nw", (0, 1): "se", (1, 1): "ne"},
    "nw": {(0, 0): "ne", (1, 0): "nw", (0, 1): "nw", (1, 1): "sw"},
    "se": {(0, 0): "ne", (1, 0): "se", (0, 1): "se", (1, 1): "sw"},
    "sw": {(0, 0): "sw", (1, 0): "nw", (0, 1): "se", (1, 1): "sw"},
}


# === construction and lookups =========================================


def test_pd_substitution_matrix(pd):
    m = pd.substitution_matrix()
    assert m.tolist() == [[1, 1], [2, 0]]


def test_pd_primitive_with_exponent_two(pd):
    # M^2 = [[3,1],[2,2]] is already positive
    assert pd.primitivity_exponent() == 2


def test_chair_primitive(chair):
    assert chair.primitivity_exponent() == 2
    assert chair.substitution_matrix().sum(axis=1).tolist() == [4, 4, 4, 4]


def test_pd_expansion_matches_word_oracle(pd):
    for level in range(7):
        for letter in "ab":
            want = word_expand(PD_RULES, letter, level)
            arr = pd.expand_indices(letter, level)
            got = "".join(pd.labels[i] for i in arr)
            assert got == want


def test_chair_expansion_matches_grid_oracle(chair):
    for level in range(5):
        for label in chair.labels:
            want = grid_expand(CHAIR_RULES, label, level)
            arr = chair.expand_indices(label, level)
            side = 2**level
            assert arr.shape == (side, side)
            for (x, y), lb in want.items():
                assert chair.labels[arr[x, y]] == lb


def test_cell_label_agrees_with_arrays(chair):
    rng = np.random.default_rng(7)
    arr = chair.expand_indices("se", 6)
    for _ in range(50):
        x, y = (int(v) for v in rng.integers(0, 64, size=2))
        assert chair.cell_label("se", 6, (x, y)) == chair.labels[arr[x, y]]


def test_cell_label_deep_descent_prefix(pd):
    # rule('a') starts with 'a', so deep supertiles of 'a' share prefixes
    arr = pd.expand_indices("a", 10)
    for z in (0, 1, 5, 100, 1023):
        assert pd.cell_label("a", 30, (z,)) == pd.labels[arr[z]]


def test_parent_options(pd):
    assert pd.parent_options("a") == [((0,), "a"), ((0,), "b"), ((1,), "b")]
    assert pd.parent_options("b") == [((1,), "a")]


# === legal windows ====================================================


def test_pd_legal_words_small_widths(pd):
    assert pd.legal_windows(1) == {("a",), ("b",)}
    assert pd.legal_windows(2) == {("a", "a"), ("a", "b"), ("b", "a")}


def test_pd_legal_words_match_oracle(pd):
    # factors of a long expansion stabilize well below this level
    text = word_expand(PD_RULES, "a", 14)
    for width in (3, 5, 8):
        want = {tuple(text[i : i + width]) for i in range(len(text) - width + 1)}
        assert pd.legal_windows(width) == want


def test_chair_legal_windows_match_oracle(chair):
    want = set()
    for label in chair.labels:
        cells = grid_expand(CHAIR_RULES, label, 6)
        side = 2**6
        for x in range(side - 1):
            for y in range(side - 1):
                want.add(
                    (
                        (cells[(x, y)], cells[(x, y + 1)]),
                        (cells[(x + 1, y)], cells[(x + 1, y + 1)]),
                    )
                )
    assert chair.legal_windows(2) == want


# === rotation symmetry ================================================


def test_chair_rotation_commutes(chair):
    assert chair.rotation_violations() == []


def test_chair_label_map_order_four(chair):
    rot = chair.rotation
    for a in chair.labels:
        assert rot.apply_label(a, 4) == a
        assert rot.apply_label(a, 2) != a  # half turn swaps diagonal pairs


def test_rotate_block_cell_round_trip():
    for n in (2, 3):
        cells = [(x, y) for x in range(n) for y in range(n)]
        img = [rotate_block_cell_ccw(c, n) for c in cells]
        assert sorted(img) == cells
        for c in cells:
            z = c
            for _ in range(4):
                z = rotate_block_cell_ccw(z, n)
            assert z == c


def test_bad_rotation_rejected(chair):
    doc = chair.to_json_dict()
    doc["rotation"]["label_map"] = {a: a for a in chair.labels}
    with pytest.raises(StructuralError):
        system_from_dict(doc)


# === covering cycles ==================================================


def test_pd_covering_cycle(pd):
    assert pd.find_covering_cycle() == (((0,), "a"), ((1,), "b"))


def test_chair_covering_cycle(chair):
    assert chair.find_covering_cycle() == (((0, 0), "ne"), ((1, 1), "ne"))


def test_covering_cycle_is_consistent(chair):
    cyc = chair.find_covering_cycle()
    for k, (cell, label) in enumerate(cyc):
        nxt = cyc[(k + 1) % len(cyc)][1]
        assert chair.child_label(nxt, cell) == label


# === validation errors ================================================


def test_missing_rule_rejected():
    with pytest.raises(StructuralError, match="missing rule"):
        SubstitutionSystem("x", 1, 2, ["a", "b"], {"a": ["a", "b"]})


def test_wrong_rule_length_rejected():
    with pytest.raises(StructuralError):
        SubstitutionSystem("x", 1, 2, ["a"], {"a": ["a", "a", "a"]})


def test_unknown_label_rejected():
    with pytest.raises(StructuralError, match="unknown label"):
        SubstitutionSystem("x", 1, 2, ["a"], {"a": ["a", "z"]})


def test_bad_expansion_rejected():
    with pytest.raises(StructuralError):
        SubstitutionSystem("x", 1, 1, ["a"], {"a": ["a"]})


def test_rotation_on_1d_rejected():
    rot = RotationAction(order=4, label_map={"a": "a"})
    with pytest.raises(StructuralError):
        SubstitutionSystem("x", 1, 2, ["a"], {"a": ["a", "a"]}, rotation=rot)


def test_json_round_trip(chair):
    doc = chair.to_json_dict()
    again = system_from_dict(doc)
    assert again.labels == chair.labels
    for a in chair.labels:
        assert np.array_equal(again.rules[a], chair.rules[a])
    assert again.rotation.label_map == chair.rotation.label_map
