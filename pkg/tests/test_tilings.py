from __future__ import annotations

import math
from fractions import Fraction as Fr
from itertools import product

import pytest

from tilelocal.errors import StructuralError
from tilelocal.tilings import (
    Address,
    AddressField,
    Patch,
    Tiling,
    ball_cells,
    central_patch,
    patches_equal,
    reference_tiling,
    rotate_tiling,
    rotate_vector,
    translate_tiling,
)

from .test_systems import PD_RULES, word_expand

# === oracles ==========================================================


def cube_dist2(point, corner, dim):
    """Exact squared distance from a point to the cube corner+[0,1]^d."""
    total = Fr(0)
    for i in range(dim):
        lo, hi = corner[i], corner[i] + 1
        if point[i] < lo:
            d = lo - point[i]
        elif point[i] > hi:
            d = point[i] - hi
        else:
            d = Fr(0)
        total += d * d
    return total


def ball_cells_oracle(shift, radius, dim):
    box = range(-math.ceil(radius) - 3, math.ceil(radius) + 4)
    out = []
    origin = (Fr(0),) * dim
    for z in product(box, repeat=dim):
        corner = tuple(z[i] + shift[i] for i in range(dim))
        if cube_dist2(origin, corner, dim) <= radius * radius:
            out.append(z)
    return out


# === addresses and fields =============================================


def test_reference_field_matches_expansion(pd):
    t = reference_tiling(pd)
    # the level-4 supertile has label 'a' and starts at cell -10
    text = word_expand(PD_RULES, "a", 4)
    assert t.field.address.origin_offset(4) == (10,)
    for z in range(-10, 6):
        assert t.label((z,)) == text[z + 10]


def test_reference_field_origin_entry(pd, chair):
    for sys in (pd, chair):
        t = reference_tiling(sys)
        origin = (0,) * sys.dim
        assert t.label(origin) == t.field.address.entry(0)[1]


def test_chair_reference_field_consistent_levels(chair):
    t = reference_tiling(chair)
    addr = t.field.address
    # every cell of the level-k supertile footprint must match a direct
    # descent from the level-k entry
    for k in (2, 3):
        p = addr.origin_offset(k)
        top = addr.entry(k)[1]
        side = 2**k
        for x in range(-p[0], side - p[0], 3):
            for y in range(-p[1], side - p[1], 3):
                want = chair.cell_label(top, k, (x + p[0], y + p[1]))
                assert t.label((x, y)) == want


def test_address_rejects_inconsistent_cycle(pd):
    with pytest.raises(StructuralError, match="rule"):
        Address(pd, head=(), cycle=(((0,), "a"), ((1,), "a")))


def test_address_rejects_noncovering_cycle(pd):
    # all-zero digits never cover the negative axis
    with pytest.raises(StructuralError, match="cover"):
        Address(pd, head=(), cycle=(((0,), "a"),))


def test_address_head_consistency_checked(pd):
    # valid: head entry (1,'b') under cycle start 'a' since rule(a)[1]='b'
    addr = Address(pd, head=(((1,), "b"),), cycle=(((0,), "a"), ((1,), "b")))
    assert addr.entry(0) == ((1,), "b")
    assert addr.entry(1) == ((0,), "a")
    assert addr.entry(4) == ((1,), "b")
    with pytest.raises(StructuralError):
        Address(pd, head=(((0,), "b"),), cycle=(((0,), "a"), ((1,), "b")))


# === ball cells =======================================================


@pytest.mark.parametrize(
    "shift,radius,dim",
    [
        ((Fr(0),), Fr(2), 1),
        ((Fr(1, 3),), Fr(5, 2), 1),
        ((Fr(7, 8),), Fr(1, 8), 1),
        ((Fr(0), Fr(0)), Fr(1), 2),
        ((Fr(1, 4), Fr(2, 3)), Fr(3, 2), 2),
        ((Fr(1, 2), Fr(1, 2)), Fr(5, 2), 2),
    ],
)
def test_ball_cells_match_oracle(shift, radius, dim):
    assert sorted(ball_cells(shift, radius, dim)) == ball_cells_oracle(
        shift, radius, dim
    )


def test_ball_cells_tangency_included():
    # interval [2,3] sits at distance exactly 2 from the origin
    assert (2,) in ball_cells((Fr(0),), Fr(2), 1)
    assert (-3,) in ball_cells((Fr(0),), Fr(2), 1)
    # cube [1,2]x[-1,0] touches the unit circle at (1,0)
    assert (1, -1) in ball_cells((Fr(0), Fr(0)), Fr(1), 2)
    assert len(ball_cells((Fr(0), Fr(0)), Fr(1), 2)) == 12


# === translation ======================================================


def test_integer_translation_shifts_field(pd):
    t = reference_tiling(pd)
    t2 = translate_tiling(t, (Fr(3),))
    assert t2.shift == (Fr(0),)
    for z in range(-6, 6):
        assert t2.label((z,)) == t.label((z + 3,))


def test_translation_moves_tiles(pd):
    t = translate_tiling(reference_tiling(pd), (Fr(-1, 3),))
    v = (Fr(5, 4),)
    moved = translate_tiling(t, v)
    r = Fr(3)
    big = central_patch(t, r + 3)
    want = frozenset(
        (tuple(q - c for q, c in zip(pos, v)), lb)
        for pos, lb in big.ambient()
        if cube_dist2(v, pos, 1) <= r * r
    )
    assert central_patch(moved, r).ambient() == want


def test_translation_group_law(chair):
    t = reference_tiling(chair)
    u = (Fr(1, 3), Fr(-3, 4))
    v = (Fr(-7, 5), Fr(1, 2))
    uv = tuple(a + b for a, b in zip(u, v))
    p1 = central_patch(translate_tiling(translate_tiling(t, u), v), Fr(2))
    p2 = central_patch(translate_tiling(t, uv), Fr(2))
    assert patches_equal(p1, p2)
    assert translate_tiling(t, (Fr(0), Fr(0))) is t


def test_translation_key_collapses(pd):
    t = reference_tiling(pd)
    a = translate_tiling(translate_tiling(t, (Fr(1),)), (Fr(2),))
    b = translate_tiling(t, (Fr(3),))
    assert a.key() == b.key()
    c = translate_tiling(translate_tiling(t, (Fr(5, 4),)), (Fr(-5, 4),))
    assert c.key() == t.key()


# === patches and classes ==============================================


def test_patch_class_translation_invariant(pd):
    t = translate_tiling(reference_tiling(pd), (Fr(2, 7),))
    p = central_patch(t, Fr(4))
    for v in ((Fr(1),), (Fr(-3, 5),), (Fr(22, 7),)):
        q = p.translated(v)
        assert q.pattern_class() == p.pattern_class()
        assert q.anchor() == tuple(a - b for a, b in zip(p.anchor(), v))


def test_patch_class_least_offset_is_zero(chair):
    t = translate_tiling(reference_tiling(chair), (Fr(1, 2), Fr(1, 3)))
    cls = central_patch(t, Fr(2)).pattern_class()
    assert min(off for off, _ in cls.tiles) == (0,) * 2


def test_classes_differ_when_labels_differ(pd):
    t = reference_tiling(pd)
    # patches centered at different points of the sequence
    p1 = central_patch(t, Fr(2))
    p2 = central_patch(translate_tiling(t, (Fr(1),)), Fr(2))
    assert p1.pattern_class() != p2.pattern_class()


def test_patches_equal_across_shift_representations(pd):
    t = reference_tiling(pd)
    p = central_patch(t, Fr(3))
    assert patches_equal(p, Patch(p.cells, p.shift))
    moved = central_patch(translate_tiling(t, (Fr(1),)), Fr(3))
    assert not patches_equal(p, moved)


# === rotation =========================================================


def rot_corner(q):
    return (-q[1] - 1, q[0])


@pytest.mark.parametrize("shift", [(Fr(0), Fr(0)), (Fr(1, 4), Fr(0)), (Fr(1, 3), Fr(2, 5))])
def test_rotation_matches_ambient_rotation(chair, shift):
    t = translate_tiling(reference_tiling(chair), tuple(-c for c in shift))
    assert t.shift == shift
    rt = rotate_tiling(t, 1)
    r = Fr(2)
    got = central_patch(rt, r).ambient()
    want = frozenset(
        (rot_corner(pos), chair.rotation.label_map[lb])
        for pos, lb in central_patch(t, r + 1).ambient()
        if cube_dist2((Fr(0), Fr(0)), rot_corner(pos), 2) <= r * r
    )
    assert got == want


def test_rotation_four_times_identity(chair):
    t = translate_tiling(reference_tiling(chair), (Fr(2, 3), Fr(1, 5)))
    back = rotate_tiling(t, 4)
    assert patches_equal(central_patch(back, Fr(3)), central_patch(t, Fr(3)))


def test_rotate_vector():
    v = (Fr(1), Fr(2))
    assert rotate_vector(v, 1) == (Fr(-2), Fr(1))
    assert rotate_vector(rotate_vector(v, 1), 3) == v


def test_rotation_requires_action(pd):
    with pytest.raises(StructuralError):
        rotate_tiling(reference_tiling(pd), 1)
