from __future__ import annotations

import random
from fractions import Fraction as Fr

import pytest

from tilelocal.errors import SectionIncompleteError
from tilelocal.section import SectionTable, approximant_summary, recenter_offset
from tilelocal.sampling import sample_tilings
from tilelocal.enumeration import census
from tilelocal.tilings import (
    PatchClass,
    central_patch,
    patches_equal,
    reference_tiling,
    translate_tiling,
)

from .test_systems import PD_RULES, word_expand

# === the defining property ============================================


def test_recenter_reproduces_patch_1d(pd):
    table = SectionTable(pd)
    t0 = reference_tiling(pd)
    for t in sample_tilings(pd, 25, random.Random(2)):
        for radius in (Fr(3, 2), Fr(4)):
            v = recenter_offset(table, t, radius)
            assert patches_equal(
                central_patch(translate_tiling(t0, v), radius),
                central_patch(t, radius),
            )


def test_recenter_reproduces_patch_2d(chair):
    table = SectionTable(chair)
    t0 = reference_tiling(chair)
    for t in sample_tilings(chair, 12, random.Random(4)):
        v = recenter_offset(table, t, Fr(2))
        assert patches_equal(
            central_patch(translate_tiling(t0, v), Fr(2)),
            central_patch(t, Fr(2)),
        )


def test_recenter_fixes_reference(pd):
    # the reference tiling's own patch occurs at its own anchor, and the
    # first-occurrence rule must find an occurrence with the same class
    table = SectionTable(pd)
    t0 = reference_tiling(pd)
    v = recenter_offset(table, t0, Fr(2))
    assert v[0].denominator == 1  # integral: same shift
    assert patches_equal(
        central_patch(translate_tiling(t0, v), Fr(2)), central_patch(t0, Fr(2))
    )


# === first-occurrence rule ============================================


def pd_reference_level(k):
    """Label and origin offset of the level-k reference supertile."""
    label = "a" if k % 2 == 0 else "b"
    p = sum(2**j for j in range(1, k, 2))
    return label, p


def test_first_occurrence_matches_hand_scan(pd):
    table = SectionTable(pd)
    # class of the word 'ab' at offsets 0,1
    cls = PatchClass(frozenset({((0,), "a"), ((1,), "b")}))
    anchor = table.locate(cls)
    # oracle: scan reference supertiles by level, least position first
    for k in range(1, 8):
        label, p = pd_reference_level(k)
        text = word_expand(PD_RULES, label, k)
        pos = text.find("ab")
        if pos >= 0:
            assert anchor == (pos - p,)
            break
    else:
        pytest.fail("oracle never found the word")


def test_lazy_and_prefilled_tables_agree(pd):
    cen = census(pd, Fr(5, 2))
    classes = sorted(cen.all_classes(), key=lambda c: sorted(c.tiles))
    t1 = SectionTable(pd)
    t2 = SectionTable(pd)
    t2.prefill(classes)
    for cls in reversed(classes):
        assert t1.locate(cls) == t2.locate(cls)
    t3 = SectionTable(pd)
    for cls in classes:
        assert t3.locate(cls) == t2.locate(cls)


def test_illegal_class_raises(pd):
    table = SectionTable(pd, max_level=10)
    bad = PatchClass(frozenset({((0,), "b"), ((1,), "b")}))
    with pytest.raises(SectionIncompleteError):
        table.locate(bad)


# === summary ==========================================================


def test_approximant_summary_1d(pd):
    s = approximant_summary(pd, 2)
    assert s["complete"] is True
    assert s["dim"] == 1
    assert len(s["regions"]) == 2
    assert s["distinct_classes"] == sum(r["classes"] for r in s["regions"])
