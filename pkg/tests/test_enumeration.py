from __future__ import annotations

import random
from fractions import Fraction as Fr

import pytest

from tilelocal.enumeration import census, classes_for_cells
from tilelocal.errors import ParameterError
from tilelocal.sampling import plant_tiles, sample_tilings
from tilelocal.tilings import ball_cells, central_patch

from .test_systems import PD_RULES, word_expand

# === independent word-factor oracle ===================================


def pd_factor_count(width: int) -> int:
    text = word_expand(PD_RULES, "a", 15)
    return len({text[i : i + width] for i in range(len(text) - width + 1)})


# === d = 1 ============================================================


def test_pd_census_integer_radius(pd):
    cen = census(pd, 2)
    assert cen.complete
    by_cells = {row.cells: row for row in cen.rows}
    # tangency at shift 0 widens the patch by one tile on each side
    point_row = by_cells[tuple((z,) for z in range(-3, 3))]
    interval_row = by_cells[tuple((z,) for z in range(-3, 2))]
    assert {r.kind for r in point_row.regions} == {"point"}
    assert {r.kind for r in interval_row.regions} == {"interval"}
    assert len(point_row.classes) == pd_factor_count(6)
    assert len(interval_row.classes) == pd_factor_count(5)


def test_pd_census_half_integer_radius(pd):
    cen = census(pd, Fr(3, 2))
    assert cen.complete
    widths = sorted(len(row.cells) for row in cen.rows)
    assert widths == [4, 4, 5]
    assert len(cen.all_classes()) == pd_factor_count(4) + pd_factor_count(5)
    kinds = {r.kind for row in cen.rows for r in row.regions}
    assert kinds == {"half_open", "point", "interval"}


def test_pd_census_every_class_is_realizable(pd):
    cen = census(pd, Fr(3, 2))
    for row in cen.rows:
        region = row.regions[0]
        base = row.cells[0]
        for cls in sorted(row.classes, key=lambda c: sorted(c.tiles)):
            tiles = [
                (tuple(o + b for o, b in zip(off, base)), lb) for off, lb in cls.tiles
            ]
            t = plant_tiles(pd, tiles, region.sample)
            patch = central_patch(t, Fr(3, 2))
            assert tuple(z for z, _ in sorted(patch.cells)) == row.cells
            assert patch.pattern_class() == cls


def test_pd_census_contains_all_sampled_classes(pd):
    cen = census(pd, 2)
    by_cells = {row.cells: row.classes for row in cen.rows}
    rng = random.Random(11)
    # margin 0: thresholds themselves must be sampled too
    tilings = sample_tilings(pd, 60, rng, den=8, margin=Fr(0))
    for t in tilings:
        patch = central_patch(t, 2)
        cells = tuple(z for z, _ in sorted(patch.cells))
        assert patch.pattern_class() in by_cells[cells]


def test_census_rejects_bad_radius(pd):
    with pytest.raises(ParameterError):
        census(pd, 0)


# === d = 2 ============================================================


def test_chair_census_soundness(chair):
    # the census is not complete at this radius (tangency neighborhoods
    # stay unresolved), so sample away from the arrangement curves: at
    # radius 1 no interior eighth-grid point lies on a line or circle
    cen = census(chair, 1)
    allc = cen.all_classes()
    rng = random.Random(5)
    for t in sample_tilings(chair, 40, rng, den=8, margin=Fr(1, 8)):
        assert central_patch(t, 1).pattern_class() in allc


def test_chair_census_has_tangency_vertex(chair):
    # at shift (0,0) four cubes touch the ball of radius 1 tangentially
    cen = census(chair, 1)
    want = tuple(sorted(ball_cells((Fr(0), Fr(0)), Fr(1), 2)))
    rows = [row for row in cen.rows if row.cells == want]
    assert rows and any(r.kind == "vertex" for r in rows[0].regions)


def test_chair_census_face_realization(chair):
    cen = census(chair, 1)
    face_rows = [
        row for row in cen.rows if any(r.kind == "face" for r in row.regions)
    ]
    row = min(face_rows, key=lambda r: len(r.cells))
    region = next(r for r in row.regions if r.kind == "face")
    cls = sorted(row.classes, key=lambda c: sorted(c.tiles))[0]
    base = row.cells[0]
    tiles = [(tuple(o + b for o, b in zip(off, base)), lb) for off, lb in cls.tiles]
    t = plant_tiles(chair, tiles, region.sample)
    assert central_patch(t, 1).pattern_class() == cls


def test_classes_for_cells_matches_window_count(pd):
    cells = ((0,), (1,), (2,))
    assert len(classes_for_cells(pd, cells)) == pd_factor_count(3)
