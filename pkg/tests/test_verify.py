"""Property suites, report plumbing, and the exhaustive locality oracle."""

from __future__ import annotations

import json
import random
from fractions import Fraction as F

import pytest

from .genmaps import random_pipeline
from tilelocal.enumeration import classes_for_cells
from tilelocal.errors import ParameterError
from tilelocal.localize import (
    HomotopyFamily,
    LocalizedMap,
    equivariant_localize,
    homotopy_localize,
)
from tilelocal.maps import (
    LabelAtFeature,
    LocalTable,
    MapPipeline,
    Translate,
    Wiggle,
    apply_pipeline,
    check_local,
)
from tilelocal.verify import (
    brute_force_locality_oracle,
    metric_sanity,
    verify_equivariance,
    verify_homotopy,
    verify_localization,
)


def wiggle_pipeline(pd, depth=4):
    coeffs = [F(1, 4) ** k for k in range(1, depth + 1)]
    feats = [LabelAtFeature((2 * k,), "a") for k in range(1, depth + 1)]
    return MapPipeline(pd, pd, [Wiggle(coeffs, feats)])


def corrupt_scheme(scheme, factor):
    bad = object.__new__(type(scheme))
    object.__setattr__(bad, "nodes", scheme.nodes)
    object.__setattr__(bad, "weights", tuple(w * factor for w in scheme.weights))
    return bad


# --- localization suite ---------------------------------------------------


def test_localization_suite_passes(pd):
    loc = LocalizedMap(wiggle_pipeline(pd), F(1, 8))
    rep = verify_localization(loc, 12, seed=5)
    assert rep.passed
    assert [p.name for p in rep.properties] == [
        "local_at_R_plus_delta",
        "motion_strictly_below_epsilon",
        "image_is_exact_translate",
        "probe_cancellation",
    ]
    assert all(p.checked > 0 for p in rep.properties)
    assert all(p.witnesses == [] for p in rep.properties)


def test_identity_suite_trivially_passes(pd):
    loc = LocalizedMap(MapPipeline(pd, pd, []), F(1, 8))
    rep = verify_localization(loc, 8, seed=1)
    assert rep.passed
    # the identity commutes with translations, so the correction vanishes
    motion = [p for p in rep.properties if p.name == "motion_strictly_below_epsilon"][0]
    assert motion.observed["sup_motion_norm_upper"] == "0"


def test_corrupted_scheme_fails_in_report(pd):
    f = wiggle_pipeline(pd)
    loc = LocalizedMap(f, F(1, 8))
    bad = corrupt_scheme(loc.scheme, F(9, 10))
    rep = verify_localization(LocalizedMap(f, F(1, 8), scheme=bad), 6, seed=5)
    assert not rep.passed
    # the broken property is reported, not raised, and the rest still ran
    assert len(rep.properties) == 4
    pc = [p for p in rep.properties if p.name == "probe_cancellation"][0]
    assert not pc.passed
    assert pc.witnesses[0]["weights_sum"] == "9/10"
    others = [p for p in rep.properties if p.name != "probe_cancellation"]
    assert all(p.checked > 0 for p in others)


# --- report plumbing ------------------------------------------------------


def test_report_schema(pd):
    rep = verify_localization(LocalizedMap(wiggle_pipeline(pd), F(1, 8)), 4, seed=2)
    doc = rep.to_json_dict()
    assert set(doc) == {
        "suite", "params", "n", "seed", "pass", "properties", "wall_time_ms",
    }
    assert doc["suite"] == "localization"
    assert doc["n"] == 4 and doc["seed"] == 2
    for entry in doc["properties"]:
        assert {"name", "pass", "checked", "witnesses"} <= set(entry)
    assert set(doc["params"]) == {
        "epsilon", "eps_move", "delta", "R", "locality_radius", "kappa",
    }
    # canonical form drops timing and is valid JSON
    canon = json.loads(rep.canonical_json())
    assert "wall_time_ms" not in canon
    assert canon["properties"][0]["name"] == "local_at_R_plus_delta"


def test_report_reproducibility(pd):
    f = wiggle_pipeline(pd)
    a = verify_localization(LocalizedMap(f, F(1, 8)), 6, seed=9)
    b = verify_localization(LocalizedMap(f, F(1, 8)), 6, seed=9)
    assert a.canonical_json() == b.canonical_json()
    c = verify_localization(LocalizedMap(f, F(1, 8)), 6, seed=10)
    assert a.canonical_json() != c.canonical_json()


def test_summary_lines(pd):
    rep = verify_localization(LocalizedMap(wiggle_pipeline(pd), F(1, 8)), 3, seed=2)
    lines = rep.summary_lines()
    assert lines[0] == "suite localization: PASS"
    assert len(lines) == 5
    assert all(line.lstrip().startswith("PASS") for line in lines[1:])


# --- homotopy suite -------------------------------------------------------


def family_fixture(pd, depth=3):
    feats = [LabelAtFeature((2 * k,), "a") for k in range(1, depth + 1)]
    zero = Wiggle([F(0)] * depth, feats)
    full = Wiggle([F(1, 4) ** k for k in range(1, depth + 1)], feats)
    return HomotopyFamily(
        (0, 1), (MapPipeline(pd, pd, [zero]), MapPipeline(pd, pd, [full]))
    )


def test_homotopy_suite_passes(pd):
    path = homotopy_localize(family_fixture(pd), F(1, 8), check_samples=4, seed=2)
    rep = verify_homotopy(path, 30, seed=9, slices=5, connector_steps=3)
    assert rep.passed
    assert [p.name for p in rep.properties] == [
        "local_along_the_path",
        "endpoints_reproduced_exactly",
        "motion_strictly_below_epsilon",
    ]
    assert rep.params["slices"] == 5
    taus = rep.properties[0].observed["taus"]
    assert taus[0] == "0" and taus[-1] == "1"


# --- equivariance suite ---------------------------------------------------


def test_equivariance_suite_chair(chair):
    w = Wiggle(
        [F(1, 32), F(1, 64)],
        [LabelAtFeature((0, 0), "ne"), LabelAtFeature((1, 1), "sw")],
        group_average=True,
    )
    eq = equivariant_localize(MapPipeline(chair, chair, [w]), F(2, 5),
                              check_samples=2, seed=5)
    rep = verify_equivariance(eq, 2, seed=11)
    assert rep.passed
    assert rep.properties[0].name == "intertwines_group_action"
    assert rep.properties[0].observed == {"group": "C4"}
    assert rep.properties[0].checked == 6  # 2 samples x 3 nontrivial turns


def test_equivariance_trivial_group_reduction(pd):
    loc = LocalizedMap(wiggle_pipeline(pd), F(1, 8))
    rep = verify_equivariance(loc, 4, seed=3)
    assert rep.passed
    assert rep.suite == "equivariance"
    assert rep.properties[0].name == "intertwines_group_action"
    assert rep.properties[0].observed == {"group": "trivial"}
    assert [p.name for p in rep.properties[1:]] == [
        "local_at_R_plus_delta",
        "motion_strictly_below_epsilon",
        "image_is_exact_translate",
        "probe_cancellation",
    ]


def test_equivariance_rejects_unknown_object():
    with pytest.raises(ParameterError):
        verify_equivariance(42, 1, 1)


# --- the oracle -----------------------------------------------------------


def test_oracle_translate_fails_at_radius_1(pd):
    f = MapPipeline(pd, pd, [Translate((F(5),))])
    ok, witness = brute_force_locality_oracle(f, pd, 1)
    assert not ok
    assert witness is not None and "class" in witness and "shift" in witness


def test_oracle_bare_callable_needs_reach(pd):
    with pytest.raises(ParameterError, match="reach"):
        brute_force_locality_oracle(lambda t: t, pd, 1)
    ok, _ = brute_force_locality_oracle(lambda t: t, pd, 1, reach=2)
    assert ok


def test_oracle_recode_passes_at_its_reach(pd):
    cells = ((-1,), (0,), (1,))
    table = {}
    for cls in classes_for_cells(pd, cells):
        lut = dict(cls.tiles)
        table[cls] = "a" if lut[(0,)] == lut[(2,)] else "b"
    f = MapPipeline(pd, pd, [LocalTable(1, table, pd)])
    ok, _ = brute_force_locality_oracle(f, pd, 2)
    assert ok
    # the verdict is exact: the same window genuinely needs B_2 data
    ok, witness = brute_force_locality_oracle(f, pd, 1)
    assert not ok and witness is not None


def test_oracle_sees_through_window_dressing(pd):
    # a window-1 table that only ever uses its center cell is the
    # identity map, and the oracle judges the map, not the window
    cells = ((-1,), (0,), (1,))
    table = {}
    for cls in classes_for_cells(pd, cells):
        table[cls] = dict(cls.tiles)[(1,)]
    f = MapPipeline(pd, pd, [LocalTable(1, table, pd)])
    ok, _ = brute_force_locality_oracle(f, pd, 1)
    assert ok


def test_oracle_verdicts_are_sharp_in_the_reading_depth(pd):
    # each feature reads one cell at distance k-1 from the origin, so
    # the map needs exactly the radius-4 ball and nothing less
    feats = [LabelAtFeature((2 * k,), "a") for k in range(1, 5)]
    w = Wiggle([F(1, 4**k) for k in range(1, 5)], feats)
    f = MapPipeline(pd, pd, [w])
    for r, want in ((1, False), (2, False), (3, False), (4, True)):
        ok, _ = brute_force_locality_oracle(f, pd, r)
        assert ok is want, r


def test_oracle_budget_guard(pd):
    f = MapPipeline(pd, pd, [Translate((F(1, 4),))])
    with pytest.raises(ParameterError, match="census"):
        brute_force_locality_oracle(f, pd, 2, budget=3)


def test_oracle_agrees_with_checker_on_random_pipelines(pd):
    rng = random.Random(515)
    for _ in range(6):
        f = random_pipeline(pd, rng)
        r = rng.choice([1, 2])
        fn = lambda t: apply_pipeline(f, t)
        ok_oracle, _ = brute_force_locality_oracle(f, pd, r)
        ok_checker, _ = check_local(fn, pd, r, 160, seed=rng.randrange(10**6))
        assert ok_oracle == ok_checker, (f.stages, r)


# --- metric suite ---------------------------------------------------------


def test_metric_sanity_both_systems(pd, chair):
    assert metric_sanity(pd, 10, 3).passed
    assert metric_sanity(chair, 3, 3).passed
