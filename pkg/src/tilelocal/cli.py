"""Command-line harness tying the library into reproducible runs.

Exit codes: 0 on success, 1 when a checked property fails (or an
internal invariant trips on concrete data), 2 on usage or configuration
errors.  All sampling commands take an explicit --seed; results are
deterministic given the seed, so reports can be diffed byte for byte.

The environment variable TILELOCAL_THREADS is accepted as an optional
parallelism hint.  Evaluation is exact rational arithmetic and runs in
one process; the hint is validated and currently advisory.
"""

from __future__ import annotations

import argparse
import json
import math
import os
import random
import sys
from fractions import Fraction

from .enumeration import census
from .errors import (
    ModulusViolationError,
    ParameterError,
    PreconditionError,
    SectionIncompleteError,
    StructuralError,
    TableIncompleteError,
)
from .localize import LocalizedMap, equivariant_localize, homotopy_localize
from .maps import apply_pipeline, check_local, tiling_metric_bounds
from .qnum import fmt_rational, fmt_vec, parse_rational
from .sampling import sample_tilings
from .section import approximant_summary
from .serialize import (
    CATALOG_ALIASES,
    load,
    load_json,
    localized_to_doc,
    patch_class_to_doc,
    path_to_doc,
    pipeline_from_doc,
    report_to_doc,
    resolve_system,
    save_json,
    tiling_from_doc,
)
from .systems import catalog_names, load_catalog
from .tilings import central_patch, reference_tiling
from .verify import (
    brute_force_locality_oracle,
    metric_sanity,
    verify_equivariance,
    verify_homotopy,
    verify_localization,
)


def thread_hint() -> int:
    raw = os.environ.get("TILELOCAL_THREADS")
    if raw is None:
        return 1
    try:
        n = int(raw)
        if n < 1:
            raise ValueError
    except ValueError:
        print(f"warning: ignoring TILELOCAL_THREADS={raw!r} (want a positive "
              f"integer)", file=sys.stderr)
        return 1
    return n


# --- argument types ---------------------------------------------------------


def rational(text: str) -> Fraction:
    return parse_rational(text)


def positive_rational(text: str) -> Fraction:
    q = parse_rational(text)
    if q <= 0:
        raise ValueError(f"must be positive, got {text}")
    return q


def epsilon_arg(text: str) -> Fraction:
    q = parse_rational(text)
    if not 0 < q < Fraction(1, 2):
        raise ValueError(f"epsilon must lie in (0, 1/2), got {text}")
    return q


# --- rendering --------------------------------------------------------------


def render_patch(patch, dim: int) -> str:
    cells = sorted(patch.cells)
    header = f"shift ({', '.join(fmt_rational(c) for c in patch.shift)})"
    if dim == 1:
        labels = [lb for _, lb in cells]
        width = max(len(lb) for lb in labels)
        first, last = cells[0][0][0], cells[-1][0][0]
        z0 = math.floor(-patch.shift[0])
        row = " ".join(lb.ljust(width) for lb in labels)
        mark = " ".join(
            ("^" if z == z0 else " ").ljust(width) for (z,), _ in cells
        )
        return f"{header}  cells {first}..{last}\n{row}\n{mark.rstrip()}"
    lut = {cell: lb for cell, lb in cells}
    xs = sorted({c[0] for c in lut})
    ys = sorted({c[1] for c in lut})
    width = max(len(lb) for lb in lut.values())
    rows = [
        " ".join(lut.get((x, y), ".").ljust(width) for x in xs)
        for y in reversed(ys)
    ]
    return "\n".join(
        [f"{header}  cells x {xs[0]}..{xs[-1]}, y {ys[0]}..{ys[-1]}"] + rows
    )


def _sampled_tiling(system, args):
    if args.seed is None:
        return reference_tiling(system)
    return sample_tilings(system, 1, random.Random(args.seed))[0]


def _emit_report(rep, args) -> int:
    for line in rep.summary_lines():
        print(line)
    if getattr(args, "out", None):
        save_json(report_to_doc(rep), args.out)
        print(f"report written to {args.out}")
    return 0 if rep.passed else 1


def _load_pipeline(args):
    doc = load_json(args.map)
    default = resolve_system(args.space) if args.space else None
    if doc.get("kind") not in (None, "pipeline"):
        raise StructuralError(
            f"{args.map}: expected a pipeline document, found {doc.get('kind')!r}"
        )
    return pipeline_from_doc(doc, default_system=default)


# --- subcommands --------------------------------------------------------------


def cmd_spaces_list(args) -> int:
    for name in catalog_names():
        system = load_catalog(name)
        rot = system.rotation.order if system.rotation else "-"
        print(
            f"{name}: d={system.dim} n={system.expansion} "
            f"labels={','.join(system.labels)} rotation={rot} "
            f"digest={system.digest()}"
        )
    return 0


def cmd_spaces_validate(args) -> int:
    system = resolve_system(args.space)
    problems = list(system.rotation_violations()) if system.rotation else []
    if system.primitivity_exponent() is None:
        problems.append("substitution is not primitive")
    if problems:
        for p in problems:
            print(f"FAIL {p}")
        return 1
    print(
        f"PASS {system.name}: d={system.dim}, expansion {system.expansion}, "
        f"{len(system.labels)} labels, primitive"
        + (", rotation action consistent" if system.rotation else "")
    )
    return 0


def cmd_patches_enumerate(args) -> int:
    system = resolve_system(args.space)
    cen = census(system, args.radius)
    print(
        f"census of {system.name} at radius {fmt_rational(args.radius)}: "
        f"{len(cen.rows)} cell sets, {len(cen.all_classes())} classes, "
        f"complete={cen.complete}"
    )
    for row in cen.rows:
        kinds = ",".join(sorted({r.kind for r in row.regions}))
        print(f"  cells={len(row.cells)} regions[{kinds}] classes={len(row.classes)}")
    if args.out:
        doc = {
            "kind": "census",
            "system": system.name,
            "radius": fmt_rational(args.radius),
            "dim": cen.dim,
            "complete": cen.complete,
            "rows": [
                {
                    "cells": [list(c) for c in row.cells],
                    "regions": [
                        {"kind": r.kind, "sample": fmt_vec(r.sample)}
                        for r in row.regions
                    ],
                    "classes": sorted(
                        (patch_class_to_doc(c) for c in row.classes),
                        key=json.dumps,
                    ),
                }
                for row in cen.rows
            ],
        }
        save_json(doc, args.out)
        print(f"census written to {args.out}")
    return 0


def cmd_approximant_build(args) -> int:
    system = resolve_system(args.space)
    summary = approximant_summary(system, args.radius)
    print(
        f"approximant of {system.name} at radius {fmt_rational(args.radius)}: "
        f"{summary['distinct_classes']} patch classes over "
        f"{len(summary['regions'])} shift cell sets, complete={summary['complete']}"
    )
    for reg in summary["regions"]:
        print(
            f"  cells={reg['cells']} kinds={','.join(reg['region_kinds'])} "
            f"classes={reg['classes']}"
        )
    if args.out:
        doc = dict(summary)
        doc["kind"] = "approximant"
        doc["system"] = system.name
        doc["radius"] = fmt_rational(doc["radius"])
        save_json(doc, args.out)
        print(f"summary written to {args.out}")
    return 0


def cmd_map_check_local(args) -> int:
    pipeline = _load_pipeline(args)
    fn = lambda t: apply_pipeline(pipeline, t)
    ok, witness = check_local(
        fn, pipeline.source, args.radius, args.samples, args.seed,
        out_radius=args.out_radius,
    )
    print(f"{'PASS' if ok else 'FAIL'} sampled locality at radius "
          f"{fmt_rational(args.radius)} ({args.samples} pairs, seed {args.seed})")
    if not ok:
        print(f"  witness pair index {witness['index']}, guaranteed "
              f"agreement {witness['guaranteed']}")
    oracle_ok = True
    if args.oracle:
        oracle_ok, ow = brute_force_locality_oracle(
            pipeline, radius=args.radius,
            out_radius=args.out_radius, budget=args.budget,
        )
        print(f"{'PASS' if oracle_ok else 'FAIL'} exhaustive class oracle")
        if not oracle_ok:
            print(f"  witness classes {ow['class']} vs {ow['other']} "
                  f"at shift {ow['shift']}")
    return 0 if ok and oracle_ok else 1


def cmd_map_apply(args) -> int:
    pipeline = _load_pipeline(args)
    if args.tiling:
        t = tiling_from_doc(load_json(args.tiling))
        if t.system is not pipeline.source:
            raise StructuralError("tiling and pipeline live on different spaces")
    else:
        t = _sampled_tiling(pipeline.source, args)
    out = apply_pipeline(pipeline, t)
    print("input:")
    print(render_patch(central_patch(t, args.radius), pipeline.source.dim))
    print("image:")
    print(render_patch(central_patch(out, args.radius), pipeline.target.dim))
    return 0


def cmd_localize(args) -> int:
    pipeline = _load_pipeline(args)
    fe = LocalizedMap(pipeline, args.epsilon)
    p = fe.params
    print(f"localized at epsilon {fmt_rational(p.epsilon)}: "
          f"delta {fmt_rational(p.delta)}, R {fmt_rational(p.radius)}, "
          f"local at {fmt_rational(p.locality_radius)}, "
          f"{len(fe.scheme.nodes)} probe nodes")
    if args.out:
        save_json(localized_to_doc(fe), args.out)
        print(f"map written to {args.out}")
    return 0


def cmd_homotopy_localize(args) -> int:
    default = resolve_system(args.space) if args.space else None
    doc = load_json(args.family)
    if doc.get("kind") not in ("family", "homotopy_path"):
        raise StructuralError(
            f"{args.family}: expected a family document, found {doc.get('kind')!r}"
        )
    from .serialize import family_from_doc

    family = family_from_doc(doc, default_system=default)
    path = homotopy_localize(
        family, args.epsilon, check_samples=args.gate_samples, seed=args.seed or 0
    )
    p = path.params
    taus = path.schedule()
    print(f"homotopy localized at epsilon {fmt_rational(p.epsilon)}: "
          f"delta {fmt_rational(p.delta)}, R {fmt_rational(p.radius)}, "
          f"{len(taus)} schedule points")
    if args.out:
        save_json(path_to_doc(path), args.out)
        print(f"path written to {args.out}")
    return 0


def cmd_equivariant_localize(args) -> int:
    pipeline = _load_pipeline(args)
    fe = equivariant_localize(
        pipeline, args.epsilon,
        check_samples=args.gate_samples, seed=args.seed or 0,
    )
    p = fe.params
    print(f"equivariant localized at epsilon {fmt_rational(p.epsilon)}: "
          f"delta {fmt_rational(p.delta)}, R {fmt_rational(p.radius)}, "
          f"group C4")
    if args.out:
        save_json(localized_to_doc(fe), args.out)
        print(f"map written to {args.out}")
    return 0


def cmd_verify(args) -> int:
    default = resolve_system(args.space) if args.space else None
    src = getattr(args, "in")
    if args.suite == "theorem2":
        obj = load(src, expect="homotopy_path", default_system=default)
        rep = verify_homotopy(
            obj, args.samples, args.seed,
            slices=args.slices, connector_steps=args.connector_steps,
        )
        return _emit_report(rep, args)
    obj = load(src, expect="localized_map", default_system=default)
    if args.suite == "theorem1":
        if type(obj) is not LocalizedMap:
            raise StructuralError(
                f"{src}: group-averaged map; theorem3 verifies those"
            )
        rep = verify_localization(obj, args.samples, args.seed)
    else:
        rep = verify_equivariance(obj, args.samples, args.seed)
    return _emit_report(rep, args)


def cmd_metric(args) -> int:
    if args.t1 or args.t2:
        if not (args.t1 and args.t2):
            raise ParameterError("metric needs both --t1 and --t2 (or neither)")
        t1 = tiling_from_doc(load_json(args.t1))
        t2 = tiling_from_doc(load_json(args.t2))
        lo, hi = tiling_metric_bounds(t1, t2, depth=args.depth)
        print(f"distance in [{fmt_rational(lo)}, {fmt_rational(hi)}]")
        return 0
    if args.samples is None or args.seed is None:
        raise ParameterError("metric sanity suite needs --samples and --seed")
    system = resolve_system(args.space)
    rep = metric_sanity(system, args.samples, args.seed)
    return _emit_report(rep, args)


def cmd_plot_patch(args) -> int:
    system = resolve_system(args.space)
    t = _sampled_tiling(system, args)
    text = render_patch(central_patch(t, args.radius), system.dim)
    if args.out:
        with open(args.out, "w") as fh:
            fh.write(text + "\n")
        print(f"patch written to {args.out}")
    else:
        print(text)
    return 0


# --- parser --------------------------------------------------------------


def _add_space(p, required=False):
    p.add_argument(
        "--space",
        required=required,
        help=f"system: catalog name ({', '.join(catalog_names())}, "
             f"aliases {', '.join(CATALOG_ALIASES)}) or a JSON file",
    )


def build_parser() -> argparse.ArgumentParser:
    top = argparse.ArgumentParser(
        prog="tilelocal",
        description="Exact localization of maps between block-substitution "
                    "tiling spaces, with property verification.",
    )
    sub = top.add_subparsers(dest="command", required=True)

    spaces = sub.add_parser("spaces", help="bundled and user systems")
    ssub = spaces.add_subparsers(dest="subcommand", required=True)
    p = ssub.add_parser("list", help="list catalog systems")
    p.set_defaults(fn=cmd_spaces_list)
    p = ssub.add_parser("validate", help="validate a system document")
    _add_space(p, required=True)
    p.set_defaults(fn=cmd_spaces_validate)

    patches = sub.add_parser("patches", help="patch class censuses")
    psub = patches.add_subparsers(dest="subcommand", required=True)
    p = psub.add_parser("enumerate", help="enumerate central patch classes")
    _add_space(p, required=True)
    p.add_argument("--radius", type=positive_rational, required=True)
    p.add_argument("--out", help="write the census as JSON")
    p.set_defaults(fn=cmd_patches_enumerate)

    approx = sub.add_parser("approximant", help="approximant structure")
    asub = approx.add_subparsers(dest="subcommand", required=True)
    p = asub.add_parser("build", help="size summary of the radius-R approximant")
    _add_space(p, required=True)
    p.add_argument("--radius", type=positive_rational, required=True)
    p.add_argument("--out")
    p.set_defaults(fn=cmd_approximant_build)

    mp = sub.add_parser("map", help="pipeline maps")
    msub = mp.add_subparsers(dest="subcommand", required=True)
    p = msub.add_parser("check-local", help="sampled locality check")
    p.add_argument("--map", required=True, help="pipeline JSON file")
    _add_space(p)
    p.add_argument("--radius", type=positive_rational, required=True)
    p.add_argument("--samples", type=int, required=True)
    p.add_argument("--seed", type=int, required=True)
    p.add_argument("--out-radius", type=positive_rational, default=Fraction(1))
    p.add_argument("--oracle", action="store_true",
                   help="also run the exhaustive class oracle")
    p.add_argument("--budget", type=int, default=20000,
                   help="oracle evaluation budget")
    p.set_defaults(fn=cmd_map_check_local)
    p = msub.add_parser("apply", help="apply a pipeline to one tiling")
    p.add_argument("--map", required=True)
    _add_space(p)
    p.add_argument("--tiling", help="tiling JSON file (default: sample or reference)")
    p.add_argument("--seed", type=int, help="sample the input (omit for reference)")
    p.add_argument("--radius", type=positive_rational, default=Fraction(2))
    p.set_defaults(fn=cmd_map_apply)

    p = sub.add_parser("localize", help="build the localized map")
    p.add_argument("--map", required=True)
    _add_space(p)
    p.add_argument("--epsilon", type=epsilon_arg, required=True)
    p.add_argument("--out", help="write the localized map as JSON")
    p.set_defaults(fn=cmd_localize)

    hom = sub.add_parser("homotopy", help="families of maps")
    hsub = hom.add_subparsers(dest="subcommand", required=True)
    p = hsub.add_parser("localize", help="localize a family along a path")
    p.add_argument("--family", required=True, help="family JSON file")
    _add_space(p)
    p.add_argument("--epsilon", type=epsilon_arg, required=True)
    p.add_argument("--gate-samples", type=int, default=12,
                   help="samples for the graded-locality gate")
    p.add_argument("--seed", type=int, help="seed for the gate")
    p.add_argument("--out")
    p.set_defaults(fn=cmd_homotopy_localize)

    eq = sub.add_parser("equivariant", help="group-averaged maps")
    esub = eq.add_subparsers(dest="subcommand", required=True)
    p = esub.add_parser("localize", help="localize with quarter-turn averaging")
    p.add_argument("--map", required=True)
    _add_space(p)
    p.add_argument("--epsilon", type=epsilon_arg, required=True)
    p.add_argument("--gate-samples", type=int, default=8,
                   help="samples for the intertwining gate")
    p.add_argument("--seed", type=int, help="seed for the gate")
    p.add_argument("--out")
    p.set_defaults(fn=cmd_equivariant_localize)

    ver = sub.add_parser("verify", help="property suites")
    vsub = ver.add_subparsers(dest="suite", required=True)
    for suite, blurb in (
        ("theorem1", "locality, bound, translate structure, cancellation"),
        ("theorem2", "per-slice locality and endpoint reproduction"),
        ("theorem3", "equivariance plus the localization suite"),
    ):
        p = vsub.add_parser(suite, help=blurb)
        p.add_argument("--in", required=True, help="input document")
        _add_space(p)
        p.add_argument("--samples", type=int, required=True)
        p.add_argument("--seed", type=int, required=True)
        p.add_argument("--out", help="write the report as JSON")
        if suite == "theorem2":
            p.add_argument("--slices", type=int, default=11)
            p.add_argument("--connector-steps", type=int, default=5)
        p.set_defaults(fn=cmd_verify, suite=suite)

    p = sub.add_parser("metric", help="hull metric brackets")
    _add_space(p)
    p.add_argument("--t1", help="tiling JSON file")
    p.add_argument("--t2", help="tiling JSON file")
    p.add_argument("--depth", type=int, default=8)
    p.add_argument("--samples", type=int)
    p.add_argument("--seed", type=int)
    p.add_argument("--out")
    p.set_defaults(fn=cmd_metric)

    plot = sub.add_parser("plot", help="text renderings")
    plsub = plot.add_subparsers(dest="subcommand", required=True)
    p = plsub.add_parser("patch", help="render a central patch")
    _add_space(p, required=True)
    p.add_argument("--radius", type=positive_rational, default=Fraction(3))
    p.add_argument("--seed", type=int, help="sample the tiling (omit for reference)")
    p.add_argument("--out", help="write the rendering to a text file")
    p.set_defaults(fn=cmd_plot_patch)

    return top


def main(argv=None) -> int:
    thread_hint()
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        return args.fn(args)
    except (StructuralError, ParameterError) as e:
        print(f"error: {e}", file=sys.stderr)
        return 2
    except (
        TableIncompleteError,
        SectionIncompleteError,
        ModulusViolationError,
        PreconditionError,
    ) as e:
        print(f"failure: {e}", file=sys.stderr)
        return 1


if __name__ == "__main__":
    sys.exit(main())
