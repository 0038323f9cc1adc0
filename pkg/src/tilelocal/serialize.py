"""JSON persistence for the domain values the CLI moves between runs.

Documents are plain JSON objects tagged with a "kind"; every numeric
payload is a rational string "p/q" (never a float), so serialized values
are bit-exact.  Writes are atomic (temp file + rename).  Parse failures
raise StructuralError naming the path into the document, so a bad value
buried in a stage list is findable.

Serializable kinds: system, tiling, section, pipeline, family,
localized_map, report.  Tilings are serialized structurally (address,
integer translations, quarter turns) — the lazy images of maps are not
persisted, only re-evaluated.
"""

from __future__ import annotations

import json
import os
import tempfile
from fractions import Fraction
from pathlib import Path

from .errors import StructuralError
from .localize import (
    EquivariantLocalizedMap,
    HomotopyFamily,
    HomotopyPath,
    LocalizedMap,
    MollifierScheme,
    homotopy_localize,
)
from .maps import (
    HashFeature,
    LabelAtFeature,
    LocalTable,
    MapPipeline,
    Substitute,
    TableFeature,
    Translate,
    Wiggle,
)
from .qnum import fmt_rational, fmt_vec, parse_rational
from .section import SectionTable
from .systems import (
    SubstitutionSystem,
    catalog_names,
    load_catalog,
    system_from_dict,
)
from .tilings import (
    Address,
    AddressField,
    PatchClass,
    RotatedField,
    Tiling,
    TranslatedField,
)
from .verify import PropertyResult, VerificationReport

FORMAT = 1

CATALOG_ALIASES = {"pd": "period_doubling"}


# --- error-context helpers ------------------------------------------------


def _fail(path: str, msg: str):
    raise StructuralError(f"{msg} at {path}")


def _req(doc, key, path: str):
    if not isinstance(doc, dict):
        _fail(path, "expected a JSON object")
    if key not in doc:
        _fail(path, f"missing {key!r}")
    return doc[key]


def _rat(value, path: str) -> Fraction:
    try:
        return parse_rational(value)
    except ValueError as e:
        raise StructuralError(f"{e} at {path}") from None


def _vec(value, path: str):
    if not isinstance(value, (list, tuple)):
        _fail(path, "expected a list of rationals")
    return tuple(_rat(c, f"{path}[{i}]") for i, c in enumerate(value))


def _cells(value, path: str):
    if not isinstance(value, (list, tuple)):
        _fail(path, "expected a list of integers")
    return tuple(int(c) for c in value)


# --- systems ----------------------------------------------------------------

# one instance per (name, content) in the process, so that documents
# referring to the same system resolve to the same object and identity
# checks inside MapPipeline / SectionTable hold across files
_instances: dict = {}


def _intern(system: SubstitutionSystem) -> SubstitutionSystem:
    # inline documents of a bundled system fold onto the catalog instance
    if system.name in catalog_names():
        cat = load_catalog(system.name)
        if cat.digest() == system.digest():
            return cat
    key = (system.name, system.digest())
    return _instances.setdefault(key, system)


def resolve_system(spec, path: str = "$.system") -> SubstitutionSystem:
    """A system from a name (catalog alias, catalog entry, or JSON file
    path) or an inline document."""
    if isinstance(spec, SubstitutionSystem):
        return _intern(spec)
    if isinstance(spec, dict):
        return _intern(system_from_dict(spec))
    if isinstance(spec, str):
        name = CATALOG_ALIASES.get(spec, spec).replace("-", "_")
        if name in catalog_names():
            return _intern(load_catalog(name))
        p = Path(spec)
        if p.suffix == ".json" and p.exists():
            with open(p) as fh:
                return _intern(system_from_dict(json.load(fh), name_hint=p.stem))
        _fail(path, f"unknown system {spec!r} (catalog: {', '.join(catalog_names())})")
    _fail(path, f"cannot resolve a system from {type(spec).__name__}")


def system_to_doc(system: SubstitutionSystem) -> dict:
    doc = system.to_json_dict()
    doc["kind"] = "system"
    doc["format"] = FORMAT
    return doc


def system_from_doc(doc: dict, path: str = "$") -> SubstitutionSystem:
    return _intern(system_from_dict(doc))


# --- patch classes ----------------------------------------------------------


def patch_class_to_doc(cls: PatchClass) -> list:
    return [[list(off), lb] for off, lb in sorted(cls.tiles)]


def patch_class_from_doc(doc, path: str) -> PatchClass:
    if not isinstance(doc, (list, tuple)):
        _fail(path, "expected a list of [offset, label] pairs")
    tiles = []
    for i, entry in enumerate(doc):
        if not isinstance(entry, (list, tuple)) or len(entry) != 2:
            _fail(f"{path}[{i}]", "expected [offset, label]")
        off, lb = entry
        tiles.append((_cells(off, f"{path}[{i}][0]"), str(lb)))
    return PatchClass(frozenset(tiles))


# --- tilings ----------------------------------------------------------------


def _entries_to_doc(entries) -> list:
    return [[list(cell), lb] for cell, lb in entries]


def _entries_from_doc(doc, path: str):
    if not isinstance(doc, (list, tuple)):
        _fail(path, "expected a list of [cell, label] pairs")
    out = []
    for i, entry in enumerate(doc):
        if not isinstance(entry, (list, tuple)) or len(entry) != 2:
            _fail(f"{path}[{i}]", "expected [cell, label]")
        cell, lb = entry
        out.append((_cells(cell, f"{path}[{i}][0]"), str(lb)))
    return tuple(out)


def _field_to_doc(field) -> dict:
    if isinstance(field, AddressField):
        return {
            "node": "address",
            "head": _entries_to_doc(field.address.head),
            "cycle": _entries_to_doc(field.address.cycle),
        }
    if isinstance(field, TranslatedField):
        return {
            "node": "translated",
            "cells": list(field.offset),
            "of": _field_to_doc(field.base),
        }
    if isinstance(field, RotatedField):
        return {
            "node": "rotated",
            "parity": field.parity,
            "of": _field_to_doc(field.base),
        }
    raise StructuralError(
        f"tilings built from {type(field).__name__} are evaluated lazily "
        f"and not persisted; serialize the inputs instead"
    )


def _field_from_doc(doc, system: SubstitutionSystem, path: str):
    node = _req(doc, "node", path)
    if node == "address":
        addr = Address(
            system,
            head=_entries_from_doc(_req(doc, "head", path), f"{path}.head"),
            cycle=_entries_from_doc(_req(doc, "cycle", path), f"{path}.cycle"),
        )
        return AddressField(addr)
    if node == "translated":
        base = _field_from_doc(_req(doc, "of", path), system, f"{path}.of")
        return TranslatedField(base, _cells(_req(doc, "cells", path), f"{path}.cells"))
    if node == "rotated":
        if system.rotation is None:
            _fail(path, "rotated field for a system with no rotation action")
        base = _field_from_doc(_req(doc, "of", path), system, f"{path}.of")
        return RotatedField(base, int(_req(doc, "parity", path)),
                            system.rotation.label_map)
    _fail(path, f"unknown field node {node!r}")


def tiling_to_doc(t: Tiling) -> dict:
    return {
        "kind": "tiling",
        "format": FORMAT,
        "system": system_to_doc(t.system),
        "shift": fmt_vec(t.shift),
        "field": _field_to_doc(t.field),
    }


def tiling_from_doc(doc: dict, system: SubstitutionSystem | None = None,
                    path: str = "$") -> Tiling:
    if system is None:
        system = resolve_system(_req(doc, "system", path), f"{path}.system")
    field = _field_from_doc(_req(doc, "field", path), system, f"{path}.field")
    shift = _vec(_req(doc, "shift", path), f"{path}.shift")
    return Tiling(field, shift)


# --- sections ----------------------------------------------------------------


def section_to_doc(section: SectionTable) -> dict:
    entries = sorted(
        ([patch_class_to_doc(cls), list(anchor)] for cls, anchor in section.table.items()),
        key=lambda e: json.dumps(e[0]),
    )
    return {
        "kind": "section",
        "format": FORMAT,
        "system": system_to_doc(section.system),
        "max_level": section.max_level,
        "entries": entries,
    }


def section_from_doc(doc: dict, system: SubstitutionSystem | None = None,
                     path: str = "$") -> SectionTable:
    if system is None:
        system = resolve_system(_req(doc, "system", path), f"{path}.system")
    table = {}
    for i, entry in enumerate(_req(doc, "entries", path)):
        if not isinstance(entry, (list, tuple)) or len(entry) != 2:
            _fail(f"{path}.entries[{i}]", "expected [class, anchor]")
        cls = patch_class_from_doc(entry[0], f"{path}.entries[{i}][0]")
        table[cls] = _cells(entry[1], f"{path}.entries[{i}][1]")
    max_level = doc.get("max_level")
    return SectionTable(system, table, None if max_level is None else int(max_level))


# --- map stages ----------------------------------------------------------------


def _feature_to_doc(f) -> dict:
    if isinstance(f, LabelAtFeature):
        return {"kind": "label_at", "offset": list(f.offset), "label": f.label}
    if isinstance(f, HashFeature):
        return {"kind": "hash", "salt": f.salt}
    if isinstance(f, TableFeature):
        return {
            "kind": "table",
            "entries": [
                [patch_class_to_doc(cls), fmt_rational(v)]
                for cls, v in sorted(f.entries.items(), key=lambda kv: kv[0].token())
            ],
            "default": fmt_rational(f.default),
        }
    raise StructuralError(f"cannot serialize feature {type(f).__name__}")


def _feature_from_doc(doc, path: str):
    kind = _req(doc, "kind", path)
    if kind == "label_at":
        return LabelAtFeature(
            _cells(_req(doc, "offset", path), f"{path}.offset"),
            str(_req(doc, "label", path)),
        )
    if kind == "hash":
        return HashFeature(int(_req(doc, "salt", path)))
    if kind == "table":
        entries = {}
        for i, kv in enumerate(_req(doc, "entries", path)):
            cls = patch_class_from_doc(kv[0], f"{path}.entries[{i}][0]")
            entries[cls] = _rat(kv[1], f"{path}.entries[{i}][1]")
        return TableFeature(entries, _rat(doc.get("default", "0"), f"{path}.default"))
    _fail(path, f"unknown feature kind {kind!r}")


def _stage_to_doc(st) -> dict:
    if isinstance(st, Translate):
        return {"kind": "translate", "vector": fmt_vec(st.vector)}
    if isinstance(st, Substitute):
        return {"kind": "substitute"}
    if isinstance(st, LocalTable):
        return {
            "kind": "local_table",
            "window": st.window,
            "out": system_to_doc(st.out_system),
            "table": sorted(
                ([patch_class_to_doc(cls), lb] for cls, lb in st.table.items()),
                key=lambda e: json.dumps(e[0]),
            ),
        }
    if isinstance(st, Wiggle):
        doc = {
            "kind": "wiggle",
            "coeffs": [fmt_rational(c) for c in st.coeffs],
            "features": [_feature_to_doc(f) for f in st.features],
            "decay": [fmt_rational(st.decay[0]), fmt_rational(st.decay[1])],
        }
        if st.direction is not None:
            doc["direction"] = fmt_vec(st.direction)
        if st.group_average:
            doc["group_average"] = True
        return doc
    raise StructuralError(f"cannot serialize stage {type(st).__name__}")


def _stage_from_doc(doc, cur: SubstitutionSystem, path: str):
    """Returns (stage, next system)."""
    kind = _req(doc, "kind", path)
    if kind == "translate":
        return Translate(_vec(_req(doc, "vector", path), f"{path}.vector")), cur
    if kind == "substitute":
        return Substitute(), cur
    if kind == "local_table":
        out = doc.get("out")
        out_system = cur if out is None else resolve_system(out, f"{path}.out")
        table = {}
        for i, entry in enumerate(_req(doc, "table", path)):
            if not isinstance(entry, (list, tuple)) or len(entry) != 2:
                _fail(f"{path}.table[{i}]", "expected [class, label]")
            cls = patch_class_from_doc(entry[0], f"{path}.table[{i}][0]")
            table[cls] = str(entry[1])
        st = LocalTable(int(_req(doc, "window", path)), table, out_system)
        return st, out_system
    if kind == "wiggle":
        feats = [
            _feature_from_doc(f, f"{path}.features[{i}]")
            for i, f in enumerate(_req(doc, "features", path))
        ]
        coeffs = _vec(_req(doc, "coeffs", path), f"{path}.coeffs")
        direction = doc.get("direction")
        decay = doc.get("decay")
        st = Wiggle(
            coeffs,
            feats,
            direction=None if direction is None else _vec(direction, f"{path}.direction"),
            group_average=bool(doc.get("group_average", False)),
            decay=None if decay is None else (
                _rat(decay[0], f"{path}.decay[0]"),
                _rat(decay[1], f"{path}.decay[1]"),
            ),
        )
        return st, cur
    _fail(path, f"unknown stage kind {kind!r}")


def pipeline_to_doc(f: MapPipeline) -> dict:
    return {
        "kind": "pipeline",
        "format": FORMAT,
        "source": system_to_doc(f.source),
        "target": system_to_doc(f.target),
        "stages": [_stage_to_doc(st) for st in f.stages],
    }


def pipeline_from_doc(doc: dict, default_system: SubstitutionSystem | None = None,
                      path: str = "$") -> MapPipeline:
    """Rebuild a pipeline.  Hand-written map files may omit source and
    target; the source then comes from ``default_system`` (the CLI's
    --space) and the target is wherever the stages end up."""
    src_spec = doc.get("source", default_system)
    if src_spec is None:
        _fail(f"{path}.source", "no source system (give one inline or via --space)")
    source = resolve_system(src_spec, f"{path}.source")
    stages = []
    cur = source
    for i, sdoc in enumerate(_req(doc, "stages", path)):
        st, cur = _stage_from_doc(sdoc, cur, f"{path}.stages[{i}]")
        stages.append(st)
    target = (
        resolve_system(doc["target"], f"{path}.target") if "target" in doc else cur
    )
    return MapPipeline(source, target, stages)


# --- localized maps ----------------------------------------------------------------


def scheme_to_doc(scheme: MollifierScheme) -> dict:
    return {
        "nodes": [fmt_vec(y) for y in scheme.nodes],
        "weights": [fmt_rational(w) for w in scheme.weights],
    }


def scheme_from_doc(doc, path: str) -> MollifierScheme:
    nodes = tuple(
        _vec(y, f"{path}.nodes[{i}]") for i, y in enumerate(_req(doc, "nodes", path))
    )
    weights = tuple(
        _rat(w, f"{path}.weights[{i}]") for i, w in enumerate(_req(doc, "weights", path))
    )
    return MollifierScheme(nodes, weights)


def localized_to_doc(fe) -> dict:
    if isinstance(fe, EquivariantLocalizedMap):
        base = fe.base
        doc = {"equivariant": True}
    elif isinstance(fe, LocalizedMap):
        base = fe
        doc = {"equivariant": False}
    else:
        raise StructuralError(f"cannot serialize {type(fe).__name__}")
    p = base.params
    doc.update(
        {
            "kind": "localized_map",
            "format": FORMAT,
            "base_map": pipeline_to_doc(base.pipeline),
            "section_ref": None,
            "epsilon": fmt_rational(p.epsilon),
            "delta": fmt_rational(p.delta),
            "R": fmt_rational(p.radius),
            "scheme": scheme_to_doc(base.scheme),
        }
    )
    return doc


def localized_from_doc(doc: dict, default_system: SubstitutionSystem | None = None,
                       path: str = "$"):
    pipeline = pipeline_from_doc(
        _req(doc, "base_map", path), default_system, f"{path}.base_map"
    )
    epsilon = _rat(_req(doc, "epsilon", path), f"{path}.epsilon")
    delta = _rat(_req(doc, "delta", path), f"{path}.delta")
    scheme = scheme_from_doc(_req(doc, "scheme", path), f"{path}.scheme")
    section = None
    if doc.get("section_ref"):
        section = load_section(doc["section_ref"], system=pipeline.source)
    if doc.get("equivariant"):
        fe = EquivariantLocalizedMap(pipeline, epsilon, section=section, check_samples=0)
        rebuilt = fe.base
    else:
        fe = LocalizedMap(pipeline, epsilon, delta=delta, section=section, scheme=scheme)
        rebuilt = fe
    # stored parameters are redundant; a mismatch means the document was
    # edited out from under the map it claims to describe
    if rebuilt.params.delta != delta:
        _fail(f"{path}.delta", f"stored {delta}, rebuilt {rebuilt.params.delta}")
    if fmt_rational(rebuilt.params.radius) != doc.get("R", fmt_rational(rebuilt.params.radius)):
        _fail(f"{path}.R", f"stored {doc['R']}, rebuilt {rebuilt.params.radius}")
    if rebuilt.scheme.nodes != scheme.nodes or rebuilt.scheme.weights != scheme.weights:
        _fail(f"{path}.scheme", "stored scheme disagrees with the rebuilt map")
    return fe


# --- homotopy families ----------------------------------------------------------------


def family_to_doc(family: HomotopyFamily) -> dict:
    return {
        "kind": "family",
        "format": FORMAT,
        "breakpoints": [fmt_rational(b) for b in family.breakpoints],
        "pipelines": [pipeline_to_doc(p) for p in family.pipelines],
    }


def family_from_doc(doc: dict, default_system: SubstitutionSystem | None = None,
                    path: str = "$") -> HomotopyFamily:
    breaks = [
        _rat(b, f"{path}.breakpoints[{i}]")
        for i, b in enumerate(_req(doc, "breakpoints", path))
    ]
    pipes = [
        pipeline_from_doc(p, default_system, f"{path}.pipelines[{i}]")
        for i, p in enumerate(_req(doc, "pipelines", path))
    ]
    return HomotopyFamily(tuple(breaks), tuple(pipes))


def path_to_doc(path_obj: HomotopyPath) -> dict:
    doc = family_to_doc(path_obj.family)
    doc["kind"] = "homotopy_path"
    doc["epsilon"] = fmt_rational(path_obj.epsilon)
    return doc


def path_from_doc(doc: dict, default_system: SubstitutionSystem | None = None,
                  path: str = "$") -> HomotopyPath:
    family = family_from_doc(doc, default_system, path)
    epsilon = _rat(_req(doc, "epsilon", path), f"{path}.epsilon")
    return homotopy_localize(family, epsilon, check_samples=0)


# --- reports ----------------------------------------------------------------


def report_to_doc(rep: VerificationReport) -> dict:
    doc = rep.to_json_dict()
    doc["kind"] = "report"
    doc["format"] = FORMAT
    return doc


def report_from_doc(doc: dict, path: str = "$") -> VerificationReport:
    props = []
    for i, p in enumerate(_req(doc, "properties", path)):
        props.append(
            PropertyResult(
                name=str(_req(p, "name", f"{path}.properties[{i}]")),
                passed=bool(_req(p, "pass", f"{path}.properties[{i}]")),
                checked=int(p.get("checked", 0)),
                witnesses=list(p.get("witnesses", [])),
                observed=dict(p.get("observed", {})),
            )
        )
    return VerificationReport(
        suite=str(_req(doc, "suite", path)),
        params=dict(_req(doc, "params", path)),
        n=int(_req(doc, "n", path)),
        seed=int(_req(doc, "seed", path)),
        properties=props,
        wall_time_ms=int(doc.get("wall_time_ms", 0)),
    )


# --- files ----------------------------------------------------------------


def save_json(doc: dict, path) -> None:
    """Atomic write: the file either keeps its old content or holds the
    complete new document, never a prefix."""
    path = Path(path)
    fd, tmp = tempfile.mkstemp(dir=path.parent or Path("."), suffix=".tmp")
    try:
        with os.fdopen(fd, "w") as fh:
            json.dump(doc, fh, indent=2, sort_keys=True)
            fh.write("\n")
        os.replace(tmp, path)
    except BaseException:
        try:
            os.unlink(tmp)
        except FileNotFoundError:
            pass
        raise


def load_json(path) -> dict:
    path = Path(path)
    if not path.exists():
        raise StructuralError(f"no such file: {path}")
    with open(path) as fh:
        try:
            return json.load(fh)
        except json.JSONDecodeError as e:
            raise StructuralError(f"{path}: invalid JSON ({e})") from None


_SAVERS = {
    SubstitutionSystem: system_to_doc,
    Tiling: tiling_to_doc,
    SectionTable: section_to_doc,
    MapPipeline: pipeline_to_doc,
    HomotopyFamily: family_to_doc,
    HomotopyPath: path_to_doc,
    LocalizedMap: localized_to_doc,
    EquivariantLocalizedMap: localized_to_doc,
    VerificationReport: report_to_doc,
}


def save(obj, path) -> None:
    for klass, fn in _SAVERS.items():
        if isinstance(obj, klass):
            save_json(fn(obj), path)
            return
    raise StructuralError(f"cannot serialize {type(obj).__name__}")


def load(path, expect: str | None = None,
         default_system: SubstitutionSystem | None = None):
    """Load any serialized document by its "kind" tag."""
    doc = load_json(path)
    kind = doc.get("kind")
    if expect is not None and kind != expect:
        raise StructuralError(f"{path}: expected a {expect} document, found {kind!r}")
    if kind == "system":
        return system_from_doc(doc)
    if kind == "tiling":
        return tiling_from_doc(doc)
    if kind == "section":
        return section_from_doc(doc)
    if kind == "pipeline":
        return pipeline_from_doc(doc, default_system)
    if kind == "family":
        return family_from_doc(doc, default_system)
    if kind == "homotopy_path":
        return path_from_doc(doc, default_system)
    if kind == "localized_map":
        return localized_from_doc(doc, default_system)
    if kind == "report":
        return report_from_doc(doc)
    raise StructuralError(f"{path}: unknown document kind {kind!r}")


def load_section(path, system: SubstitutionSystem | None = None) -> SectionTable:
    return section_from_doc(load_json(path), system=system)
