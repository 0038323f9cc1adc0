"""Maps between hulls as pipelines of certified stages.

A map is a finite pipeline of stages, each of which does two things:
evaluate lazily on tilings, and contribute a closed-form term to a
uniform-continuity certificate.  The certificate has the exact-agreement
form: if two inputs agree exactly on the closed ball of radius 1/delta,
the outputs agree on the ball of radius 1/eps_ball after one common
translation of size at most eps_move.  Certificates compose by threading
the required output radius and the allowed motion backwards through the
stages.

Stage zoo:

  Translate(v)    every tile moved by -v; exactly translation-covariant.
  LocalTable      sliding-window recode: the output label at cell z is a
                  table lookup on the pattern class of the input window
                  of sup-radius w around z (anchored at the center cell).
  Substitute      forward inflation by the system's expansion.
  Wiggle          T -> T - s(T) where s reads the central radius-k ball
                  classes for k = 1..K; the stage is local with radius K
                  but serves as the stand-in for a genuinely non-local
                  map, since K can be made much larger than the radius
                  the localization construction achieves.
"""

from __future__ import annotations

import hashlib
import math
import random
from fractions import Fraction
from itertools import product

from .enumeration import classes_for_cells
from .errors import ParameterError, StructuralError, TableIncompleteError
from .qnum import (
    Vec,
    norm_le,
    norm_upper,
    vec_add,
    vec_neg,
    vec_floor,
    vec_frac,
    vec_scale,
    zero_vec,
)
from .sampling import agreeing_pairs, plant_tiles, shift_grid
from .systems import SubstitutionSystem
from .tilings import (
    Field,
    Patch,
    PatchClass,
    Tiling,
    ball_cells,
    central_patch,
    patches_equal,
    rotate_tiling,
    rotate_vector,
    translate_tiling,
)

HALF = Fraction(1, 2)


def _digest(parts) -> str:
    blob = repr(parts).encode()
    return hashlib.blake2b(blob, digest_size=8).hexdigest()


# === features for Wiggle ==============================================


class LabelAtFeature:
    """1 when the class carries the given label at the given offset
    (offsets count from the lexicographically least tile), else 0."""

    kind = "label_at"

    def __init__(self, offset, label: str):
        self.offset = tuple(int(c) for c in offset)
        self.label = str(label)

    def value(self, cls: PatchClass) -> Fraction:
        return Fraction(1 if (self.offset, self.label) in cls.tiles else 0)

    def key(self):
        return ("label_at", self.offset, self.label)

    def __eq__(self, other):
        return type(other) is type(self) and other.key() == self.key()

    def __hash__(self):
        return hash(self.key())


class HashFeature:
    """Deterministic pseudo-random feature: a 20-bit rational in [0,1)
    carved out of a salted hash of the class content."""

    kind = "hash"

    def __init__(self, salt: int = 0):
        self.salt = int(salt)

    def value(self, cls: PatchClass) -> Fraction:
        blob = f"{self.salt}|{cls.token()}".encode()
        h = hashlib.blake2b(blob, digest_size=8).digest()
        return Fraction(int.from_bytes(h, "big") % (1 << 20), 1 << 20)

    def key(self):
        return ("hash", self.salt)

    def __eq__(self, other):
        return type(other) is type(self) and other.key() == self.key()

    def __hash__(self):
        return hash(self.key())


class TableFeature:
    """Explicit class -> value table with a default; values in [0,1]."""

    kind = "table"

    def __init__(self, entries, default=Fraction(0)):
        self.entries = {cls: Fraction(v) for cls, v in dict(entries).items()}
        self.default = Fraction(default)
        for v in list(self.entries.values()) + [self.default]:
            if not 0 <= v <= 1:
                raise ParameterError(f"feature value {v} outside [0,1]")

    def value(self, cls: PatchClass) -> Fraction:
        return self.entries.get(cls, self.default)

    def key(self):
        return (
            "table",
            tuple(sorted((c.token(), v) for c, v in self.entries.items())),
            self.default,
        )

    def __eq__(self, other):
        return type(other) is type(self) and other.key() == self.key()

    def __hash__(self):
        return hash(self.key())


# === stages ===========================================================


class Translate:
    def __init__(self, vector):
        self.vector = tuple(Fraction(c) for c in vector)

    def key(self):
        return ("translate", self.vector)

    def apply(self, t: Tiling) -> Tiling:
        return translate_tiling(t, self.vector)


class LocalTable:
    """Sliding-window recode.  ``window`` is the sup-norm window radius;
    ``table`` maps every legal full-window pattern class (normalized so
    the window's corner cell is offset 0) to an output label.  The output
    tile is anchored at the window's center cell and the shift passes
    through unchanged, so the stage commutes with all translations."""

    def __init__(self, window: int, table, out_system: SubstitutionSystem):
        if not isinstance(window, int) or window < 0:
            raise ParameterError(
                f"window radius must be a nonnegative int, got {window}"
            )
        self.window = window
        self.table = dict(table)
        self.out_system = out_system
        bad = set(self.table.values()) - set(out_system.labels)
        if bad:
            raise StructuralError(
                f"table outputs not in the target alphabet: {sorted(bad)}"
            )

    def reach(self, dim: int) -> Fraction:
        # ambient radius of input data that can influence one output
        # tile: window cubes stay within (w+1)*sqrt(d) of any point of
        # the center cube; 3/2 over-approximates sqrt(2)
        return (self.window + 1) * (Fraction(1) if dim == 1 else Fraction(3, 2))

    def require_total(self, in_system: SubstitutionSystem) -> None:
        cells = tuple(
            product(range(-self.window, self.window + 1), repeat=in_system.dim)
        )
        legal = classes_for_cells(in_system, cells)
        missing = [c for c in legal if c not in self.table]
        if missing:
            raise TableIncompleteError(
                f"window table covers {len(legal) - len(missing)} of "
                f"{len(legal)} legal classes"
            )

    def key(self):
        rows = tuple(sorted((c.token(), lb) for c, lb in self.table.items()))
        return ("local_table", self.window, _digest(rows), self.out_system.digest())

    def apply(self, t: Tiling) -> Tiling:
        return Tiling(_RecodeField(t.field, self), t.shift)


class _RecodeField(Field):
    def __init__(self, base: Field, stage: LocalTable):
        self.base = base
        self.stage = stage
        self.system = stage.out_system
        self._cache: dict = {}

    def label(self, z):
        got = self._cache.get(z)
        if got is not None:
            return got
        w = self.stage.window
        dim = self.system.dim
        tiles = []
        for u in product(range(2 * w + 1), repeat=dim):
            cell = tuple(z[i] - w + u[i] for i in range(dim))
            tiles.append((u, self.base.label(cell)))
        cls = PatchClass(frozenset(tiles))
        try:
            lb = self.stage.table[cls]
        except KeyError:
            raise TableIncompleteError(
                f"window table misses class {cls.token()}"
            ) from None
        self._cache[z] = lb
        return lb

    def key(self):
        return ("recode", self.stage.key(), self.base.key())


class Substitute:
    """Forward inflation: each tile is replaced by its substitution
    block, ambient coordinates scaled by the expansion factor."""

    def key(self):
        return ("substitute",)

    def apply(self, t: Tiling) -> Tiling:
        n = t.system.expansion
        scaled = vec_scale(Fraction(n), t.shift)
        m = vec_floor(scaled)
        return Tiling(_InflateField(t.field, m, t.system), vec_frac(scaled))


class _InflateField(Field):
    """Label of the inflated tiling at cell w: the inflation of the tile
    at base cell (w - m) div n contributes its block entry (w - m) mod n,
    where n s = m + s' splits the scaled shift."""

    def __init__(self, base: Field, m: tuple[int, ...], system: SubstitutionSystem):
        self.base = base
        self.m = m
        self.system = system

    def label(self, w):
        n = self.system.expansion
        z = tuple((w[i] - self.m[i]) // n for i in range(len(w)))
        c = tuple((w[i] - self.m[i]) % n for i in range(len(w)))
        return self.system.child_label(self.base.label(z), c)

    def key(self):
        return ("inflate", self.m, self.base.key())


class Wiggle:
    """T -> T - s(T) with s(T) = sum_k c_k psi_k(radius-k class) u.

    psi_k reads only the central radius-k ball of T, so the whole stage
    is determined by the radius-K ball plus the tiles being moved.  With
    ``group_average`` set (d=2, quarter-turn action required) each term
    is averaged over the group, s(T) = sum_k (c_k/4) sum_g g^{-1}(u)
    psi_k(class of g T), which makes the stage intertwine the action
    exactly.
    """

    def __init__(
        self,
        coeffs,
        features,
        direction=None,
        group_average: bool = False,
        decay: tuple | None = None,
    ):
        self.coeffs = tuple(Fraction(c) for c in coeffs)
        self.depth = len(self.coeffs)
        self.features = tuple(features)
        if self.depth == 0:
            raise ParameterError("wiggle needs at least one level")
        if len(self.features) != self.depth:
            raise ParameterError(
                f"{self.depth} coefficients but {len(self.features)} features"
            )
        self.direction = (
            None if direction is None else tuple(Fraction(c) for c in direction)
        )
        self.group_average = bool(group_average)
        if decay is None:
            # tightest bound of the declared shape |c_k| <= C lam^k at lam = 1/2
            lam = HALF
            c_bound = max(
                (abs(c) / lam**k for k, c in enumerate(self.coeffs, start=1)),
                default=Fraction(0),
            )
            decay = (c_bound, lam)
        self.decay = (Fraction(decay[0]), Fraction(decay[1]))
        c_bound, lam = self.decay
        if not 0 < lam < 1:
            raise ParameterError(f"decay ratio must be in (0,1), got {lam}")
        if c_bound < 0:
            raise ParameterError("negative decay constant")
        for k, c in enumerate(self.coeffs, start=1):
            if abs(c) > c_bound * lam**k:
                raise ParameterError(
                    f"|c_{k}| = {abs(c)} exceeds the decay bound {c_bound * lam ** k}"
                )
        # the certificate's +K slack absorbs the output translation
        if sum(abs(c) for c in self.coeffs) > self.depth:
            raise ParameterError("sum |c_k| must not exceed the depth")

    def resolved_direction(self, dim: int) -> Vec:
        u = self.direction
        if u is None:
            u = (Fraction(1),) + (Fraction(0),) * (dim - 1)
        if len(u) != dim:
            raise StructuralError(f"direction {u} has wrong dimension")
        if all(c == 0 for c in u):
            raise ParameterError("zero wiggle direction")
        if not norm_le(u, Fraction(1)):
            raise ParameterError("wiggle direction longer than 1")
        return u

    def tail(self, m: int) -> Fraction:
        """sum_{k>m} 2 |c_k|: how far the offsets of two tilings with
        identical radius-m balls can drift apart."""
        return sum(
            (2 * abs(c) for k, c in enumerate(self.coeffs, start=1) if k > m),
            Fraction(0),
        )

    def stable_depth(self, motion: Fraction) -> int:
        """Least m with tail(m) <= motion."""
        for m in range(self.depth + 1):
            if self.tail(m) <= motion:
                return m
        return self.depth

    def offset(self, t: Tiling) -> Vec:
        """s(T), an exact rational vector."""
        dim = t.system.dim
        u = self.resolved_direction(dim)
        total = zero_vec(dim)
        if self.group_average:
            rot = t.system.rotation
            if rot is None or rot.order != 4 or dim != 2:
                raise StructuralError(
                    "group averaging needs a d=2 quarter-turn action"
                )
            for k, (c, psi) in enumerate(zip(self.coeffs, self.features), start=1):
                if c == 0:
                    continue
                acc = zero_vec(dim)
                for g in range(4):
                    cls = central_patch(rotate_tiling(t, g), Fraction(k)).pattern_class()
                    acc = vec_add(acc, vec_scale(psi.value(cls), rotate_vector(u, -g)))
                total = vec_add(total, vec_scale(c / 4, acc))
        else:
            for k, (c, psi) in enumerate(zip(self.coeffs, self.features), start=1):
                if c == 0:
                    continue
                cls = central_patch(t, Fraction(k)).pattern_class()
                total = vec_add(total, vec_scale(c * psi.value(cls), u))
        return total

    def key(self):
        return (
            "wiggle",
            self.coeffs,
            tuple(f.key() for f in self.features),
            self.direction,
            self.group_average,
        )

    def apply(self, t: Tiling) -> Tiling:
        return translate_tiling(t, self.offset(t))


# === pipelines ========================================================


class MapPipeline:
    """A composable map between hulls: source system, target system, and
    a stage list that type-checks end to end."""

    def __init__(self, source: SubstitutionSystem, target: SubstitutionSystem, stages):
        self.source = source
        self.target = target
        self.stages = tuple(stages)
        cur = source
        self.stage_systems = []  # input system of each stage
        for st in self.stages:
            self.stage_systems.append(cur)
            cur = self._check_stage(st, cur)
        if cur is not target:
            raise StructuralError(
                f"pipeline ends at {cur.name!r}, declared target {target.name!r}"
            )

    @staticmethod
    def _check_stage(st, cur: SubstitutionSystem) -> SubstitutionSystem:
        if isinstance(st, Translate):
            if len(st.vector) != cur.dim:
                raise StructuralError("translation vector has wrong dimension")
            return cur
        if isinstance(st, LocalTable):
            if st.out_system.dim != cur.dim:
                raise StructuralError("window recode must preserve the dimension")
            st.require_total(cur)
            return st.out_system
        if isinstance(st, Substitute):
            return cur
        if isinstance(st, Wiggle):
            st.resolved_direction(cur.dim)
            if st.group_average and (
                cur.dim != 2 or cur.rotation is None or cur.rotation.order != 4
            ):
                raise StructuralError(
                    "group averaging needs a d=2 quarter-turn action"
                )
            for f in st.features:
                if isinstance(f, LabelAtFeature) and len(f.offset) != cur.dim:
                    raise StructuralError("feature offset has wrong dimension")
            return cur
        raise StructuralError(f"unknown stage {st!r}")

    def key(self):
        return (
            "pipeline",
            self.source.digest(),
            self.target.digest(),
            tuple(st.key() for st in self.stages),
        )

    def digest(self) -> str:
        return _digest(self.key())

    def __repr__(self):
        kinds = [type(st).__name__ for st in self.stages]
        return f"MapPipeline({self.source.name} -> {self.target.name}: {kinds})"


def identity_pipeline(system: SubstitutionSystem) -> MapPipeline:
    return MapPipeline(system, system, ())


def apply_pipeline(f: MapPipeline, t: Tiling) -> Tiling:
    """The image tiling, evaluated lazily."""
    if t.system is not f.source:
        raise StructuralError("tiling is not in the pipeline's source hull")
    for st in f.stages:
        t = st.apply(t)
    return t


def apply_map(f: MapPipeline, t: Tiling, out_radius) -> Patch:
    """central_patch(f(T), out_radius), computed exactly."""
    return central_patch(apply_pipeline(f, t), Fraction(out_radius))


def translation_response(f: MapPipeline) -> Fraction:
    """How much an exact input translation is amplified on the way
    through: the product of the expansion factors of the Substitute
    stages (every other stage passes translations through unchanged)."""
    kappa = Fraction(1)
    for st, sys in zip(f.stages, f.stage_systems):
        if isinstance(st, Substitute):
            kappa *= sys.expansion
    return kappa


def pipeline_reach(f: MapPipeline, out_radius=Fraction(1)) -> Fraction:
    """Radius of the input ball that determines the central output patch
    of radius ``out_radius``, walking the stages backward.  Each step is
    an over-approximation, so the bound is safe but not tight."""
    q = Fraction(out_radius)
    for st, sys in zip(reversed(f.stages), reversed(f.stage_systems)):
        if isinstance(st, Translate):
            q += norm_upper(st.vector)
        elif isinstance(st, Wiggle):
            # the offset needs the radius-depth ball; the moved content
            # needs the ball grown by the largest possible offset
            drift = sum((abs(c) for c in st.coeffs), Fraction(0))
            q = max(Fraction(st.depth), q + drift)
        elif isinstance(st, LocalTable):
            q += (st.window + 1) * (Fraction(3, 2) if sys.dim == 2 else Fraction(1)) + 1
        elif isinstance(st, Substitute):
            q += 2  # inflation shrinks distances; unchanged-plus-slack is safe
        else:
            raise StructuralError(f"unknown stage {st!r}")
    return q


def modulus(f: MapPipeline, eps_ball, eps_move) -> Fraction:
    """Certified agreement radius: inputs agreeing exactly on the closed
    ball of radius 1/delta have images agreeing on the ball of radius
    1/eps_ball after one translation of size at most eps_move.  Composed
    backwards, stage by stage:

      Translate(v)   needs radius rho + |v|, motion unchanged
      LocalTable     needs radius rho + reach, motion unchanged
      Substitute     needs radius rho/n + 1, motion shrunk by n
      Wiggle         needs exact agreement out to max(m*, rho + K) where
                     m* is the least depth whose coefficient tail fits
                     in the allowed motion
    """
    eps_ball = Fraction(eps_ball)
    eps_move = Fraction(eps_move)
    if eps_ball <= 0 or eps_move <= 0:
        raise ParameterError("modulus arguments must be positive")
    if eps_move >= HALF:
        raise ParameterError(
            f"eps_move = {eps_move} >= 1/2 breaks alignment uniqueness"
        )
    rho = 1 / eps_ball
    mu = eps_move
    for st, sys in zip(reversed(f.stages), reversed(f.stage_systems)):
        if isinstance(st, Translate):
            rho = rho + norm_upper(st.vector)
        elif isinstance(st, LocalTable):
            rho = rho + st.reach(sys.dim)
        elif isinstance(st, Substitute):
            n = sys.expansion
            rho = rho / n + 1
            mu = mu / n
        elif isinstance(st, Wiggle):
            rho = max(Fraction(st.stable_depth(mu)), rho + st.depth)
            mu = Fraction(0)
        else:  # pragma: no cover - constructor rejects unknown stages
            raise StructuralError(f"unknown stage {st!r}")
    return 1 / rho


# === alignment ========================================================


def _centered_congruent(s1: Vec, s2: Vec) -> Vec | None:
    """The representative of s1 - s2 mod Z^d with coordinates in
    (-1/2, 1/2), or None when a coordinate falls exactly on 1/2."""
    out = []
    for a, b in zip(s1, s2):
        c = a - b
        c -= math.floor(c)
        if c == HALF:
            return None
        if c > HALF:
            c -= 1
        out.append(c)
    return tuple(out)


def align_tilings(t1: Tiling, t2: Tiling, bound, radius) -> Vec | None:
    """The unique v with |v| <= bound < 1/2 such that moving every tile
    of t2 by +v reproduces t1's central patch of the given radius
    exactly; None when no such v exists.

    Any tile-matching translation is congruent to s1 - s2 mod Z^d, and
    the bound pins each coordinate to its centered representative, so
    there is exactly one candidate to verify.
    """
    bound = Fraction(bound)
    if bound >= HALF:
        raise ParameterError(f"alignment bound {bound} must be < 1/2")
    v = _centered_congruent(t1.shift, t2.shift)
    if v is None or not norm_le(v, bound):
        return None
    moved = translate_tiling(t2, vec_neg(v))
    if patches_equal(central_patch(t1, Fraction(radius)), central_patch(moved, Fraction(radius))):
        return v
    return None


def align_patches(p1: Patch, p2: Patch, bound) -> Vec | None:
    """Patch-level alignment: the unique v with |v| <= bound < 1/2 such
    that p2's tiles moved by +v equal p1's tiles as ambient sets."""
    bound = Fraction(bound)
    if bound >= HALF:
        raise ParameterError(f"alignment bound {bound} must be < 1/2")
    v = _centered_congruent(p1.shift, p2.shift)
    if v is None or not norm_le(v, bound):
        return None
    if patches_equal(p1, p2.translated(vec_neg(v))):
        return v
    return None


# === locality checking ================================================


def frontier_pairs(
    system: SubstitutionSystem,
    radius: Fraction,
    count: int,
    rng: random.Random,
    depth: int = 4,
) -> list[tuple[Tiling, Tiling, int]]:
    """Pairs agreeing exactly on the closed radius ball and differing as
    close beyond it as the language allows: for probe radii radius+1 ..
    radius+depth at rng-drawn grid shifts, the legal probe-ball classes
    are grouped by their restriction to the radius ball and groupmates
    planted pairwise.  These catch maps that read just past the ball far
    more reliably than randomly branched pairs, whose nearest difference
    is usually several supertile levels out.  d=1 only: the window
    enumeration grows too fast with the probe area in d=2."""
    if system.dim != 1 or count <= 0:
        return []
    streams = []
    m0 = math.ceil(radius)
    grid = shift_grid()
    for m in range(m0 + 1, m0 + depth + 1):
        # the grid extremes sit next to the cell-crossing thresholds of
        # translated output windows, where violations hide from interior
        # shifts; always probe them
        probe_shifts = {grid[0], grid[len(grid) // 2], grid[-1]}
        probe_shifts.update(rng.choice(grid) for _ in range(2))
        for s in sorted(probe_shifts):
            inner = set(ball_cells((s,), Fraction(radius), 1))
            big = tuple(ball_cells((s,), Fraction(m), 1))
            lex = min(big)
            groups: dict = {}
            for cls in sorted(classes_for_cells(system, big), key=lambda c: c.token()):
                tiles = [
                    ((lex[0] + off[0],), lb) for off, lb in sorted(cls.tiles)
                ]
                key = tuple(sorted(t for t in tiles if t[0] in inner))
                groups.setdefault(key, []).append(tiles)
            stream = []
            for mates in groups.values():
                head = mates[0]
                for other in mates[1:]:
                    stream.append((head, other, (s,)))
            streams.append(stream)
    out = []
    for rank in range(max((len(st) for st in streams), default=0)):
        for st in streams:  # round-robin so every probe radius gets a turn
            if rank < len(st) and len(out) < count:
                head, other, shift = st[rank]
                out.append(
                    (plant_tiles(system, head, shift),
                     plant_tiles(system, other, shift),
                     math.floor(radius))
                )
        if len(out) >= count:
            break
    return out


def check_local(
    eval_fn,
    system: SubstitutionSystem,
    radius,
    count: int,
    seed: int,
    out_radius=Fraction(1),
) -> tuple[bool, dict | None]:
    """Test ``count`` pairs of tilings agreeing on the closed ball of
    the given radius for identical image central patches of radius
    ``out_radius`` (exact ambient comparison).  Up to half the pairs are
    deterministic frontier pairs differing as close beyond the ball as
    the language allows; the rest are randomly branched hull pairs.
    Returns (True, None) or (False, witness)."""
    rng = random.Random(seed)
    pairs = frontier_pairs(system, Fraction(radius), count // 2, rng)
    pairs += agreeing_pairs(system, count - len(pairs), rng, Fraction(radius))
    for i, (t1, t2, guaranteed) in enumerate(pairs):
        q1 = central_patch(eval_fn(t1), Fraction(out_radius))
        q2 = central_patch(eval_fn(t2), Fraction(out_radius))
        if not patches_equal(q1, q2):
            return False, {
                "index": i,
                "radius": Fraction(radius),
                "out_radius": Fraction(out_radius),
                "guaranteed": guaranteed,
                "pair": (t1, t2),
            }
    return True, None


DEFAULT_GRADE_GRID = (Fraction(0), HALF, Fraction(1), Fraction(2))


def check_uniformly_local(
    eval_fn,
    system: SubstitutionSystem,
    radius,
    count: int,
    seed: int,
    grid=DEFAULT_GRADE_GRID,
) -> tuple[bool, dict | None]:
    """Graded locality: pairs agreeing on B_{radius + extra} must have
    images agreeing on B_{1 + extra}, for each extra in the grid."""
    for j, extra in enumerate(grid):
        ok, witness = check_local(
            eval_fn,
            system,
            Fraction(radius) + Fraction(extra),
            count,
            seed + 7919 * j,
            out_radius=1 + Fraction(extra),
        )
        if not ok:
            witness["extra"] = Fraction(extra)
            return False, witness
    return True, None


# === metric brackets ==================================================


def tiling_metric_bounds(t1: Tiling, t2: Tiling, depth: int = 8) -> tuple[Fraction, Fraction]:
    """Bracket the (truncated) hull distance.  On the grid eps = 1/m,
    m = 1..depth, the tilings are eps-close iff their central radius-m
    patches match after one translation of size <= eps.  Success at m is
    monotone in m, so the bracket is (1/(m_max+1), 1/m_max) around the
    largest succeeding m; distances >= 1 are reported as 1.
    """
    if depth < 1:
        raise ParameterError("depth must be >= 1")
    if t1.key() == t2.key():
        return Fraction(0), Fraction(0)

    def close_at(m: int) -> bool:
        cands = []
        if m == 1:
            # motion up to 1 admits several integer representatives per axis
            frac = vec_frac(tuple(a - b for a, b in zip(t1.shift, t2.shift)))
            for z in product((-1, 0, 1), repeat=len(frac)):
                cands.append(tuple(c + zi for c, zi in zip(frac, z)))
        else:
            base = _centered_congruent(t1.shift, t2.shift)
            if base is not None:
                cands.append(base)
        bound = Fraction(1, m)
        for v in cands:
            if not norm_le(v, bound):
                continue
            moved = translate_tiling(t2, vec_neg(v))
            if patches_equal(central_patch(t1, Fraction(m)), central_patch(moved, Fraction(m))):
                return True
        return False

    best = None
    for m in range(1, depth + 1):
        if close_at(m):
            best = m
        else:
            break
    if best is None:
        return Fraction(1), Fraction(1)
    upper = Fraction(1, best)
    lower = Fraction(0) if best == depth else Fraction(1, best + 1)
    return lower, upper
