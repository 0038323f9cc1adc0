"""Turning approximately local maps into genuinely local ones.

A pipeline map f comes with a certified agreement modulus: inputs that
agree exactly on a large ball have images that agree, after one small
translation, on a fixed ball.  That is weaker than locality, since the
small translation may depend on everything the input does far away.
The construction here removes that defect.  It measures, for each input
T, how the image f(T) sits relative to the image of a canonical
recentering of T (a translate of the reference tiling showing the same
large central patch), and averages the measured discrepancy over a
small cloud of probe translations.  Subtracting the averaged
discrepancy from f(T) yields a map f_eps that

  * depends only on the radius R + delta central patch of its input
    (pairs agreeing there have exactly equal images near the origin),
  * moves every image by less than eps, so sup-distance(f, f_eps) < eps.

The probe cloud is the mollifier scheme below; averaging with exact
rational weights is what makes discrepancies cancel exactly for pairs
of inputs agreeing on the large ball.

Scaling the cloud by u in [0, 1] interpolates: u = 1 gives the local
map, u = 0 gives back f itself whenever f was already uniformly local.
That connector, applied at both ends of a piecewise linear family of
pipelines, extends the construction to homotopies.  Averaging the
discrepancy over a quarter-turn action instead yields the equivariant
variant.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from fractions import Fraction

from .errors import ModulusViolationError, ParameterError, PreconditionError
from .maps import (
    LocalTable,
    MapPipeline,
    Substitute,
    Translate,
    Wiggle,
    align_tilings,
    apply_pipeline,
    check_uniformly_local,
    modulus,
    translation_response,
)
from .qnum import Vec, norm_le, norm_upper, vec_neg, vec_scale, zero_vec
from .section import SectionTable, recenter_offset
from .tilings import (
    Tiling,
    reference_tiling,
    rotate_tiling,
    rotate_vector,
    translate_tiling,
)

# weights are quantized to this grain before normalization, so that
# schemes are exact rationals and identical across platforms
WEIGHT_GRAIN = 1 << 20


def _bump_weight(dist2: Fraction) -> Fraction:
    """Quantized mollifier profile exp(-1/(1 - r^2)) at squared radius
    dist2 < 1."""
    if dist2 >= 1:
        raise ParameterError("mollifier node outside the unit cloud")
    raw = math.exp(-1.0 / (1.0 - float(dist2)))
    q = Fraction(round(raw * WEIGHT_GRAIN), WEIGHT_GRAIN)
    if q <= 0:
        raise ParameterError("mollifier weight underflowed the grain")
    return q


@dataclass(frozen=True)
class MollifierScheme:
    """Finite averaging cloud: probe translations with positive rational
    weights summing to exactly one.

    Symmetry under negation makes the average of the probes themselves
    vanish, which is what gives exact reproduction of maps that commute
    with translations.  For d = 2 the cloud is also quarter-turn
    invariant, so the equivariant construction can reuse it.
    """

    nodes: tuple
    weights: tuple

    def __post_init__(self):
        if len(self.nodes) != len(self.weights) or not self.nodes:
            raise ParameterError("scheme needs matching nonempty nodes/weights")
        if sum(self.weights, Fraction(0)) != 1:
            raise ParameterError("mollifier weights must sum to exactly one")
        if any(w <= 0 for w in self.weights):
            raise ParameterError("mollifier weights must be positive")
        # negation symmetry, with equal weight on mirrored nodes
        acc: dict = {}
        for y, w in zip(self.nodes, self.weights):
            acc[y] = acc.get(y, Fraction(0)) + w
        for y, w in acc.items():
            if acc.get(vec_neg(y)) != w:
                raise ParameterError(f"cloud is not symmetric at node {y}")

    @property
    def dim(self) -> int:
        return len(self.nodes[0])

    def max_norm(self) -> Fraction:
        return max(norm_upper(y) for y in self.nodes)

    def scaled(self, u) -> "MollifierScheme":
        u = Fraction(u)
        if not 0 <= u <= 1:
            raise ParameterError(f"node scale {u} outside [0, 1]")
        if u == 1:
            return self
        return MollifierScheme(
            tuple(vec_scale(u, y) for y in self.nodes), self.weights
        )


def mollifier_scheme(dim: int, delta: Fraction) -> MollifierScheme:
    """Default cloud for the given wiggle budget.

    d = 1: seven nodes j delta/4, |j| <= 3.
    d = 2: the nine-point grid (j1, j2) delta/2, quarter-turn invariant
    because the profile only sees the radius.
    """
    delta = Fraction(delta)
    if delta <= 0:
        raise ParameterError("mollifier needs a positive budget")
    if dim == 1:
        raw = [((Fraction(j) * delta / 4,), _bump_weight(Fraction(j * j, 16)))
               for j in range(-3, 4)]
    elif dim == 2:
        raw = [
            (
                (Fraction(j1) * delta / 2, Fraction(j2) * delta / 2),
                _bump_weight(Fraction(j1 * j1 + j2 * j2, 4)),
            )
            for j1 in (-1, 0, 1)
            for j2 in (-1, 0, 1)
        ]
    else:
        raise ParameterError(f"no mollifier scheme for dimension {dim}")
    total = sum((w for _, w in raw), Fraction(0))
    return MollifierScheme(
        tuple(y for y, _ in raw), tuple(w / total for _, w in raw)
    )


@dataclass(frozen=True)
class Params:
    """Resolved localization parameters.

    eps_move bounds every alignment translation; delta is the wiggle
    budget (cloud diameter and recentering radius reciprocal); radius is
    the recentering radius R = 2/delta, so the localized map is local at
    R + delta.  kappa is the pipeline's translation response.
    """

    epsilon: Fraction
    eps_move: Fraction
    delta: Fraction
    radius: Fraction
    kappa: int

    @property
    def rho_bound(self) -> Fraction:
        # every discrepancy measurement must fit this; it stays < 1/2
        # automatically because delta <= 3 eps/8 and eps < 1/2
        return self.delta + 2 * self.eps_move

    @property
    def locality_radius(self) -> Fraction:
        return self.radius + self.delta


def choose_parameters(f: MapPipeline, epsilon) -> Params:
    """Wiggle budget and recentering radius for localizing f at eps.

    delta is the certified modulus of f at target ball 2/eps and motion
    eps/4, capped at 3 eps/8 (so the final motion bound is strictly
    below eps) and, when the pipeline inflates translations by kappa,
    at eps_move/(kappa - 1) (so amplified probe translations still fit
    the discrepancy budget).
    """
    epsilon = Fraction(epsilon)
    if not 0 < epsilon < Fraction(1, 2):
        raise ParameterError(f"epsilon must lie in (0, 1/2), got {epsilon}")
    eps_move = epsilon / 4
    delta = min(modulus(f, epsilon / 2, eps_move), 3 * epsilon / 8)
    kappa = translation_response(f)
    if kappa > 1:
        delta = min(delta, Fraction(eps_move, kappa - 1))
    return Params(
        epsilon=epsilon,
        eps_move=eps_move,
        delta=delta,
        radius=Fraction(2, 1) / delta,
        kappa=kappa,
    )


class LocalizedMap:
    """The local map f_eps built from a pipeline f and a tolerance.

    Evaluation is exact rational arithmetic end to end.  All alignments
    are verified on concrete patches; a failed alignment means the
    certified modulus was violated on real data and raises loudly.

    ``node_scale`` shrinks the probe cloud; 1 is the genuine localized
    map, 0 reproduces f exactly when f is uniformly local.  ``delta``
    and ``section`` may be supplied to share parameters across a family
    (the supplied delta must be at least as strict as the map's own).
    """

    def __init__(
        self,
        pipeline: MapPipeline,
        epsilon,
        *,
        delta=None,
        section: SectionTable | None = None,
        scheme: MollifierScheme | None = None,
        node_scale=Fraction(1),
    ):
        self.pipeline = pipeline
        params = choose_parameters(pipeline, epsilon)
        if delta is not None:
            delta = Fraction(delta)
            if delta > params.delta:
                raise ParameterError(
                    f"shared delta {delta} looser than the map's own {params.delta}"
                )
            params = Params(
                epsilon=params.epsilon,
                eps_move=params.eps_move,
                delta=delta,
                radius=Fraction(2, 1) / delta,
                kappa=params.kappa,
            )
        self.params = params
        dim = pipeline.source.dim
        base_scheme = scheme or mollifier_scheme(dim, params.delta)
        if base_scheme.max_norm() > params.delta:
            raise ParameterError("mollifier cloud exceeds the wiggle budget")
        self.scheme = base_scheme.scaled(node_scale)
        self.node_scale = Fraction(node_scale)
        if section is not None and section.system is not pipeline.source:
            raise ParameterError("section table built for a different system")
        self.section = section or SectionTable(pipeline.source)
        self.reference = reference_tiling(pipeline.source)
        self._images: dict = {}
        self._stilde: dict = {}
        self._offsets: dict = {}

    # -- pieces of the construction, exposed for inspection -----------

    def image(self, t: Tiling) -> Tiling:
        """f(T), cached."""
        k = t.key()
        out = self._images.get(k)
        if out is None:
            out = apply_pipeline(self.pipeline, t)
            self._images[k] = out
        return out

    def recenter(self, t: Tiling) -> Vec:
        """g(T): the reference tiling minus g(T) shows T's R-patch."""
        return recenter_offset(self.section, t, self.params.radius)

    def base_discrepancy(self, t: Tiling) -> Vec:
        """Translation aligning the image of T's recentering with f(T)
        on the ball of radius 2/eps."""
        k = t.key()
        out = self._stilde.get(k)
        if out is not None:
            return out
        p = self.params
        centered = translate_tiling(self.reference, self.recenter(t))
        v = align_tilings(
            self.image(t),
            self.image(centered),
            p.eps_move,
            Fraction(2, 1) / p.epsilon,
        )
        if v is None:
            raise ModulusViolationError(
                "recentered image failed to align within "
                f"{p.eps_move} on the ball of radius {2 / p.epsilon}"
            )
        self._stilde[k] = v
        return v

    def probe_discrepancy(self, t: Tiling, y: Vec) -> Vec:
        """rho(T, y): where f(T - y), corrected by its own recentering
        discrepancy, sits relative to f(T)."""
        p = self.params
        a = translate_tiling(t, y)
        corrected = translate_tiling(self.image(a), self.base_discrepancy(a))
        v = align_tilings(
            corrected, self.image(t), p.rho_bound, Fraction(1, 1) / p.epsilon
        )
        if v is None:
            raise ModulusViolationError(
                f"probe at {y} failed to align within {p.rho_bound} "
                f"on the ball of radius {1 / p.epsilon}"
            )
        return v

    def offset(self, t: Tiling) -> Vec:
        """s_eps(T): the mollified discrepancy subtracted from f(T)."""
        k = t.key()
        out = self._offsets.get(k)
        if out is not None:
            return out
        dim = self.pipeline.source.dim
        # coincident nodes (scaled clouds) share one evaluation
        cloud: dict = {}
        for y, w in zip(self.scheme.nodes, self.scheme.weights):
            cloud[y] = cloud.get(y, Fraction(0)) + w
        total = zero_vec(dim)
        for y, w in cloud.items():
            r = self.probe_discrepancy(t, y)
            total = tuple(a + w * b for a, b in zip(total, r))
        if not norm_le(total, self.params.rho_bound):
            # unreachable: a convex combination of vectors inside the
            # budget stays inside it
            raise ModulusViolationError("averaged discrepancy left its budget")
        self._offsets[k] = total
        return total

    def __call__(self, t: Tiling) -> Tiling:
        return translate_tiling(self.image(t), self.offset(t))

    def __repr__(self):
        p = self.params
        return (
            f"LocalizedMap(eps={p.epsilon}, delta={p.delta}, R={p.radius}, "
            f"scale={self.node_scale}, {self.pipeline!r})"
        )


def _uniform_locality_gate(
    pipeline: MapPipeline, count: int, seed: int, radius=None
) -> None:
    """Connector endpoints reproduce f exactly only when f is uniformly
    local; spot-check that before building one."""
    fn = lambda t: apply_pipeline(pipeline, t)
    radius = Fraction(radius) if radius is not None else _uniform_radius_guess(pipeline)
    ok, witness = check_uniformly_local(
        fn, pipeline.source, radius, count, seed=seed
    )
    if not ok:
        raise PreconditionError(
            "connector endpoint needs a uniformly local map; agreement "
            f"failed at input radius {radius} + {witness['extra']} "
            f"(sample {witness['index']})"
        )


def _uniform_radius_guess(pipeline: MapPipeline) -> Fraction:
    """Input agreement radius at which a uniformly local pipeline should
    determine its output near the origin: stage reaches plus wiggle
    depths plus motion slack, composed back to front."""
    r = Fraction(1)
    for st in reversed(pipeline.stages):
        if isinstance(st, LocalTable):
            r += st.reach(pipeline.source.dim)
        elif isinstance(st, Wiggle):
            r += st.depth + sum(abs(c) for c in st.coeffs)
        elif isinstance(st, Translate):
            r += norm_upper(st.vector)
        elif isinstance(st, Substitute):
            r = r / pipeline.source.expansion + 1
    return r


def connect_endpoint(
    pipeline: MapPipeline,
    epsilon,
    u,
    *,
    delta=None,
    section: SectionTable | None = None,
    check_samples: int = 12,
    check_radius=None,
    seed: int = 0,
) -> LocalizedMap:
    """The straight-line connector between f (u = 0) and its localized
    replacement (u = 1): the probe cloud shrunk by u.

    Every value of u yields a map local at R + delta; u = 0 evaluates
    to f itself provided f was uniformly local, which is spot-checked
    (at a stage-derived input radius unless ``check_radius`` says
    otherwise).
    """
    if check_samples > 0:
        _uniform_locality_gate(pipeline, check_samples, seed, radius=check_radius)
    return LocalizedMap(
        pipeline, epsilon, delta=delta, section=section, node_scale=u
    )


# -- piecewise linear families -----------------------------------------


class HomotopyFamily:
    """A path of pipelines, linear in translation vectors and wiggle
    coefficients between breakpoints.

    All breakpoint pipelines must share the same stage shapes: window
    tables and inflations are constant along the path, features and
    directions of wiggles likewise; only Translate vectors and Wiggle
    coefficients vary.
    """

    def __init__(self, breakpoints, pipelines):
        self.breakpoints = tuple(Fraction(t) for t in breakpoints)
        self.pipelines = tuple(pipelines)
        if len(self.breakpoints) != len(self.pipelines):
            raise ParameterError("one pipeline per breakpoint")
        if len(self.breakpoints) < 2:
            raise ParameterError("a family needs at least two breakpoints")
        if self.breakpoints[0] != 0 or self.breakpoints[-1] != 1:
            raise ParameterError("breakpoints must start at 0 and end at 1")
        if any(a >= b for a, b in zip(self.breakpoints, self.breakpoints[1:])):
            raise ParameterError("breakpoints must be strictly increasing")
        first = self.pipelines[0]
        self.source, self.target = first.source, first.target
        for p in self.pipelines[1:]:
            if p.source is not first.source or p.target is not first.target:
                raise ParameterError("family endpoints on different spaces")
            if len(p.stages) != len(first.stages):
                raise ParameterError("family pipelines differ in stage count")
            for a, b in zip(first.stages, p.stages):
                _check_stage_match(a, b)

    def at(self, t) -> MapPipeline:
        t = Fraction(t)
        if not 0 <= t <= 1:
            raise ParameterError(f"family parameter {t} outside [0, 1]")
        idx = 0
        while self.breakpoints[idx + 1] < t:
            idx += 1
        t0, t1 = self.breakpoints[idx], self.breakpoints[idx + 1]
        lam = (t - t0) / (t1 - t0)
        a, b = self.pipelines[idx], self.pipelines[idx + 1]
        if lam == 0:
            return a
        if lam == 1:
            return b
        stages = [
            _interpolate_stage(sa, sb, lam)
            for sa, sb in zip(a.stages, b.stages)
        ]
        return MapPipeline(self.source, self.target, stages)

    def envelope_pipeline(self) -> MapPipeline:
        """A pipeline whose modulus bounds every member's: translation
        norms and absolute wiggle coefficients maximized over the
        breakpoints (linear interpolation cannot exceed them)."""
        stages = []
        for i, st in enumerate(self.pipelines[0].stages):
            peers = [p.stages[i] for p in self.pipelines]
            if isinstance(st, Translate):
                worst = max(peers, key=lambda s: norm_upper(s.vector))
                stages.append(Translate(worst.vector))
            elif isinstance(st, Wiggle):
                coeffs = [
                    max(abs(p.coeffs[k]) for p in peers)
                    for k in range(st.depth)
                ]
                stages.append(
                    Wiggle(
                        coeffs,
                        st.features,
                        direction=st.direction,
                        group_average=st.group_average,
                    )
                )
            else:
                stages.append(st)
        return MapPipeline(self.source, self.target, stages)

    def uniform_parameters(self, epsilon) -> Params:
        return choose_parameters(self.envelope_pipeline(), epsilon)


def _check_stage_match(a, b) -> None:
    if type(a) is not type(b):
        raise ParameterError(
            f"family stages disagree in kind: {type(a).__name__} vs "
            f"{type(b).__name__}"
        )
    if isinstance(a, LocalTable):
        if a.key() != b.key():
            raise ParameterError("window tables must be constant along a family")
    elif isinstance(a, Wiggle):
        if a.depth != b.depth:
            raise ParameterError("wiggle depths must match along a family")
        if a.features != b.features or a.direction != b.direction:
            raise ParameterError(
                "wiggle features and direction must be constant along a family"
            )
        if a.group_average != b.group_average:
            raise ParameterError("group averaging must be constant along a family")


def _interpolate_stage(a, b, lam: Fraction):
    if isinstance(a, Translate):
        v = tuple(x + lam * (y - x) for x, y in zip(a.vector, b.vector))
        return Translate(v)
    if isinstance(a, Wiggle):
        coeffs = [x + lam * (y - x) for x, y in zip(a.coeffs, b.coeffs)]
        return Wiggle(
            coeffs,
            a.features,
            direction=a.direction,
            group_average=a.group_average,
        )
    return a


class HomotopyPath:
    """The localized homotopy: connector off the start map, a sweep of
    localized members, connector onto the end map.

    tau in [0, 1/4]:  connector on F(0), cloud scale 4 tau;
    tau in [1/4, 3/4]: localized F(t) at t = 2 (tau - 1/4);
    tau in [3/4, 1]:  connector on F(1), cloud scale 4 (1 - tau).

    One delta (from the family's envelope pipeline) and one section
    table serve every member, so the locality radius is uniform along
    the path.  tau = 0 and tau = 1 evaluate to the family's own
    endpoint maps exactly; this needs those endpoints uniformly local,
    which is spot-checked at construction.
    """

    def __init__(self, family: HomotopyFamily, epsilon, *, check_samples=12, seed=0):
        self.family = family
        self.params = family.uniform_parameters(epsilon)
        self.epsilon = self.params.epsilon
        self.section = SectionTable(family.source)
        if check_samples > 0:
            _uniform_locality_gate(family.at(0), check_samples, seed)
            _uniform_locality_gate(family.at(1), check_samples, seed + 1)
        self._members: dict = {}

    def describe(self, tau) -> tuple:
        tau = Fraction(tau)
        if not 0 <= tau <= 1:
            raise ParameterError(f"path parameter {tau} outside [0, 1]")
        quarter = Fraction(1, 4)
        if tau <= quarter:
            return ("connector", Fraction(0), 4 * tau)
        if tau < 3 * quarter:
            return ("slice", 2 * (tau - quarter), Fraction(1))
        return ("connector", Fraction(1), 4 * (1 - tau))

    def at(self, tau) -> LocalizedMap:
        kind, t, scale = self.describe(tau)
        cache_key = (t, scale)
        member = self._members.get(cache_key)
        if member is None:
            member = LocalizedMap(
                self.family.at(t),
                self.epsilon,
                delta=self.params.delta,
                section=self.section,
                node_scale=scale,
            )
            self._members[cache_key] = member
        return member

    def schedule(self, slices: int = 11, connector_steps: int = 5):
        """Representative path parameters: ramp up, sweep, ramp down."""
        taus = []
        for j in range(connector_steps):
            taus.append(Fraction(j, 4 * (connector_steps - 1) or 4))
        for j in range(slices):
            taus.append(Fraction(1, 4) + Fraction(j, 2 * (slices - 1)))
        for j in range(connector_steps):
            taus.append(Fraction(3, 4) + Fraction(j, 4 * (connector_steps - 1) or 4))
        return tuple(dict.fromkeys(taus))


def homotopy_localize(
    family: HomotopyFamily, epsilon, *, check_samples: int = 12, seed: int = 0
) -> HomotopyPath:
    """Localize a piecewise linear family end to end."""
    return HomotopyPath(family, epsilon, check_samples=check_samples, seed=seed)


# -- quarter-turn equivariance ------------------------------------------


def _check_intertwines(pipeline: MapPipeline, count: int, seed: int) -> None:
    from .sampling import sample_tilings
    import random as _random

    from .tilings import central_patch, patches_equal

    rng = _random.Random(seed)
    for i, t in enumerate(sample_tilings(pipeline.source, count, rng, max_depth=4)):
        for g in range(1, 4):
            lhs = central_patch(apply_pipeline(pipeline, rotate_tiling(t, g)), 2)
            rhs = central_patch(
                rotate_tiling(apply_pipeline(pipeline, t), g), 2
            )
            if not patches_equal(lhs, rhs):
                raise PreconditionError(
                    "map does not intertwine the quarter-turn action "
                    f"(sample {i}, rotation {g})"
                )


class EquivariantLocalizedMap:
    """Localized map whose correction is averaged over the quarter-turn
    action, so it intertwines the action exactly whenever the input map
    does.

    The averaged offset is (1/4) sum_g g^{-1} s_eps(g T): applying the
    map to a rotated input rotates the correction along, by reindexing
    the sum.  Each summand sits inside the discrepancy budget, hence so
    does the average, and locality at R + delta survives because
    rotations about the origin preserve the balls agreement is read on.
    """

    def __init__(
        self,
        pipeline: MapPipeline,
        epsilon,
        *,
        section: SectionTable | None = None,
        check_samples: int = 8,
        seed: int = 0,
    ):
        rot = pipeline.source.rotation
        if pipeline.source.dim != 2 or rot is None or rot.order != 4:
            raise ParameterError(
                "equivariant localization needs a d=2 system with a "
                "quarter-turn action"
            )
        if pipeline.target.rotation is None or pipeline.target.rotation.order != 4:
            raise ParameterError("target system lacks a quarter-turn action")
        if check_samples > 0:
            _check_intertwines(pipeline, check_samples, seed)
        self.base = LocalizedMap(pipeline, epsilon, section=section)
        self.pipeline = pipeline
        self.params = self.base.params
        self._offsets: dict = {}

    def offset(self, t: Tiling) -> Vec:
        k = t.key()
        out = self._offsets.get(k)
        if out is not None:
            return out
        total = zero_vec(2)
        for g in range(4):
            s = self.base.offset(rotate_tiling(t, g))
            back = rotate_vector(s, -g)
            total = tuple(a + b for a, b in zip(total, back))
        total = tuple(a / 4 for a in total)
        if not norm_le(total, self.params.rho_bound):
            raise ModulusViolationError("averaged discrepancy left its budget")
        self._offsets[k] = total
        return total

    def __call__(self, t: Tiling) -> Tiling:
        return translate_tiling(self.base.image(t), self.offset(t))

    def __repr__(self):
        return f"Equivariant{self.base!r}"


def equivariant_localize(
    pipeline: MapPipeline,
    epsilon,
    *,
    section: SectionTable | None = None,
    check_samples: int = 8,
    seed: int = 0,
) -> EquivariantLocalizedMap:
    return EquivariantLocalizedMap(
        pipeline,
        epsilon,
        section=section,
        check_samples=check_samples,
        seed=seed,
    )
