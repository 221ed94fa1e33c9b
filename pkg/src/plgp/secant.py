"""Secant lines through a probe point, the chord metric on lines, and
zero-dimensionality cover certificates.

A secant is a line through z whose preimage under the map has two distinct
polyhedron points.  Enumeration runs over vertex-disjoint pairs of maximal
simplices only; that is complete because (i) a face pair's secant is the
covering maximal pair's unique transversal, and (ii) the analyzer asserts,
exactly, that z is affinely independent of every maximal image simplex and of
every vertex-sharing maximal pair's image union, which rules out secants whose
covering maximal simplices coincide or share a vertex.  A violation of (ii) is
degenerate input, not a miss.

Incidence decisions are exact rationals throughout; only the line metric
(Hausdorff distance between ball-clipped chords) is floating point, with a
documented 1e-9 tolerance, and certificate radii are shrunk by a factor 3 to
absorb it.
"""

from __future__ import annotations

import math
import random
from dataclasses import dataclass
from fractions import Fraction

from .complexes import PLMap, evaluate, simplex_key, sorted_vertices
from .errors import DegenerateGeometryError, PreconditionError, ThinRegionError
from .exact import affinely_independent, norm_sq, rat, rat_str, vec, vec_add
from .flats import (
    contains_point,
    line_key,
    line_meets_simplex,
    line_to_obj,
    point_to_image_distance_sq_lower,
    span_of_points,
    transversal_line_through_point,
)
from .perturb import general_position_certificate

GRID = 2 ** 32
PROBE_BUDGET_FACTOR = 1000


@dataclass(frozen=True)
class SecantRecord:
    line: object          # canonical AffineFlat, d=1
    z: tuple
    witnesses: tuple      # two (simplex, image point, BarycentricPoint) entries
    pair: tuple           # source simplex pair


@dataclass(frozen=True)
class ProbePoint:
    z: tuple
    k: Fraction
    image_distance_sq: Fraction

    def __post_init__(self):
        if norm_sq(self.z) > self.k * self.k:
            raise ValueError("probe point outside the radius-k ball")
        if self.image_distance_sq * self.k * self.k < 1:
            raise ValueError("probe point closer than 1/k to the image")


@dataclass(frozen=True)
class CoverCertificate:
    balls: tuple          # ((center line, radius), ...)
    epsilon: float
    order: int            # s; fixed 0 here
    assignment: tuple     # record index -> ball index
    mesh_ok: bool
    disjoint_ok: bool

    @property
    def valid(self) -> bool:
        return self.mesh_ok and self.disjoint_ok


@dataclass(frozen=True)
class UscReport:
    trials: int
    skipped: int
    max_drift: float
    emergent: int
    baseline_count: int


def _domain_point(bary):
    # a point of |K| is its nonzero-weight support
    return frozenset(
        (v, w) for v, w in zip(bary.simplex, bary.weights) if w != 0
    )


def _record(h, z, line, s1, hit1, s2, hit2):
    point1, bary1 = hit1
    point2, bary2 = hit2
    assert contains_point(line, z)
    assert contains_point(line, point1) and contains_point(line, point2)
    assert evaluate(h, bary1) == point1 and evaluate(h, bary2) == point2
    assert _domain_point(bary1) != _domain_point(bary2)
    return SecantRecord(
        line=line,
        z=z,
        witnesses=((s1, point1, bary1), (s2, point2, bary2)),
        pair=(s1, s2),
    )


def _pair_records(h, z, s1, s2):
    f1 = span_of_points(h.simplex_images(s1))
    f2 = span_of_points(h.simplex_images(s2))
    line = transversal_line_through_point(z, f1, f2)
    if line is None:
        return []
    hit1 = line_meets_simplex(line, h, s1)
    if hit1 is None:
        return []
    hit2 = line_meets_simplex(line, h, s2)
    if hit2 is None:
        return []
    return [_record(h, z, line, s1, hit1, s2, hit2)]


def _require_valid_probe(h, z, certificate):
    cert = certificate
    if cert is None:
        cert = general_position_certificate(h)
    if not cert.overall:
        raise PreconditionError("map is not in certified general position")
    d2 = point_to_image_distance_sq_lower(z, h)
    if d2 == 0:
        raise PreconditionError("probe point lies on the image")
    return cert


def _assert_adjacent_secant_free(h, z, tops):
    for i, s1 in enumerate(tops):
        if not affinely_independent(h.simplex_images(s1) + [z]):
            raise DegenerateGeometryError(
                "probe point affinely dependent with a maximal simplex image"
            )
        for s2 in tops[i + 1:]:
            if not (s1 & s2):
                continue
            union = sorted_vertices(s1 | s2)
            pts = [h.images[v] for v in union] + [z]
            if not affinely_independent(pts):
                raise DegenerateGeometryError(
                    "probe point affinely dependent with an adjacent pair's image union"
                )


def secants_for_pair(h: PLMap, z, s1, s2, certificate=None):
    """Secant records for one vertex-disjoint simplex pair (length <= 1)."""
    z = vec(z)
    s1 = frozenset(s1)
    s2 = frozenset(s2)
    if s1 not in h.complex.simplices or s2 not in h.complex.simplices:
        raise ValueError("unknown simplex")
    if s1 & s2:
        raise PreconditionError("simplex pair shares vertices")
    _require_valid_probe(h, z, certificate)
    return _pair_records(h, z, s1, s2)


def _maximal_among(simplices):
    items = sorted(simplices, key=simplex_key)
    return [s for s in items if not any(s < t for t in items)]


def secant_set(h: PLMap, z, gamma=None, certificate=None):
    """All secant records through z, deduplicated by canonical line.

    With gamma = (B1, B2) the enumeration is restricted to pairs with one
    simplex inside each marked vertex set.
    """
    z = vec(z)
    _require_valid_probe(h, z, certificate)
    tops = sorted(h.complex.maximal_simplices(), key=simplex_key)
    _assert_adjacent_secant_free(h, z, tops)
    if gamma is None:
        pairs = [
            (s1, s2)
            for i, s1 in enumerate(tops)
            for s2 in tops[i + 1:]
            if not (s1 & s2)
        ]
    else:
        b1, b2 = gamma
        b1 = frozenset(b1)
        b2 = frozenset(b2)
        side1 = _maximal_among([s for s in h.complex.simplices if s <= b1])
        side2 = _maximal_among([s for s in h.complex.simplices if s <= b2])
        pairs = [
            (s1, s2) for s1 in side1 for s2 in side2 if not (s1 & s2)
        ]
    records = []
    seen = set()
    for s1, s2 in pairs:
        for rec in _pair_records(h, z, s1, s2):
            key = line_key(rec.line)
            if key not in seen:
                seen.add(key)
                records.append(rec)
    records.sort(key=lambda r: line_key(r.line))
    return records


@dataclass(frozen=True)
class ImagePointPair:
    y1: tuple
    y2: tuple
    preimage1: object  # BarycentricPoint
    preimage2: object
    line: object


def secant_pairs(h: PLMap, z, certificate=None):
    """The collinear image-point pairs with distinct preimages, one per secant."""
    return [
        ImagePointPair(
            y1=rec.witnesses[0][1],
            y2=rec.witnesses[1][1],
            preimage1=rec.witnesses[0][2],
            preimage2=rec.witnesses[1][2],
            line=rec.line,
        )
        for rec in secant_set(h, z, certificate=certificate)
    ]


def _chord(line, k):
    base = [float(x) for x in line.base]
    d = [float(x) for x in line.directions[0]]
    a = sum(x * x for x in d)
    b = 2 * sum(p * q for p, q in zip(base, d))
    c = sum(x * x for x in base) - float(k) ** 2
    disc = b * b - 4 * a * c
    if disc < 0:
        if disc > -1e-9 * max(1.0, b * b):
            disc = 0.0
        else:
            raise PreconditionError("line does not meet the clipping ball")
    root = math.sqrt(disc)
    t1 = (-b - root) / (2 * a)
    t2 = (-b + root) / (2 * a)
    return (
        [base[i] + t1 * d[i] for i in range(len(base))],
        [base[i] + t2 * d[i] for i in range(len(base))],
    )


def _point_segment_distance(p, a, b):
    ab = [b[i] - a[i] for i in range(len(a))]
    ap = [p[i] - a[i] for i in range(len(a))]
    denom = sum(x * x for x in ab)
    t = 0.0 if denom == 0 else sum(x * y for x, y in zip(ap, ab)) / denom
    t = min(1.0, max(0.0, t))
    return math.sqrt(
        sum((p[i] - (a[i] + t * ab[i])) ** 2 for i in range(len(a)))
    )


def line_distance(l1, l2, k) -> float:
    """Hausdorff distance between the two chords cut by the radius-k ball.

    The distance from a point to a segment is convex along the other chord, so
    the supremum is attained at chord endpoints; four point-to-segment
    distances suffice.
    """
    if line_key(l1) == line_key(l2):
        return 0.0
    a1, b1 = _chord(l1, k)
    a2, b2 = _chord(l2, k)
    return max(
        _point_segment_distance(a1, a2, b2),
        _point_segment_distance(b1, a2, b2),
        _point_segment_distance(a2, a1, b1),
        _point_segment_distance(b2, a1, b1),
    )


def zero_dim_certificate(records, epsilon, k) -> CoverCertificate:
    """Disjoint cover of the secant set by equal balls of diameter < epsilon."""
    eps = float(epsilon)
    if eps <= 0:
        raise PreconditionError("epsilon must be positive")
    keys = [line_key(r.line) for r in records]
    if len(set(keys)) != len(keys):
        raise PreconditionError("duplicate lines; deduplicate records first")
    if not records:
        return CoverCertificate((), eps, 0, (), True, True)
    pairwise = [
        line_distance(records[i].line, records[j].line, k)
        for i in range(len(records))
        for j in range(i + 1, len(records))
    ]
    radius = min([eps] + pairwise) / 3
    balls = tuple((r.line, radius) for r in records)
    assignment = tuple(range(len(records)))
    mesh_ok = 2 * radius < eps
    disjoint_ok = all(d > 2 * radius for d in pairwise)
    return CoverCertificate(balls, eps, 0, assignment, mesh_ok, disjoint_ok)


def probe_region_samples(h: PLMap, k, count: int, seed: int):
    """Uniform seeded samples from {z : ||z|| <= k, dist(z, image) >= 1/k}."""
    k = rat(k)
    if k <= 0:
        raise PreconditionError("k must be positive")
    if count == 0:
        return []
    rng = random.Random(seed)
    k_sq = k * k
    min_d2 = 1 / k_sq
    budget = PROBE_BUDGET_FACTOR * count
    draws = 0
    out = []
    while len(out) < count:
        if draws >= budget:
            raise ThinRegionError(
                "probe region too thin: %d draws yielded %d of %d samples"
                % (draws, len(out), count)
            )
        draws += 1
        z = tuple(
            k * Fraction(rng.randrange(-GRID, GRID + 1), GRID)
            for _ in range(h.m)
        )
        if norm_sq(z) > k_sq:
            continue
        d2 = point_to_image_distance_sq_lower(z, h)
        if d2 < min_d2:
            continue
        out.append(ProbePoint(z, k, d2))
    return out


def usc_probe(h: PLMap, probe: ProbePoint, scale, trials: int, seed: int):
    """Numerical stability probe: jitter vertex images and z, watch the secants.

    Reports how far perturbed secant lines drift from the baseline set, and
    counts lines that emerge with no baseline at all.  A trial whose jitter
    breaks the certificate or lands z on the image is skipped and counted.
    """
    scale = rat(scale)
    if scale < 0:
        raise PreconditionError("scale must be nonnegative")
    baseline = secant_set(h, probe.z)
    clip = probe.k + scale
    rng = random.Random(seed)
    skipped = 0
    emergent = 0
    max_drift = 0.0

    def jitter_vec():
        return tuple(
            scale * Fraction(rng.randrange(-GRID, GRID + 1), GRID)
            for _ in range(h.m)
        )

    for _ in range(trials):
        images = {
            v: vec_add(h.images[v], jitter_vec())
            for v in sorted(h.complex.vertices, key=str)
        }
        zp = vec_add(probe.z, jitter_vec())
        hp = PLMap(h.complex, h.m, images)
        cert = general_position_certificate(hp)
        if not cert.overall or point_to_image_distance_sq_lower(zp, hp) == 0:
            skipped += 1
            continue
        try:
            perturbed = secant_set(hp, zp, certificate=cert)
        except DegenerateGeometryError:
            skipped += 1
            continue
        for rec in perturbed:
            if baseline:
                drift = min(
                    line_distance(rec.line, b.line, clip) for b in baseline
                )
                max_drift = max(max_drift, drift)
            else:
                emergent += 1
    return UscReport(trials, skipped, max_drift, emergent, len(baseline))


def record_to_obj(rec: SecantRecord) -> dict:
    return {
        "line": line_to_obj(rec.line),
        "z": [rat_str(x) for x in rec.z],
        "pair": [
            list(sorted_vertices(rec.pair[0])),
            list(sorted_vertices(rec.pair[1])),
        ],
        "witnesses": [
            {
                "simplex": list(sorted_vertices(s)),
                "point": [rat_str(x) for x in p],
                "weights": [rat_str(w) for w in b.weights],
            }
            for s, p, b in rec.witnesses
        ],
    }


def pair_to_obj(pair: ImagePointPair) -> dict:
    def bary(b):
        return {
            "simplex": list(b.simplex),
            "weights": [rat_str(w) for w in b.weights],
        }

    return {
        "y1": [rat_str(x) for x in pair.y1],
        "y2": [rat_str(x) for x in pair.y2],
        "preimage1": bary(pair.preimage1),
        "preimage2": bary(pair.preimage2),
        "line": line_to_obj(pair.line),
    }


def cover_certificate_to_obj(cert: CoverCertificate) -> dict:
    return {
        "epsilon": cert.epsilon,
        "order": cert.order,
        "valid": cert.valid,
        "mesh_ok": cert.mesh_ok,
        "disjoint_ok": cert.disjoint_ok,
        "radius": cert.balls[0][1] if cert.balls else None,
        "balls": [
            {"line": line_to_obj(line), "radius": radius}
            for line, radius in cert.balls
        ],
        "assignment": list(cert.assignment),
    }
