"""Finite simplicial complexes, barycentric subdivision, and PL maps into R^m.

A complex stores every face explicitly (face-closed frozensets of vertex ids),
so "simplex" below always means any face, not just a maximal one.  Two marked
vertex subsets ride along on the complex; a point of the polyhedron belongs to
a marked side iff its carrier simplex's vertices all lie in that side, which
makes the marked subpolyhedra first-class and their disjointness decidable.

PL maps assign an exact rational image point to every vertex and are linear on
simplices; subdivision refines the complex without moving the geometric map.
"""

from __future__ import annotations

import json
from dataclasses import dataclass, field
from fractions import Fraction
from itertools import combinations, permutations

from .errors import PreconditionError, SubdivisionCapError
from .exact import dist_sq, rat, rat_str, sqrt_upper, vec, vec_add, vec_scale, vec_sub

SUBDIVIDE_ROUND_CAP = 30


def simplex_key(simplex):
    """Canonical sort key: cardinality, then stringified vertex ids."""
    return (len(simplex), tuple(sorted(str(v) for v in simplex)))


def sorted_vertices(simplex):
    return tuple(sorted(simplex, key=str))


@dataclass(frozen=True)
class SimplicialComplex:
    vertices: tuple          # all vertex ids, canonical order
    simplices: frozenset     # frozensets of vertex ids, nonempty, face-closed
    b1: frozenset = frozenset()
    b2: frozenset = frozenset()

    @classmethod
    def from_maximal(cls, maximal, b1=(), b2=()) -> "SimplicialComplex":
        """Build the face closure of the given simplices."""
        faces = set()
        for s in maximal:
            s = frozenset(s)
            if not s:
                raise ValueError("empty simplex")
            for k in range(1, len(s) + 1):
                for face in combinations(sorted(s, key=str), k):
                    faces.add(frozenset(face))
        verts = sorted({v for s in faces for v in s}, key=str)
        return cls(tuple(verts), frozenset(faces), frozenset(b1), frozenset(b2))

    @property
    def dimension(self) -> int:
        if not self.simplices:
            return -1
        return max(len(s) for s in self.simplices) - 1

    def maximal_simplices(self) -> list:
        # face closure: contained in something bigger iff contained in a
        # simplex exactly one larger, so only those need checking
        out = [
            s
            for s in self.simplices
            if not any(s < t for t in self.simplices if len(t) == len(s) + 1)
        ]
        return sorted(out, key=simplex_key)

    def sorted_simplices(self) -> list:
        return sorted(self.simplices, key=simplex_key)


def validate(c: SimplicialComplex) -> list:
    """Face-closure and bookkeeping check; returns a list of violations (empty = ok)."""
    violations = []
    for s in c.sorted_simplices():
        if len(s) > 1:
            for face in combinations(sorted(s, key=str), len(s) - 1):
                if frozenset(face) not in c.simplices:
                    violations.append(
                        f"missing face {sorted(map(str, face))} of {sorted(map(str, s))}"
                    )
    covered = {v for s in c.simplices for v in s}
    for v in c.vertices:
        if v not in covered:
            violations.append(f"dangling vertex {v!r}")
    for v in covered:
        if v not in c.vertices:
            violations.append(f"unlisted vertex {v!r}")
    for name, marked in (("B1", c.b1), ("B2", c.b2)):
        for v in marked:
            if v not in c.vertices:
                violations.append(f"marked vertex {v!r} in {name} is not a vertex")
    overlap = c.b1 & c.b2
    if overlap:
        violations.append(f"marked sets overlap on {sorted(map(str, overlap))}")
    return violations


@dataclass(frozen=True)
class BarycentricPoint:
    """Exact coordinates on the polyhedron: carrier simplex plus weights."""

    simplex: tuple   # vertex ids, canonical order
    weights: tuple   # Fractions, nonnegative, summing to exactly 1

    def __post_init__(self):
        if len(self.simplex) != len(self.weights):
            raise ValueError("weight count does not match simplex cardinality")
        if any(w < 0 for w in self.weights):
            raise ValueError("negative barycentric weight")
        if sum(self.weights, Fraction(0)) != 1:
            raise ValueError("barycentric weights must sum to exactly 1")

    def support_key(self) -> frozenset:
        """Identity of the underlying polyhedron point (zero weights dropped)."""
        return frozenset(
            (v, w) for v, w in zip(self.simplex, self.weights) if w != 0
        )


@dataclass
class PLMap:
    """A complex plus vertex images in R^m; linear on simplices by definition."""

    complex: SimplicialComplex
    m: int
    images: dict  # vertex id -> tuple of Fractions, length m

    def __post_init__(self):
        for v in self.complex.vertices:
            if v not in self.images:
                raise ValueError(f"vertex {v!r} has no image")
            if len(self.images[v]) != self.m:
                raise ValueError(f"image of {v!r} has wrong ambient dimension")

    def image(self, v) -> tuple:
        return self.images[v]

    def simplex_images(self, simplex) -> list:
        return [self.images[v] for v in sorted_vertices(simplex)]


def evaluate(h: PLMap, x: BarycentricPoint) -> tuple:
    """Exact affine combination of the carrier's vertex images."""
    if frozenset(x.simplex) not in h.complex.simplices:
        raise ValueError("barycentric point lies on an unknown simplex")
    acc = tuple(Fraction(0) for _ in range(h.m))
    for v, w in zip(x.simplex, x.weights):
        acc = vec_add(acc, vec_scale(w, h.images[v]))
    return acc


def image_diameter_sq(h: PLMap, simplex) -> Fraction:
    """Max squared distance over image-vertex pairs (= squared diameter of the hull)."""
    pts = h.simplex_images(simplex)
    best = Fraction(0)
    for a, b in combinations(pts, 2):
        d = dist_sq(a, b)
        if d > best:
            best = d
    return best


def _barycenter_id(simplex):
    if len(simplex) == 1:
        return next(iter(simplex))
    return "b(" + ",".join(sorted((str(v) for v in simplex))) + ")"


def barycentric_subdivide(h: PLMap) -> PLMap:
    """One barycentric subdivision; the geometric map is unchanged pointwise.

    New vertices are the barycenters of the old simplices (originals kept for
    singletons); new top simplices are the flags of the old maximal simplices.
    Marked sides propagate by carrier containment: the barycenter of sigma is
    marked iff sigma's vertices all were.
    """
    k = h.complex
    existing = set(map(str, k.vertices))
    ids = {}
    images = {}
    for s in k.sorted_simplices():
        bid = _barycenter_id(s)
        if len(s) > 1 and bid in existing:
            raise ValueError(f"barycenter id collision with existing vertex {bid!r}")
        ids[s] = bid
        pts = h.simplex_images(s)
        acc = tuple(Fraction(0) for _ in range(h.m))
        for p in pts:
            acc = vec_add(acc, p)
        images[bid] = vec_scale(Fraction(1, len(pts)), acc)
    tops = []
    for s in k.maximal_simplices():
        verts = sorted_vertices(s)
        for order in permutations(verts):
            chain = []
            for i in range(len(order)):
                chain.append(ids[frozenset(order[: i + 1])])
            tops.append(frozenset(chain))
    b1 = {ids[s] for s in k.simplices if s <= k.b1}
    b2 = {ids[s] for s in k.simplices if s <= k.b2}
    sub = SimplicialComplex.from_maximal(tops, b1=b1, b2=b2)
    return PLMap(sub, h.m, {v: images[v] for v in sub.vertices})


def subdivide_until(h: PLMap, delta, max_rounds: int = SUBDIVIDE_ROUND_CAP) -> PLMap:
    """Iterate subdivision until every simplex image diameter is < delta/2 (strict).

    Comparison is on squared quantities, exactly.  delta must be a positive,
    finite rational; the round cap guards against degenerate requests.
    """
    delta = rat(delta)
    if delta <= 0:
        raise PreconditionError("delta must be a positive rational")
    threshold = (delta / 2) ** 2
    current = h
    for round_index in range(max_rounds + 1):
        worst = Fraction(0)
        for s in current.complex.simplices:
            d = image_diameter_sq(current, s)
            if d > worst:
                worst = d
        if worst < threshold:
            return current
        if round_index == max_rounds:
            raise SubdivisionCapError(
                f"subdivision cap of {max_rounds} rounds exceeded; achieved squared "
                f"diameter {rat_str(worst)} (target < {rat_str(threshold)})",
                achieved_diameter_sq=worst,
            )
        current = barycentric_subdivide(current)
    raise AssertionError("unreachable")


def simplex_pairs(c: SimplicialComplex) -> list:
    """All unordered simplex pairs, each flagged for vertex-set disjointness."""
    ordered = c.sorted_simplices()
    return [
        (s1, s2, not (s1 & s2)) for s1, s2 in combinations(ordered, 2)
    ]


def closeness_bound(h0: PLMap, h: PLMap) -> Fraction:
    """Certified upper bound for the sup-distance argument of the two-step construction.

    Returns (max vertex displacement) + (max image diameter of h0's simplices),
    each reported as a certified rational upper bound on the exact square root
    (exact on perfect squares, otherwise slack 2^-20).
    """
    if h0.complex != h.complex:
        raise ValueError("closeness bound requires maps on the same complex")
    if h0.m != h.m:
        raise ValueError("ambient dimension mismatch")
    disp = Fraction(0)
    for v in h0.complex.vertices:
        d = dist_sq(h0.images[v], h.images[v])
        if d > disp:
            disp = d
    diam = Fraction(0)
    for s in h0.complex.simplices:
        d = image_diameter_sq(h0, s)
        if d > diam:
            diam = d
    return sqrt_upper(disp) + sqrt_upper(diam)


# ---------------------------------------------------------------------------
# JSON interchange
#
# Complex: {"m": int, "vertices": [ids], "maximal_simplices": [[ids]],
#           "marked": {"B1": [ids], "B2": [ids]}}
# PL map adds {"images": {id: [rational strings]}}.  Vertex ids are coerced to
# strings on load (JSON object keys force this for images anyway); faces are
# completed on load.
# ---------------------------------------------------------------------------


def complex_to_obj(c: SimplicialComplex, m=None) -> dict:
    obj = {
        "vertices": [str(v) for v in c.vertices],
        "maximal_simplices": [
            [str(v) for v in sorted_vertices(s)] for s in c.maximal_simplices()
        ],
        "marked": {
            "B1": sorted(map(str, c.b1)),
            "B2": sorted(map(str, c.b2)),
        },
    }
    if m is not None:
        obj["m"] = int(m)
    return obj


def complex_from_obj(obj) -> tuple:
    """Returns (complex, m or None); vertex ids become strings."""
    if not isinstance(obj, dict):
        raise ValueError("complex JSON must be an object")
    try:
        maximal = [[str(v) for v in s] for s in obj["maximal_simplices"]]
    except (KeyError, TypeError) as exc:
        raise ValueError("complex JSON lacks a maximal_simplices list") from exc
    marked = obj.get("marked", {}) or {}
    b1 = {str(v) for v in marked.get("B1", [])}
    b2 = {str(v) for v in marked.get("B2", [])}
    declared = [str(v) for v in obj.get("vertices", [])]
    c = SimplicialComplex.from_maximal(maximal, b1=b1, b2=b2)
    missing = set(declared) - set(c.vertices)
    if missing:
        # isolated vertices are allowed as singleton simplices
        maximal.extend([[v] for v in sorted(missing)])
        c = SimplicialComplex.from_maximal(maximal, b1=b1, b2=b2)
    problems = validate(c)
    if problems:
        raise ValueError("invalid complex: " + problems[0])
    m = obj.get("m")
    return c, (int(m) if m is not None else None)


def plmap_to_obj(h: PLMap) -> dict:
    obj = complex_to_obj(h.complex, m=h.m)
    obj["images"] = {
        str(v): [rat_str(x) for x in h.images[v]] for v in h.complex.vertices
    }
    return obj


def plmap_from_obj(obj) -> PLMap:
    c, m = complex_from_obj(obj)
    if m is None:
        raise ValueError("map JSON lacks the ambient dimension m")
    if "images" not in obj:
        raise ValueError("map JSON lacks images")
    images = {}
    for v, coords in obj["images"].items():
        images[str(v)] = vec(coords)
    return PLMap(c, m, images)


def load_json(path):
    with open(path, "r", encoding="utf-8") as fh:
        return json.load(fh)


def dump_json(obj, path=None) -> str:
    text = json.dumps(obj, indent=2, sort_keys=True) + "\n"
    if path is not None:
        with open(path, "w", encoding="utf-8") as fh:
            fh.write(text)
    return text
