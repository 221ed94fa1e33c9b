"""Nerve of a ball cover over a finite point cloud, with mark separation.

The cloud is the whole space here, so cover elements intersect exactly when
they share a sample point: nerve simplices are the incidence sets of sample
points and their faces.  That keeps the nerve combinatorial and exact, makes
every canonical-map carrier a simplex by construction, and bounds the nerve
dimension by the maximum incidence count minus one.
"""

from __future__ import annotations

import csv
import json
from dataclasses import dataclass
from fractions import Fraction

from .complexes import BarycentricPoint, SimplicialComplex
from .errors import PreconditionError, SeparationError
from .exact import dist_sq, rat, sqrt_bracket, vec

WEIGHT_DENOM = 2 ** 20


@dataclass(frozen=True)
class PointCloud:
    points: tuple    # tuples of Fractions, common ambient dimension
    b1: frozenset    # marked point indices
    b2: frozenset

    def __post_init__(self):
        if self.points:
            m0 = len(self.points[0])
            if any(len(p) != m0 for p in self.points):
                raise ValueError("points have mixed ambient dimensions")
        for idx in self.b1 | self.b2:
            if not (0 <= idx < len(self.points)):
                raise ValueError("marked index %r out of range" % (idx,))
        if self.b1 & self.b2:
            raise ValueError("marked sets overlap")


def point_cloud(points, b1=(), b2=()) -> PointCloud:
    return PointCloud(
        tuple(vec(p) for p in points), frozenset(b1), frozenset(b2)
    )


@dataclass(frozen=True)
class Cover:
    elements: tuple      # (center, radius) closed balls, one per sample point
    incidence: tuple     # per point index, tuple of incident element indices
    b1_elements: frozenset  # element indices meeting B1
    b2_elements: frozenset
    separated: bool      # no single element meets both marked sets
    radius: Fraction


def build_cover(cloud: PointCloud, radius) -> Cover:
    radius = rat(radius)
    if radius <= 0:
        raise PreconditionError("cover radius must be positive")
    r_sq = radius * radius
    centers = cloud.points
    incidence = []
    for p in cloud.points:
        incidence.append(
            tuple(
                i for i, c in enumerate(centers) if dist_sq(p, c) <= r_sq
            )
        )
    member_of = [set() for _ in centers]
    for idx, inc in enumerate(incidence):
        for i in inc:
            member_of[i].add(idx)
    b1_elements = frozenset(
        i for i, members in enumerate(member_of) if members & cloud.b1
    )
    b2_elements = frozenset(
        i for i, members in enumerate(member_of) if members & cloud.b2
    )
    return Cover(
        elements=tuple((c, radius) for c in centers),
        incidence=tuple(incidence),
        b1_elements=b1_elements,
        b2_elements=b2_elements,
        separated=not (b1_elements & b2_elements),
        radius=radius,
    )


def witness_violation(cover: Cover) -> bool:
    """Some sample point is incident to elements marked on both sides.

    Exactly the situations that would put marked vertices from both sides
    into one nerve simplex.
    """
    for inc in cover.incidence:
        s = set(inc)
        if s & cover.b1_elements and s & cover.b2_elements:
            return True
    return False


def refine_for_separation(cloud: PointCloud, radius) -> Cover:
    """Shrink the radius by halving until the cover separates the marks."""
    radius = rat(radius)
    cover = build_cover(cloud, radius)
    if not cloud.b1 or not cloud.b2:
        return cover
    d_sq = min(
        dist_sq(cloud.points[i], cloud.points[j])
        for i in cloud.b1
        for j in cloud.b2
    )
    if d_sq == 0:
        raise SeparationError("marked sets touch; no separating radius exists")
    if cover.separated and not witness_violation(cover):
        return cover
    r = radius
    while 4 * r * r >= d_sq:
        r = r / 2
    cover = build_cover(cloud, r)
    # a violating chain b1 - center - witness - center - b2 has length <= 4r,
    # so this loop stops once 4r < distance(B1, B2)
    while witness_violation(cover):
        r = r / 2
        cover = build_cover(cloud, r)
    return cover


def element_name(i: int) -> str:
    return "U%d" % i


def nerve_complex(cover: Cover) -> SimplicialComplex:
    if (cover.b1_elements or cover.b2_elements) and not cover.separated:
        raise SeparationError("cover element meets both marked sets")
    maximal = {
        frozenset(element_name(i) for i in inc)
        for inc in cover.incidence
        if inc
    }
    c = SimplicialComplex.from_maximal(
        sorted(maximal, key=lambda s: sorted(s)),
        b1={element_name(i) for i in cover.b1_elements},
        b2={element_name(i) for i in cover.b2_elements},
    )
    for s in c.simplices:
        if s & c.b1 and s & c.b2:
            raise SeparationError(
                "nerve simplex contains marked vertices from both sides"
            )
    return c


def canonical_map(cloud: PointCloud, cover: Cover) -> list:
    """Partition-of-unity barycentric coordinates, one entry per sample point.

    Weights are proportional to max(0, radius - distance to center) with the
    square root bracketed rationally, then rounded to the 2^-20 grid with a
    largest-remainder correction so they sum to exactly 1.
    """
    out = []
    for idx, x in enumerate(cloud.points):
        inc = cover.incidence[idx]
        if not inc:
            raise PreconditionError(
                "sample point %d is covered by no element" % idx
            )
        raw = []
        for i in inc:
            center, radius = cover.elements[i]
            lo, hi = sqrt_bracket(dist_sq(x, center))
            mid = (lo + hi) / 2
            raw.append(max(Fraction(0), radius - mid))
        total = sum(raw, Fraction(0))
        if total == 0:
            raw = [Fraction(1) for _ in inc]
            total = Fraction(len(inc))
        floors = []
        remainders = []
        for w in raw:
            scaled = w / total * WEIGHT_DENOM
            n = scaled.numerator // scaled.denominator
            floors.append(n)
            remainders.append(scaled - n)
        missing = WEIGHT_DENOM - sum(floors)
        order = sorted(range(len(raw)), key=lambda i: (-remainders[i], i))
        for i in order[:missing]:
            floors[i] += 1
        named = sorted(
            zip((element_name(i) for i in inc), floors), key=lambda t: t[0]
        )
        out.append(
            BarycentricPoint(
                tuple(name for name, _ in named),
                tuple(Fraction(n, WEIGHT_DENOM) for _, n in named),
            )
        )
    return out


def cloud_from_csv(points_path, marks_path=None) -> PointCloud:
    """One point per CSV row, rational or decimal literals; marks from a
    sidecar JSON {"b1": [indices], "b2": [indices]}."""
    points = []
    with open(points_path, newline="") as fh:
        for row in csv.reader(fh):
            cells = [cell.strip() for cell in row if cell.strip()]
            if not cells:
                continue
            points.append(tuple(rat(cell) for cell in cells))
    b1 = ()
    b2 = ()
    if marks_path is not None:
        with open(marks_path) as fh:
            marks = json.load(fh)
        b1 = tuple(int(i) for i in marks.get("b1", ()))
        b2 = tuple(int(i) for i in marks.get("b2", ()))
    return point_cloud(points, b1, b2)
