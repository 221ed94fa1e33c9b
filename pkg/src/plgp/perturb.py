"""Random perturbation of vertex images into certified general position.

Algebraic independence of the perturbed coordinates is not checkable, so the
certificate records the finitely many exact consequences the construction
actually uses: every image simplex is nondegenerate, and for every pair of
simplices the union of image vertices is affinely independent.  With
dim K <= n and m >= 2n+1 each union has at most m+1 points, so the condition
is both checkable and generically true.
"""

from __future__ import annotations

import random
from dataclasses import dataclass
from fractions import Fraction

from .complexes import PLMap, simplex_pairs, sorted_vertices
from .errors import PerturbationBudgetError, PreconditionError
from .exact import affinely_independent, norm_sq, rat, rat_str, sqrt_bracket, vec_add

GRID = 2 ** 32
DEFAULT_MAX_ROUNDS = 32


@dataclass(frozen=True)
class GeneralPositionCertificate:
    simplex_verdicts: tuple  # ((simplex, ok), ...)
    pair_verdicts: tuple     # ((s1, s2, ok), ...)
    overall: bool


@dataclass(frozen=True)
class PerturbationReport:
    seed: int
    rounds: int
    max_displacement: Fraction     # certified upper bound, < delta/2
    max_displacement_sq: Fraction  # exact
    certificate: GeneralPositionCertificate


def general_position_certificate(h: PLMap) -> GeneralPositionCertificate:
    c = h.complex
    n = c.dimension
    if n >= 0 and h.m < 2 * n + 1:
        raise PreconditionError(
            "certificate requires ambient dimension m >= 2*dim(K)+1"
        )
    simplex_verdicts = []
    for s in c.sorted_simplices():
        ok = affinely_independent([h.images[v] for v in sorted_vertices(s)])
        simplex_verdicts.append((s, ok))
    pair_verdicts = []
    for s1, s2, _ in simplex_pairs(c):
        union = sorted_vertices(s1 | s2)
        ok = affinely_independent([h.images[v] for v in union])
        pair_verdicts.append((s1, s2, ok))
    overall = all(ok for _, ok in simplex_verdicts) and all(
        ok for _, _, ok in pair_verdicts
    )
    return GeneralPositionCertificate(
        tuple(simplex_verdicts), tuple(pair_verdicts), overall
    )


def failed_vertices(cert: GeneralPositionCertificate) -> set:
    bad = set()
    for s, ok in cert.simplex_verdicts:
        if not ok:
            bad |= s
    for s1, s2, ok in cert.pair_verdicts:
        if not ok:
            bad |= s1 | s2
    return bad


def _draw_displacement(rng, m, half, j_max):
    # box draws on the 2^-32 grid, rejected until strictly inside the
    # open Euclidean ball of radius delta/2
    bound = half * half
    while True:
        r = tuple(Fraction(rng.randrange(-j_max, j_max + 1), GRID) for _ in range(m))
        if norm_sq(r) < bound:
            return r


def _displacement_bound(d2, half):
    """Rational upper bound on sqrt(d2), tightened below half (d2 < half^2)."""
    assert d2 < half * half
    lo, hi = sqrt_bracket(d2)
    while hi >= half:
        mid = (lo + hi) / 2
        if mid * mid >= d2:
            hi = mid
        else:
            lo = mid
    return hi


def perturb_to_general_position(
    h0: PLMap, delta, seed: int, max_rounds: int = DEFAULT_MAX_ROUNDS
):
    delta = rat(delta)
    if delta <= 0:
        raise PreconditionError("delta must be positive")
    cert = general_position_certificate(h0)
    if cert.overall:
        zero = Fraction(0)
        return h0, PerturbationReport(seed, 0, zero, zero, cert)
    half = delta / 2
    j_max = (half.numerator * GRID - 1) // half.denominator
    if j_max < 0:
        j_max = 0
    rng = random.Random(seed)
    zero_vec = tuple(Fraction(0) for _ in range(h0.m))
    displacements = {v: zero_vec for v in h0.complex.vertices}
    for round_index in range(1, max_rounds + 1):
        for v in sorted(failed_vertices(cert), key=str):
            displacements[v] = _draw_displacement(rng, h0.m, half, j_max)
        images = {
            v: vec_add(h0.images[v], displacements[v]) for v in h0.complex.vertices
        }
        current = PLMap(h0.complex, h0.m, images)
        cert = general_position_certificate(current)
        if cert.overall:
            max_d2 = max(norm_sq(d) for d in displacements.values())
            return current, PerturbationReport(
                seed, round_index, _displacement_bound(max_d2, half), max_d2, cert
            )
    raise PerturbationBudgetError(
        "no general-position certificate within %d resample rounds" % max_rounds,
        certificate=cert,
    )


def certificate_to_obj(cert: GeneralPositionCertificate, verbose=False) -> dict:
    obj = {
        "overall": cert.overall,
        "simplices_checked": len(cert.simplex_verdicts),
        "pairs_checked": len(cert.pair_verdicts),
    }
    if verbose or not cert.overall:
        obj["simplex_verdicts"] = [
            [list(sorted_vertices(s)), ok] for s, ok in cert.simplex_verdicts
        ]
        obj["pair_verdicts"] = [
            [list(sorted_vertices(s1)), list(sorted_vertices(s2)), ok]
            for s1, s2, ok in cert.pair_verdicts
        ]
    return obj


def report_to_obj(report: PerturbationReport, verbose=False) -> dict:
    return {
        "seed": report.seed,
        "rounds": report.rounds,
        "max_displacement": rat_str(report.max_displacement),
        "max_displacement_sq": rat_str(report.max_displacement_sq),
        "certificate": certificate_to_obj(report.certificate, verbose=verbose),
    }
