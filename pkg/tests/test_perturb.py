import random
from fractions import Fraction
from itertools import combinations

import pytest

from plgp.complexes import (
    BarycentricPoint,
    PLMap,
    SimplicialComplex,
    closeness_bound,
    evaluate,
    simplex_pairs,
    sorted_vertices,
    subdivide_until,
)
from plgp.errors import PerturbationBudgetError, PreconditionError
from plgp.exact import Matrix, norm_sq, solve_affine, vec, vec_sub
from plgp.flats import flats_skew, span_of_points
from plgp.perturb import (
    certificate_to_obj,
    failed_vertices,
    general_position_certificate,
    perturb_to_general_position,
    report_to_obj,
)


F = Fraction


def two_segments(p1, p2, q1, q2):
    c = SimplicialComplex.from_maximal([["a", "b"], ["c", "d"]])
    return PLMap(c, len(p1), {
        "a": vec(p1), "b": vec(p2), "c": vec(q1), "d": vec(q2),
    })


def generic_segments():
    return two_segments([0, 0, 0], [1, 0, 0], [0, 1, 1], [1, 1, 2])


def coplanar_segments():
    return two_segments([0, 0, 0], [1, 0, 0], [0, 1, 0], [1, 1, 0])


class TestCertificate:
    def test_generic_segments_pass(self):
        cert = general_position_certificate(generic_segments())
        assert cert.overall
        assert all(ok for _, ok in cert.simplex_verdicts)
        assert all(ok for _, _, ok in cert.pair_verdicts)

    def test_coplanar_pair_fails(self):
        cert = general_position_certificate(coplanar_segments())
        assert not cert.overall
        bad = {
            frozenset((s1, s2)) for s1, s2, ok in cert.pair_verdicts if not ok
        }
        assert frozenset((frozenset("ab"), frozenset("cd"))) in bad
        assert all(ok for _, ok in cert.simplex_verdicts)

    def test_single_vertex_passes(self):
        c = SimplicialComplex.from_maximal([["a"]])
        h = PLMap(c, 3, {"a": vec([1, 2, 3])})
        assert general_position_certificate(h).overall

    def test_dimension_precondition(self):
        c = SimplicialComplex.from_maximal([["a", "b", "c"]])
        h = PLMap(c, 3, {
            "a": vec([0, 0, 0]), "b": vec([1, 0, 0]), "c": vec([0, 1, 0]),
        })
        with pytest.raises(PreconditionError):
            general_position_certificate(h)

    def test_every_pair_listed(self):
        h = generic_segments()
        k = len(h.complex.simplices)
        cert = general_position_certificate(h)
        assert len(cert.pair_verdicts) == k * (k - 1) // 2
        assert len(cert.simplex_verdicts) == k

    def test_failed_vertices_collects_participants(self):
        cert = general_position_certificate(coplanar_segments())
        assert failed_vertices(cert) == {"a", "b", "c", "d"}

    def test_serialization_elides_verdicts_when_clean(self):
        clean = certificate_to_obj(general_position_certificate(generic_segments()))
        assert clean["overall"] and "pair_verdicts" not in clean
        dirty = certificate_to_obj(general_position_certificate(coplanar_segments()))
        assert not dirty["overall"] and "pair_verdicts" in dirty
        verbose = certificate_to_obj(
            general_position_certificate(generic_segments()), verbose=True
        )
        assert "pair_verdicts" in verbose


class TestPerturb:
    def test_clean_input_passes_through(self):
        h0 = generic_segments()
        h, report = perturb_to_general_position(h0, F(1, 10), seed=7)
        assert h is h0
        assert report.rounds == 0
        assert report.max_displacement == 0
        assert report.certificate.overall

    def test_coplanar_input_gets_fixed(self):
        h0 = coplanar_segments()
        delta = F(1, 10)
        h, report = perturb_to_general_position(h0, delta, seed=0)
        assert report.certificate.overall
        assert general_position_certificate(h).overall
        assert report.rounds >= 1
        half_sq = (delta / 2) ** 2
        for v in h0.complex.vertices:
            assert norm_sq(vec_sub(h.images[v], h0.images[v])) < half_sq
        assert report.max_displacement < delta / 2
        assert report.max_displacement_sq < half_sq
        assert report.max_displacement ** 2 >= report.max_displacement_sq

    def test_zero_delta_rejected(self):
        with pytest.raises(PreconditionError):
            perturb_to_general_position(coplanar_segments(), 0, seed=0)
        with pytest.raises(PreconditionError):
            perturb_to_general_position(coplanar_segments(), F(-1, 2), seed=0)

    def test_deterministic(self):
        a1, r1 = perturb_to_general_position(coplanar_segments(), F(1, 10), seed=42)
        a2, r2 = perturb_to_general_position(coplanar_segments(), F(1, 10), seed=42)
        assert a1.images == a2.images
        assert r1.rounds == r2.rounds
        assert r1.max_displacement_sq == r2.max_displacement_sq
        assert report_to_obj(r1) == report_to_obj(r2)

    def test_budget_exhaustion_carries_certificate(self):
        # delta so small the 2^-32 grid only contains the zero vector:
        # nothing can move, so the certificate can never improve
        with pytest.raises(PerturbationBudgetError) as err:
            perturb_to_general_position(
                coplanar_segments(), F(1, 2 ** 32), seed=0, max_rounds=3
            )
        assert err.value.certificate is not None
        assert not err.value.certificate.overall

    def test_two_step_closeness(self):
        delta = F(1)
        h1 = subdivide_until(coplanar_segments(), delta)
        h, report = perturb_to_general_position(h1, delta, seed=5)
        assert report.certificate.overall
        assert closeness_bound(h1, h) < delta

    def test_success_rate_across_seeds(self):
        ok = 0
        for seed in range(100):
            try:
                _, report = perturb_to_general_position(
                    coplanar_segments(), F(1, 10), seed=seed, max_rounds=10
                )
            except PerturbationBudgetError:
                continue
            assert report.rounds <= 10
            ok += 1
        assert ok >= 99


def hull_overlap_system(imgs1, imgs2, m):
    # mu-combination of imgs1 equals nu-combination of imgs2, both affine
    rows = []
    for i in range(m):
        rows.append([p[i] for p in imgs1] + [-q[i] for q in imgs2])
    rows.append([F(1)] * len(imgs1) + [F(0)] * len(imgs2))
    rows.append([F(0)] * len(imgs1) + [F(1)] * len(imgs2))
    rhs = [F(0)] * m + [F(1), F(1)]
    return Matrix.from_rows(rows), rhs


class TestCertificateSoundness:
    def perturbed(self, seed=3):
        h, report = perturb_to_general_position(
            coplanar_segments(), F(1, 10), seed=seed
        )
        assert report.certificate.overall
        return h

    def test_disjoint_pairs_have_disjoint_closed_images(self):
        h = self.perturbed()
        for s1, s2, disjoint in simplex_pairs(h.complex):
            if not disjoint:
                continue
            imgs1 = h.simplex_images(s1)
            imgs2 = h.simplex_images(s2)
            a, b = hull_overlap_system(imgs1, imgs2, h.m)
            assert solve_affine(a, b) is None

    def test_disjoint_top_pairs_are_skew(self):
        h = self.perturbed()
        tops = h.complex.maximal_simplices()
        for s1, s2 in combinations(sorted(tops, key=sorted_vertices), 2):
            if s1 & s2:
                continue
            f1 = span_of_points(h.simplex_images(s1))
            f2 = span_of_points(h.simplex_images(s2))
            assert flats_skew(f1, f2)

    def test_evaluate_injective_on_random_pairs(self):
        h = self.perturbed()
        rng = random.Random(1234)
        tops = sorted(h.complex.maximal_simplices(), key=sorted_vertices)

        def random_point():
            s = rng.choice(tops)
            verts = sorted_vertices(s)
            while True:
                raw = [rng.randrange(0, 9) for _ in verts]
                if any(raw):
                    break
            total = sum(raw)
            return BarycentricPoint(
                verts, tuple(F(x, total) for x in raw)
            )

        def normalized(p):
            return frozenset(
                (v, w) for v, w in zip(p.simplex, p.weights) if w != 0
            )

        for _ in range(1000):
            p1 = random_point()
            p2 = random_point()
            if evaluate(h, p1) == evaluate(h, p2):
                assert normalized(p1) == normalized(p2)
