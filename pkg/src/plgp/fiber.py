"""Fiberwise embedding over a finite base and eta-separated secant filtering.

A fibered instance bundles finitely many vertex-disjoint complexes (the
fibers), one per base label, together with a reference embedding per fiber.
The reference plays two roles: its images seed the subdivide-and-perturb
pipeline, and it induces the exact metric on the fiber's polyhedron that the
eta filters measure against (squared distances between evaluated points).
Subdividing a map never changes it pointwise, so the working subdivision
evaluates to the same metric as the declared reference.

Every fiber is processed independently.  The working seed for a label is
derived from the root seed by hashing "<root>|<label>", so runs are
reproducible, no randomness is shared between fibers, and the per-label
results do not depend on which other labels are present.  Reports iterate
labels in sorted order; since fibers share no state, any processing schedule
yields the identical report.
"""

from dataclasses import dataclass
from fractions import Fraction
from hashlib import sha256

from .complexes import (
    PLMap,
    complex_from_obj,
    complex_to_obj,
    evaluate,
    image_diameter_sq,
    plmap_from_obj,
    plmap_to_obj,
    subdivide_until,
    validate,
)
from .errors import PerturbationBudgetError, PreconditionError
from .exact import dist_sq, rat, rat_str, vec
from .perturb import perturb_to_general_position, report_to_obj
from .secant import (
    SecantRecord,
    cover_certificate_to_obj,
    probe_region_samples,
    record_to_obj,
    secant_set,
    zero_dim_certificate,
)

DEFAULT_COVER_EPSILON = 0.01


@dataclass(frozen=True)
class FiberedInstance:
    """A finite base: labels, one fiber complex each, reference embeddings, ambient m."""

    labels: tuple
    fibers: dict      # label -> SimplicialComplex
    references: dict  # label -> PLMap on that fiber, ambient m
    m: int
    eta: tuple = ()   # default eta values for reports

    def __post_init__(self):
        if len(set(self.labels)) != len(self.labels):
            raise ValueError("duplicate base labels")
        if set(self.fibers) != set(self.labels):
            raise ValueError("fibers must cover exactly the base labels")
        if set(self.references) != set(self.labels):
            raise ValueError("reference embeddings must cover exactly the base labels")
        owner = {}
        for label in self.labels:
            c = self.fibers[label]
            problems = validate(c)
            if problems:
                raise ValueError(f"fiber {label!r} invalid: " + problems[0])
            for v in c.vertices:
                if v in owner:
                    raise ValueError(
                        f"vertex {v!r} shared by fibers {owner[v]!r} and {label!r}"
                    )
                owner[v] = label
            ref = self.references[label]
            if ref.m != self.m:
                raise ValueError(
                    f"reference embedding of {label!r} has ambient dimension "
                    f"{ref.m}, expected {self.m}"
                )
            if ref.complex.simplices != c.simplices:
                raise ValueError(
                    f"reference embedding of {label!r} is not a map on that fiber"
                )
        for e in self.eta:
            if e <= 0:
                raise ValueError("eta defaults must be positive")

    @property
    def dimension(self) -> int:
        return max((self.fibers[label].dimension for label in self.labels), default=-1)


@dataclass(frozen=True)
class FiberEmbedding:
    """One fiber's pipeline output: certified map, metric reference, report."""

    label: str
    map: PLMap        # certified general-position images of the subdivided fiber
    reference: PLMap  # same subdivided complex, original images; the fiber metric
    report: object    # PerturbationReport


@dataclass(frozen=True)
class EtaSecantRecord:
    """A secant whose two preimages are certified at least eta apart."""

    record: SecantRecord
    fiber_distance_sq: Fraction
    eta: Fraction


def derive_seed(root: int, label: str) -> int:
    """Per-label working seed: leading 8 bytes of sha256("<root>|<label>")."""
    digest = sha256(f"{root}|{label}".encode("utf-8")).digest()
    return int.from_bytes(digest[:8], "big")


def fiber_distance_sq(emb: FiberEmbedding, x1, x2) -> Fraction:
    """Exact squared distance between two polyhedron points in the fiber metric."""
    return dist_sq(evaluate(emb.reference, x1), evaluate(emb.reference, x2))


def fiberwise_embed(inst: FiberedInstance, delta, seed: int) -> dict:
    """Subdivide and perturb every fiber independently; label -> FiberEmbedding.

    A perturbation budget failure on any fiber is re-raised with that fiber's
    label prefixed, carrying the failing certificate.
    """
    delta = rat(delta)
    if delta <= 0:
        raise PreconditionError("delta must be positive")
    n = inst.dimension
    if inst.labels and inst.m < 2 * n + 1:
        raise PreconditionError(
            "ambient dimension %d is below the general-position bound %d"
            % (inst.m, 2 * n + 1)
        )
    out = {}
    for label in sorted(inst.labels):
        reference = subdivide_until(inst.references[label], delta)
        try:
            embedded, report = perturb_to_general_position(
                reference, delta, derive_seed(seed, label)
            )
        except PerturbationBudgetError as exc:
            raise PerturbationBudgetError(
                f"fiber {label!r}: {exc}", certificate=exc.certificate
            ) from exc
        out[label] = FiberEmbedding(label, embedded, reference, report)
    return out


def eta_secant_set(embeddings: dict, inst: FiberedInstance, label, z, eta) -> list:
    """Secants of the labelled fiber whose preimages are at least eta apart.

    The filter is closed (kept when the exact squared fiber distance equals
    eta squared), so shrinking eta can only grow the result.
    """
    eta = rat(eta)
    if eta <= 0:
        raise PreconditionError("eta must be positive")
    if label not in inst.fibers:
        raise ValueError(f"unknown fiber label {label!r}")
    if label not in embeddings:
        raise ValueError(f"no embedding for fiber label {label!r}")
    emb = embeddings[label]
    records = secant_set(emb.map, vec(z), certificate=emb.report.certificate)
    return _filter_by_eta(emb, records, eta)


def _filter_by_eta(emb, records, eta):
    eta_sq = eta * eta
    out = []
    for rec in records:
        d2 = fiber_distance_sq(emb, rec.witnesses[0][2], rec.witnesses[1][2])
        if d2 >= eta_sq:
            out.append(EtaSecantRecord(rec, d2, eta))
    return out


def u_map_fine_enough(emb: FiberEmbedding, eta) -> bool:
    """Whether eta-separated points are guaranteed distinct barycentric carriers.

    Sufficient condition: every simplex of the working subdivision has fiber
    diameter strictly below eta, so two points sharing a closed simplex are
    closer than eta.  Reports flag fibers failing this check; they are not
    refined automatically.
    """
    eta = rat(eta)
    eta_sq = eta * eta
    return all(
        image_diameter_sq(emb.reference, s) < eta_sq
        for s in emb.reference.complex.maximal_simplices()
    )


def fibered_report(
    embeddings: dict,
    inst: FiberedInstance,
    k,
    count: int,
    etas=None,
    seed: int = 0,
    epsilon=DEFAULT_COVER_EPSILON,
):
    """Probe every fiber and certify its eta-filtered secant sets.

    For each label in sorted order: draw `count` probe points from the
    admissible region of that fiber's embedding, enumerate the secants of
    each, filter by every eta, and attach a disjoint-ball cover certificate
    per filtered set.  Probe randomness derives from the root seed and the
    label, so per-fiber results are independent of each other.
    """
    k = rat(k)
    if k <= 0:
        raise PreconditionError("k must be positive")
    if count < 0:
        raise PreconditionError("sample count must be nonnegative")
    if etas is None:
        etas = inst.eta
    etas = tuple(rat(e) for e in etas)
    if any(e <= 0 for e in etas):
        raise PreconditionError("eta values must be positive")
    fibers = {}
    for label in sorted(inst.labels):
        if label not in embeddings:
            raise ValueError(f"no embedding for fiber label {label!r}")
        emb = embeddings[label]
        cert = emb.report.certificate
        probes = probe_region_samples(
            emb.map, k, count, derive_seed(seed, label + "|probe")
        )
        samples = []
        for probe in probes:
            records = secant_set(emb.map, probe.z, certificate=cert)
            entry = {
                "z": [rat_str(x) for x in probe.z],
                "image_distance_sq": rat_str(probe.image_distance_sq),
                "secants": len(records),
                "records": [record_to_obj(rec) for rec in records],
            }
            if etas:
                by_eta = {}
                for eta in etas:
                    kept = _filter_by_eta(emb, records, eta)
                    cover = zero_dim_certificate(
                        [er.record for er in kept], epsilon, k
                    )
                    by_eta[rat_str(eta)] = {
                        "count": len(kept),
                        "records": [eta_record_to_obj(er) for er in kept],
                        "certificate": cover_certificate_to_obj(cover),
                    }
                entry["eta"] = by_eta
            samples.append(entry)
        fibers[label] = {
            "perturbation": report_to_obj(emb.report),
            "u_map": {rat_str(e): u_map_fine_enough(emb, e) for e in etas},
            "samples": samples,
        }
    return {
        "k": rat_str(k),
        "count": count,
        "epsilon": epsilon,
        "eta": [rat_str(e) for e in etas],
        "seed": seed,
        "fibers": fibers,
    }


def eta_record_to_obj(er: EtaSecantRecord) -> dict:
    obj = record_to_obj(er.record)
    obj["fiber_distance_sq"] = rat_str(er.fiber_distance_sq)
    obj["eta"] = rat_str(er.eta)
    return obj


def instance_to_obj(inst: FiberedInstance) -> dict:
    return {
        "fibers": {
            label: complex_to_obj(inst.fibers[label]) for label in inst.labels
        },
        "reference_embeddings": {
            label: plmap_to_obj(inst.references[label]) for label in inst.labels
        },
        "m": inst.m,
        "eta": [rat_str(e) for e in inst.eta],
    }


def instance_from_obj(obj) -> FiberedInstance:
    """Parse {"fibers", "reference_embeddings", "m", "eta"}; labels sort canonically."""
    if not isinstance(obj, dict):
        raise ValueError("instance JSON must be an object")
    if not isinstance(obj.get("fibers"), dict):
        raise ValueError("instance JSON lacks a fibers object")
    refs_obj = obj.get("reference_embeddings")
    if not isinstance(refs_obj, dict):
        raise ValueError("instance JSON lacks a reference_embeddings object")
    if "m" not in obj:
        raise ValueError("instance JSON lacks the ambient dimension m")
    m = int(obj["m"])
    labels = tuple(sorted(str(label) for label in obj["fibers"]))
    extra = sorted(set(map(str, refs_obj)) - set(labels))
    if extra:
        raise ValueError(f"reference embedding for unknown fiber label {extra[0]!r}")
    fibers = {}
    references = {}
    for label in labels:
        c, _ = complex_from_obj(obj["fibers"][label])
        if label not in refs_obj:
            raise ValueError(f"no reference embedding for fiber label {label!r}")
        ref = plmap_from_obj(refs_obj[label])
        if ref.complex.simplices != c.simplices:
            raise ValueError(
                f"reference embedding of {label!r} is not a map on that fiber"
            )
        fibers[label] = c
        # rebind onto the fiber complex so marks have one source of truth
        references[label] = PLMap(c, ref.m, ref.images)
    eta = tuple(rat(e) for e in obj.get("eta", []))
    return FiberedInstance(labels, fibers, references, m, eta)
