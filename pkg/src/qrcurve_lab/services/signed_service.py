from dataclasses import dataclass
from enum import Enum
from typing import List, Optional, Sequence

import numpy as np

from qrcurve_lab.curves import CurveMap, operator_norms, pullback_density
from qrcurve_lab.errors import DegreeError, DimensionMismatchError, RepresentationError
from qrcurve_lab.exterior import Covector, comass, hodge_star, inner
from qrcurve_lab.logging import getLogger
from qrcurve_lab.manifold import FormField, TargetManifold, eval_form
from qrcurve_lab.models.reports import SignVerdict, TermSign, TermVerdict
from qrcurve_lab.models.specs import OptimizerConfig, SampleSpec

logger = getLogger(name=__name__)

ETA = 1e-12
RECONSTRUCTION_TOL = 1e-8
MAX_WITNESSES = 4


class RepresentationKind(str, Enum):
    F_SIGNED = "f-signed"
    R_LINEAR = "R-linear"


@dataclass(frozen=True)
class RepresentationTerm:
    phi: FormField
    alpha: FormField
    beta: FormField

    def product(self) -> FormField:
        return self.alpha.wedge(self.beta)


class SignedRepresentation:
    """omega = sum_i phi_i alpha_i ^ beta_i with bounded phi_i and closed bounded alpha_i, beta_i."""

    def __init__(self, terms: Sequence[RepresentationTerm], kind: RepresentationKind = RepresentationKind.F_SIGNED):
        if not terms:
            raise RepresentationError("a representation needs at least one term")
        target = terms[0].alpha.target
        degree = terms[0].alpha.degree + terms[0].beta.degree
        for i, term in enumerate(terms):
            for part in (term.phi, term.alpha, term.beta):
                if part.target != target:
                    raise DimensionMismatchError(f"term {i}: forms live on different targets")
            if term.phi.degree != 0:
                raise DegreeError(f"term {i}: phi must be a function, got degree {term.phi.degree}")
            if term.alpha.degree + term.beta.degree != degree:
                raise DegreeError(f"term {i}: alpha ^ beta has degree {term.alpha.degree + term.beta.degree}")
            if not 1 <= term.alpha.degree <= degree - 1:
                raise DegreeError(f"term {i}: alpha degree {term.alpha.degree} outside [1, {degree - 1}]")
            for name, part in (("alpha", term.alpha), ("beta", term.beta)):
                if not part.is_closed:
                    raise RepresentationError(f"term {i}: {name} must be closed")
                if not part.is_constant and not part.check_closed():
                    raise RepresentationError(f"term {i}: {name} is declared closed but d{name} does not vanish")
            if kind == RepresentationKind.R_LINEAR and not term.phi.is_constant:
                raise RepresentationError(f"term {i}: an R-linear representation needs constant phi")
        self.terms = tuple(terms)
        self.kind = kind
        self.target = target
        self.degree = degree

    def form(self) -> FormField:
        total = FormField.zero(self.target, self.degree, name="rep")
        for term in self.terms:
            total = total + term.phi.wedge(term.product())
        return total

    def reconstruction_error(self, form: FormField, samples: int = 1000, seed: int = 0) -> float:
        if form.target != self.target or form.degree != self.degree:
            raise DimensionMismatchError("representation and form differ in target or degree")
        rebuilt = self.form()
        points = self.target.sample(samples, seed=seed, box=(-4.0, 4.0))
        return max(
            (eval_form(rebuilt, point) - eval_form(form, point)).max_abs() for point in points
        )


def split_representation(alpha: FormField, beta: FormField) -> SignedRepresentation:
    """omega = alpha ^ beta with closed bounded factors as a single-term R-linear representation."""
    if alpha.target != beta.target:
        raise DimensionMismatchError(f"factors live on {alpha.target} and {beta.target}")
    phi = FormField.constant(alpha.target, Covector.scalar(alpha.ambient_dim, 1.0), sup_bound=1.0, name="1")
    return SignedRepresentation([RepresentationTerm(phi, alpha, beta)], RepresentationKind.R_LINEAR)


def torus_product_representation(n: int) -> SignedRepresentation:
    """dx1 ^ (dx2 ^ ... ^ dxn) on T^{n+1}."""
    target = TargetManifold.flat_torus(n + 1)
    alpha = FormField.constant(target, Covector.basis(n + 1, [1]), sup_bound=1.0, name="dx1")
    beta = FormField.constant(target, Covector.basis(n + 1, range(2, n + 1)), sup_bound=1.0, name="dx2..n")
    return split_representation(alpha, beta)


def torus_signed_representation(degree: int, target: TargetManifold, xi: Optional[Covector] = None):
    """xi ^ *xi for a constant degree-l form xi normalized so the integral of xi ^ *xi over T^m is its volume."""
    m = target.dim
    if not target.is_torus:
        raise DimensionMismatchError(f"torus representation needs a flat torus, got {target}")
    if not 1 <= degree <= m - 1:
        raise DegreeError(f"degree must lie in [1, {m - 1}], got {degree}")
    xi = xi if xi is not None else Covector.basis(m, range(1, degree + 1))
    if xi.ambient_dim != m or xi.degree != degree:
        raise DegreeError(f"xi must be a {degree}-covector on R^{m}")
    if xi.is_zero():
        raise RepresentationError("xi must be nonzero")
    # the fundamental domain has unit volume, so the normalization is |xi| = 1
    xi = xi / np.sqrt(inner(xi, xi))
    star = hodge_star(xi)
    alpha = FormField.constant(target, xi, sup_bound=comass(xi), name="xi")
    beta = FormField.constant(target, star, sup_bound=comass(star), name="*xi")
    return split_representation(alpha, beta)


def _sup_norm(form: FormField, samples: int, cfg: Optional[OptimizerConfig], seed: int) -> float:
    if form.sup_bound is not None:
        return form.sup_bound
    points = form.target.sample(1 if form.is_constant else samples, seed=seed, box=(-4.0, 4.0))
    return max(comass(eval_form(form, point), cfg) for point in points)


def representation_cost(
    rep: SignedRepresentation, samples: int = 256, cfg: Optional[OptimizerConfig] = None, seed: int = 0
) -> float:
    """sum_i |phi_i|_inf |alpha_i|_inf |beta_i|_inf from declared bounds, sampled comass otherwise."""
    total = 0.0
    for term in rep.terms:
        norms = [_sup_norm(part, samples, cfg, seed) for part in (term.phi, term.alpha, term.beta)]
        total += norms[0] * norms[1] * norms[2]
    return total


def _classify(values: np.ndarray, scale: np.ndarray, points: np.ndarray, index: int) -> TermVerdict:
    threshold = ETA * scale
    positive = np.flatnonzero(values > threshold)
    negative = np.flatnonzero(values < -threshold)
    if positive.size and negative.size:
        verdict = TermSign.MIXED
        picks = list(positive[: MAX_WITNESSES // 2]) + list(negative[: MAX_WITNESSES // 2])
        witnesses = [points[i].tolist() for i in picks]
    else:
        verdict = TermSign.NONNEGATIVE if positive.size else TermSign.NONPOSITIVE if negative.size else TermSign.ZERO
        witnesses = []
    return TermVerdict(
        index=index,
        verdict=verdict,
        minimum=float(values.min()) if values.size else 0.0,
        maximum=float(values.max()) if values.size else 0.0,
        witnesses=witnesses,
    )


class SignedService:
    """
    Sign checks of pulled-back representation terms

    Methods
    -------
    signed_check(rep, f, sample_spec)
    per-term sign verdicts of star f*(alpha_i ^ beta_i) on a sample
    """

    def signed_check(
        self,
        rep: SignedRepresentation,
        f: CurveMap,
        sample_spec: SampleSpec,
        form: Optional[FormField] = None,
        cfg: Optional[OptimizerConfig] = None,
    ) -> SignVerdict:
        if rep.target != f.target or rep.degree != f.n:
            raise DimensionMismatchError(f"representation reconstructs a {rep.degree}-form on {rep.target}")
        error = None
        if form is not None:
            error = rep.reconstruction_error(form)
            if error > RECONSTRUCTION_TOL:
                raise RepresentationError(f"representation does not reconstruct {form.name!r}: error {error:.3e}")
        points = sample_spec.points(f.n)
        jacobian_scale = operator_norms(f.differentials(points)) ** f.n
        verdicts: List[TermVerdict] = []
        for i, term in enumerate(rep.terms):
            product = term.product()
            values = pullback_density(f, product, points)
            coefficients = np.abs(product.coefficient_matrix(f.positions(points))).sum(axis=1)
            verdicts.append(_classify(values, coefficients * jacobian_scale, points, i))
        verdict = SignVerdict(
            kind=rep.kind.value,
            samples=sample_spec.describe(),
            terms=verdicts,
            signed=all(v.verdict != TermSign.MIXED for v in verdicts),
            reconstruction_error=error,
            cost=representation_cost(rep, cfg=cfg),
        )
        logger.info(
            "sign verdicts",
            extra={"context": {"signed": verdict.signed, "terms": [v.verdict.value for v in verdicts]}},
        )
        return verdict
