from typing import List, Optional

from qrcurve_lab.curves import CurveMap, distortion_sup
from qrcurve_lab.errors import LabError
from qrcurve_lab.logging import getLogger
from qrcurve_lab.manifold import FormField, inf_comass
from qrcurve_lab.models.reports import BallRecord, HigherIntegrabilityReport, HolderReport, InequalityKind
from qrcurve_lab.models.specs import Ball, BallFamilySpec, OptimizerConfig, QuadratureSpec, SampleSpec
from qrcurve_lab.quadrature import ball_integral
from qrcurve_lab.services.integrands import DensityField, differential_power

logger = getLogger(name=__name__)

ROUNDOFF = 1e-9
DISTORTION_SAMPLES = 1000


class HolderService:
    """
    Empirical reverse Hoelder constants over ball families and the higher integrability inequality

    Methods
    -------
    reverse_holder_estimate(f, form, family, p, spec)
    (mean of density^p over B/2)^(1/p) against the mean density over B
    prop4_check(f, form, family, spec)
    mean density over B/2 against (mean of density^(n/(n+1)) over B)^((n+1)/n)
    higher_integrability_check(f, form, ball, p, k, spec, cfg)
    integral of |Df|^(np) against inf_comass^(-p) K^p times the integral of density^p
    """

    def _summarize(self, kind: InequalityKind, p: float, family: BallFamilySpec, records: List[BallRecord]):
        ratios = [(i, r.ratio) for i, r in enumerate(records) if r.ratio is not None]
        report = HolderReport(kind=kind, p=p, family=family.describe(), balls=records)
        if ratios:
            report.worst_ball, report.c_hat = max(ratios, key=lambda item: (item[1], -item[0]))
        logger.info(
            f"{kind.value} constant estimated",
            extra={"context": {"c_hat": report.c_hat, "balls": len(records), "worst": report.worst_ball}},
        )
        return report

    def _exclude(self, ball: Ball, lhs: float, rhs: float, negative: bool) -> BallRecord:
        logger.warning(
            "ball excluded: nonpositive mean on the right-hand side",
            extra={"context": {"center": ball.center, "radius": ball.radius, "rhs": rhs}},
        )
        return BallRecord(
            center=ball.center, radius=ball.radius, lhs=lhs, rhs=rhs, excluded=True, negative_density=negative
        )

    def reverse_holder_estimate(
        self,
        f: CurveMap,
        form: FormField,
        family: BallFamilySpec,
        p: float,
        spec: Optional[QuadratureSpec] = None,
    ) -> HolderReport:
        if p <= 1:
            raise LabError(f"reverse Hoelder exponent must exceed 1, got p = {p}")
        records = []
        for ball in family.build(f.n):
            density, half = DensityField(f, form), ball.half()
            powered = density.power(p)
            lhs = ball_integral(powered, half.center, half.radius, spec, average=True).value ** (1.0 / p)
            rhs = ball_integral(density, ball.center, ball.radius, spec, average=True).value
            negative = density.saw_negative or powered.saw_negative
            if rhs <= 0:
                records.append(self._exclude(ball, lhs, rhs, negative))
                continue
            records.append(
                BallRecord(
                    center=ball.center, radius=ball.radius, lhs=lhs, rhs=rhs, ratio=lhs / rhs, negative_density=negative
                )
            )
        return self._summarize(InequalityKind.REVERSE_HOLDER, p, family, records)

    def prop4_check(
        self,
        f: CurveMap,
        form: FormField,
        family: BallFamilySpec,
        spec: Optional[QuadratureSpec] = None,
    ) -> HolderReport:
        exponent = f.n / (f.n + 1.0)
        records = []
        for ball in family.build(f.n):
            density, half = DensityField(f, form), ball.half()
            powered = density.power(exponent)
            lhs = ball_integral(density, half.center, half.radius, spec, average=True).value
            mean = ball_integral(powered, ball.center, ball.radius, spec, average=True).value
            rhs = max(mean, 0.0) ** (1.0 / exponent)
            negative = density.saw_negative or powered.saw_negative
            if rhs <= 0:
                records.append(self._exclude(ball, lhs, rhs, negative))
                continue
            records.append(
                BallRecord(
                    center=ball.center, radius=ball.radius, lhs=lhs, rhs=rhs, ratio=lhs / rhs, negative_density=negative
                )
            )
        return self._summarize(InequalityKind.HALF_BALL, exponent, family, records)

    def higher_integrability_check(
        self,
        f: CurveMap,
        form: FormField,
        ball: Ball,
        p: float,
        k: Optional[float] = None,
        spec: Optional[QuadratureSpec] = None,
        cfg: Optional[OptimizerConfig] = None,
        comass_samples: int = 256,
    ) -> HigherIntegrabilityReport:
        if p <= 0:
            raise LabError(f"integrability exponent must be positive, got p = {p}")
        if k is None:
            k = distortion_sup(f, form, SampleSpec(count=DISTORTION_SAMPLES, ball=ball), cfg).k_hat
            if k is None:
                raise LabError("distortion is undefined on the ball: every sampled density is degenerate")
        q = f.n * p
        lowest = inf_comass(form, comass_samples, cfg)
        if lowest <= 0:
            raise LabError(f"form {form.name!r} vanishes somewhere: infimum of its comass is {lowest}")
        lhs = ball_integral(differential_power(f, q), ball.center, ball.radius, spec)
        rhs = ball_integral(DensityField(f, form).power(p), ball.center, ball.radius, spec)
        factor = lowest ** (-p) * k ** p
        rhs_value = factor * rhs.value
        slack = lhs.error_bound + factor * rhs.error_bound + ROUNDOFF * max(1.0, abs(lhs.value), abs(rhs_value))
        report = HigherIntegrabilityReport(
            p=p,
            q=q,
            k=k,
            inf_comass=lowest,
            lhs=lhs,
            rhs=rhs,
            rhs_value=rhs_value,
            passed=lhs.value <= rhs_value + slack,
        )
        logger.info(
            "higher integrability checked",
            extra={"context": {"lhs": lhs.value, "rhs": rhs_value, "passed": report.passed}},
        )
        return report
