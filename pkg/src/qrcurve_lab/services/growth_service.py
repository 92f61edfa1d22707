from typing import Optional, Sequence, Tuple

import numpy as np

from qrcurve_lab.curves import CurveMap
from qrcurve_lab.errors import LabError
from qrcurve_lab.logging import getLogger
from qrcurve_lab.manifold import FormField
from qrcurve_lab.models.reports import FastGrowthVerdict, GrowthReport, IntegralEstimate
from qrcurve_lab.models.specs import QuadratureSpec
from qrcurve_lab.quadrature import ball_integral, ball_volume
from qrcurve_lab.services.integrands import DensityField

logger = getLogger(name=__name__)

ROUNDOFF = 1e-9


def default_radii(count: int = 7) -> Tuple[float, ...]:
    return tuple(float(2 ** k) for k in range(count))


def epsilon_and_constant(n: int, p: float, c_p: float) -> Tuple[float, float]:
    """Growth order and constant produced by a weak reverse Hoelder inequality with constant c_p.

    epsilon = n (1 - 1/p) and C = |B^n(1)|^(1 - 1/p) 2^(n/p) / c_p.
    """
    if p <= 1:
        raise LabError(f"reverse Hoelder exponent must exceed 1, got p = {p}")
    if c_p <= 0:
        raise LabError(f"reverse Hoelder constant must be positive, got {c_p}")
    epsilon = n * (1.0 - 1.0 / p)
    constant = ball_volume(n) ** (1.0 - 1.0 / p) * 2.0 ** (n / p) / c_p
    return epsilon, constant


def _fitted_slope(radii: np.ndarray, values: np.ndarray) -> Optional[float]:
    tail = slice(len(radii) // 2, None)
    r, a = radii[tail], values[tail]
    keep = a > 0
    if keep.sum() < 2:
        return None
    slope, _ = np.polyfit(np.log(r[keep]), np.log(a[keep]), 1)
    return float(slope)


class GrowthService:
    """
    Growth of A(r), the integral of the pullback density over centered balls

    Methods
    -------
    growth_function(f, form, radii, spec, epsilon)
    tabulates A(r) and A(r)/r^epsilon
    fast_growth_check(report, c_p, p, r0, f, form, spec)
    checks the reverse Hoelder => fast growth chain on the tabulated radii
    """

    def growth_function(
        self,
        f: CurveMap,
        form: FormField,
        radii: Sequence[float],
        spec: Optional[QuadratureSpec] = None,
        epsilon: float = 1.0,
    ) -> GrowthReport:
        radii = [float(r) for r in radii]
        if not radii or any(r <= 0 for r in radii) or any(b <= a for a, b in zip(radii, radii[1:])):
            raise LabError(f"radii must be positive and increasing, got {radii}")
        density = DensityField(f, form)
        origin = np.zeros(f.n)
        areas = [ball_integral(density, origin, r, spec) for r in radii]
        values = np.array([a.value for a in areas])
        normalized = [a.value / r ** epsilon for a, r in zip(areas, radii)]
        monotone = all(
            later.value
            >= earlier.value - earlier.error_bound - later.error_bound - ROUNDOFF * max(1.0, abs(later.value))
            for earlier, later in zip(areas, areas[1:])
        )
        if not density.saw_negative and not monotone:
            logger.warning("A(r) decreases although the density is nonnegative", extra={"context": {"radii": radii}})
        tail = normalized[len(normalized) // 2:]
        report = GrowthReport(
            dimension=f.n,
            radii=radii,
            areas=areas,
            epsilon=epsilon,
            normalized=normalized,
            tail_min=float(min(tail)),
            slope=_fitted_slope(np.array(radii), values),
            monotone=monotone,
        )
        logger.info(
            "growth tabulated",
            extra={"context": {"curve": f.name, "tail_min": report.tail_min, "slope": report.slope}},
        )
        return report

    def p_norm(self, f: CurveMap, form: FormField, p: float, r: float, spec: Optional[QuadratureSpec] = None):
        """(integral over B(r) of |density|^p)^(1/p) with its propagated error."""
        estimate: IntegralEstimate = ball_integral(DensityField(f, form).power(p), np.zeros(f.n), r, spec)
        value = max(estimate.value, 0.0)
        upper = (value + estimate.error_bound) ** (1.0 / p)
        return value ** (1.0 / p), upper - value ** (1.0 / p)

    def fast_growth_check(
        self,
        report: GrowthReport,
        c_p: float,
        p: float,
        r0: float,
        f: CurveMap,
        form: FormField,
        spec: Optional[QuadratureSpec] = None,
    ) -> FastGrowthVerdict:
        """A(r)/r^eps >= C (integral over B(r0/2) of density^p)^(1/p) for every tabulated r >= r0."""
        epsilon, constant = epsilon_and_constant(report.dimension, p, c_p)
        covered = [(r, a) for r, a in zip(report.radii, report.areas) if r >= r0]
        if not covered:
            raise LabError(f"growth report has no radius >= r0 = {r0}")
        norm, norm_error = self.p_norm(f, form, p, r0 / 2.0, spec)
        rhs = constant * norm
        verdict = FastGrowthVerdict(passed=True, epsilon=epsilon, constant=constant, p=p, c_p=c_p, r0=r0, p_norm=norm)
        for r, area in covered:
            lhs = area.value / r ** epsilon
            margin = lhs - rhs
            slack = area.error_bound / r ** epsilon + constant * norm_error + ROUNDOFF * max(1.0, abs(lhs), abs(rhs))
            if verdict.worst_margin is None or margin < verdict.worst_margin:
                verdict.worst_margin, verdict.worst_radius = margin, r
            if margin < -slack or area.value <= area.error_bound:
                verdict.passed = False
        logger.info(
            "fast growth chain checked",
            extra={"context": {"passed": verdict.passed, "epsilon": epsilon, "constant": constant}},
        )
        return verdict
