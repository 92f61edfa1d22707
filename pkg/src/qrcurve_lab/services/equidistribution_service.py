import math
from typing import List, Optional, Sequence, Tuple

import numpy as np

from qrcurve_lab.curves import CurveMap
from qrcurve_lab.errors import DegreeError, LabError
from qrcurve_lab.logging import getLogger
from qrcurve_lab.manifold import FormField, derivative_field
from qrcurve_lab.models.reports import DoublingGap, EquiReport, EquiRow
from qrcurve_lab.models.specs import QuadratureSpec
from qrcurve_lab.quadrature import ball_integral, log_measure, normalize_intervals, sphere_integral
from qrcurve_lab.services.integrands import DensityField

logger = getLogger(name=__name__)

ROUNDOFF = 1e-9


def default_delta(n: int) -> float:
    return (2.0 * n - 1.0) / (2.0 * n)


def exception_cells(radii: Sequence[float], flagged: Sequence[bool]) -> List[Tuple[float, float]]:
    """Grid cells around flagged radii, bounded by geometric midpoints and clipped to [1, inf)."""
    cells = []
    for i, (r, hit) in enumerate(zip(radii, flagged)):
        if not hit:
            continue
        low = math.sqrt(radii[i - 1] * r) if i > 0 else r
        high = math.sqrt(r * radii[i + 1]) if i + 1 < len(radii) else r
        cells.append((max(1.0, low), max(1.0, high)))
    return normalize_intervals(cells)


def _covers(intervals: Sequence[Tuple[float, float]], low: float, high: float) -> bool:
    return any(a <= low and high <= b for a, b in intervals)


class EquidistributionService:
    """
    Ratio of the growth of form = form0 - d(tau) to the growth of form0 along a radius schedule

    The sphere term, the integral of f*tau over S(r), is computed directly and
    through Stokes as A_form0(r) - A_form(r). Radii r >= 1 where
    A_form0(r)^delta <= |sphere term| form the detected exception set.
    """

    def report(
        self,
        f: CurveMap,
        form0: FormField,
        tau: FormField,
        radii: Sequence[float],
        delta: Optional[float] = None,
        spec: Optional[QuadratureSpec] = None,
        epsilon: Optional[float] = None,
    ) -> EquiReport:
        n = f.n
        if tau.degree != n - 1:
            raise DegreeError(f"tau must have degree {n - 1}, got {tau.degree}")
        delta = default_delta(n) if delta is None else delta
        if not (n - 1.0) / n < delta < 1.0:
            raise LabError(f"delta must lie in (({n}-1)/{n}, 1), got {delta}")
        radii = [float(r) for r in radii]
        if not radii or any(r <= 0 for r in radii) or any(b <= a for a, b in zip(radii, radii[1:])):
            raise LabError(f"radii must be positive and increasing, got {radii}")
        form = form0 - derivative_field(tau)
        origin = np.zeros(n)

        rows = []
        for r in radii:
            closed = ball_integral(DensityField(f, form0), origin, r, spec)
            area = ball_integral(DensityField(f, form), origin, r, spec)
            sphere = sphere_integral(f, tau, r, spec)
            stokes = closed.value - area.value
            gap = abs(sphere.value - stokes)
            tolerance = (
                sphere.error_bound
                + closed.error_bound
                + area.error_bound
                + ROUNDOFF * max(1.0, abs(closed.value), abs(area.value))
            )
            row = EquiRow(
                radius=r,
                area_closed=closed.value,
                area=area.value,
                sphere=sphere.value,
                sphere_error=sphere.error_bound,
                stokes=stokes,
                stokes_gap=gap,
                stokes_ok=gap <= tolerance,
            )
            if closed.value <= 0:
                row.excluded = True
                logger.warning("radius excluded: nonpositive growth of form0", extra={"context": {"radius": r}})
            else:
                row.ratio = area.value / closed.value
                row.flagged = r >= 1.0 and closed.value ** delta <= abs(sphere.value)
                if not row.flagged:
                    row.decay_bound = closed.value ** (delta - 1.0)
                    row.decay_ok = abs(row.ratio - 1.0) <= row.decay_bound
            rows.append(row)

        intervals = exception_cells(radii, [row.flagged for row in rows])
        envelope = self._envelope(rows)
        report = EquiReport(
            delta=delta,
            rows=rows,
            exception_intervals=intervals,
            log_measure=log_measure(intervals),
            stokes_agreement=all(row.stokes_ok for row in rows),
            decay_passed=all(row.decay_ok for row in rows if row.decay_ok is not None),
            envelope=envelope,
            envelope_monotone=all(b <= a for a, b in zip(envelope, envelope[1:])),
            epsilon=epsilon,
            doubling_gaps=[
                DoublingGap(radius=row.radius, covered=_covers(intervals, row.radius / 2.0, row.radius))
                for row in rows
                if row.flagged
            ],
        )
        if epsilon is not None:
            report.growth_off_exceptions = [
                (row.radius, row.area / row.radius ** epsilon) for row in rows if not row.flagged and not row.excluded
            ]
        logger.info(
            "equidistribution report ready",
            extra={
                "context": {
                    "flagged": sum(row.flagged for row in rows),
                    "log_measure": report.log_measure,
                    "stokes_agreement": report.stokes_agreement,
                }
            },
        )
        return report

    @staticmethod
    def _envelope(rows: Sequence[EquiRow]) -> List[float]:
        """max over r' >= r of |ratio(r') - 1|, over rows that are neither flagged nor excluded."""
        envelope: List[float] = []
        running = 0.0
        for row in reversed(rows):
            if row.ratio is not None and not row.flagged:
                running = max(running, abs(row.ratio - 1.0))
            envelope.append(running)
        return envelope[::-1]
