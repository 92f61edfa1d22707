from qrcurve_lab.commands.context import CommandContext
from qrcurve_lab.curves import TorusLinearCurve, closest_grid_point, density_witness, rational_obstruction
from qrcurve_lab.errors import DimensionMismatchError, LabError
from qrcurve_lab.logging import getLogger
from qrcurve_lab.models.reports import DensityReport, ObstructionReport

logger = getLogger(name=__name__)

HELP = "distance from the image of a torus linear curve to a target point on a finite grid"
CSV_HEADER = ("y", "v", "rational", "distance", "closest", "bound", "passed")

MAX_LISTED_ELEMENTS = 1000
ROUNDOFF = 1e-12


def run(context: CommandContext) -> int:
    config, analysis = context.config, context.config.analysis
    try:
        f = config.build_curve()
        if not isinstance(f, TorusLinearCurve):
            raise DimensionMismatchError("density needs a torus linear curve (curve.kind: torus_linear)")
        v = analysis.point()
        distance, closest = closest_grid_point(f, v, config.grid, workers=config.quadrature.workers)
        report = DensityReport(
            y=f.slope_literals(),
            v=list(analysis.v),
            rational=f.is_rational,
            grid=f"[{config.grid.low}, {config.grid.high}]^{f.n} step {config.grid.step}",
            distance=distance,
            closest=closest.tolist(),
            passed=False,
        )
        if f.is_rational:
            obstruction = rational_obstruction(f.y_exact, v[:-1], v[-1])
            elements = obstruction.elements() if obstruction.order <= MAX_LISTED_ELEMENTS else []
            report.obstruction = ObstructionReport(
                y=report.y,
                v=report.v,
                order=obstruction.order,
                elements=[str(e) for e in elements],
                distance=obstruction.distance,
                radius=obstruction.radius,
                delta_bound=obstruction.delta_bound,
            )
            # the image misses the delta ball around v; r is reported only
            report.passed = distance >= obstruction.delta_bound - ROUNDOFF
        else:
            report.threshold = analysis.threshold
            report.passed = distance < analysis.threshold
            if analysis.witness_delta is not None:
                witness = density_witness(f, v, analysis.witness_delta, analysis.witness_search)
                report.witness = witness.point.tolist()
                report.witness_distance = witness.distance
                report.passed = report.passed and witness.distance < analysis.witness_delta
    except LabError as e:
        return context.fail("Exception in density probe.", e)

    logger.info("density probed", extra={"context": {"distance": distance, "rational": report.rational}})
    verdict = "pass" if report.passed else "fail"
    if report.obstruction is not None:
        bound = f"delta = {report.obstruction.delta_bound:.6g} (r = {report.obstruction.radius:.6g})"
        bound_value = report.obstruction.delta_bound
    else:
        bound = f"threshold {analysis.threshold:.6g}"
        bound_value = analysis.threshold
    context.csv_header = CSV_HEADER
    closest_text = " ".join(f"{c:.12g}" for c in report.closest)
    context.csv_rows = [
        (" ".join(report.y), " ".join(report.v), report.rational, distance, closest_text, bound_value, report.passed)
    ]
    kind = "rational" if report.rational else "irrational"
    summary = f"density: {kind} slope, min distance {distance:.6g}, {bound}: {verdict}"
    return context.finish({"density": report}, report.passed, summary)
