from qrcurve_lab.commands.context import CommandContext
from qrcurve_lab.errors import LabError
from qrcurve_lab.logging import getLogger
from qrcurve_lab.models.specs import BallFamilyKind, BallFamilySpec
from qrcurve_lab.services.growth_service import epsilon_and_constant

logger = getLogger(name=__name__)

HELP = "A(r) over centered balls, A(r)/r^eps and the fast growth chain"
CSV_HEADER = ("r", "A", "error_bound", "A_over_r_eps")


def _reverse_holder_constant(context: CommandContext, f, form, radii) -> float:
    """C_p estimated on concentric balls B(r) over the same schedule."""
    family = BallFamilySpec(kind=BallFamilyKind.CONCENTRIC, radii=radii)
    holder = context.services.holder_service.reverse_holder_estimate(
        f, form, family, context.config.analysis.p, context.config.quadrature
    )
    if holder.c_hat is None:
        logger.warning("no ball gave a reverse Hoelder ratio, using C_p = 1")
        return 1.0
    return holder.c_hat


def run(context: CommandContext) -> int:
    config, analysis = context.config, context.config.analysis
    try:
        f, form = config.build_curve(), config.build_form()
        radii = config.radius_schedule()
        epsilon = analysis.epsilon
        if epsilon is None:
            epsilon, _ = epsilon_and_constant(f.n, analysis.p, 1.0)
        service = context.services.growth_service
        report = service.growth_function(f, form, radii, config.quadrature, epsilon)
        context.lap("growth")
        c_p = analysis.c_p if analysis.c_p is not None else _reverse_holder_constant(context, f, form, radii)
        verdict = service.fast_growth_check(report, c_p, analysis.p, analysis.r0, f, form, config.quadrature)
        context.lap("fast_growth")
    except LabError as e:
        return context.fail("Exception in growth.", e)

    context.csv_header = CSV_HEADER
    context.csv_rows = [
        (r, area.value, area.error_bound, normalized)
        for r, area, normalized in zip(report.radii, report.areas, report.normalized)
    ]
    summary = (
        f"growth: {f.name} slope={report.slope} tail_min={report.tail_min:.6g} "
        f"fast_growth={'pass' if verdict.passed else 'fail'}"
    )
    return context.finish({"growth": report, "fast_growth": verdict}, verdict.passed, summary)
