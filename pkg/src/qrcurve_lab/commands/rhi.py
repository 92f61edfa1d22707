from qrcurve_lab.commands.context import CommandContext
from qrcurve_lab.errors import LabError
from qrcurve_lab.models.reports import HolderReport

HELP = "empirical reverse Hoelder constant over a ball family"
CSV_HEADER = ("center", "radius", "lhs", "rhs", "ratio", "excluded")


def holder_rows(report: HolderReport):
    return [
        (" ".join(repr(c) for c in ball.center), ball.radius, ball.lhs, ball.rhs, ball.ratio, ball.excluded)
        for ball in report.balls
    ]


def within(report: HolderReport, c_p) -> bool:
    """A constant was found and, when a bound is configured, it does not exceed it."""
    if report.c_hat is None:
        return False
    return c_p is None or report.c_hat <= c_p


def run(context: CommandContext) -> int:
    config = context.config
    try:
        f, form = config.build_curve(), config.build_form()
        report = context.services.holder_service.reverse_holder_estimate(
            f, form, config.balls, config.analysis.p, config.quadrature
        )
    except LabError as e:
        return context.fail("Exception in reverse Hoelder estimate.", e)

    context.csv_header = CSV_HEADER
    context.csv_rows = holder_rows(report)
    summary = f"rhi: {f.name} p={report.p} C_hat={report.c_hat} over {len(report.balls)} balls"
    return context.finish({"holder": report}, within(report, config.analysis.c_p), summary)
