from qrcurve_lab.commands.context import CommandContext
from qrcurve_lab.errors import LabError
from qrcurve_lab.services.growth_service import epsilon_and_constant

HELP = "ratio A_form(r) / A_form0(r) for form = form0 - d(tau), with the detected exception set"
CSV_HEADER = ("r", "A", "A_over_r_eps", "ratio", "flagged")


def run(context: CommandContext) -> int:
    config, analysis = context.config, context.config.analysis
    try:
        f, form0, tau = config.build_curve(), config.build_form(), config.build_tau()
        context.lap("setup")
        epsilon = analysis.epsilon
        if epsilon is None:
            epsilon, _ = epsilon_and_constant(f.n, analysis.p, 1.0)
        report = context.services.equidistribution_service.report(
            f, form0, tau, config.radius_schedule(), analysis.delta, config.quadrature, epsilon
        )
        context.lap("report")
    except LabError as e:
        return context.fail("Exception in equidistribution report.", e)

    context.csv_header = CSV_HEADER
    context.csv_rows = [
        (row.radius, row.area, row.area / row.radius ** epsilon, row.ratio, row.flagged) for row in report.rows
    ]
    passed = report.stokes_agreement and report.decay_passed
    summary = (
        f"equi: {f.name} delta={report.delta:.6g} flagged={sum(row.flagged for row in report.rows)} "
        f"log_measure={report.log_measure:.6g} stokes={'ok' if report.stokes_agreement else 'off'}"
    )
    return context.finish({"equidistribution": report}, passed, summary)
