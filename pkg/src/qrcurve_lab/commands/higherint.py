from qrcurve_lab.commands.context import CommandContext
from qrcurve_lab.errors import LabError

HELP = "integral of |Df|^(np) over a ball against inf comass^(-p) K^p times the integral of density^p"
CSV_HEADER = ("p", "q", "K", "inf_comass", "lhs", "lhs_error", "rhs", "rhs_error", "rhs_value", "passed")


def run(context: CommandContext) -> int:
    config, analysis = context.config, context.config.analysis
    try:
        f, form = config.build_curve(), config.build_form()
        report = context.services.holder_service.higher_integrability_check(
            f,
            form,
            config.default_ball(),
            analysis.p,
            analysis.k,
            config.quadrature,
            config.optimizer,
            analysis.comass_samples,
        )
    except LabError as e:
        return context.fail("Exception in higher integrability check.", e)

    context.csv_header = CSV_HEADER
    context.csv_rows = [
        (
            report.p,
            report.q,
            report.k,
            report.inf_comass,
            report.lhs.value,
            report.lhs.error_bound,
            report.rhs.value,
            report.rhs.error_bound,
            report.rhs_value,
            report.passed,
        )
    ]
    summary = f"higherint: {f.name} lhs={report.lhs.value:.6g} rhs={report.rhs_value:.6g} K={report.k:.6g}"
    return context.finish({"higher_integrability": report}, report.passed, summary)
