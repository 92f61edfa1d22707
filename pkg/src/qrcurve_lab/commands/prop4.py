from qrcurve_lab.commands.context import CommandContext
from qrcurve_lab.commands.rhi import CSV_HEADER, holder_rows, within
from qrcurve_lab.errors import LabError

HELP = "half-ball inequality: mean density over B/2 against the n/(n+1) mean over B"


def run(context: CommandContext) -> int:
    config = context.config
    try:
        f, form = config.build_curve(), config.build_form()
        report = context.services.holder_service.prop4_check(f, form, config.balls, config.quadrature)
    except LabError as e:
        return context.fail("Exception in half-ball check.", e)

    context.csv_header = CSV_HEADER
    context.csv_rows = holder_rows(report)
    summary = f"prop4: {f.name} C_hat={report.c_hat} over {len(report.balls)} balls"
    return context.finish({"holder": report}, within(report, config.analysis.c_p), summary)
