from qrcurve_lab.commands.context import CommandContext
from qrcurve_lab.curves import distortion_sup
from qrcurve_lab.errors import LabError

HELP = "empirical distortion sup of comass(form) |Df|^n / density over a random sample"
CSV_HEADER = ("curve", "evaluated", "degenerate", "K_hat", "bound", "within_bound")


def run(context: CommandContext) -> int:
    config = context.config
    try:
        f, form = config.build_curve(), config.build_form()
        report = distortion_sup(f, form, config.samples, config.optimizer, workers=config.quadrature.workers)
    except LabError as e:
        return context.fail("Exception in distortion.", e)

    context.csv_header = CSV_HEADER
    context.csv_rows = [(f.name, report.evaluated, report.degenerate, report.k_hat, report.bound, report.within_bound)]
    passed = report.k_hat is not None and report.within_bound is not False
    summary = f"distortion: {f.name} K_hat={report.k_hat} over {report.evaluated} samples"
    if report.bound is not None:
        summary += f", bound {report.bound:.6f}"
    return context.finish({"distortion": report}, passed, summary)
