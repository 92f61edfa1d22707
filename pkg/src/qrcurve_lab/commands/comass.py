from qrcurve_lab.commands.context import CommandContext
from qrcurve_lab.errors import ConfigError
from qrcurve_lab.exterior import Covector, comass_oracle, optimize_comass
from qrcurve_lab.logging import getLogger
from qrcurve_lab.models.reports import ComassReport

logger = getLogger(name=__name__)

HELP = "comass of a constant covector by frame ascent, with a random-frame lower bound"
CSV_HEADER = ("covector", "dim", "degree", "comass", "oracle", "closed_form")


def run(context: CommandContext) -> int:
    config = context.config
    try:
        expr = context.arguments.get("expr") or config.analysis.covector
        dim = context.arguments.get("dim") or config.analysis.dim
        if expr is None or dim is None:
            raise ConfigError(["analysis.covector: comass needs a covector literal and its ambient dimension"])
        covector = Covector.parse(expr, dim)
        result = optimize_comass(covector, config.optimizer)
        samples = config.analysis.oracle_samples
        oracle = comass_oracle(covector, samples, seed=config.optimizer.seed) if samples else None
    except ValueError as e:
        return context.fail("Exception in comass.", e)

    report = ComassReport(
        covector=str(covector),
        ambient_dim=dim,
        degree=covector.degree,
        value=result.value,
        oracle=oracle,
        closed_form=result.closed_form,
        restarts=result.restarts,
        frame=result.frame.tolist(),
    )
    # the oracle is a lower bound, so the optimizer may only beat it
    passed = oracle is None or result.value >= oracle - 1e-9 * max(1.0, oracle)
    context.csv_header = CSV_HEADER
    context.csv_rows = [(report.covector, dim, report.degree, report.value, oracle, report.closed_form)]
    logger.info("comass computed", extra={"context": {"value": report.value, "oracle": oracle}})
    summary = f"comass: {report.covector} = {report.value:.6f}"
    if oracle is not None:
        summary += f" (oracle {oracle:.6f})"
    return context.finish({"comass": report}, passed, summary)
