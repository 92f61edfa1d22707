from qrcurve_lab.commands.context import CommandContext
from qrcurve_lab.errors import LabError

HELP = "per-term sign verdicts of a representation pulled back along the curve"
CSV_HEADER = ("term", "verdict", "minimum", "maximum")


def run(context: CommandContext) -> int:
    config = context.config
    try:
        f, form = config.build_curve(), config.build_form()
        rep = config.build_representation()
        verdict = context.services.signed_service.signed_check(rep, f, config.samples, form=form, cfg=config.optimizer)
    except LabError as e:
        return context.fail("Exception in sign check.", e)

    context.csv_header = CSV_HEADER
    context.csv_rows = [(term.index, term.verdict.value, term.minimum, term.maximum) for term in verdict.terms]
    verdicts = ", ".join(term.verdict.value for term in verdict.terms)
    summary = f"signed: {f.name} {'signed' if verdict.signed else 'not signed'} ({verdicts})"
    return context.finish({"signed": verdict}, verdict.signed, summary)
