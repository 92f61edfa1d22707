from typing import Callable

from qrcurve_lab._version import __version__
from qrcurve_lab.commands.context import ERROR, CommandContext
from qrcurve_lab.logging import getLogger
from qrcurve_lab.measure import Clock, Measure
from qrcurve_lab.run_record import RunRecord

logger = getLogger(name=__name__)


class RecordMiddleware:
    def dispatch(self, context: CommandContext, call_next: Callable[[CommandContext], int]) -> int:
        time_run: Clock = Measure.start_clock()

        context.record = RunRecord(context.command, context.canonical_config(), context.seed)
        context.clock = time_run

        exit_code = call_next(context)

        duration = time_run.stop()

        context.record.record(
            {
                "request_time": Measure.current_time(),
                "duration_total": duration,
                "laps": time_run.laps,
                "qrcurve_lab_release_version": __version__,
            }
        )
        output = context.config.output
        try:
            written = context.services.report_service.store(
                context.record, output.json_path, output.csv_path, context.csv_header, context.csv_rows
            )
            logger.info(
                f"[Record_Middleware] Run stored: '{context.record.run_id}'",
                extra={"context": {"written": written, "exit_code": exit_code, **context.record.timings()}},
            )
        except OSError as e:
            logger.error("[Record_Middleware] exception thrown in store run", exc_info=e)
            return ERROR

        return exit_code
