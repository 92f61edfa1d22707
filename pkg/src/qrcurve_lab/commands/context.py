from dataclasses import dataclass, field
from typing import Any, Dict, List, Optional, Sequence

from qrcurve_lab.errors import ConfigError, LabError, QuadratureError, SignViolationError
from qrcurve_lab.logging import getLogger
from qrcurve_lab.measure import Clock
from qrcurve_lab.models.config import ExperimentConfig
from qrcurve_lab.run_record import RunRecord
from qrcurve_lab.services.common_services import CommonServices

logger = getLogger(name=__name__)

PASSED = 0
ERROR = 1
FAILED = 2


@dataclass
class CommandContext:
    """State of one subcommand invocation, shared by the command and the record middleware."""

    command: str
    config: ExperimentConfig
    services: CommonServices
    arguments: Dict[str, Any] = field(default_factory=dict)
    record: Optional[RunRecord] = None
    summary: str = ""
    csv_header: Sequence[str] = ()
    csv_rows: List[Sequence[Any]] = field(default_factory=list)
    clock: Optional[Clock] = None

    @property
    def seed(self) -> int:
        return self.config.seed if self.config.seed is not None else self.config.quadrature.seed

    def canonical_config(self) -> Dict[str, Any]:
        canonical = self.config.canonical()
        if self.arguments:
            canonical["arguments"] = self.arguments
        return canonical

    def lap(self, name: str):
        if self.clock is not None:
            self.clock.lap(name)

    def finish(self, report: Dict[str, Any], passed: bool, summary: str) -> int:
        exit_code = PASSED if passed else FAILED
        self.summary = summary
        self.record.record({"report": report, "passed": passed, "summary": summary, "exit_code": exit_code})
        return exit_code

    def fail(self, message: str, e: LabError) -> int:
        diagnostics: Dict[str, Any] = {}
        if isinstance(e, ConfigError):
            diagnostics["config"] = e.diagnostics
        if isinstance(e, SignViolationError):
            diagnostics.update({"point": e.point, "density": e.density})
        if isinstance(e, QuadratureError) and e.node is not None:
            diagnostics["node"] = e.node
        exit_code = getattr(e, "exit_code", ERROR)
        self.summary = f"{self.command}: error: {e}"
        self.record.record(
            {"error": message, "exc_info": e, "passed": False, "summary": self.summary, "exit_code": exit_code}
        )
        if diagnostics:
            self.record.record({"diagnostics": diagnostics})
        logger.error(message, exc_info=e)
        return exit_code
