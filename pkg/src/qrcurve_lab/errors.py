from typing import Any, List, Optional, Sequence


class LabError(ValueError):
    """Base error of the lab; `exit_code` is what the CLI returns for it."""

    exit_code = 1

    def __init__(self, detail: str):
        super().__init__(detail)
        self.detail = detail


class DimensionMismatchError(LabError):
    pass


class DegreeError(LabError):
    pass


class QuadratureError(LabError):
    def __init__(self, detail: str, node: Optional[Sequence[float]] = None):
        super().__init__(detail)
        self.node = None if node is None else [float(c) for c in node]


class SignViolationError(LabError):
    def __init__(self, detail: str, point: Sequence[float], density: float):
        super().__init__(detail)
        self.point = [float(c) for c in point]
        self.density = float(density)


class ObstructionError(LabError):
    pass


class ConfigError(LabError):
    def __init__(self, diagnostics: List[str], detail: Any = None):
        super().__init__(detail or "; ".join(diagnostics))
        self.diagnostics = list(diagnostics)


class RepresentationError(LabError):
    pass
