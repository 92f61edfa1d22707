from enum import Enum
from typing import List, Optional, Tuple

from pydantic import BaseModel, confloat

from qrcurve_lab.models.specs import QuadratureMethod


class IntegralEstimate(BaseModel):
    value: float
    error_bound: confloat(ge=0)
    budget: int
    method: QuadratureMethod
    converged: bool = True


class ComassReport(BaseModel):
    covector: str
    ambient_dim: int
    degree: int
    value: float
    oracle: Optional[float] = None
    closed_form: bool = False
    restarts: int = 0
    frame: List[List[float]] = []


class DistortionReport(BaseModel):
    samples: str
    evaluated: int
    k_hat: Optional[float] = None
    argmax: Optional[List[float]] = None
    bound: Optional[float] = None
    within_bound: Optional[bool] = None
    degenerate: int = 0


class GrowthReport(BaseModel):
    dimension: int
    radii: List[float]
    areas: List[IntegralEstimate]
    epsilon: float
    normalized: List[float]
    tail_min: float
    slope: Optional[float] = None
    monotone: bool = True


class FastGrowthVerdict(BaseModel):
    passed: bool
    epsilon: float
    constant: float
    p: float
    c_p: float
    r0: float
    p_norm: float
    worst_margin: Optional[float] = None
    worst_radius: Optional[float] = None


class InequalityKind(str, Enum):
    REVERSE_HOLDER = "reverse-holder"
    HALF_BALL = "half-ball"


class BallRecord(BaseModel):
    center: List[float]
    radius: float
    lhs: float
    rhs: float
    ratio: Optional[float] = None
    excluded: bool = False
    negative_density: bool = False


class HolderReport(BaseModel):
    kind: InequalityKind
    p: float
    family: str
    balls: List[BallRecord]
    c_hat: Optional[float] = None
    worst_ball: Optional[int] = None


class HigherIntegrabilityReport(BaseModel):
    p: float
    q: float
    k: float
    inf_comass: float
    lhs: IntegralEstimate
    rhs: IntegralEstimate
    rhs_value: float
    passed: bool


class EquiRow(BaseModel):
    radius: float
    area_closed: float
    area: float
    sphere: float
    sphere_error: float
    stokes: float
    stokes_gap: float
    stokes_ok: bool
    ratio: Optional[float] = None
    flagged: bool = False
    excluded: bool = False
    decay_bound: Optional[float] = None
    decay_ok: Optional[bool] = None


class DoublingGap(BaseModel):
    radius: float
    covered: bool


class EquiReport(BaseModel):
    delta: float
    rows: List[EquiRow]
    exception_intervals: List[Tuple[float, float]]
    log_measure: float
    stokes_agreement: bool
    decay_passed: bool
    envelope: List[float]
    envelope_monotone: bool
    epsilon: Optional[float] = None
    growth_off_exceptions: List[Tuple[float, float]] = []
    doubling_gaps: List[DoublingGap] = []


class TermSign(str, Enum):
    NONNEGATIVE = "nonnegative"
    NONPOSITIVE = "nonpositive"
    MIXED = "mixed"
    ZERO = "zero"


class TermVerdict(BaseModel):
    index: int
    verdict: TermSign
    minimum: float
    maximum: float
    witnesses: List[List[float]] = []


class SignVerdict(BaseModel):
    kind: str
    samples: str
    terms: List[TermVerdict]
    signed: bool
    statistical: bool = True
    reconstruction_error: Optional[float] = None
    cost: Optional[float] = None


class ObstructionReport(BaseModel):
    y: List[str]
    v: List[str]
    order: int
    elements: List[str] = []
    distance: float
    radius: float
    delta_bound: float


class DensityReport(BaseModel):
    y: List[str]
    v: List[str]
    rational: bool
    grid: str
    distance: float
    closest: List[float]
    obstruction: Optional[ObstructionReport] = None
    threshold: Optional[float] = None
    witness: Optional[List[float]] = None
    witness_distance: Optional[float] = None
    passed: bool
