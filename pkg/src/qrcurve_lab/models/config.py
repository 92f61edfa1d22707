import json
from enum import Enum
from typing import Any, Dict, List, Optional, Union

from pydantic import (
    BaseModel,
    StrictFloat,
    StrictInt,
    StrictStr,
    ValidationError,
    confloat,
    conint,
    root_validator,
    validator,
)

from qrcurve_lab.curves import BUILTINS, CurveMap, TorusLinearCurve, torus_volume_form
from qrcurve_lab.errors import ConfigError, RepresentationError
from qrcurve_lab.exterior import Covector
from qrcurve_lab.manifold import FormField, TargetManifold
from qrcurve_lab.models.specs import (
    Ball,
    BallFamilyKind,
    BallFamilySpec,
    GridSpec,
    OptimizerConfig,
    QuadratureSpec,
    SampleSpec,
)
from qrcurve_lab.numbers import Scalar, format_scalar, parse_scalar
from qrcurve_lab.services.growth_service import default_radii
from qrcurve_lab.services.signed_service import (
    RepresentationKind,
    RepresentationTerm,
    SignedRepresentation,
    split_representation,
    torus_product_representation,
    torus_signed_representation,
)

Number = Union[StrictInt, StrictFloat, StrictStr]

# seeded samples for the closed and sup_bound declarations
DECLARATION_SAMPLES = 32


def _literal(value: Number) -> str:
    """Canonical text of a scalar, kept as text so rationals stay exact."""
    return format_scalar(parse_scalar(value))


class CurveKind(str, Enum):
    TORUS_LINEAR = "torus_linear"
    BUILTIN = "builtin"


class CurveSpec(BaseModel):
    kind: CurveKind = CurveKind.TORUS_LINEAR
    y: List[Number] = ["1", "1"]
    name: Optional[str] = None
    n: conint(ge=2) = 2
    matrix: Optional[List[List[float]]] = None
    factor: float = 2.0
    value: Optional[List[float]] = None

    class Config:
        extra = "forbid"

    @validator("y", each_item=True)
    def slope_entries_parse(cls, v):
        return _literal(v)

    @validator("name")
    def builtin_is_known(cls, v):
        if v is not None and v not in BUILTINS:
            raise ValueError(f"unknown builtin curve {v!r}, expected one of {sorted(BUILTINS)}")
        return v

    @root_validator(skip_on_failure=True)
    def builtin_has_arguments(cls, values):
        if values["kind"] == CurveKind.TORUS_LINEAR:
            if len(values["y"]) < 2:
                raise ValueError("torus linear curves need a slope with at least 2 entries")
            return values
        name = values.get("name")
        if name is None:
            raise ValueError("builtin curves need a name")
        if name == "linear" and not values.get("matrix"):
            raise ValueError("the linear builtin needs a matrix")
        if name == "constant" and not values.get("value"):
            raise ValueError("the constant builtin needs a value")
        return values

    def slope(self) -> List[Scalar]:
        return [parse_scalar(v) for v in self.y]

    def domain_dim(self) -> int:
        if self.kind == CurveKind.TORUS_LINEAR:
            return len(self.y)
        if self.name == "linear":
            return len(self.matrix[0])
        if self.name == "polynomial":
            return 2
        return self.n

    def target_dim(self) -> int:
        if self.kind == CurveKind.TORUS_LINEAR:
            return len(self.y) + 1
        if self.name == "linear":
            return len(self.matrix)
        if self.name == "constant":
            return len(self.value)
        return self.domain_dim()

    def build(self) -> CurveMap:
        if self.kind == CurveKind.TORUS_LINEAR:
            return TorusLinearCurve(self.slope())
        if self.name == "linear":
            return BUILTINS["linear"](self.matrix)
        if self.name == "scaling":
            return BUILTINS["scaling"](self.n, self.factor)
        if self.name == "constant":
            return BUILTINS["constant"](self.n, self.value)
        if self.name == "polynomial":
            return BUILTINS["polynomial"]()
        return BUILTINS[self.name](self.n)


class FormSpec(BaseModel):
    """Form terms as ``"<covector literal> [* tag]"`` strings."""

    degree: Optional[conint(ge=0)] = None
    terms: List[str] = []
    closed: Optional[bool] = None
    sup_bound: Optional[confloat(ge=0)] = None
    scale: Number = 1.0
    name: str = ""

    class Config:
        extra = "forbid"

    @validator("scale")
    def scale_parses(cls, v):
        return _literal(v)

    def build(self, target: TargetManifold, default_degree: int) -> FormField:
        degree = default_degree if self.degree is None else self.degree
        form = FormField.parse(target, degree, self.terms, sup_bound=self.sup_bound, name=self.name)
        form.is_closed = form.is_constant if self.closed is None else self.closed
        factor = float(parse_scalar(self.scale))
        if factor != 1.0:
            form = form.scale(factor)
            form.name = self.name
        return form


class RepresentationKindSpec(str, Enum):
    PRODUCT = "product"
    SPLIT = "split"
    TORUS = "torus"
    TERMS = "terms"


class RepresentationTermSpec(BaseModel):
    phi: FormSpec = FormSpec(degree=0, terms=["1"], sup_bound=1.0)
    alpha: FormSpec
    beta: FormSpec


class RepresentationSpec(BaseModel):
    kind: RepresentationKindSpec = RepresentationKindSpec.PRODUCT
    degree: Optional[conint(ge=1)] = None
    xi: Optional[str] = None
    alpha: Optional[FormSpec] = None
    beta: Optional[FormSpec] = None
    terms: List[RepresentationTermSpec] = []
    linear: bool = False

    class Config:
        extra = "forbid"

    @root_validator(skip_on_failure=True)
    def kind_has_parts(cls, values):
        kind = values["kind"]
        if kind == RepresentationKindSpec.SPLIT and (values.get("alpha") is None or values.get("beta") is None):
            raise ValueError("split representations need alpha and beta")
        if kind == RepresentationKindSpec.TORUS and values.get("degree") is None:
            raise ValueError("torus representations need a degree")
        if kind == RepresentationKindSpec.TERMS and not values.get("terms"):
            raise ValueError("term representations need at least one term")
        return values


class AnalysisSpec(BaseModel):
    p: confloat(gt=1) = 2.0
    c_p: Optional[confloat(gt=0)] = None
    r0: confloat(gt=0) = 1.0
    epsilon: Optional[float] = None
    delta: Optional[float] = None
    k: Optional[confloat(ge=1)] = None
    ball: Optional[Ball] = None
    v: List[Number] = ["0", "0", "sqrt:2"]
    threshold: confloat(gt=0) = 0.05
    witness_delta: Optional[confloat(gt=0)] = None
    witness_search: conint(ge=1) = 100_000
    covector: Optional[str] = None
    dim: Optional[conint(ge=1)] = None
    oracle_samples: conint(ge=0) = 100_000
    comass_samples: conint(ge=1) = 256

    class Config:
        extra = "forbid"

    @validator("v", each_item=True)
    def point_entries_parse(cls, v):
        return _literal(v)

    def point(self) -> List[Scalar]:
        return [parse_scalar(c) for c in self.v]


class OutputSpec(BaseModel):
    json_path: Optional[str] = None
    csv_path: Optional[str] = None

    class Config:
        extra = "forbid"
        fields = {"json_path": "json", "csv_path": "csv"}
        allow_population_by_field_name = True


class ExperimentConfig(BaseModel):
    curve: CurveSpec = CurveSpec()
    form: Optional[FormSpec] = None
    tau: Optional[FormSpec] = None
    representation: RepresentationSpec = RepresentationSpec()
    radii: Optional[List[confloat(gt=0)]] = None
    balls: BallFamilySpec = BallFamilySpec()
    samples: SampleSpec = SampleSpec()
    grid: GridSpec = GridSpec()
    quadrature: QuadratureSpec = QuadratureSpec()
    optimizer: OptimizerConfig = OptimizerConfig()
    analysis: AnalysisSpec = AnalysisSpec()
    output: OutputSpec = OutputSpec()
    seed: Optional[int] = None
    workers: Optional[conint(ge=1)] = None

    class Config:
        extra = "forbid"

    @root_validator(skip_on_failure=True)
    def propagate_seed_and_workers(cls, values):
        seed, workers = values.get("seed"), values.get("workers")
        if seed is not None:
            values["quadrature"] = values["quadrature"].copy(update={"seed": seed})
            values["optimizer"] = values["optimizer"].copy(update={"seed": seed})
            values["samples"] = values["samples"].copy(update={"seed": seed})
            values["balls"] = values["balls"].copy(update={"seed": seed})
        if workers is not None:
            values["quadrature"] = values["quadrature"].copy(update={"workers": workers})
            values["optimizer"] = values["optimizer"].copy(update={"workers": workers})
        return values

    def target(self) -> TargetManifold:
        m = self.curve.target_dim()
        if self.curve.kind == CurveKind.TORUS_LINEAR:
            return TargetManifold.flat_torus(m)
        return TargetManifold.euclidean(m)

    def build_curve(self) -> CurveMap:
        return self.curve.build()

    def build_form(self) -> FormField:
        n = self.curve.domain_dim()
        if self.form is not None:
            return self.form.build(self.target(), n)
        if self.curve.kind == CurveKind.TORUS_LINEAR:
            return torus_volume_form(n)
        m = self.curve.target_dim()
        return FormField.constant(self.target(), Covector.basis(m, range(1, n + 1)), sup_bound=1.0, name="vol")

    def build_tau(self) -> FormField:
        n = self.curve.domain_dim()
        if self.tau is None:
            return FormField.zero(self.target(), n - 1, name="0")
        return self.tau.build(self.target(), n - 1)

    def build_representation(self) -> SignedRepresentation:
        rep, target, n = self.representation, self.target(), self.curve.domain_dim()
        if rep.kind == RepresentationKindSpec.PRODUCT:
            if target.is_torus:
                return torus_product_representation(n)
            alpha = FormField.constant(target, Covector.basis(target.dim, [1]), sup_bound=1.0, name="dx1")
            beta = FormField.constant(target, Covector.basis(target.dim, range(2, n + 1)), sup_bound=1.0, name="dx2..n")
            return split_representation(alpha, beta)
        if rep.kind == RepresentationKindSpec.SPLIT:
            return split_representation(
                rep.alpha.build(target, rep.alpha.degree), rep.beta.build(target, rep.beta.degree)
            )
        if rep.kind == RepresentationKindSpec.TORUS:
            xi = Covector.parse(rep.xi, target.dim, degree=rep.degree) if rep.xi else None
            return torus_signed_representation(rep.degree, target, xi)
        terms = [
            RepresentationTerm(
                t.phi.build(target, 0), t.alpha.build(target, t.alpha.degree), t.beta.build(target, t.beta.degree)
            )
            for t in rep.terms
        ]
        kind = RepresentationKind.R_LINEAR if rep.linear else RepresentationKind.F_SIGNED
        return SignedRepresentation(terms, kind)

    def radius_schedule(self) -> List[float]:
        return list(self.radii) if self.radii else list(default_radii())

    def default_ball(self) -> Ball:
        return self.analysis.ball or Ball(center=[0.0] * self.curve.domain_dim(), radius=1.0)

    def canonical(self) -> Dict[str, Any]:
        """Config content without output paths: the part that determines a report."""
        return json.loads(self.json(exclude={"output"}, by_alias=True))


def _check(diagnostics: List[str], path: str, action):
    try:
        action()
    except (ValueError, TypeError) as e:
        diagnostics.append(f"{path}: {e}")


def _check_declarations(diagnostics: List[str], path: str, spec: FormSpec, build, config: ExperimentConfig):
    """Builds a form and tests its closed and sup_bound declarations on seeded samples."""
    try:
        form = build()
    except (ValueError, TypeError) as e:
        diagnostics.append(f"{path}.terms: {e}")
        return
    seed, cfg = config.optimizer.seed, config.optimizer
    if spec.closed and not form.check_closed(samples=DECLARATION_SAMPLES, seed=seed):
        diagnostics.append(f"{path}.closed: declared closed but the exterior derivative does not vanish")
    if spec.sup_bound is not None and not form.check_sup_bound(samples=DECLARATION_SAMPLES, seed=seed, cfg=cfg):
        diagnostics.append(f"{path}.sup_bound: comass exceeds the declared bound {form.sup_bound:g}")


def _build_checked_representation(config: ExperimentConfig) -> SignedRepresentation:
    rep = config.build_representation()
    if config.representation.kind not in (RepresentationKindSpec.SPLIT, RepresentationKindSpec.TERMS):
        return rep
    seed, cfg = config.optimizer.seed, config.optimizer
    for i, term in enumerate(rep.terms):
        for name, part in (("phi", term.phi), ("alpha", term.alpha), ("beta", term.beta)):
            if not part.check_sup_bound(samples=DECLARATION_SAMPLES, seed=seed, cfg=cfg):
                raise RepresentationError(f"term {i}: comass of {name} exceeds its declared bound {part.sup_bound:g}")
    return rep


def diagnostics(config: ExperimentConfig) -> List[str]:
    """Cross-field violations as ``dotted.path: message``."""
    found: List[str] = []
    n, m = config.curve.domain_dim(), config.curve.target_dim()
    if config.curve.name == "linear" and any(len(row) != n for row in config.curve.matrix):
        found.append("curve.matrix: rows have different lengths")
        return found
    if m < n:
        found.append(f"curve: target dimension {m} is below the domain dimension {n}")
        return found
    if config.form is not None:
        if config.form.degree is not None and config.form.degree != n:
            found.append(f"form.degree: expected {n} (the domain dimension), got {config.form.degree}")
        else:
            _check_declarations(found, "form", config.form, config.build_form, config)
    if config.tau is not None:
        if config.tau.degree is not None and config.tau.degree != n - 1:
            found.append(f"tau.degree: expected {n - 1}, got {config.tau.degree}")
        else:
            _check_declarations(found, "tau", config.tau, config.build_tau, config)
    if config.radii and any(b <= a for a, b in zip(config.radii, config.radii[1:])):
        found.append("radii: must be strictly increasing")
    delta = config.analysis.delta
    if delta is not None and not (n - 1.0) / n < delta < 1.0:
        found.append(f"analysis.delta: must lie in (({n}-1)/{n}, 1), got {delta}")
    if config.analysis.ball is not None and len(config.analysis.ball.center) != n:
        found.append(f"analysis.ball.center: expected {n} coordinates, got {len(config.analysis.ball.center)}")
    if config.samples.ball is not None and len(config.samples.ball.center) != n:
        found.append(f"samples.ball.center: expected {n} coordinates, got {len(config.samples.ball.center)}")
    if config.balls.kind == BallFamilyKind.EXPLICIT:
        for i, ball in enumerate(config.balls.balls):
            if len(ball.center) != n:
                found.append(f"balls.balls.{i}.center: expected {n} coordinates, got {len(ball.center)}")
    if config.curve.kind == CurveKind.TORUS_LINEAR and len(config.analysis.v) != m:
        found.append(f"analysis.v: expected {m} coordinates, got {len(config.analysis.v)}")
    rep = config.representation
    if rep.kind == RepresentationKindSpec.TORUS:
        if m != n:
            found.append(f"representation.kind: torus representations reconstruct an {m}-form, the curve needs {n}")
        elif rep.degree is not None and not 1 <= rep.degree <= m - 1:
            found.append(f"representation.degree: must lie in [1, {m - 1}], got {rep.degree}")
    if rep.kind == RepresentationKindSpec.SPLIT:
        total = (rep.alpha.degree or 0) + (rep.beta.degree or 0)
        if rep.alpha.degree is None or rep.beta.degree is None:
            found.append("representation: split factors need explicit degrees")
        elif total != n:
            found.append(f"representation: alpha and beta degrees sum to {total}, expected {n}")
    for i, term in enumerate(rep.terms):
        if term.alpha.degree is None or term.beta.degree is None:
            found.append(f"representation.terms.{i}: alpha and beta need explicit degrees")
        elif term.alpha.degree + term.beta.degree != n:
            total = term.alpha.degree + term.beta.degree
            found.append(f"representation.terms.{i}: degrees sum to {total}, expected {n}")
    if not found:
        _check(found, "representation", lambda: _build_checked_representation(config))
    return found


def set_path(raw: Dict[str, Any], dotted: str, value: Any):
    node = raw
    *parents, leaf = dotted.split(".")
    for key in parents:
        if not isinstance(node.get(key), dict):
            node[key] = {}
        node = node[key]
    node[leaf] = value


def validation_messages(error: ValidationError) -> List[str]:
    return [f"{'.'.join(str(part) for part in e['loc'])}: {e['msg']}" for e in error.errors()]


def parse_config(raw: Optional[Dict[str, Any]]) -> ExperimentConfig:
    """Validate a raw mapping; every violation is reported in one ConfigError."""
    try:
        config = ExperimentConfig.parse_obj(raw or {})
    except ValidationError as e:
        raise ConfigError(validation_messages(e)) from None
    found = diagnostics(config)
    if found:
        raise ConfigError(found)
    return config
