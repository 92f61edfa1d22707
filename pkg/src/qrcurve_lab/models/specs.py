from enum import Enum
from typing import List, Optional, Tuple

import numpy as np
from pydantic import BaseModel, conint, confloat, root_validator, validator

from qrcurve_lab.errors import DimensionMismatchError


class OptimizerConfig(BaseModel):
    """Frame ascent settings for the comass optimizer."""

    restarts: conint(ge=1) = 64
    tol: confloat(gt=0) = 1e-8
    max_iter: conint(ge=1) = 500
    seed: int = 0
    workers: conint(ge=1) = 1
    closed_form: bool = True

    class Config:
        frozen = True


class QuadratureMethod(str, Enum):
    TENSOR_POLAR = "tensor-polar"
    MONTE_CARLO = "monte-carlo"


class QuadratureSpec(BaseModel):
    method: Optional[QuadratureMethod] = None
    budget: Optional[conint(ge=1)] = None
    radial_nodes: conint(ge=2) = 64
    angular_nodes: conint(ge=4) = 256
    samples: conint(ge=2) = 1_000_000
    seed: int = 0
    tol: confloat(gt=0) = 1e-3
    workers: conint(ge=1) = 1

    class Config:
        frozen = True

    def resolve_method(self, n: int) -> QuadratureMethod:
        if self.method is not None:
            return self.method
        return QuadratureMethod.TENSOR_POLAR if n <= 3 else QuadratureMethod.MONTE_CARLO

    def tensor_nodes(self) -> Tuple[int, int]:
        """(radial, angular) node counts; an explicit budget is split 1:4."""
        if self.budget is None:
            return self.radial_nodes, self.angular_nodes
        radial = max(2, int(round((self.budget / 4) ** 0.5)))
        return radial, max(4, self.budget // radial)

    def monte_carlo_samples(self) -> int:
        return self.samples if self.budget is None else max(2, self.budget)

    def halved(self) -> "QuadratureSpec":
        radial, angular = self.tensor_nodes()
        return self.copy(
            update={
                "budget": None,
                "radial_nodes": max(2, radial // 2),
                "angular_nodes": max(4, angular // 2),
                "samples": max(2, self.monte_carlo_samples() // 2),
            }
        )


class Ball(BaseModel):
    center: List[float]
    radius: confloat(gt=0)

    def half(self) -> "Ball":
        return Ball(center=self.center, radius=self.radius / 2)

    def sample(self, count: int, seed: int = 0) -> np.ndarray:
        """Uniform points in the ball: gaussian directions, radii r u^(1/n)."""
        rng = np.random.default_rng(seed)
        n = len(self.center)
        directions = rng.standard_normal((count, n))
        directions /= np.linalg.norm(directions, axis=1, keepdims=True)
        radii = self.radius * rng.uniform(size=count) ** (1.0 / n)
        return np.asarray(self.center, dtype=float) + radii[:, None] * directions


class SampleSpec(BaseModel):
    """Uniform random points in the box [low, high]^n, or in `ball` when it is set."""

    count: conint(ge=1) = 1000
    low: float = -10.0
    high: float = 10.0
    seed: int = 0
    ball: Optional[Ball] = None

    @root_validator(skip_on_failure=True)
    def box_is_nonempty(cls, values):
        if values["high"] <= values["low"]:
            raise ValueError("high must exceed low")
        return values

    def points(self, n: int) -> np.ndarray:
        if self.ball is not None:
            if len(self.ball.center) != n:
                raise DimensionMismatchError(f"sample ball lives in R^{len(self.ball.center)}, expected R^{n}")
            return self.ball.sample(self.count, self.seed)
        rng = np.random.default_rng(self.seed)
        return rng.uniform(self.low, self.high, size=(self.count, n))

    def describe(self) -> str:
        if self.ball is not None:
            return f"uniform {self.count} points in B({self.ball.center}, {self.ball.radius}), seed {self.seed}"
        return f"uniform {self.count} points in [{self.low}, {self.high}]^n, seed {self.seed}"


class GridSpec(BaseModel):
    """Regular grid low + step * i in every coordinate, up to high inclusive."""

    low: float = 0.0
    high: float = 50.0
    step: confloat(gt=0) = 0.1

    @root_validator(skip_on_failure=True)
    def grid_is_nonempty(cls, values):
        if values["high"] < values["low"]:
            raise ValueError("high must not be below low")
        return values

    def axis(self) -> np.ndarray:
        count = int(np.floor((self.high - self.low) / self.step + 1e-9)) + 1
        return self.low + self.step * np.arange(count)

    def size(self, n: int) -> int:
        return len(self.axis()) ** n


class BallFamilyKind(str, Enum):
    RANDOM = "random"
    CONCENTRIC = "concentric"
    EXPLICIT = "explicit"


class BallFamilySpec(BaseModel):
    kind: BallFamilyKind = BallFamilyKind.RANDOM
    count: conint(ge=1) = 20
    center_low: float = -4.0
    center_high: float = 4.0
    radius_low: confloat(gt=0) = 0.5
    radius_high: confloat(gt=0) = 4.0
    radii: List[confloat(gt=0)] = [1.0, 2.0, 4.0, 8.0]
    balls: List[Ball] = []
    seed: int = 0

    @validator("balls")
    def explicit_balls_listed(cls, v, values):
        if values.get("kind") == BallFamilyKind.EXPLICIT and not v:
            raise ValueError("explicit ball family needs at least one ball")
        return v

    def build(self, n: int) -> List[Ball]:
        if self.kind == BallFamilyKind.EXPLICIT:
            return list(self.balls)
        if self.kind == BallFamilyKind.CONCENTRIC:
            return [Ball(center=[0.0] * n, radius=r) for r in self.radii]
        rng = np.random.default_rng(self.seed)
        centers = rng.uniform(self.center_low, self.center_high, size=(self.count, n))
        radii = rng.uniform(self.radius_low, self.radius_high, size=self.count)
        return [Ball(center=c.tolist(), radius=float(r)) for c, r in zip(centers, radii)]

    def describe(self) -> str:
        if self.kind == BallFamilyKind.RANDOM:
            return (
                f"{self.count} random balls, centers in [{self.center_low}, {self.center_high}]^n, "
                f"radii in [{self.radius_low}, {self.radius_high}], seed {self.seed}"
            )
        if self.kind == BallFamilyKind.CONCENTRIC:
            return f"concentric balls at the origin, radii {self.radii}"
        return f"{len(self.balls)} explicit balls"
