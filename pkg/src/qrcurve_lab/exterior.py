"""Exterior algebra over R^m: sparse covectors, wedge, Hodge star and comass."""
import re
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field
from types import MappingProxyType
from typing import Dict, Iterable, Mapping, Optional, Sequence, Tuple

import numpy as np

from qrcurve_lab.errors import DegreeError, DimensionMismatchError
from qrcurve_lab.logging import getLogger
from qrcurve_lab.models.specs import OptimizerConfig
from qrcurve_lab.numbers import parse_scalar

logger = getLogger(name=__name__)

PRUNE_TOL = 1e-14


class MultiIndex(tuple):
    """Strictly increasing 1-based indices (i1 < ... < ik) naming dx_i1 ^ ... ^ dx_ik."""

    def __new__(cls, indices: Iterable[int] = (), ambient_dim: Optional[int] = None):
        indices = tuple(int(i) for i in indices)
        if any(b <= a for a, b in zip(indices, indices[1:])):
            raise ValueError(f"multi-index {indices} is not strictly increasing")
        if indices and indices[0] < 1:
            raise ValueError(f"multi-index {indices} has an index below 1")
        if ambient_dim is not None and indices and indices[-1] > ambient_dim:
            raise DimensionMismatchError(f"multi-index {indices} exceeds ambient dimension {ambient_dim}")
        return super().__new__(cls, indices)

    @property
    def degree(self) -> int:
        return len(self)

    def zero_based(self) -> Tuple[int, ...]:
        return tuple(i - 1 for i in self)

    def __str__(self) -> str:
        return "^".join(f"dx{i}" for i in self) if self else "1"


def sort_with_sign(indices: Sequence[int]) -> Tuple[int, Optional[MultiIndex]]:
    """Sort indices, returning the permutation sign; (0, None) on a repeated index."""
    items = list(indices)
    if len(set(items)) != len(items):
        return 0, None
    sign = 1
    for i in range(len(items)):
        for j in range(len(items) - 1 - i):
            if items[j] > items[j + 1]:
                items[j], items[j + 1] = items[j + 1], items[j]
                sign = -sign
    return sign, MultiIndex(items)


_TERM = re.compile(
    r"""\s*(?P<sign>[+-])?\s*
    (?P<coef>sqrt:\d+(?:\.\d+)?|(?:\d+(?:\.\d*)?|\.\d+)(?:[eE][+-]?\d+)?(?:/\d+)?)?
    \s*\*?\s*
    (?P<basis>dx\d+(?:\s*[\^∧]\s*dx\d+)*)?
    \s*""",
    re.VERBOSE,
)


class Covector:
    """An element of Λ^k(R^m) stored sparsely over multi-indices.

    Instances are immutable. Coefficients below PRUNE_TOL are dropped so the
    zero covector always has empty coefficients. Degrees above m are admitted
    only for the zero covector (the truncated part of the algebra).
    """

    __slots__ = ("_m", "_k", "_coeffs")
    __array_ufunc__ = None

    def __init__(self, ambient_dim: int, degree: int, coeffs: Optional[Mapping[Iterable[int], float]] = None):
        if ambient_dim < 1:
            raise DimensionMismatchError(f"ambient dimension must be at least 1, got {ambient_dim}")
        if degree < 0:
            raise DegreeError(f"degree must be nonnegative, got {degree}")
        clean: Dict[MultiIndex, float] = {}
        for key, value in (coeffs or {}).items():
            index = MultiIndex(key, ambient_dim=ambient_dim)
            if index.degree != degree:
                raise DegreeError(f"term {index} has degree {index.degree}, expected {degree}")
            value = float(value)
            if not np.isfinite(value):
                raise ValueError(f"non-finite coefficient {value} on {index}")
            if abs(value) > PRUNE_TOL:
                clean[index] = value
        if degree > ambient_dim and clean:
            raise DegreeError(f"nonzero covector of degree {degree} in Λ({ambient_dim})")
        self._m = ambient_dim
        self._k = degree
        self._coeffs = MappingProxyType(dict(sorted(clean.items())))

    @classmethod
    def zero(cls, ambient_dim: int, degree: int) -> "Covector":
        return cls(ambient_dim, degree)

    @classmethod
    def basis(cls, ambient_dim: int, indices: Iterable[int], coefficient: float = 1.0) -> "Covector":
        """c * dx_i1 ^ ... ^ dx_ik for indices in any order (sign-normalized)."""
        indices = tuple(indices)
        sign, index = sort_with_sign(indices)
        if index is None:
            return cls.zero(ambient_dim, len(indices))
        return cls(ambient_dim, len(indices), {index: sign * coefficient})

    @classmethod
    def volume(cls, ambient_dim: int) -> "Covector":
        return cls.basis(ambient_dim, range(1, ambient_dim + 1))

    @classmethod
    def scalar(cls, ambient_dim: int, value: float) -> "Covector":
        return cls(ambient_dim, 0, {(): value})

    @classmethod
    def parse(cls, text: str, ambient_dim: int, degree: Optional[int] = None) -> "Covector":
        """Parse a literal such as ``"2.0 dx1^dx2 - 1/2 dx3^dx4"`` (1-based indices)."""
        source = text.replace("−", "-")
        position = 0
        terms = []
        while position < len(source):
            match = _TERM.match(source, position)
            if match is None or match.end() == position or not (match.group("coef") or match.group("basis")):
                raise ValueError(f"cannot parse covector literal {text!r} at offset {position}")
            if terms and match.group("sign") is None:
                raise ValueError(f"missing '+' or '-' between terms in {text!r}")
            coefficient = float(parse_scalar(match.group("coef"))) if match.group("coef") else 1.0
            if match.group("sign") == "-":
                coefficient = -coefficient
            indices = [int(i) for i in re.findall(r"dx(\d+)", match.group("basis") or "")]
            terms.append((coefficient, indices))
            position = match.end()
        if not terms:
            if degree is None:
                raise ValueError("empty covector literal")
            return cls.zero(ambient_dim, degree)
        degrees = {len(indices) for _, indices in terms}
        if len(degrees) != 1:
            raise DegreeError(f"mixed degrees {sorted(degrees)} in {text!r}")
        parsed_degree = degrees.pop()
        if degree is not None and degree != parsed_degree:
            raise DegreeError(f"literal {text!r} has degree {parsed_degree}, expected {degree}")
        result = cls.zero(ambient_dim, parsed_degree)
        for coefficient, indices in terms:
            result = result + cls.basis(ambient_dim, indices, coefficient)
        return result

    @property
    def ambient_dim(self) -> int:
        return self._m

    @property
    def degree(self) -> int:
        return self._k

    @property
    def coeffs(self) -> Mapping[MultiIndex, float]:
        return self._coeffs

    def is_zero(self) -> bool:
        return not self._coeffs

    def coefficient(self, indices: Iterable[int]) -> float:
        return self._coeffs.get(MultiIndex(indices), 0.0)

    def index_array(self) -> np.ndarray:
        """Zero-based term indices, shape (terms, degree)."""
        return np.array([index.zero_based() for index in self._coeffs], dtype=int).reshape(-1, self._k)

    def coefficient_array(self) -> np.ndarray:
        return np.array(list(self._coeffs.values()), dtype=float)

    def norm(self) -> float:
        return float(np.sqrt(sum(c * c for c in self._coeffs.values())))

    def max_abs(self) -> float:
        return max((abs(c) for c in self._coeffs.values()), default=0.0)

    def l1(self) -> float:
        return float(sum(abs(c) for c in self._coeffs.values()))

    def _check_compatible(self, other: "Covector"):
        if not isinstance(other, Covector):
            raise TypeError(f"expected a Covector, got {type(other).__name__}")
        if other.ambient_dim != self._m:
            raise DimensionMismatchError(f"ambient dimensions differ: {self._m} vs {other.ambient_dim}")
        if other.degree != self._k:
            raise DegreeError(f"degrees differ: {self._k} vs {other.degree}")

    def __add__(self, other: "Covector") -> "Covector":
        self._check_compatible(other)
        merged = dict(self._coeffs)
        for index, value in other.coeffs.items():
            merged[index] = merged.get(index, 0.0) + value
        return Covector(self._m, self._k, merged)

    def __neg__(self) -> "Covector":
        return Covector(self._m, self._k, {index: -value for index, value in self._coeffs.items()})

    def __sub__(self, other: "Covector") -> "Covector":
        return self + (-other)

    def __mul__(self, scalar: float) -> "Covector":
        if isinstance(scalar, Covector):
            return NotImplemented
        return Covector(self._m, self._k, {index: scalar * value for index, value in self._coeffs.items()})

    __rmul__ = __mul__

    def __truediv__(self, scalar: float) -> "Covector":
        return self * (1.0 / scalar)

    def __eq__(self, other) -> bool:
        if not isinstance(other, Covector):
            return NotImplemented
        return (self._m, self._k, dict(self._coeffs)) == (other.ambient_dim, other.degree, dict(other.coeffs))

    def __hash__(self) -> int:
        return hash((self._m, self._k, tuple(self._coeffs.items())))

    def allclose(self, other: "Covector", atol: float = 1e-12) -> bool:
        self._check_compatible(other)
        return (self - other).max_abs() <= atol

    def evaluate(self, frames: np.ndarray) -> np.ndarray:
        """Values on stacked tuples of vectors, `frames` of shape (..., m, k)."""
        frames = np.asarray(frames, dtype=float)
        if frames.shape[-2:] != (self._m, self._k):
            raise DimensionMismatchError(f"expected frames of shape (..., {self._m}, {self._k}), got {frames.shape}")
        if self.is_zero():
            return np.zeros(frames.shape[:-2])
        if self._k == 0:
            return np.full(frames.shape[:-2], self.coefficient_array()[0])
        minors = np.linalg.det(frames[..., self.index_array(), :])
        return minors @ self.coefficient_array()

    def __call__(self, *vectors: Sequence[float]) -> float:
        if len(vectors) != self._k:
            raise DegreeError(f"a {self._k}-covector takes {self._k} vectors, got {len(vectors)}")
        frame = np.array(vectors, dtype=float).reshape(self._k, self._m).T
        return float(self.evaluate(frame))

    def wedge(self, other: "Covector") -> "Covector":
        return wedge(self, other)

    def __str__(self) -> str:
        if self.is_zero():
            return "0"
        parts = []
        for index, value in self._coeffs.items():
            sign = "-" if value < 0 else "+"
            body = repr(abs(value)) if not index else f"{abs(value)!r} {index}"
            parts.append(f"{sign} {body}")
        text = " ".join(parts)
        return text[2:] if text.startswith("+ ") else "-" + text[2:]

    def __repr__(self) -> str:
        return f"Covector(m={self._m}, k={self._k}, {str(self)!r})"


def wedge(a: Covector, b: Covector) -> Covector:
    if a.ambient_dim != b.ambient_dim:
        raise DimensionMismatchError(f"ambient dimensions differ: {a.ambient_dim} vs {b.ambient_dim}")
    m = a.ambient_dim
    degree = a.degree + b.degree
    if degree > m:
        return Covector.zero(m, degree)
    product: Dict[MultiIndex, float] = {}
    for index_a, value_a in a.coeffs.items():
        for index_b, value_b in b.coeffs.items():
            sign, index = sort_with_sign(index_a + index_b)
            if index is None:
                continue
            product[index] = product.get(index, 0.0) + sign * value_a * value_b
    return Covector(m, degree, product)


def hodge_star(a: Covector) -> Covector:
    """Euclidean Hodge star with the standard orientation: b ^ *a = <b, a> vol."""
    m = a.ambient_dim
    if a.degree > m:
        raise DegreeError(f"no Hodge star for degree {a.degree} in dimension {m}")
    starred: Dict[MultiIndex, float] = {}
    for index, value in a.coeffs.items():
        complement = tuple(i for i in range(1, m + 1) if i not in index)
        sign, _ = sort_with_sign(index + complement)
        starred[MultiIndex(complement)] = sign * value
    return Covector(m, m - a.degree, starred)


def inner(a: Covector, b: Covector) -> float:
    a._check_compatible(b)
    return float(sum(value * b.coeffs.get(index, 0.0) for index, value in a.coeffs.items()))


@dataclass(frozen=True)
class ComassResult:
    value: float
    frame: np.ndarray = field(repr=False)
    restarts: int = 0
    closed_form: bool = False

    def __float__(self) -> float:
        return self.value


def _cofactors(blocks: np.ndarray) -> np.ndarray:
    """Cofactor matrices of a stack of k x k blocks: d det(M) / dM_ij."""
    k = blocks.shape[-1]
    if k == 1:
        return np.ones_like(blocks)
    cofactors = np.empty_like(blocks)
    for i in range(k):
        rows = np.delete(blocks, i, axis=-2)
        for j in range(k):
            minor = np.delete(rows, j, axis=-1)
            cofactors[..., i, j] = (-1) ** (i + j) * np.linalg.det(minor)
    return cofactors


def _frame_gradient(index: np.ndarray, coeffs: np.ndarray, frame: np.ndarray) -> np.ndarray:
    m, k = frame.shape
    cofactors = _cofactors(frame[index, :])
    gradient = np.zeros((m, k))
    rows = np.broadcast_to(index[:, :, None], cofactors.shape)
    cols = np.broadcast_to(np.arange(k)[None, None, :], cofactors.shape)
    np.add.at(gradient, (rows, cols), coeffs[:, None, None] * cofactors)
    return gradient


def _tangent_projection(frame: np.ndarray, gradient: np.ndarray) -> np.ndarray:
    sym = (frame.T @ gradient + gradient.T @ frame) / 2
    return gradient - frame @ sym


def _qr_retraction(frame: np.ndarray, step: np.ndarray) -> np.ndarray:
    q, r = np.linalg.qr(frame + step)
    signs = np.sign(np.diag(r))
    signs[signs == 0] = 1.0
    return q * signs


def _ascend(a: Covector, frame: np.ndarray, cfg: OptimizerConfig) -> Tuple[float, np.ndarray]:
    index, coeffs = a.index_array(), a.coefficient_array()
    value = float(a.evaluate(frame))
    if value < 0:
        frame = frame.copy()
        frame[:, 0] = -frame[:, 0]
        value = -value
    step = 1.0
    for _ in range(cfg.max_iter):
        direction = _tangent_projection(frame, _frame_gradient(index, coeffs, frame))
        slope = float(np.sum(direction * direction))
        if np.sqrt(slope) <= cfg.tol:
            break
        step = min(2.0 * step, 1.0)
        while True:
            candidate = _qr_retraction(frame, step * direction)
            candidate_value = float(a.evaluate(candidate))
            if candidate_value >= value + 1e-4 * step * slope or step < 1e-12:
                break
            step /= 2
        if candidate_value <= value:
            break
        improvement = candidate_value - value
        frame, value = candidate, candidate_value
        if improvement <= cfg.tol * (1.0 + value):
            break
    return value, frame


def _closed_form(a: Covector) -> Optional[ComassResult]:
    """Simple covectors (degree 0, 1, m-1, m, or a single term) have comass = Euclidean norm."""
    m, k = a.ambient_dim, a.degree
    if len(a.coeffs) == 1:
        index, _ = next(iter(a.coeffs.items()))
        return ComassResult(a.norm(), np.eye(m)[:, list(index.zero_based())], closed_form=True)
    if k == 1:
        vector = np.array([a.coefficient((i,)) for i in range(1, m + 1)])
        return ComassResult(a.norm(), (vector / a.norm()).reshape(m, 1), closed_form=True)
    if k == m - 1:
        normal = np.array([hodge_star(a).coefficient((i,)) for i in range(1, m + 1)])
        q, _ = np.linalg.qr(np.column_stack([normal, np.eye(m)]))
        frame = q[:, 1:]
        if a.evaluate(frame) < 0:
            frame[:, 0] = -frame[:, 0]
        return ComassResult(a.norm(), frame, closed_form=True)
    return None


def optimize_comass(a: Covector, cfg: Optional[OptimizerConfig] = None) -> ComassResult:
    """Maximize |a(v1, ..., vk)| over orthonormal k-frames by projected ascent with QR retraction.

    The returned value is attained at the returned frame, so it is a certified
    lower bound for the comass.
    """
    cfg = cfg or OptimizerConfig()
    m, k = a.ambient_dim, a.degree
    if a.is_zero() or k > m:
        return ComassResult(0.0, np.eye(m)[:, : min(k, m)])
    if k == 0:
        return ComassResult(abs(a.coefficient(())), np.zeros((m, 0)), closed_form=True)
    if cfg.closed_form:
        result = _closed_form(a)
        if result is not None:
            return result

    seeds = np.random.SeedSequence(cfg.seed).spawn(cfg.restarts)

    def run(seed):
        start, _ = np.linalg.qr(np.random.default_rng(seed).standard_normal((m, k)))
        return _ascend(a, start, cfg)

    if cfg.workers > 1:
        with ThreadPoolExecutor(max_workers=cfg.workers) as pool:
            outcomes = list(pool.map(run, seeds))
    else:
        outcomes = [run(seed) for seed in seeds]
    best = max(range(len(outcomes)), key=lambda i: (outcomes[i][0], -i))
    value, frame = outcomes[best]
    logger.debug(
        "comass ascent finished",
        extra={"context": {"covector": str(a), "value": value, "restarts": cfg.restarts}},
    )
    return ComassResult(value, frame, restarts=cfg.restarts)


def comass(a: Covector, cfg: Optional[OptimizerConfig] = None) -> float:
    return optimize_comass(a, cfg).value


def comass_oracle(a: Covector, samples: int, seed: int = 0, unit_vectors: bool = False) -> float:
    """Brute-force lower bound: max |a| over random orthonormal frames (or raw unit vectors)."""
    if samples < 1:
        raise ValueError("samples must be at least 1")
    m, k = a.ambient_dim, a.degree
    if a.is_zero() or k > m:
        return 0.0
    if k == 0:
        return abs(a.coefficient(()))
    rng = np.random.default_rng(seed)
    best = 0.0
    chunk = 8192
    for start in range(0, samples, chunk):
        size = min(chunk, samples - start)
        gaussian = rng.standard_normal((size, m, k))
        if unit_vectors:
            frames = gaussian / np.linalg.norm(gaussian, axis=1, keepdims=True)
        else:
            frames, _ = np.linalg.qr(gaussian)
        best = max(best, float(np.max(np.abs(a.evaluate(frames)))))
    return best
