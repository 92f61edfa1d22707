import threading
from typing import Callable

import numpy as np

from qrcurve_lab.curves import CurveMap, operator_norms, pullback_density
from qrcurve_lab.manifold import FormField


class DensityField:
    """star f*form as a quadrature integrand; remembers the smallest value it was evaluated at."""

    def __init__(self, f: CurveMap, form: FormField, transform: Callable[[np.ndarray], np.ndarray] = None):
        self.f = f
        self.form = form
        self.transform = transform
        self.minimum = np.inf
        self._lock = threading.Lock()

    def __call__(self, points: np.ndarray) -> np.ndarray:
        density = pullback_density(self.f, self.form, points)
        if density.size:
            with self._lock:
                self.minimum = min(self.minimum, float(density.min()))
        return density if self.transform is None else self.transform(density)

    def power(self, p: float) -> "DensityField":
        return DensityField(self.f, self.form, lambda density: np.abs(density) ** p)

    @property
    def saw_negative(self) -> bool:
        return self.minimum < 0.0


def differential_power(f: CurveMap, q: float) -> Callable[[np.ndarray], np.ndarray]:
    """|Df|^q as a quadrature integrand."""
    return lambda points: operator_norms(f.differentials(points)) ** q
