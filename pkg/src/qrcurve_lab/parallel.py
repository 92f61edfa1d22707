from concurrent.futures import ThreadPoolExecutor
from typing import Callable, List, Sequence, Tuple, TypeVar

import numpy as np

T = TypeVar("T")

DEFAULT_CHUNK = 65536


def chunk_bounds(total: int, chunk: int = DEFAULT_CHUNK) -> List[Tuple[int, int]]:
    return [(start, min(start + chunk, total)) for start in range(0, total, chunk)]


def fan_out(function: Callable[[Tuple[int, int]], T], bounds: Sequence[Tuple[int, int]], workers: int = 1) -> List[T]:
    """Apply `function` to every chunk; results come back in chunk order whatever the worker count."""
    if workers <= 1 or len(bounds) <= 1:
        return [function(b) for b in bounds]
    with ThreadPoolExecutor(max_workers=workers) as executor:
        return list(executor.map(function, bounds))


def pairwise_sum(values: np.ndarray) -> float:
    """Fixed-shape tree reduction, independent of how the values were produced."""
    values = np.asarray(values, dtype=float).ravel()
    if values.size == 0:
        return 0.0
    while values.size > 1:
        if values.size % 2:
            values = np.append(values, 0.0)
        values = values[0::2] + values[1::2]
    return float(values[0])


def grid_points(axis: np.ndarray, n: int, start: int, stop: int) -> np.ndarray:
    """Rows start..stop of the flattened grid axis^n, in C order."""
    flat = np.arange(start, stop)
    indices = np.unravel_index(flat, (len(axis),) * n)
    return np.stack([axis[i] for i in indices], axis=1)
