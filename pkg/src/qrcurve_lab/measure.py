import time
from datetime import datetime, timezone
from typing import Dict, Optional


class Clock:
    """Wall-clock stopwatch with named laps.

    Laps split one experiment into phases (per radius, per ball) so that the
    run log shows where the quadrature budget went.
    """

    def __init__(self):
        self.start_time: Optional[float] = None
        self.stop_time: Optional[float] = None
        self.laps: Dict[str, float] = {}
        self._last_lap: Optional[float] = None

    def start(self):
        self.reset()
        self.start_time = time.perf_counter()
        self._last_lap = self.start_time

    def lap(self, name: str) -> float:
        now = time.perf_counter()
        elapsed = now - (self._last_lap if self._last_lap is not None else now)
        self.laps[name] = self.laps.get(name, 0.0) + elapsed
        self._last_lap = now
        return elapsed

    def stop(self) -> Optional[float]:
        self.stop_time = time.perf_counter()
        return self.get_elapsed_time()

    def get_elapsed_time(self) -> Optional[float]:
        if self.start_time is None or self.stop_time is None:
            return None
        return self.stop_time - self.start_time

    def reset(self):
        self.start_time = None
        self.stop_time = None
        self.laps = {}
        self._last_lap = None


class Measure:
    @classmethod
    def start_clock(cls) -> Clock:
        m = Clock()
        m.start()
        return m

    @staticmethod
    def current_time() -> str:
        return datetime.now(tz=timezone.utc).isoformat(timespec="microseconds")
