import hashlib
import json
from typing import Any, Dict

from pydantic import BaseModel

from qrcurve_lab.logging import getLogger

logger = getLogger(name=__name__)


def _encode(value: Any) -> Any:
    if isinstance(value, BaseModel):
        return json.loads(value.json())
    if isinstance(value, BaseException):
        return f"{type(value).__name__}: {value}"
    if isinstance(value, dict):
        return {str(k): _encode(v) for k, v in value.items()}
    if isinstance(value, (list, tuple)):
        return [_encode(v) for v in value]
    return value


class RunRecord:
    """One experiment run, stored as a JSON report.

    Keys must be declared in MAPPING; `timing` keys are logged but never written,
    so identical inputs give byte-identical reports.
    """

    MAPPING = {
        "properties": {
            "run_id": {"type": "keyword"},
            "command": {"type": "keyword"},
            "qrcurve_lab_release_version": {"type": "keyword"},
            "seed": {"type": "integer"},
            "config": {"type": "object"},
            "report": {"type": "object"},
            "summary": {"type": "text"},
            "passed": {"type": "boolean"},
            "exit_code": {"type": "integer"},
            "error": {"type": "text"},
            "diagnostics": {"type": "object"},
            "exc_info": {"type": "text"},
            "request_time": {"type": "timing"},
            "duration_total": {"type": "timing"},
            "laps": {"type": "timing"},
        }
    }

    def __init__(self, command: str, config: Dict, seed: int):
        canonical = json.dumps(_encode(config), sort_keys=True, separators=(",", ":"))
        digest = hashlib.sha256(f"{command}|{seed}|{canonical}".encode("utf-8")).hexdigest()
        self.run_id: str = digest[:16]
        self.record_data: Dict[str, Any] = {}
        self.record({"run_id": self.run_id, "command": command, "seed": seed, "config": config})

    def record(self, field_update: Dict):
        """Updates the nested record dictionary on the first two levels.

        Dictionary values are merged into the existing level-two dictionary,
        anything else replaces the level-one entry.
        """
        field_update = _encode(field_update)
        for key, value in field_update.items():
            if key not in self.MAPPING["properties"]:
                raise TypeError(f"{key} does not have type mapping")
            if isinstance(value, dict):
                nested = self.record_data.setdefault(key, {})
                if not isinstance(nested, dict):
                    nested = self.record_data[key] = {}
                nested.update(value)
            else:
                self.record_data[key] = value

    def timings(self) -> Dict[str, Any]:
        return {
            key: value
            for key, value in self.record_data.items()
            if self.MAPPING["properties"][key]["type"] == "timing"
        }

    def to_dict(self) -> Dict[str, Any]:
        """The JSON payload: every recorded field except timings."""
        return {
            key: value
            for key, value in self.record_data.items()
            if self.MAPPING["properties"][key]["type"] != "timing"
        }

    def to_json(self) -> str:
        return json.dumps(self.to_dict(), sort_keys=True, indent=2) + "\n"
