import csv
from pathlib import Path
from typing import List, Optional, Sequence

from qrcurve_lab.logging import getLogger
from qrcurve_lab.run_record import RunRecord

logger = getLogger(__name__)


class ReportService:
    """
    Writes run records as JSON reports and plot-ready CSV tables

    Methods
    -------
    store(record, json_path, csv_path, header, rows)
    writes the JSON report and, when a path and rows are given, the CSV table
    """

    def store(
        self,
        record: RunRecord,
        json_path: Optional[str] = None,
        csv_path: Optional[str] = None,
        header: Sequence[str] = (),
        rows: Sequence[Sequence] = (),
    ) -> List[str]:
        written = []
        if json_path:
            path = Path(json_path)
            path.parent.mkdir(parents=True, exist_ok=True)
            path.write_text(record.to_json(), encoding="utf-8")
            written.append(str(path))
            logger.debug(f"STORE run '{record.run_id}'", extra={"context": {"path": str(path)}})
        if csv_path and header:
            path = Path(csv_path)
            path.parent.mkdir(parents=True, exist_ok=True)
            with path.open("w", newline="", encoding="utf-8") as handle:
                writer = csv.writer(handle)
                writer.writerow(header)
                writer.writerows(rows)
            written.append(str(path))
            logger.debug(
                f"STORE table for run '{record.run_id}'", extra={"context": {"path": str(path), "rows": len(rows)}}
            )
        return written
