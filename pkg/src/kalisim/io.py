"""Point serialization: CSV for point data, JSON for summaries.

Times are printed with 17 significant digits so parsing the file back yields
bit-identical floats.
"""

from __future__ import annotations

import csv
import json
from typing import Iterable

from .core import Configuration


def emit_points(path: str, points: Iterable[tuple[float, int]] | Configuration) -> int:
    """Write rows ``time,node`` sorted by time; returns the row count."""
    if isinstance(points, Configuration):
        rows = [(t, j) for j, ts in points.items() for t in ts]
    else:
        rows = [(float(t), int(j)) for t, j in points]
    rows.sort()
    with open(path, "w", newline="") as fh:
        writer = csv.writer(fh)
        writer.writerow(["time", "node"])
        for t, j in rows:
            writer.writerow([f"{t:.17g}", j])
    return len(rows)


def read_points(path: str) -> list[tuple[float, int]]:
    with open(path, newline="") as fh:
        reader = csv.reader(fh)
        header = next(reader)
        if header != ["time", "node"]:
            raise ValueError(f"unexpected header {header!r} in {path}")
        return [(float(t), int(j)) for t, j in reader]


def write_summary(path: str, summary: dict) -> None:
    with open(path, "w") as fh:
        json.dump(summary, fh, indent=2, sort_keys=True)
        fh.write("\n")
