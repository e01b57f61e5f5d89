"""
Deterministic CSV / JSON emitters and the baseline comparison used for
regression runs. Field names are frozen in docs/formats.md.
"""

from __future__ import annotations

import csv
import io
import json
import math
from typing import Any

import numpy as np

FLOAT_FMT = "%.17g"


def _plain(obj: Any) -> Any:
    """Recursively turn numpy scalars/arrays and tuples into JSON-ready values."""
    if isinstance(obj, dict):
        return {str(k): _plain(v) for k, v in obj.items()}
    if isinstance(obj, (list, tuple)):
        return [_plain(v) for v in obj]
    if isinstance(obj, np.ndarray):
        return _plain(obj.tolist())
    if isinstance(obj, (np.bool_, bool)):
        return bool(obj)
    if isinstance(obj, np.integer):
        return int(obj)
    if isinstance(obj, (np.floating, float)):
        x = float(obj)
        if not math.isfinite(x):
            return None
        return x + 0.0  # drop the sign of zero
    return obj


def to_json(payload: dict) -> str:
    """Sorted keys, two-space indent, trailing newline; NaN/inf become null."""
    return json.dumps(_plain(payload), sort_keys=True, indent=2, allow_nan=False) + "\n"


def _cell(v) -> str:
    if v is None:
        return ""
    if isinstance(v, (bool, np.bool_)):
        return "true" if v else "false"
    if isinstance(v, (int, np.integer)):
        return str(int(v))
    if isinstance(v, (float, np.floating)):
        return FLOAT_FMT % (float(v) + 0.0) if math.isfinite(v) else ""
    return str(v)


def to_csv(columns: list[str], rows: list[list]) -> str:
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n", quoting=csv.QUOTE_MINIMAL)
    w.writerow(columns)
    for r in rows:
        if len(r) != len(columns):
            raise ValueError("row length does not match the header")
        w.writerow([_cell(v) for v in r])
    return buf.getvalue()


def read_csv(text: str) -> tuple[list[str], list[list[str]]]:
    rows = list(csv.reader(io.StringIO(text)))
    return rows[0], rows[1:]


def compare_results(current, baseline, rtol: float = 1e-9, atol: float = 1e-12,
                    path: str = "") -> list[str]:
    """Differences between two decoded JSON documents; empty when they agree.

    Numbers match when |a - b| <= atol + rtol |b|; everything else must be equal.
    """
    out: list[str] = []
    if isinstance(baseline, dict):
        if not isinstance(current, dict):
            return [f"{path or '/'}: expected object"]
        for k in sorted(set(baseline) | set(current)):
            p = f"{path}/{k}"
            if k not in current:
                out.append(f"{p}: missing")
            elif k not in baseline:
                out.append(f"{p}: unexpected")
            else:
                out += compare_results(current[k], baseline[k], rtol, atol, p)
        return out
    if isinstance(baseline, list):
        if not isinstance(current, list) or len(current) != len(baseline):
            return [f"{path}: length or type differs"]
        for i, (a, b) in enumerate(zip(current, baseline)):
            out += compare_results(a, b, rtol, atol, f"{path}/{i}")
        return out
    num = (int, float)
    if (isinstance(baseline, num) and not isinstance(baseline, bool)
            and isinstance(current, num) and not isinstance(current, bool)):
        if abs(current - baseline) > atol + rtol * abs(baseline):
            out.append(f"{path}: {current!r} != {baseline!r}")
        return out
    if current != baseline:
        out.append(f"{path}: {current!r} != {baseline!r}")
    return out
