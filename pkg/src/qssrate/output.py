"""CSV serialisation of sweep results.

Files start with ``#``-prefixed echo lines (the resolved configuration),
then a header row and one row per (series, grid point). Floats use 17
significant digits so values round-trip exactly.
"""

from __future__ import annotations

import csv
import io
import math
from pathlib import Path

from .config import echo_lines, parse_echo_lines
from .schemes import SweepResult


def fmt(v) -> str:
    if v is None:
        return ""
    if isinstance(v, bool):
        return str(v).lower()
    if isinstance(v, int):
        return str(v)
    if isinstance(v, float):
        if math.isnan(v):
            return "nan"
        return format(v, ".17g")
    return str(v)


def sweep_header(result: SweepResult) -> list[str]:
    spec = result.spec
    cols = ["series"] if spec.series else []
    cols.append(spec.axis)
    if spec.quantity == "max_distance":
        cols += ["max_distance_km", "status"]
    else:
        cols += ["rate_bits_per_use", "mutual_information", "holevo", "mu_star", "mode", "status"]
    if spec.plob:
        cols.append("plob")
    return cols


def sweep_rows(result: SweepResult) -> list[list[str]]:
    spec = result.spec
    out = []
    for r in result.rows:
        row = [r.series] if spec.series else []
        row.append(fmt(r.axis_value))
        if spec.quantity == "max_distance":
            row += [fmt(r.max_distance_km), r.status]
        else:
            rep = r.report
            if rep is None:
                row += ["nan", "nan", "nan", fmt(r.mu_star), "", r.status]
            else:
                row += [fmt(rep.rate), fmt(rep.mutual_information), fmt(rep.holevo),
                        fmt(r.mu_star), rep.mode, r.status]
        if spec.plob:
            row.append(fmt(r.plob))
        out.append(row)
    return out


def sweep_csv_text(result: SweepResult, echo: dict | None = None) -> str:
    buf = io.StringIO()
    for line in echo_lines(echo or {}):
        buf.write(f"# {line}\n")
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(sweep_header(result))
    w.writerows(sweep_rows(result))
    return buf.getvalue()


def write_sweep_csv(result: SweepResult, path: str | Path, echo: dict | None = None) -> Path:
    path = Path(path)
    path.write_text(sweep_csv_text(result, echo), encoding="utf-8")
    return path


def read_csv(path: str | Path) -> tuple[dict, list[str], list[dict]]:
    """Parse a file written by :func:`write_sweep_csv`.

    Returns ``(echo, header, rows)``; numeric cells become floats, empty
    cells ``None``.
    """
    text = Path(path).read_text(encoding="utf-8")
    lines = text.splitlines()
    comments = [ln[2:] for ln in lines if ln.startswith("# ")]
    body = [ln for ln in lines if not ln.startswith("#")]
    reader = csv.reader(body)
    header = next(reader)
    rows = []
    for raw in reader:
        rec = {}
        for key, cell in zip(header, raw):
            if cell == "":
                rec[key] = None
                continue
            try:
                rec[key] = float(cell)
            except ValueError:
                rec[key] = cell
        rows.append(rec)
    return parse_echo_lines(comments), header, rows
