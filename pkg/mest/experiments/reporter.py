"""
Report formatting for simulation results.

CSV columns: scenario,n,p,k,method,EE,PE,C,IC,CP,replicates
Floats are written with repr() so parse_report(emit_report(rows)) == rows;
CP is the proportion in [0, 1]. Markdown groups rows by scenario and
prints CP as a percentage.
"""

from collections import OrderedDict
from pathlib import Path
from typing import Dict, List, Sequence
import csv
import io
import logging

import numpy as np

from ..exceptions import SpecError
from .normality import NormalityResult
from .runner import TableRow

logger = logging.getLogger(__name__)

CSV_COLUMNS = ["scenario", "n", "p", "k", "method", "EE", "PE", "C", "IC", "CP", "replicates"]
REPORT_FORMATS = ("csv", "markdown")


def _row_values(row: TableRow) -> List[str]:
    return [
        row.scenario,
        str(row.n),
        str(row.p),
        str(row.k),
        row.method,
        repr(float(row.ee)),
        repr(float(row.pe)),
        repr(float(row.c)),
        repr(float(row.ic)),
        repr(float(row.cp)),
        str(row.replicates),
    ]


def to_csv(rows: Sequence[TableRow]) -> str:
    buf = io.StringIO()
    writer = csv.writer(buf, lineterminator="\n")
    writer.writerow(CSV_COLUMNS)
    for row in rows:
        writer.writerow(_row_values(row))
    return buf.getvalue()


def to_markdown(rows: Sequence[TableRow]) -> str:
    """One table per scenario: Method | EE | PE | C | IC | CP."""
    groups: Dict[str, List[TableRow]] = OrderedDict()
    for row in rows:
        groups.setdefault(row.scenario, []).append(row)

    md = ""
    for scenario, group in groups.items():
        first = group[0]
        md += f"### {scenario} (n={first.n}, p={first.p}, m={first.m})\n\n"
        md += "| Method | EE | PE | C | IC | CP |\n"
        md += "|--------|----|----|---|----|----|\n"
        for row in group:
            md += (
                f"| {row.method} | {row.ee:.4f} | {row.pe:.4f} | "
                f"{row.c:.4f} | {row.ic:.4f} | {row.cp * 100:.2f}% |\n"
            )
        md += "\n"
    return md


def emit_report(rows: Sequence[TableRow], format: str = "csv") -> str:
    """Render rows as csv or markdown.

    Raises:
        SpecError: If rows is empty or the format is unknown
    """
    rows = list(rows)
    if not rows:
        raise SpecError("cannot emit a report without rows")
    if format == "csv":
        return to_csv(rows)
    if format == "markdown":
        return to_markdown(rows)
    raise SpecError(f"format must be one of {REPORT_FORMATS}, got {format!r}")


def parse_report(text: str) -> List[TableRow]:
    """Parse CSV produced by emit_report back into TableRows."""
    reader = csv.reader(io.StringIO(text))
    header = next(reader, None)
    if header != CSV_COLUMNS:
        raise SpecError(f"unexpected CSV header: {header}")
    rows = []
    for values in reader:
        if not values:
            continue
        scenario, n, p, k, method, ee, pe, c, ic, cp, reps = values
        rows.append(
            TableRow(
                scenario=scenario,
                n=int(n),
                p=int(p),
                k=int(k),
                method=method,
                ee=float(ee),
                pe=float(pe),
                c=float(c),
                ic=float(ic),
                cp=float(cp),
                replicates=int(reps),
            )
        )
    return rows


def write_samples(result: NormalityResult, path: Path) -> Path:
    """Standardized statistics as a one-column CSV for external plotting."""
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    np.savetxt(path, result.samples, delimiter=",", header="statistic", comments="")
    logger.debug(f"wrote {result.samples.size} samples to {path}")
    return path


def normality_report(result: NormalityResult, scenario: str) -> str:
    """Plain-text summary of a normality diagnostic."""
    return f"{scenario} u={result.u}\n{result.summary()}\n"
