"""Report serialization: deterministic JSON and plot-ready CSV tables."""

import csv
import json
import math
from pathlib import Path

import numpy as np

HISTOGRAM_BINS = 10

# column name -> parser; the order is the CSV column order
TABLES = {
    "checks": {"case": str, "name": str, "ref": str, "residual": float, "tolerance": float,
               "pass": lambda v: v == "True"},
    "spectra": {"case": str, "index": int, "lambda": float, "eta": float},
    "certificates": {"case": str, "height": float, "jacobian": float, "bound": float,
                     "margin": float, "tau": float, "radius": float},
    "margin_histogram": {"bin_low": float, "bin_high": float, "count": int},
}


def _finite_or_tag(obj):
    # strict JSON has no NaN or infinities; keep them as the strings float() parses back
    if isinstance(obj, float) and not math.isfinite(obj):
        return repr(obj)
    if isinstance(obj, dict):
        return {k: _finite_or_tag(v) for k, v in obj.items()}
    if isinstance(obj, (list, tuple)):
        return [_finite_or_tag(v) for v in obj]
    return obj


def dumps(report):
    """Canonical JSON text: sorted keys, fixed separators, trailing newline."""
    return json.dumps(_finite_or_tag(report), sort_keys=True, indent=1, allow_nan=False) + "\n"


def write_report(report, path):
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    path.write_text(dumps(report))
    return path


def load_report(path):
    path = Path(path)
    if not path.is_file():
        raise FileNotFoundError(f"no report at {path}")
    return json.loads(path.read_text())


def margin_histogram(report):
    margins = [float(row["margin"]) for row in report.get("tables", {}).get("certificates", [])]
    margins = [m for m in margins if math.isfinite(m)]
    if not margins:
        return []
    counts, edges = np.histogram(margins, bins=HISTOGRAM_BINS)
    return [{"bin_low": float(edges[i]), "bin_high": float(edges[i + 1]), "count": int(c)}
            for i, c in enumerate(counts)]


def table_rows(report):
    tables = report.get("tables", {})
    return {
        "checks": report.get("checks", []),
        "spectra": tables.get("spectra", []),
        "certificates": tables.get("certificates", []),
        "margin_histogram": margin_histogram(report),
    }


def emit_tables(report, outdir):
    """Write one CSV per table into outdir; returns the paths. Empty tables get a header row only."""
    outdir = Path(outdir)
    outdir.mkdir(parents=True, exist_ok=True)
    paths = []
    for name, rows in table_rows(report).items():
        columns = list(TABLES[name])
        path = outdir / f"{name}.csv"
        with path.open("w", newline="") as fh:
            writer = csv.writer(fh, quoting=csv.QUOTE_MINIMAL, lineterminator="\r\n")
            writer.writerow(columns)
            for row in rows:
                writer.writerow([_cell(row[c]) for c in columns])
        paths.append(path)
    return paths


def _cell(value):
    if isinstance(value, float):
        return repr(value)
    return str(value)


def read_tables(outdir):
    """Parse the CSVs written by emit_tables back into typed rows."""
    outdir = Path(outdir)
    out = {}
    for name, parsers in TABLES.items():
        with (outdir / f"{name}.csv").open(newline="") as fh:
            reader = csv.reader(fh)
            header = next(reader)
            if header != list(parsers):
                raise ValueError(f"{name}.csv has columns {header}, expected {list(parsers)}")
            out[name] = [{c: parsers[c](v) for c, v in zip(header, row)} for row in reader]
    return out
