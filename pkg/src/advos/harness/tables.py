"""Result emission: JSON (round-trippable) and a datasets x methods CSV."""
from __future__ import annotations

import csv
import io
import json
from pathlib import Path

from ..errors import ConfigurationError
from .runner import ResultTable, sweep_series

RESULTS_JSON = "results.json"
RESULTS_CSV = "results.csv"
SWEEP_JSON = "sweep.json"


def dumps(obj) -> str:
    return json.dumps(obj, sort_keys=True, indent=1) + "\n"


def table_rows(table: ResultTable, which: str = "best") -> list:
    """Header plus one row per dataset; medians to 2 decimals, ``NA`` when no seed succeeded."""
    methods = table.methods
    header = ["Dataset"] + [f"{m} {col}" for m in methods for col in ("ACSA", "GM")]
    rows = [header]
    for ds in table.datasets:
        row = [ds]
        for m in methods:
            if not table.get(ds, m):
                row += ["", ""]
                continue
            agg = table.aggregate(ds, m, which)
            if agg["acsa"] is None:
                row += ["NA", "NA"]
            else:
                row += [f"{agg['acsa']:.2f}", f"{agg['gm']:.2f}"]
        rows.append(row)
    return rows


def table_csv(table: ResultTable, which: str = "best") -> str:
    buf = io.StringIO()
    csv.writer(buf, lineterminator="\n").writerows(table_rows(table, which))
    return buf.getvalue()


def emit_table(table: ResultTable, out_dir, formats=("json", "csv")) -> list:
    if not table.cells:
        raise ConfigurationError("no results to emit")
    out_dir = Path(out_dir)
    try:
        out_dir.mkdir(parents=True, exist_ok=True)
        written = []
        if "json" in formats:
            p = out_dir / RESULTS_JSON
            p.write_text(dumps(table.to_dict()))
            written.append(p)
        if "csv" in formats:
            p = out_dir / RESULTS_CSV
            p.write_text(table_csv(table))
            written.append(p)
    except OSError as e:
        raise ConfigurationError(f"cannot write results to {out_dir}: {e}") from None
    return written


def read_results(path) -> ResultTable:
    path = Path(path)
    if path.is_dir():
        path = path / RESULTS_JSON
    try:
        return ResultTable.from_dict(json.loads(path.read_text()))
    except (OSError, ValueError, KeyError) as e:
        raise ConfigurationError(f"cannot read results from {path}: {e}") from None


def emit_sweep(tables: dict, out_dir) -> list:
    """sweep.json with every per-f table, plus ``sweep_<dataset>_<method>.csv`` (f, acsa)."""
    out_dir = Path(out_dir)
    out_dir.mkdir(parents=True, exist_ok=True)
    blob = {"grid": sorted(tables), "runs": [{"f": f, "table": t.to_dict()} for f, t in sorted(tables.items())]}
    written = [out_dir / SWEEP_JSON]
    written[0].write_text(dumps(blob))
    for (ds, method), series in sweep_series(tables).items():
        p = out_dir / f"sweep_{ds}_{method}.csv"
        with p.open("w", newline="") as fh:
            w = csv.writer(fh, lineterminator="\n")
            w.writerow(["f", "acsa"])
            for f, a in series:
                w.writerow([f"{f:g}", "NA" if a is None else f"{a:.2f}"])
        written.append(p)
    return written
