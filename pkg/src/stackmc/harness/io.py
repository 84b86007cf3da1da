"""CSV ingestion and result emission (rows.csv, summary.csv, plot.gp)."""
from __future__ import annotations

import csv
import os
from pathlib import Path

import numpy as np

from ..errors import ParseError
from ..estimators import Dataset, StackReport
from .sweep import ROW_FIELDS, SUMMARY_FIELDS, ResultRow, SummaryRow

REPORT_FIELDS = (
    "n", "k", "seed", "f_hat_mc", "f_hat_fit", "f_hat_smc", "alpha", "rho",
    "sigma_f", "sigma_g", "cov_fg", "eim", "guard_triggered",
)


def fmt(v) -> str:
    if isinstance(v, (bool, np.bool_)):
        return "true" if v else "false"
    if isinstance(v, (float, np.floating)):
        return format(float(v), ".17g")
    return str(v)


def _parse_bool(text, line):
    t = text.strip().lower()
    if t in ("true", "1"):
        return True
    if t in ("false", "0"):
        return False
    raise ParseError(f"expected true/false, got {text!r}", line)


def _parse_float(text, line, column):
    try:
        return float(text)
    except ValueError:
        raise ParseError(f"column {column!r}: not a number: {text!r}", line) from None


def ingest_samples(path) -> Dataset:
    """Read a CSV with header ``x1,...,xD,f`` into a Dataset, keeping row order."""
    path = Path(path)
    with open(path, newline="") as fh:
        reader = csv.reader(fh)
        try:
            header = [h.strip() for h in next(reader)]
        except StopIteration:
            raise ParseError(f"{path}: empty file", 1) from None
        if not header or header[-1] != "f":
            raise ParseError(f"{path}: last header column must be 'f', got {header}", 1)
        d = len(header) - 1
        if d < 1 or header[:-1] != [f"x{i}" for i in range(1, d + 1)]:
            raise ParseError(f"{path}: input columns must be named x1..xD, got {header[:-1]}", 1)
        rows = []
        for row in reader:
            line = reader.line_num
            if not row or all(not c.strip() for c in row):
                continue
            if len(row) != d + 1:
                raise ParseError(f"{path}: expected {d + 1} cells, got {len(row)}", line)
            rows.append([_parse_float(c, line, header[j]) for j, c in enumerate(row)])
    if len(rows) < 2:
        raise ParseError(f"{path}: need at least 2 data rows, found {len(rows)}")
    arr = np.array(rows)
    bad = np.flatnonzero(~np.all(np.isfinite(arr), axis=1))
    if bad.size:
        raise ParseError(f"{path}: non-finite value", int(bad[0]) + 2)
    return Dataset(arr[:, :d], arr[:, d])


def write_samples(dataset: Dataset, path) -> Path:
    path = Path(path)
    header = [f"x{i}" for i in range(1, dataset.dims + 1)] + ["f"]
    with _open_write(path) as fh:
        w = csv.writer(fh)
        w.writerow(header)
        for x, f in zip(dataset.points, dataset.values):
            w.writerow([fmt(float(v)) for v in x] + [fmt(float(f))])
    return path


class _open_write:
    """open(path, "w") that reports the path on failure."""

    def __init__(self, path):
        self.path = Path(path)

    def __enter__(self):
        try:
            self.fh = open(self.path, "w", newline="")
        except OSError as exc:
            raise OSError(exc.errno, f"cannot write {self.path}: {exc.strerror}") from exc
        return self.fh

    def __exit__(self, *exc):
        self.fh.close()


def _write_table(path, fields, records):
    with _open_write(path) as fh:
        w = csv.writer(fh)
        w.writerow(fields)
        for r in records:
            w.writerow([fmt(getattr(r, f)) for f in fields])
    return Path(path)


def _read_table(path, fields):
    with open(path, newline="") as fh:
        reader = csv.reader(fh)
        header = next(reader, None)
        if header is None or tuple(header) != tuple(fields):
            raise ParseError(f"{path}: unexpected header {header}", 1)
        for row in reader:
            if len(row) != len(fields):
                raise ParseError(f"{path}: expected {len(fields)} cells", reader.line_num)
            yield reader.line_num, row


def read_rows(path) -> list[ResultRow]:
    out = []
    for line, row in _read_table(path, ROW_FIELDS):
        rec = dict(zip(ROW_FIELDS, row))
        out.append(ResultRow(
            n=int(rec["n"]), trial=int(rec["trial"]), seed=int(rec["seed"]),
            f_hat_mc=_parse_float(rec["f_hat_mc"], line, "f_hat_mc"),
            f_hat_fit=_parse_float(rec["f_hat_fit"], line, "f_hat_fit"),
            f_hat_smc=_parse_float(rec["f_hat_smc"], line, "f_hat_smc"),
            alpha=_parse_float(rec["alpha"], line, "alpha"),
            rho=_parse_float(rec["rho"], line, "rho"),
            guard_triggered=_parse_bool(rec["guard_triggered"], line),
        ))
    return out


def read_summary(path) -> list[SummaryRow]:
    out = []
    for line, row in _read_table(path, SUMMARY_FIELDS):
        vals = {}
        for name, cell in zip(SUMMARY_FIELDS, row):
            vals[name] = int(cell) if name in ("n", "trials") else _parse_float(cell, line, name)
        out.append(SummaryRow(**vals))
    return out


def plot_script(summary, image="mse.png") -> str:
    """gnuplot script drawing log-log MSE vs N for MC (green), fit (red), StackMC (blue)."""
    lines = [
        "# mean squared error versus number of samples",
        "set terminal pngcairo size 800,600",
        f"set output '{image}'",
        "set logscale xy",
        "set xlabel 'number of samples N'",
        "set ylabel 'mean squared error'",
        "set key top right",
        "set grid",
        "$mse << EOD",
        "# n mse_mc mse_fit mse_smc",
    ]
    for s in summary:
        lines.append(" ".join(fmt(v) for v in (s.n, float(s.mse_mc), float(s.mse_fit), float(s.mse_smc))))
    lines += [
        "EOD",
        "plot $mse using 1:2 with linespoints lw 2 lc rgb 'green' title 'Monte Carlo', \\",
        "     $mse using 1:3 with linespoints lw 2 lc rgb 'red' title 'fit to all samples', \\",
        "     $mse using 1:4 with linespoints lw 2 lc rgb 'blue' title 'StackMC'",
        "",
    ]
    return "\n".join(lines)


def emit_outputs(rows, summary, path) -> dict:
    """Write rows.csv, summary.csv and plot.gp into directory ``path``."""
    out = Path(path)
    try:
        os.makedirs(out, exist_ok=True)
    except OSError as exc:
        raise OSError(exc.errno, f"cannot create {out}: {exc.strerror}") from exc
    files = {
        "rows": _write_table(out / "rows.csv", ROW_FIELDS, rows),
        "summary": _write_table(out / "summary.csv", SUMMARY_FIELDS, summary),
    }
    plot = out / "plot.gp"
    with _open_write(plot) as fh:
        fh.write(plot_script(summary))
    files["plot"] = plot
    return files


def report_row(report: StackReport) -> list[str]:
    d = report.as_dict()
    return [fmt(d[f]) for f in REPORT_FIELDS]


def write_report_csv(report: StackReport, path) -> Path:
    """Append one report row, writing the header first if the file is new or empty."""
    path = Path(path)
    new = not path.exists() or path.stat().st_size == 0
    try:
        fh = open(path, "a", newline="")
    except OSError as exc:
        raise OSError(exc.errno, f"cannot write {path}: {exc.strerror}") from exc
    with fh:
        w = csv.writer(fh)
        if new:
            w.writerow(REPORT_FIELDS)
        w.writerow(report_row(report))
    return path

