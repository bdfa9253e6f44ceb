#!/usr/bin/env python3

import csv
import json
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np
from uncertainties.core import AffineScalarFunc

RESULTS_FILENAME = "results.jsonl"
SUMMARY_FILENAME = "summary.txt"

PLOT_TABLES = {
    "cue-decay": ("t", "sup_p", "fitted"),
    "due-decay": ("k", "sup_p", "fitted"),
    "beta-vs-eps": ("eps", "beta", "fitted"),
    "volume-growth": ("r", "V", "fitted"),
}
DECAY_TABLES = {"cue-decay", "due-decay"}


def to_jsonable(value):
    """
    Convert numpy values, uncertain values and nested containers into
    plain JSON types; an uncertain value becomes {"value", "error"}.
    """
    if isinstance(value, AffineScalarFunc):
        return {
            "value": to_jsonable(value.nominal_value),
            "error": to_jsonable(value.std_dev),
        }
    if isinstance(value, dict):
        return {str(key): to_jsonable(item) for key, item in value.items()}
    if isinstance(value, (list, tuple)):
        return [to_jsonable(item) for item in value]
    if isinstance(value, np.ndarray):
        return to_jsonable(value.tolist())
    if isinstance(value, np.bool_):
        return bool(value)
    if isinstance(value, np.integer):
        return int(value)
    if isinstance(value, (float, np.floating)):
        return float(value) if np.isfinite(value) else str(float(value))
    return value


@dataclass
class Report:
    """
    The records of a suite run, each carrying the operation, parameters
    and seed needed to re-run it, plus the plot tables.
    """

    header: dict
    records: list = field(default_factory=list)
    tables: dict = field(default_factory=dict)
    witnesses: bool = True

    def add(self, operation, parameters, result, seed=None, passed=None):
        if not self.witnesses:
            result = {key: value for key, value in result.items() if key != "witness"}
        record = {
            "operation": operation,
            "parameters": parameters,
            "seed": seed,
            "result": result,
        }
        if passed is not None:
            record["passed"] = bool(passed)
        self.records.append(to_jsonable(record))

    def add_table(self, name, rows):
        if name not in PLOT_TABLES:
            raise KeyError(f"Unknown plot table {name!r}. Valid tables are {sorted(PLOT_TABLES)}.")
        self.tables[name] = [tuple(float(value) for value in row) for row in rows]
        self.add(
            "plot-table",
            {"table": name, "columns": list(PLOT_TABLES[name])},
            {"rows": self.tables[name]},
        )

    @property
    def checks(self):
        return [record for record in self.records if "passed" in record]

    @property
    def passed(self):
        return all(record["passed"] for record in self.checks)

    def lines(self):
        yield json.dumps({"header": to_jsonable(self.header)}, sort_keys=True)
        for record in self.records:
            yield json.dumps(record, sort_keys=True)

    def summary(self):
        lines = [
            f"graph: {self.header['graph']['generator']} {self.header['graph']['parameters']}",
            f"seed: {self.header['seed']}",
            f"records: {len(self.records)}",
        ]
        for record in self.records:
            status = ""
            if "passed" in record:
                status = " pass" if record["passed"] else " FAIL"
            lines.append(f"  {record['operation']}{status}")
        failures = sum(not record["passed"] for record in self.checks)
        lines.append(f"checks: {len(self.checks)}, failures: {failures}")
        return "\n".join(lines)

    def write(self, directory):
        directory = Path(directory)
        directory.mkdir(parents=True, exist_ok=True)
        with open(directory / RESULTS_FILENAME, "w") as f:
            for line in self.lines():
                print(line, file=f)
        with open(directory / SUMMARY_FILENAME, "w") as f:
            print(self.summary(), file=f)
        return directory / RESULTS_FILENAME


def emit_plotdata(report, which, directory):
    """
    Write one plot table as CSV with a header row. Decay tables keep only
    rows with positive values, so they can be plotted on log-log axes.

    Returns:
        The path of the written file
    """
    if which not in PLOT_TABLES:
        raise KeyError(f"Unknown plot table {which!r}. Valid tables are {sorted(PLOT_TABLES)}.")
    rows = report.tables.get(which, [])
    if which in DECAY_TABLES:
        rows = [row for row in rows if all(value > 0 for value in row[:2])]
    if not rows:
        raise ValueError(f"The report has no data for plot table {which!r}.")

    directory = Path(directory)
    directory.mkdir(parents=True, exist_ok=True)
    filename = directory / f"{which}.csv"
    with open(filename, "w", newline="") as f:
        writer = csv.writer(f, lineterminator="\n")
        writer.writerow(PLOT_TABLES[which])
        for row in rows:
            writer.writerow([f"{value:.17g}" for value in row])
    return filename


def read_report(filename):
    """
    Rebuild a Report (header and records) from a results file.
    Plot tables are stored as records of operation "plot-table".
    """
    with open(filename) as f:
        lines = [json.loads(line) for line in f if line.strip()]
    if not lines or "header" not in lines[0]:
        raise ValueError(f"{filename} is not a results file.")
    report = Report(header=lines[0]["header"])
    for record in lines[1:]:
        report.records.append(record)
        if record["operation"] == "plot-table":
            report.tables[record["parameters"]["table"]] = [
                tuple(float(value) for value in row) for row in record["result"]["rows"]
            ]
    return report
