"""
Result tables
=============

Writes experiment results as ``<name>.csv`` (UTF-8, RFC 4180: CRLF line
ends, minimal quoting) and ``<name>.json``, and reads the JSON back.
"""

import json
import logging
import os
from typing import Tuple

import numpy as np
import pandas as pd

from .monte_carlo import COLUMNS, ExperimentResult

logger = logging.getLogger(__name__)

TABLE_SCHEMA = 1


def _native(value):
    """JSON-ready python scalar; NaN becomes None"""
    if isinstance(value, (np.integer,)):
        return int(value)
    if isinstance(value, (float, np.floating)):
        return None if np.isnan(value) else float(value)
    return value


def table_records(table: pd.DataFrame):
    return [{col: _native(row[col]) for col in COLUMNS} for _, row in table.iterrows()]


def table_to_dict(result: ExperimentResult):
    return {
        "schema": TABLE_SCHEMA,
        "columns": list(COLUMNS),
        "rows": table_records(result.table),
        "errors": dict(result.errors),
        "reps": result.reps,
        "level": result.level,
    }


def export_table(result: ExperimentResult, output_dir: str, name: str) -> Tuple[str, str]:
    """
    Writes ``<output_dir>/<name>.csv`` and ``<output_dir>/<name>.json``.

    Returns
    -------
    the two paths
    """
    os.makedirs(output_dir, exist_ok=True)
    csv_path = os.path.join(output_dir, name + ".csv")
    json_path = os.path.join(output_dir, name + ".json")

    table = result.table.reindex(columns=COLUMNS)
    table.to_csv(csv_path, index=False, encoding="utf-8", lineterminator="\r\n")

    with open(json_path, "w", encoding="utf-8") as f:
        json.dump(table_to_dict(result), f, indent=2)
        f.write("\n")

    logger.info("Wrote %s and %s", csv_path, json_path)
    return csv_path, json_path


def read_table_json(path: str) -> ExperimentResult:
    """Reads a table written by :func:`export_table`"""
    with open(path, encoding="utf-8") as f:
        data = json.load(f)

    if data.get("schema") != TABLE_SCHEMA:
        raise ValueError("Unsupported table schema %r in %s" % (data.get("schema"), path))

    table = pd.DataFrame(data["rows"], columns=data["columns"])
    for col in ("rejection_pct", "stderr"):
        table[col] = table[col].astype(float)

    return ExperimentResult(table=table, errors=data["errors"], reps=data["reps"], level=data["level"])


def format_table(table: pd.DataFrame) -> str:
    """Console view: one row per cell, one column per test, rejection percentages"""
    if table.empty:
        return "(no cells)"

    view = table.assign(test=table["test"] + "(h=" + table["h"].astype(str) + ")")
    wide = view.pivot_table(
        index=["model", "params", "n"], columns="test", values="rejection_pct", sort=False, dropna=False
    )
    return wide.to_string(float_format=lambda v: "%.1f" % v)
