"""Result tables and their CSV form.

Layout::

    # sqfock <scenario>/<table>
    # <free-form notes, one per line>
    r [1],alpha [rad/s]
    0,2
    ...
    # config_sha256=<hex>
    # <diagnostics, one per line>

Numbers are written with ``%.{precision}g`` (17 significant digits by
default, enough for an exact float round trip).
"""

from __future__ import annotations

import io
import math
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np


@dataclass
class ResultTable:
    name: str
    columns: list
    units: list
    rows: list = field(default_factory=list)
    notes: list = field(default_factory=list)
    diagnostics: list = field(default_factory=list)

    def __post_init__(self):
        if len(self.columns) != len(self.units):
            raise ValueError("every column needs a unit")

    def add(self, *values):
        if len(values) != len(self.columns):
            raise ValueError(f"row has {len(values)} values for {len(self.columns)} columns")
        row = []
        for v in values:
            if isinstance(v, str):
                row.append(v)
                continue
            v = float(np.real_if_close(v))
            if not math.isfinite(v):
                raise ValueError(f"non-finite value in table {self.name}")
            row.append(v)
        self.rows.append(row)

    def column(self, name):
        i = self.columns.index(name)
        return np.array([row[i] for row in self.rows])

    def to_csv(self, scenario, config_hash, precision=17):
        fmt = f"%.{precision}g"
        out = io.StringIO()
        out.write(f"# sqfock {scenario}/{self.name}\n")
        for note in self.notes:
            out.write(f"# {note}\n")
        out.write(",".join(f"{c} [{u}]" for c, u in zip(self.columns, self.units)) + "\n")
        for row in self.rows:
            out.write(",".join(v if isinstance(v, str) else fmt % v for v in row) + "\n")
        out.write(f"# config_sha256={config_hash}\n")
        for diag in self.diagnostics:
            out.write(f"# {diag}\n")
        return out.getvalue()

    def write(self, directory, scenario, config_hash, precision=17):
        path = Path(directory) / f"{self.name}.csv"
        path.write_text(self.to_csv(scenario, config_hash, precision))
        return path


def field_table(name, grid, values, unit="1", notes=()):
    """Grid-field file: one row per point with columns re, im, value."""
    tab = ResultTable(name, ["re", "im", "value"], ["1", "1", unit], notes=list(notes))
    pts = grid.points
    for z, v in zip(pts.ravel(), np.asarray(values).ravel()):
        tab.add(z.real, z.imag, v)
    return tab


def read_csv(path):
    """Parse a table written by :meth:`ResultTable.to_csv` back to header and rows."""
    header, rows, comments = None, [], []
    for line in Path(path).read_text().splitlines():
        if line.startswith("#"):
            comments.append(line[1:].strip())
        elif header is None:
            header = line.split(",")
        else:
            rows.append([_parse(x) for x in line.split(",")])
    return header, rows, comments


def _parse(x):
    try:
        return float(x)
    except ValueError:
        return x
