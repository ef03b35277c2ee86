"""Report tables: the common output container for tabulations, fits, and tests.

A ``ReportTable`` is a labelled grid of cells, each holding a value and an
optional standard error plus significance stars. Tables serialize to CSV
(long format, lossless floats), JSON (exact round trip), and markdown
(standard errors parenthesized beneath the point estimates).
"""

from __future__ import annotations

import csv
import io
import json
import math
from dataclasses import dataclass, field


def stars_for_p(p: float) -> str:
    """Significance stars: *** at 1%, ** at 5%, * at 10%."""
    if not math.isfinite(p):
        return ""
    if p < 0.01:
        return "***"
    if p < 0.05:
        return "**"
    if p < 0.10:
        return "*"
    return ""


@dataclass(frozen=True)
class Cell:
    value: float | str | None = None
    se: float | None = None
    stars: str = ""

    def is_empty(self) -> bool:
        return self.value is None


def _fmt(x) -> str:
    if x is None:
        return ""
    if isinstance(x, str):
        return x
    return repr(float(x))


def _fmt_display(x, digits: int = 4) -> str:
    if x is None:
        return ""
    if isinstance(x, str):
        return x
    return f"{float(x):.{digits}g}"


@dataclass
class ReportTable:
    """Labelled grid of cells with footnotes.

    ``cells`` maps (row_label, col_label) to a Cell; absent keys render as
    empty (a missing cell is reported as missing, never an error).
    """

    title: str
    row_labels: list[str] = field(default_factory=list)
    col_labels: list[str] = field(default_factory=list)
    cells: dict[tuple[str, str], Cell] = field(default_factory=dict)
    footnotes: list[str] = field(default_factory=list)

    def set(self, row: str, col: str, value=None, se=None, stars: str = "") -> None:
        if row not in self.row_labels:
            self.row_labels.append(row)
        if col not in self.col_labels:
            self.col_labels.append(col)
        self.cells[(row, col)] = Cell(value=value, se=se, stars=stars)

    def get(self, row: str, col: str) -> Cell:
        return self.cells.get((row, col), Cell())

    def add_footnote(self, note: str) -> None:
        self.footnotes.append(note)

    # --- serialization -------------------------------------------------

    def to_csv(self) -> str:
        """Long-format CSV: one line per cell, floats at full precision."""
        buf = io.StringIO()
        writer = csv.writer(buf, lineterminator="\n")
        writer.writerow(["table", "row", "col", "value", "se", "stars"])
        for row in self.row_labels:
            for col in self.col_labels:
                cell = self.get(row, col)
                if cell.is_empty():
                    continue
                writer.writerow([self.title, row, col, _fmt(cell.value), _fmt(cell.se), cell.stars])
        for note in self.footnotes:
            writer.writerow([self.title, "#footnote", "", note, "", ""])
        return buf.getvalue()

    def to_json_dict(self) -> dict:
        cells = [
            {
                "row": row,
                "col": col,
                "value": cell.value,
                "se": cell.se,
                "stars": cell.stars,
            }
            for (row, col), cell in sorted(self.cells.items())
        ]
        return {
            "title": self.title,
            "row_labels": self.row_labels,
            "col_labels": self.col_labels,
            "cells": cells,
            "footnotes": self.footnotes,
        }

    def to_json(self) -> str:
        return json.dumps(self.to_json_dict(), indent=2, sort_keys=False) + "\n"

    @classmethod
    def from_json(cls, text: str) -> "ReportTable":
        obj = json.loads(text)
        table = cls(
            title=obj["title"],
            row_labels=list(obj["row_labels"]),
            col_labels=list(obj["col_labels"]),
            footnotes=list(obj["footnotes"]),
        )
        for entry in obj["cells"]:
            table.cells[(entry["row"], entry["col"])] = Cell(
                value=entry["value"], se=entry["se"], stars=entry["stars"]
            )
        return table

    def to_markdown(self) -> str:
        """Markdown grid; each estimate row is followed by a row of "(se)"."""
        lines = [f"## {self.title}", ""]
        header = [""] + self.col_labels
        lines.append("| " + " | ".join(header) + " |")
        lines.append("|" + "|".join(["---"] * len(header)) + "|")
        for row in self.row_labels:
            values = []
            ses = []
            any_se = False
            for col in self.col_labels:
                cell = self.get(row, col)
                values.append(_fmt_display(cell.value) + cell.stars if not cell.is_empty() else "")
                if cell.se is not None:
                    ses.append(f"({_fmt_display(cell.se)})")
                    any_se = True
                else:
                    ses.append("")
            lines.append("| " + " | ".join([row] + values) + " |")
            if any_se:
                lines.append("| " + " | ".join([""] + ses) + " |")
        if self.footnotes:
            lines.append("")
            for i, note in enumerate(self.footnotes, start=1):
                lines.append(f"Note ({i}): {note}")
        return "\n".join(lines) + "\n"

    def render(self, fmt: str) -> str:
        if fmt == "csv":
            return self.to_csv()
        if fmt == "json":
            return self.to_json()
        if fmt == "markdown":
            return self.to_markdown()
        raise ValueError(f"unknown format: {fmt!r}")


def emit(table: ReportTable, fmt: str, path) -> None:
    """Write ``table`` to ``path`` in the requested format.

    The parent directory must already exist; I/O failures surface as OSError.
    """
    text = table.render(fmt)
    with open(path, "w", encoding="utf-8", newline="") as fh:
        fh.write(text)
