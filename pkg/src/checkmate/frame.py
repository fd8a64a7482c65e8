"""Minimal typed data frame: named equal-length columns with per-cell missingness."""

from __future__ import annotations

from dataclasses import dataclass, field

from .errors import DataError

COLUMN_TYPES = ("number", "text", "boolean")


@dataclass
class Column:
    name: str
    type: str  # number|text|boolean
    values: list
    missing: list[bool]

    def __post_init__(self):
        if self.type not in COLUMN_TYPES:
            raise DataError(f"unknown column type {self.type!r}")
        if len(self.values) != len(self.missing):
            raise DataError(f"column {self.name!r}: values and missing mask differ in length")

    def cells(self) -> list:
        """Values with missing cells replaced by None."""
        return [None if m else v for v, m in zip(self.values, self.missing)]


@dataclass
class DataFrame:
    columns: list[Column] = field(default_factory=list)

    def __post_init__(self):
        names = [c.name for c in self.columns]
        if len(set(names)) != len(names):
            raise DataError("duplicate column names")
        lengths = {len(c.values) for c in self.columns}
        if len(lengths) > 1:
            raise DataError("columns differ in length")

    @property
    def n(self) -> int:
        return len(self.columns[0].values) if self.columns else 0

    @property
    def names(self) -> list[str]:
        return [c.name for c in self.columns]

    def column(self, name: str) -> Column:
        for c in self.columns:
            if c.name == name:
                return c
        raise DataError(f"no column named {name!r}")

    def has_column(self, name: str) -> bool:
        return any(c.name == name for c in self.columns)

    def cell(self, col: str, row: int):
        c = self.column(col)
        return None if c.missing[row] else c.values[row]


def _infer_type(cells: list) -> str:
    present = [v for v in cells if v is not None]
    if all(isinstance(v, bool) for v in present):
        if present:
            return "boolean"
    if all(isinstance(v, (int, float)) and not isinstance(v, bool) for v in present):
        return "number"
    if all(isinstance(v, str) for v in present):
        return "text"
    raise DataError("mixed cell types in one column")


def from_dict(data: dict[str, list], types: dict[str, str] | None = None) -> DataFrame:
    """Build a frame from name -> cell-list pairs; None marks a missing cell."""
    types = types or {}
    cols = []
    for name, cells in data.items():
        ctype = types.get(name) or _infer_type(cells)
        missing = [v is None for v in cells]
        fillers = {"number": 0.0, "text": "", "boolean": False}
        values = [fillers[ctype] if v is None else v for v in cells]
        cols.append(Column(name, ctype, values, missing))
    return DataFrame(cols)
