"""Summaries, aggregation, sorting, and record-level export of validation results."""

from __future__ import annotations

from dataclasses import dataclass

from .engine import Validation, kleene_and, kleene_not, kleene_or
from .errors import DataError


@dataclass
class SummaryRow:
    name: str
    items: int
    passes: int
    fails: int
    nNA: int
    error: bool
    warning: bool
    expression: str


@dataclass
class RecordRow:
    id: str | None
    name: str
    value: bool | None
    expression: str


def summarize(v: Validation) -> list[SummaryRow]:
    rows = []
    for o in v.outcomes:
        if o.error is not None:
            rows.append(SummaryRow(o.name, 0, 0, 0, 0, True, bool(o.warnings), o.expression))
            continue
        cells = o.result
        rows.append(
            SummaryRow(
                o.name,
                len(cells),
                sum(1 for c in cells if c is True),
                sum(1 for c in cells if c is False),
                sum(1 for c in cells if c is None),
                False,
                bool(o.warnings),
                o.expression,
            )
        )
    return rows


def _all_cells(v: Validation) -> list:
    cells = []
    for o in v.outcomes:
        if o.result is not None:
            cells.extend(o.result)
    return cells


def all_pass(v: Validation, na_rm: bool = False):
    """Kleene conjunction over every result cell of every rule."""
    cells = _all_cells(v)
    if na_rm:
        cells = [c for c in cells if c is not None]
    out = True
    for c in cells:
        out = kleene_and(out, c)
        if out is False:
            return False
    return out


def any_fail(v: Validation, na_rm: bool = False):
    """Kleene disjunction of the negated result cells."""
    cells = _all_cells(v)
    if na_rm:
        cells = [c for c in cells if c is not None]
    out = False
    for c in cells:
        out = kleene_or(out, kleene_not(c))
        if out is True:
            return True
    return out


@dataclass
class ResultMatrix:
    """Column-per-rule matrix of tri-state cells, all sharing one length."""

    rule_names: list[str]
    rows: list[list]  # length x len(rule_names)

    @property
    def n_rows(self):
        return len(self.rows)


def values(v: Validation, simplify: bool = True):
    """Group results by length into matrices.

    With ``simplify`` a single matrix comes back when all outcomes share one
    length; otherwise (and always without ``simplify``) a dict keyed by length.
    """
    by_length: dict[int, ResultMatrix] = {}
    for o in v.outcomes:
        if o.result is None:
            continue
        m = len(o.result)
        if m not in by_length:
            by_length[m] = ResultMatrix([], [[] for _ in range(m)])
        matrix = by_length[m]
        matrix.rule_names.append(o.name)
        for i, cell in enumerate(o.result):
            matrix.rows[i].append(cell)
    if simplify and len(by_length) == 1:
        return next(iter(by_length.values()))
    return by_length


@dataclass
class AggregateRow:
    key: str  # rule name, or record key / 1-based index
    npass: int
    nfail: int
    nNA: int

    @property
    def total(self):
        return self.npass + self.nfail + self.nNA

    @property
    def rel_pass(self):
        return self.npass / self.total if self.total else 0.0

    @property
    def rel_fail(self):
        return self.nfail / self.total if self.total else 0.0

    @property
    def rel_na(self):
        return self.nNA / self.total if self.total else 0.0


def aggregate_results(v: Validation, by: str = "rule") -> list[AggregateRow]:
    """Pass/fail/NA counts and proportions per rule or per record."""
    if by == "rule":
        rows = []
        for o in v.outcomes:
            if o.result is None:
                continue
            rows.append(
                AggregateRow(
                    o.name,
                    sum(1 for c in o.result if c is True),
                    sum(1 for c in o.result if c is False),
                    sum(1 for c in o.result if c is None),
                )
            )
        return rows
    if by != "record":
        raise DataError(f"unknown aggregation {by!r}")
    n = v.n_records
    aligned = [o for o in v.outcomes if o.result is not None and len(o.result) == n]
    if not aligned:
        raise DataError("no record-aligned outcomes to aggregate by record")
    rows = []
    for i in range(n):
        key = v.key_values[i] if v.key_values else str(i + 1)
        cells = [o.result[i] for o in aligned]
        rows.append(
            AggregateRow(
                key,
                sum(1 for c in cells if c is True),
                sum(1 for c in cells if c is False),
                sum(1 for c in cells if c is None),
            )
        )
    return rows


def sort_results(v: Validation, by: str = "rule", decreasing: bool = False) -> list[AggregateRow]:
    """Aggregate and order by the number of passes, ties keeping input order."""
    rows = aggregate_results(v, by)
    return sorted(rows, key=lambda r: r.npass, reverse=decreasing)


def to_records(v: Validation) -> list[RecordRow]:
    """One row per rule-item; record-aligned outcomes carry the key id."""
    n = v.n_records
    rows = []
    for o in v.outcomes:
        if o.result is None:
            continue
        aligned = len(o.result) == n and v.key_values is not None
        for i, cell in enumerate(o.result):
            rid = v.key_values[i] if aligned else None
            rows.append(RecordRow(rid, o.name, cell, o.expression))
    return rows


def collect_errors(v: Validation) -> list[str]:
    return [f"{o.name}: {o.error}" for o in v.outcomes if o.error is not None]


def collect_warnings(v: Validation) -> list[str]:
    out = []
    for o in v.outcomes:
        for w in o.warnings:
            out.append(f"{o.name}: {w}")
    return out
