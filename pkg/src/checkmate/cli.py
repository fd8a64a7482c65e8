"""Command-line front end: check data files against rule files and report.

Commands: check, summary, lint, export, compare, cells, plot.
Exit codes: 0 all validations pass, 1 at least one fail, 2 rule errors (or
only unverifiable results under --strict), 3 usage or I/O error.
"""

from __future__ import annotations

import argparse
import csv
import json
import os
import sys
from dataclasses import dataclass, field

from . import diffs, results, rule_io
from .diffs import StatusTable
from .engine import Validation, confront
from .errors import CheckmateError, CycleError, DataError, RuleIOError, RuleSetError
from .frame import Column, DataFrame
from .rules import RuleSet

RULES_PATH_ENV = "CHECKMATE_RULES_PATH"

PALETTE = {"pass": "#2e7d32", "fail": "#c62828", "na": "#9e9e9e"}


# ---------------------------------------------------------------------------
# CSV ingestion
# ---------------------------------------------------------------------------

_BOOL_TOKENS = {"true": True, "TRUE": True, "false": False, "FALSE": False}


def _parse_number(text: str):
    try:
        return float(text)
    except ValueError:
        return None


def ingest_csv(path: str) -> DataFrame:
    """Read an RFC-4180 CSV with a header row, inferring column types.

    A column is boolean when every non-empty cell is true/false (either case),
    number when every non-empty cell parses as a decimal, text otherwise.
    Empty cells and the literal NA are missing.
    """
    try:
        with open(path, newline="", encoding="utf-8") as fh:
            reader = csv.reader(fh)
            try:
                header = next(reader)
            except StopIteration:
                raise DataError(f"{path}: empty file") from None
            rows = []
            for lineno, row in enumerate(reader, start=2):
                if len(row) != len(header):
                    raise DataError(
                        f"{path}: line {lineno}: expected {len(header)} fields, got {len(row)}"
                    )
                rows.append(row)
    except OSError as err:
        raise DataError(f"cannot read {path}: {err}") from err

    columns = []
    for j, name in enumerate(header):
        raw = [row[j] for row in rows]
        present = [c for c in raw if c not in ("", "NA")]
        if present and all(c in _BOOL_TOKENS for c in present):
            ctype = "boolean"
            convert = _BOOL_TOKENS.__getitem__
            filler = False
        elif present and all(_parse_number(c) is not None for c in present):
            ctype = "number"
            convert = float
            filler = 0.0
        else:
            ctype = "text"
            convert = str
            filler = ""
        missing = [c in ("", "NA") for c in raw]
        values = [filler if m else convert(c) for c, m in zip(raw, missing)]
        columns.append(Column(name, ctype, values, missing))
    return DataFrame(columns)


def emit_csv_frame(df: DataFrame, out) -> None:
    writer = csv.writer(out, lineterminator="\n")
    writer.writerow(df.names)
    for i in range(df.n):
        row = []
        for col in df.columns:
            cell = None if col.missing[i] else col.values[i]
            row.append(_cell_text(cell, col.type))
        writer.writerow(row)


def _cell_text(cell, ctype: str) -> str:
    if cell is None:
        return "NA"
    if ctype == "boolean":
        return "TRUE" if cell else "FALSE"
    if ctype == "number":
        return str(int(cell)) if cell == int(cell) else repr(cell)
    return cell


# ---------------------------------------------------------------------------
# Emitters
# ---------------------------------------------------------------------------


def _tri(cell) -> str:
    if cell is None:
        return "NA"
    return "TRUE" if cell else "FALSE"


def _summary_dicts(v: Validation) -> list[dict]:
    return [
        {
            "name": r.name,
            "items": r.items,
            "passes": r.passes,
            "fails": r.fails,
            "nNA": r.nNA,
            "error": r.error,
            "warning": r.warning,
            "expression": r.expression,
        }
        for r in results.summarize(v)
    ]


def _record_dicts(v: Validation) -> list[dict]:
    return [
        {"id": r.id, "name": r.name, "value": r.value, "expression": r.expression}
        for r in results.to_records(v)
    ]


def _status_dicts(table: StatusTable) -> list[dict]:
    out = []
    for status in table.statuses:
        row = {"status": status}
        for i, version in enumerate(table.version_names):
            row[version] = table.counts[status][i]
        out.append(row)
    return out


def _write_csv(rows: list[dict], header: list[str], out, formatter=None) -> None:
    writer = csv.writer(out, lineterminator="\n")
    writer.writerow(header)
    for row in rows:
        writer.writerow([(formatter or _plain)(row[h]) for h in header])


def _plain(value):
    if isinstance(value, bool):
        return "TRUE" if value else "FALSE"
    if value is None:
        return "NA"
    return value


def _write_text_table(rows: list[dict], header: list[str], out) -> None:
    cells = [[str(_plain(row[h])) for h in header] for row in rows]
    widths = [max([len(h)] + [len(r[i]) for r in cells]) for i, h in enumerate(header)]
    out.write("  ".join(h.rjust(w) for h, w in zip(header, widths)).rstrip() + "\n")
    for r in cells:
        out.write("  ".join(c.rjust(w) for c, w in zip(r, widths)).rstrip() + "\n")


def emit(payload, fmt: str, out) -> None:
    """Serialize a Validation or StatusTable as csv, json, or aligned text."""
    if isinstance(payload, Validation):
        summary = _summary_dicts(payload)
        records = _record_dicts(payload)
        if fmt == "json":
            json.dump({"summary": summary, "records": records}, out, indent=2)
            out.write("\n")
        elif fmt == "csv":
            _write_csv(
                records, ["id", "name", "value", "expression"], out
            )
        else:
            _write_text_table(
                summary,
                ["name", "items", "passes", "fails", "nNA", "error", "warning", "expression"],
                out,
            )
        return
    if isinstance(payload, StatusTable):
        rows = _status_dicts(payload)
        header = ["status"] + list(payload.version_names)
        if fmt == "json":
            json.dump({"statuses": rows}, out, indent=2)
            out.write("\n")
        elif fmt == "csv":
            _write_csv(rows, header, out)
        else:
            _write_text_table(rows, header, out)
        return
    raise DataError(f"cannot emit {type(payload).__name__}")


def emit_summary(v: Validation, fmt: str, out) -> None:
    summary = _summary_dicts(v)
    header = ["name", "items", "passes", "fails", "nNA", "error", "warning", "expression"]
    if fmt == "json":
        json.dump({"summary": summary}, out, indent=2)
        out.write("\n")
    elif fmt == "csv":
        _write_csv(summary, header, out)
    else:
        _write_text_table(summary, header, out)


# ---------------------------------------------------------------------------
# SVG charts
# ---------------------------------------------------------------------------


def svg_bar_chart(v: Validation, title: str = "validation results") -> str:
    """Stacked per-rule bars of passes / fails / NA counts."""
    rows = [r for r in results.summarize(v) if not r.error]
    width, bar_h, gap, left, top = 640, 26, 10, 110, 50
    plot_w = width - left - 30
    height = top + len(rows) * (bar_h + gap) + 40
    biggest = max((r.items for r in rows), default=1) or 1
    parts = [
        f'<svg xmlns="http://www.w3.org/2000/svg" version="1.1" width="{width}" height="{height}">',
        f'<text x="{width / 2}" y="24" text-anchor="middle" font-family="sans-serif" '
        f'font-size="16">{title}</text>',
    ]
    for i, row in enumerate(rows):
        y = top + i * (bar_h + gap)
        parts.append(
            f'<text x="{left - 8}" y="{y + bar_h - 8}" text-anchor="end" '
            f'font-family="sans-serif" font-size="12">{row.name}</text>'
        )
        x = left
        for count, color in (
            (row.passes, PALETTE["pass"]),
            (row.fails, PALETTE["fail"]),
            (row.nNA, PALETTE["na"]),
        ):
            if count == 0:
                continue
            w = plot_w * count / biggest
            parts.append(
                f'<rect x="{x:.1f}" y="{y}" width="{w:.1f}" height="{bar_h}" fill="{color}"/>'
            )
            parts.append(
                f'<text x="{x + w / 2:.1f}" y="{y + bar_h - 8}" text-anchor="middle" '
                f'font-family="sans-serif" font-size="11" fill="white">{count}</text>'
            )
            x += w
    legend_y = height - 18
    x = left
    for label, color in (("pass", PALETTE["pass"]), ("fail", PALETTE["fail"]), ("NA", PALETTE["na"])):
        parts.append(f'<rect x="{x}" y="{legend_y - 10}" width="12" height="12" fill="{color}"/>')
        parts.append(
            f'<text x="{x + 16}" y="{legend_y}" font-family="sans-serif" font-size="12">{label}</text>'
        )
        x += 70
    parts.append("</svg>")
    return "\n".join(parts)


_LINE_COLORS = [
    "#1565c0", "#2e7d32", "#c62828", "#6a1b9a", "#ef6c00", "#00838f",
    "#9e9e9e", "#558b2f", "#ad1457", "#4527a0", "#795548",
]


def svg_line_chart(table: StatusTable, title: str = "status by version") -> str:
    """One line per status across dataset versions."""
    width, height, left, top, right, bottom = 720, 420, 60, 40, 170, 50
    plot_w = width - left - right
    plot_h = height - top - bottom
    versions = table.version_names
    biggest = max(max(col) for col in table.counts.values()) or 1
    step = plot_w / max(len(versions) - 1, 1)

    def xy(i, count):
        x = left + i * step
        y = top + plot_h * (1 - count / biggest)
        return x, y

    parts = [
        f'<svg xmlns="http://www.w3.org/2000/svg" version="1.1" width="{width}" height="{height}">',
        f'<text x="{(left + width - right) / 2}" y="24" text-anchor="middle" '
        f'font-family="sans-serif" font-size="16">{title}</text>',
        f'<line x1="{left}" y1="{top + plot_h}" x2="{left + plot_w}" y2="{top + plot_h}" '
        f'stroke="black"/>',
        f'<line x1="{left}" y1="{top}" x2="{left}" y2="{top + plot_h}" stroke="black"/>',
    ]
    for i, version in enumerate(versions):
        x, _ = xy(i, 0)
        parts.append(
            f'<text x="{x:.1f}" y="{height - bottom + 20}" text-anchor="middle" '
            f'font-family="sans-serif" font-size="11">{version}</text>'
        )
    for k, status in enumerate(table.statuses):
        color = _LINE_COLORS[k % len(_LINE_COLORS)]
        points = " ".join(
            "{:.1f},{:.1f}".format(*xy(i, table.counts[status][i]))
            for i in range(len(versions))
        )
        parts.append(
            f'<polyline points="{points}" fill="none" stroke="{color}" stroke-width="2"/>'
        )
        ly = top + 14 * k
        parts.append(
            f'<line x1="{width - right + 10}" y1="{ly}" x2="{width - right + 28}" y2="{ly}" '
            f'stroke="{color}" stroke-width="2"/>'
        )
        parts.append(
            f'<text x="{width - right + 34}" y="{ly + 4}" font-family="sans-serif" '
            f'font-size="11">{status}</text>'
        )
    parts.append("</svg>")
    return "\n".join(parts)


# ---------------------------------------------------------------------------
# Command execution
# ---------------------------------------------------------------------------


@dataclass
class CliConfig:
    command: str
    data: list[str] = field(default_factory=list)
    rules: str | None = None
    key: str | None = None
    format: str = "text"
    out: str | None = None
    options: dict = field(default_factory=dict)
    how: str = "sequential"
    strict: bool = False


def _locate_rules(path: str) -> str:
    if os.path.exists(path):
        return path
    search = os.environ.get(RULES_PATH_ENV)
    if search:
        candidate = os.path.join(search, path)
        if os.path.exists(candidate):
            return candidate
    raise RuleIOError(f"rules file not found: {path}")


def _load_rules(cfg: CliConfig) -> tuple[RuleSet, list[str]]:
    if not cfg.rules:
        raise DataError("--rules is required for this command")
    return rule_io.read_rules(_locate_rules(cfg.rules))


def _open_out(cfg: CliConfig):
    if cfg.out:
        return open(cfg.out, "w", encoding="utf-8")
    return None


def _validation_exit_code(v: Validation, strict: bool) -> int:
    rows = results.summarize(v)
    if any(r.error for r in rows):
        return 2
    if any(r.fails for r in rows):
        return 1
    if strict and any(r.nNA for r in rows) and not any(r.passes for r in rows):
        return 2
    return 0


def banner(v: Validation) -> str:
    rows = results.summarize(v)
    return "\n".join(
        [
            f"Confrontations: {len(rows)}",
            f"With fails    : {sum(1 for r in rows if r.fails > 0)}",
            f"Warnings      : {sum(1 for r in rows if r.warning)}",
            f"Errors        : {sum(1 for r in rows if r.error)}",
        ]
    )


def _confront_single(cfg: CliConfig) -> Validation:
    if len(cfg.data) != 1:
        raise DataError(f"{cfg.command} needs exactly one data file")
    df = ingest_csv(cfg.data[0])
    rs, warnings = _load_rules(cfg)
    for w in warnings:
        print(w, file=sys.stderr)
    return confront(df, rs, key=cfg.key, opts=cfg.options or None)


def run(cfg: CliConfig) -> int:
    """Execute one CLI command; returns the process exit code."""
    try:
        return _run(cfg)
    except CheckmateError as err:
        print(f"error: {err}", file=sys.stderr)
        return 3


def _run(cfg: CliConfig) -> int:
    if cfg.command == "check":
        v = _confront_single(cfg)
        print(banner(v))
        sink = _open_out(cfg)
        try:
            emit(v, cfg.format, sink or sys.stdout)
        finally:
            if sink:
                sink.close()
        return _validation_exit_code(v, cfg.strict)

    if cfg.command == "summary":
        v = _confront_single(cfg)
        sink = _open_out(cfg)
        try:
            emit_summary(v, cfg.format, sink or sys.stdout)
        finally:
            if sink:
                sink.close()
        return _validation_exit_code(v, cfg.strict)

    if cfg.command == "lint":
        if not cfg.rules:
            raise DataError("--rules is required for this command")
        path = _locate_rules(cfg.rules)
        try:
            rs, warnings = rule_io.read_rules(path)
        except (CycleError, RuleIOError, RuleSetError) as err:
            print(f"error: {err}", file=sys.stderr)
            return 2
        for w in warnings:
            print(w, file=sys.stderr)
        print(f"{len(rs)} rule(s) parsed")
        return 2 if warnings else 0

    if cfg.command == "export":
        rs, warnings = _load_rules(cfg)
        for w in warnings:
            print(w, file=sys.stderr)
        if not cfg.out:
            raise DataError("export needs --out")
        lower = cfg.out.lower()
        if lower.endswith((".yml", ".yaml")):
            rule_io.export_yaml(rs, cfg.out)
        elif lower.endswith(".csv"):
            rows = rule_io.rules_to_table(rs)
            with open(cfg.out, "w", newline="", encoding="utf-8") as fh:
                writer = csv.DictWriter(fh, fieldnames=list(rule_io.TABLE_COLUMNS), lineterminator="\n")
                writer.writeheader()
                writer.writerows(rows)
        else:
            with open(cfg.out, "w", encoding="utf-8") as fh:
                for r in rs.rules:
                    if r.description:
                        for line in r.description.splitlines():
                            fh.write(f"# {line}\n")
                    fh.write(f"{r.name}: {r.source()}\n\n")
        return 0

    if cfg.command in ("compare", "cells"):
        if len(cfg.data) < 2:
            raise DataError(f"{cfg.command} needs at least two data files")
        versions = {_version_name(p): ingest_csv(p) for p in cfg.data}
        if cfg.command == "compare":
            rs, _ = _load_rules(cfg)
            table = diffs.compare_validations(rs, versions, how=cfg.how)
        else:
            table = diffs.compare_cells(versions, how=cfg.how)
        sink = _open_out(cfg)
        try:
            emit(table, cfg.format, sink or sys.stdout)
        finally:
            if sink:
                sink.close()
        return 0

    if cfg.command == "plot":
        if not cfg.out:
            raise DataError("plot needs --out")
        if len(cfg.data) == 1:
            v = _confront_single(cfg)
            svg = svg_bar_chart(v)
        else:
            versions = {_version_name(p): ingest_csv(p) for p in cfg.data}
            rs, _ = _load_rules(cfg)
            table = diffs.compare_validations(rs, versions, how=cfg.how)
            svg = svg_line_chart(table)
        with open(cfg.out, "w", encoding="utf-8") as fh:
            fh.write(svg + "\n")
        return 0

    raise DataError(f"unknown command {cfg.command!r}")


def _version_name(path: str) -> str:
    return os.path.splitext(os.path.basename(path))[0]


# ---------------------------------------------------------------------------
# Argument parsing
# ---------------------------------------------------------------------------


def _parse_option(text: str) -> tuple[str, object]:
    if "=" not in text:
        raise DataError(f"--set expects option=value, got {text!r}")
    name, raw = text.split("=", 1)
    name = name.strip()
    raw = raw.strip()
    if name in ("lin.eq.eps", "lin.ineq.eps"):
        return name, float(raw)
    if name == "na.value":
        return name, {"NA": "NA", "TRUE": True, "FALSE": False}.get(raw, raw)
    return name, raw


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="checkmate", description="Validate tabular data against a rule file."
    )
    sub = parser.add_subparsers(dest="command", required=True)
    for name in ("check", "summary", "lint", "export", "compare", "cells", "plot"):
        p = sub.add_parser(name)
        p.add_argument("data", nargs="*", help="CSV data file(s)")
        p.add_argument("--rules", help="rule file (text or YAML)")
        p.add_argument("--key", help="unique record identifier column")
        p.add_argument("--format", choices=["csv", "json", "text"], default="text")
        p.add_argument("--out", help="output path")
        p.add_argument(
            "--set", action="append", default=[], metavar="OPTION=VALUE",
            help="confrontation option override (repeatable)",
        )
        p.add_argument("--how", choices=["sequential", "to_first"], default="sequential")
        p.add_argument("--strict", action="store_true")
    return parser


def main(argv=None) -> int:
    try:
        ns = build_parser().parse_args(argv)
    except SystemExit as err:
        return 3 if err.code not in (0, None) else 0
    try:
        options = dict(_parse_option(s) for s in ns.set)
        cfg = CliConfig(
            command=ns.command,
            data=list(ns.data),
            rules=ns.rules,
            key=ns.key,
            format=ns.format,
            out=ns.out,
            options=options,
            how=ns.how,
            strict=ns.strict,
        )
    except CheckmateError as err:
        print(f"error: {err}", file=sys.stderr)
        return 3
    return run(cfg)


if __name__ == "__main__":
    sys.exit(main())
