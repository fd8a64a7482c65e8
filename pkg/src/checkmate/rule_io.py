"""Reading and writing rule sets: free text, YAML, and tabular rows.

Text files use ``#`` comments, optional ``---`` front matter with ``options``
and ``include`` keys, and one rule per line with an optional ``name:`` prefix.
YAML files carry one mapping per rule (expr, name, label, description,
created, origin, meta) plus optional top-level ``options`` and ``include``.
File inclusion is recursive, depth-first, deduplicated by canonical path;
cycles abort with an error naming every file on the cycle.
"""

from __future__ import annotations

import os
import re
from datetime import datetime

import yaml

from . import dsl
from .errors import CycleError, LexError, ParseError, RuleIOError
from .rules import RuleEntry, RuleSet, build_ruleset

_NAME_PREFIX_RE = re.compile(r"^([A-Za-z][A-Za-z0-9._]*)\s*:(?![=])\s*(.+)$")

_YAML_EXTENSIONS = (".yml", ".yaml")

_OPTION_KEYS = ("na.value", "raise", "lin.eq.eps", "lin.ineq.eps")


def _normalize_options(raw: dict, path: str) -> dict:
    opts = {}
    for key, value in raw.items():
        if key not in _OPTION_KEYS:
            raise RuleIOError(f"{path}: unknown option {key!r}")
        if key == "na.value" and value is None:
            value = "NA"
        opts[key] = value
    return opts


def _canonical(path: str) -> str:
    return os.path.realpath(os.path.abspath(path))


def _resolve_include(parent: str, include: str) -> str:
    if os.path.isabs(include):
        return include
    return os.path.join(os.path.dirname(parent) or ".", include)


class _Loader:
    """Depth-first include resolution with cycle detection."""

    def __init__(self, now: datetime | None):
        self.now = now
        self.stack: list[str] = []  # display paths of files being read
        self.stack_keys: list[str] = []
        self.loaded: set[str] = set()
        self.entries: list[RuleEntry] = []
        self.options: dict = {}
        self.warnings: list[str] = []

    def load(self, path: str):
        key = _canonical(path)
        if key in self.stack_keys:
            start = self.stack_keys.index(key)
            raise CycleError(self.stack[start:] + [path])
        if key in self.loaded:
            return
        self.stack.append(path)
        self.stack_keys.append(key)
        try:
            if path.lower().endswith(_YAML_EXTENSIONS):
                self._load_yaml(path)
            else:
                self._load_text(path)
        finally:
            self.stack.pop()
            self.stack_keys.pop()
        self.loaded.add(key)

    def _read(self, path: str) -> str:
        try:
            with open(path, encoding="utf-8") as fh:
                return fh.read()
        except OSError as err:
            raise RuleIOError(f"cannot read {path}: {err}") from err

    def _load_includes(self, includes, path: str):
        if includes is None:
            return
        if isinstance(includes, str):
            includes = [includes]
        for inc in includes:
            self.load(_resolve_include(path, inc))

    # -- text ---------------------------------------------------------------

    def _load_text(self, path: str):
        content = self._read(path)
        lines = content.splitlines()
        i = 0
        # optional front matter between --- delimiters at the top
        while i < len(lines) and not lines[i].strip():
            i += 1
        if i < len(lines) and lines[i].strip() == "---":
            close = None
            for j in range(i + 1, len(lines)):
                if lines[j].strip() == "---":
                    close = j
                    break
            if close is None:
                raise RuleIOError(f"{path}: unterminated front matter")
            block = "\n".join(lines[i + 1 : close])
            try:
                front = yaml.safe_load(block) or {}
            except yaml.YAMLError as err:
                raise RuleIOError(f"{path}: bad front matter: {err}") from err
            unknown = set(front) - {"options", "include"}
            if unknown:
                raise RuleIOError(f"{path}: unknown front matter keys {sorted(unknown)}")
            self._load_includes(front.get("include"), path)
            if front.get("options"):
                self.options.update(_normalize_options(front["options"], path))
            i = close + 1

        comment_block: list[str] = []
        for lineno in range(i, len(lines)):
            line = lines[lineno]
            stripped = line.strip()
            if not stripped:
                comment_block = []
                continue
            if stripped.startswith("#"):
                comment_block.append(stripped.lstrip("#").strip())
                continue
            name = None
            source = stripped
            m = _NAME_PREFIX_RE.match(stripped)
            if m:
                name, source = m.group(1), m.group(2)
            try:
                dsl.parse(source)
            except (ParseError, LexError) as err:
                raise RuleIOError(f"{path}:{lineno + 1}: {err}") from err
            self.entries.append(
                RuleEntry(
                    source,
                    name=name,
                    description="\n".join(comment_block),
                    origin=path,
                    created=self.now,
                )
            )
            comment_block = []

    # -- yaml ---------------------------------------------------------------

    def _load_yaml(self, path: str):
        content = self._read(path)
        documents = []
        try:
            for doc in yaml.safe_load_all(content):
                if doc is not None:
                    documents.append(doc)
        except yaml.YAMLError as err:
            raise RuleIOError(f"{path}: invalid YAML: {err}") from err
        data: dict = {}
        for doc in documents:
            if not isinstance(doc, dict):
                raise RuleIOError(f"{path}: expected a mapping at the top level")
            data.update(doc)
        unknown = set(data) - {"options", "include", "rules"}
        if unknown:
            raise RuleIOError(f"{path}: unknown top-level keys {sorted(unknown)}")
        self._load_includes(data.get("include"), path)
        if data.get("options"):
            self.options.update(_normalize_options(data["options"], path))
        for index, item in enumerate(data.get("rules") or [], start=1):
            if not isinstance(item, dict):
                raise RuleIOError(f"{path}: rule entry {index} is not a mapping")
            if "expr" not in item or item["expr"] in (None, ""):
                raise RuleIOError(f"{path}: rule entry {index} is missing 'expr'")
            meta = item.get("meta")
            if not isinstance(meta, dict):
                meta = None
            created = item.get("created")
            if isinstance(created, str):
                created = datetime.strptime(created, "%Y-%m-%d %H:%M:%S")
            self.entries.append(
                RuleEntry(
                    str(item["expr"]).strip(),
                    name=str(item["name"]) if item.get("name") else None,
                    label=str(item.get("label") or ""),
                    description=str(item.get("description") or "").strip(),
                    origin=str(item.get("origin") or "") or path,
                    created=created or self.now,
                    meta=meta,
                )
            )


def read_rules(path: str, now: datetime | None = None) -> tuple[RuleSet, list[str]]:
    """Read a rule file (text or YAML), resolving includes depth-first."""
    loader = _Loader(now)
    loader.load(path)
    rs, warnings = build_ruleset(
        loader.entries, now=now, local_options=loader.options or None
    )
    return rs, loader.warnings + warnings


# format-specific aliases; dispatch lives in the loader
read_rules_text = read_rules
read_rules_yaml = read_rules


# ---------------------------------------------------------------------------
# YAML export
# ---------------------------------------------------------------------------


def export_yaml(rs: RuleSet, path: str):
    """Write the rule set in the YAML rule-file schema."""
    data: dict = {}
    if rs.local_options:
        data["options"] = dict(rs.local_options)
    data["rules"] = [
        {
            "expr": r.source(),
            "name": r.name,
            "label": r.label,
            "description": r.description,
            "created": r.created.strftime("%Y-%m-%d %H:%M:%S") if r.created else "",
            "origin": r.origin,
            "meta": dict(r.meta),
        }
        for r in rs.rules
    ]
    text = yaml.safe_dump(data, sort_keys=False, default_flow_style=False, allow_unicode=True)
    try:
        with open(path, "w", encoding="utf-8") as fh:
            fh.write(text)
    except OSError as err:
        raise RuleIOError(f"cannot write {path}: {err}") from err


# ---------------------------------------------------------------------------
# Tabular bridge (lossy: rule-set options are not representable)
# ---------------------------------------------------------------------------

TABLE_COLUMNS = ("name", "rule", "label", "description", "origin", "created")


def rules_to_table(rs: RuleSet) -> list[dict]:
    return [
        {
            "name": r.name,
            "rule": r.source(),
            "label": r.label,
            "description": r.description,
            "origin": r.origin,
            "created": r.created.strftime("%Y-%m-%d %H:%M:%S") if r.created else "",
        }
        for r in rs.rules
    ]


def table_to_rules(rows: list[dict], now: datetime | None = None) -> RuleSet:
    entries = []
    for index, row in enumerate(rows, start=1):
        if "rule" not in row or not row["rule"]:
            raise RuleIOError(f"row {index}: missing 'rule' column")
        try:
            dsl.parse(row["rule"])
        except ParseError as err:
            raise RuleIOError(f"row {index}: {err}") from err
        created = row.get("created")
        if isinstance(created, str) and created:
            created = datetime.strptime(created, "%Y-%m-%d %H:%M:%S")
        else:
            created = None
        entries.append(
            RuleEntry(
                row["rule"],
                name=row.get("name") or None,
                label=row.get("label") or "",
                description=row.get("description") or "",
                origin=row.get("origin") or "table",
                created=created or now,
            )
        )
    rs, _ = build_ruleset(entries, now=now)
    return rs
