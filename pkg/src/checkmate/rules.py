"""Rule and rule-set containers with metadata, CRUD, and option management."""

from __future__ import annotations

import threading
from dataclasses import dataclass, field, replace
from datetime import datetime

from . import dsl
from .errors import OptionError, RuleSetError

TIMESTAMP_FORMAT = "%Y-%m-%d %H:%M:%S"

DEFAULT_META = {"language": "dsl/1", "severity": "error"}

OPTION_NAMES = ("na.value", "raise", "lin.eq.eps", "lin.ineq.eps")


@dataclass
class OptionSet:
    """Confrontation options; ``None`` fields inherit from the next level up."""

    na_value: bool | None | str = "NA"  # "NA", True, or False
    raise_: str = "none"  # none|error|all
    lin_eq_eps: float = 1e-8
    lin_ineq_eps: float = 1e-8

    def copy(self) -> "OptionSet":
        return replace(self)


_FIELD_BY_OPTION = {
    "na.value": "na_value",
    "raise": "raise_",
    "lin.eq.eps": "lin_eq_eps",
    "lin.ineq.eps": "lin_ineq_eps",
}


def _check_option(name: str, value):
    if name not in _FIELD_BY_OPTION:
        raise OptionError(f"unknown option {name!r}")
    if name == "na.value":
        if value not in ("NA", True, False):
            raise OptionError(f"invalid value for na.value: {value!r}")
    elif name == "raise":
        if value not in ("none", "error", "all"):
            raise OptionError(f"invalid value for raise: {value!r}")
    else:
        if not isinstance(value, (int, float)) or value < 0:
            raise OptionError(f"{name} must be a nonnegative number, got {value!r}")


_KEYWORD_TO_OPTION = {
    "na_value": "na.value",
    "raise_": "raise",
    "lin_eq_eps": "lin.eq.eps",
    "lin_ineq_eps": "lin.ineq.eps",
}


def _translate_keywords(pairs: dict) -> dict:
    return {_KEYWORD_TO_OPTION.get(k, k): v for k, v in pairs.items()}


def resolve_options(
    global_opts: dict | None = None,
    local_opts: dict | None = None,
    call_opts: dict | None = None,
) -> OptionSet:
    """Layer option settings: call beats ruleset-local beats global beats default."""
    merged = {}
    for layer in (global_opts or {}, local_opts or {}, call_opts or {}):
        for name, value in layer.items():
            _check_option(name, value)
            merged[name] = value
    out = OptionSet()
    for name, value in merged.items():
        setattr(out, _FIELD_BY_OPTION[name], value)
    return out


class _GlobalOptions:
    """Process-wide option table; reads snapshot under the same lock as writes."""

    def __init__(self):
        self._lock = threading.Lock()
        self._values: dict = {}

    def set(self, **pairs):
        translated = _translate_keywords(pairs)
        with self._lock:
            for name, value in translated.items():
                _check_option(name, value)
                self._values[name] = value

    def snapshot(self) -> dict:
        with self._lock:
            return dict(self._values)

    def reset(self):
        with self._lock:
            self._values.clear()


global_options = _GlobalOptions()


@dataclass
class Rule:
    body: dsl.Expression
    name: str
    label: str = ""
    description: str = ""
    origin: str = "command-line"
    created: datetime | None = None
    meta: dict[str, str] = field(default_factory=lambda: dict(DEFAULT_META))

    def variables(self) -> list[str]:
        return dsl.variables(self.body)

    def source(self) -> str:
        return dsl.render(self.body)


@dataclass
class RuleSet:
    rules: list[Rule] = field(default_factory=list)
    local_options: dict | None = None

    def __len__(self):
        return len(self.rules)

    def __iter__(self):
        return iter(self.rules)

    def names(self) -> list[str]:
        return [r.name for r in self.rules]

    def resolved_options(self, call_opts: dict | None = None) -> OptionSet:
        return resolve_options(global_options.snapshot(), self.local_options, call_opts)


def _check_unique(names):
    seen = set()
    for n in names:
        if n in seen:
            raise RuleSetError(f"duplicate rule name {n!r}")
        seen.add(n)


@dataclass
class RuleEntry:
    """One candidate rule before directive processing and naming."""

    source: str
    name: str | None = None
    label: str = ""
    description: str = ""
    origin: str = "command-line"
    created: datetime | None = None
    meta: dict[str, str] | None = None


def build_ruleset(
    entries: list[RuleEntry],
    now: datetime | None = None,
    local_options: dict | None = None,
) -> tuple[RuleSet, list[str]]:
    """Assemble a rule set from pre-collected entries.

    Macro and group definitions are absorbed into later rules; expressions
    outside the rule language are dropped with a warning listing their 1-based
    index. Unnamed rules get generated names V1, V2, ...; a group-expanded
    rule named R becomes R.1, R.2, ...
    """
    now = now or datetime.now()
    macros: dict[str, dsl.Expression] = {}
    groups: dict[str, list[str]] = {}
    rules: list[Rule] = []
    invalid: list[tuple[int, str]] = []
    pending: list[tuple[RuleEntry, list[dsl.Expression]]] = []

    for index, entry in enumerate(entries, start=1):
        directive = dsl.parse(entry.source)
        kind = dsl.classify(directive)
        if kind == "macro":
            macros[directive.name] = dsl.substitute_macros(directive.body, macros)
            continue
        if kind == "group":
            groups[directive.name] = list(directive.members)
            continue
        if kind == "invalid":
            invalid.append((index, entry.source.strip()))
            continue
        body = dsl.substitute_macros(directive.body, macros)
        expanded = dsl.expand_groups(body, groups)
        pending.append((entry, expanded))

    counter = 0
    for entry, expanded in pending:
        if entry.name is None:
            counter += 1
            base = f"V{counter}"
        else:
            base = entry.name
        meta = dict(DEFAULT_META)
        if entry.meta:
            meta.update(entry.meta)
        names = (
            [base]
            if len(expanded) == 1
            else [f"{base}.{i}" for i in range(1, len(expanded) + 1)]
        )
        for rule_name, body in zip(names, expanded):
            rules.append(
                Rule(
                    body,
                    rule_name,
                    label=entry.label,
                    description=entry.description,
                    origin=entry.origin,
                    created=entry.created or now,
                    meta=dict(meta),
                )
            )

    _check_unique(r.name for r in rules)
    warnings = []
    if invalid:
        listing = "\n".join(f"[{i:03d}] {src}" for i, src in invalid)
        warnings.append(
            "Invalid syntax detected, the following expressions have been ignored:\n"
            + listing
        )
    return RuleSet(rules, local_options), warnings


def new_ruleset(
    entries: list[tuple[str | None, str]],
    origin: str = "command-line",
    now: datetime | None = None,
) -> tuple[RuleSet, list[str]]:
    """Build a rule set from (name, source) pairs."""
    return build_ruleset(
        [RuleEntry(source, name=name, origin=origin) for name, source in entries],
        now=now,
    )


def subset(rs: RuleSet, selector) -> RuleSet:
    """New rule set with the selected rules; selector is index or name list."""
    picked = []
    by_name = {r.name: r for r in rs.rules}
    for sel in selector:
        if isinstance(sel, str):
            if sel not in by_name:
                raise RuleSetError(f"unknown rule name {sel!r}")
            picked.append(by_name[sel])
        else:
            if not 1 <= sel <= len(rs.rules):
                raise RuleSetError(f"rule index {sel} out of range 1..{len(rs.rules)}")
            picked.append(rs.rules[sel - 1])
    copies = [replace(r, meta=dict(r.meta)) for r in picked]
    local = dict(rs.local_options) if rs.local_options is not None else None
    return RuleSet(copies, local)


METADATA_FIELDS = ("name", "label", "description", "origin", "created")


def set_metadata(rs: RuleSet, fieldname: str, values) -> RuleSet:
    if fieldname not in METADATA_FIELDS:
        raise RuleSetError(f"unknown metadata field {fieldname!r}")
    values = list(values)
    if len(values) != len(rs.rules):
        raise RuleSetError(
            f"expected {len(rs.rules)} values for {fieldname!r}, got {len(values)}"
        )
    if fieldname == "name":
        _check_unique(values)
    updated = [
        replace(r, meta=dict(r.meta), **{fieldname: v})
        for r, v in zip(rs.rules, values)
    ]
    local = dict(rs.local_options) if rs.local_options is not None else None
    return RuleSet(updated, local)


def get_metadata(rs: RuleSet, fieldname: str) -> list:
    if fieldname not in METADATA_FIELDS:
        raise RuleSetError(f"unknown metadata field {fieldname!r}")
    return [getattr(r, fieldname) for r in rs.rules]


def meta_put(rs: RuleSet, key: str, values) -> RuleSet:
    values = list(values)
    if len(values) != len(rs.rules):
        raise RuleSetError(f"expected {len(rs.rules)} values, got {len(values)}")
    updated = []
    for r, v in zip(rs.rules, values):
        meta = dict(r.meta)
        meta[key] = v
        updated.append(replace(r, meta=meta))
    local = dict(rs.local_options) if rs.local_options is not None else None
    return RuleSet(updated, local)


def variables_matrix(rs: RuleSet) -> tuple[list[str], list[list[bool]]]:
    """Union of per-rule variables plus a rule-by-variable coverage matrix."""
    names: list[str] = []
    per_rule = []
    for r in rs.rules:
        vs = r.variables()
        per_rule.append(set(vs))
        for v in vs:
            if v not in names:
                names.append(v)
    matrix = [[v in used for v in names] for used in per_rule]
    return names, matrix


def concat(a: RuleSet, b: RuleSet) -> RuleSet:
    """Rules of a followed by b; colliding names in b get a '.1' suffix."""
    taken = set(r.name for r in a.rules)
    merged = [replace(r, meta=dict(r.meta)) for r in a.rules]
    for r in b.rules:
        name = r.name
        if name in taken:
            name = name + ".1"
        taken.add(name)
        merged.append(replace(r, name=name, meta=dict(r.meta)))
    if a.local_options is not None:
        local = dict(a.local_options)
    elif b.local_options is not None:
        local = dict(b.local_options)
    else:
        local = None
    return RuleSet(merged, local)


def set_options(target: RuleSet | None = None, **pairs) -> RuleSet | None:
    """Set options globally (no target) or locally on one rule set.

    A rule set that receives local options snapshots the current global state,
    making it immune to later global changes.
    """
    translated = _translate_keywords(pairs)
    for name, value in translated.items():
        _check_option(name, value)
    if target is None:
        global_options.set(**pairs)
        return None
    if target.local_options is not None:
        local = dict(target.local_options)
    else:
        # full snapshot of the effective global state, so later global
        # changes cannot reach this rule set
        current = resolve_options(global_options.snapshot())
        local = {
            "na.value": current.na_value,
            "raise": current.raise_,
            "lin.eq.eps": current.lin_eq_eps,
            "lin.ineq.eps": current.lin_ineq_eps,
        }
    local.update(translated)
    target.local_options = local
    return target
