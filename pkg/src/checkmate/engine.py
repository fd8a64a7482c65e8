"""Evaluates rule sets against data frames with three-valued logic.

Results are tri-state per item: True, False, or None for unverifiable.
Logical connectives follow Kleene strong three-valued logic; arithmetic and
comparisons propagate missing values.
"""

from __future__ import annotations

import re as _re
import statistics
import warnings as _warnings
from dataclasses import dataclass, field
from datetime import datetime

from . import dsl
from .errors import DataError, EvalError
from .frame import DataFrame
from .rules import OptionSet, Rule, RuleSet, new_ruleset


@dataclass
class Value:
    """An evaluation result: a typed vector of cells (None = missing)."""

    kind: str  # logical|number|text|frame
    cells: list = field(default_factory=list)
    frame: DataFrame | None = None

    def __len__(self):
        return len(self.cells)


def _logical(cells):
    return Value("logical", cells)


def _number(cells):
    return Value("number", cells)


def _text(cells):
    return Value("text", cells)


# ---------------------------------------------------------------------------
# Kleene connectives
# ---------------------------------------------------------------------------


def kleene_and(a, b):
    if a is False or b is False:
        return False
    if a is None or b is None:
        return None
    return True


def kleene_or(a, b):
    if a is True or b is True:
        return True
    if a is None or b is None:
        return None
    return False


def kleene_not(a):
    return None if a is None else not a


# ---------------------------------------------------------------------------
# Evaluator
# ---------------------------------------------------------------------------

_CMP = {
    "<": lambda a, b: a < b,
    "<=": lambda a, b: a <= b,
    "==": lambda a, b: a == b,
    "!=": lambda a, b: a != b,
    ">=": lambda a, b: a >= b,
    ">": lambda a, b: a > b,
}

_ARITH = {
    "+": lambda a, b: a + b,
    "-": lambda a, b: a - b,
    "*": lambda a, b: a * b,
    "/": lambda a, b: a / b,
    "^": lambda a, b: a**b,
}


class Evaluator:
    """Evaluates a rewritten expression in the scope of one data frame."""

    def __init__(self, df: DataFrame, ref=None):
        self.df = df
        self.ref = self._normalize_ref(ref)

    @staticmethod
    def _normalize_ref(ref):
        if ref is None:
            return {}
        if isinstance(ref, DataFrame):
            return {c.name: c.cells() for c in ref.columns}
        out = {}
        for name, value in ref.items():
            out[name] = value
        return out

    # -- scope --------------------------------------------------------------

    def lookup(self, name: str) -> Value:
        if self.df.has_column(name):
            col = self.df.column(name)
            kind = {"number": "number", "text": "text", "boolean": "logical"}[col.type]
            return Value(kind, col.cells())
        if name in self.ref:
            value = self.ref[name]
            if isinstance(value, DataFrame):
                return Value("frame", frame=value)
            if isinstance(value, Value):
                return value
            return self._vector_from_list(list(value))
        raise EvalError(f"object {name!r} not found")

    @staticmethod
    def _vector_from_list(cells: list) -> Value:
        present = [c for c in cells if c is not None]
        if all(isinstance(c, bool) for c in present):
            return _logical(cells)
        if all(isinstance(c, (int, float)) for c in present):
            return _number(cells)
        if all(isinstance(c, str) for c in present):
            return _text(cells)
        raise EvalError("reference vector mixes cell types")

    # -- dispatch -----------------------------------------------------------

    def eval(self, e: dsl.Expression) -> Value:
        if isinstance(e, dsl.NumberLit):
            return _number([e.value])
        if isinstance(e, dsl.StringLit):
            return _text([e.value])
        if isinstance(e, dsl.BoolLit):
            return _logical([e.value])
        if isinstance(e, dsl.MissingLit):
            return _logical([None])
        if isinstance(e, dsl.Identifier):
            return self.lookup(e.name)
        if isinstance(e, dsl.DatasetRef):
            return Value("frame", frame=self.df)
        if isinstance(e, dsl.Paren):
            return self.eval(e.inner)
        if isinstance(e, dsl.Unary):
            return self.eval_unary(e)
        if isinstance(e, dsl.Binary):
            return self.eval_binary(e)
        if isinstance(e, dsl.Call):
            return self.eval_call(e)
        if isinstance(e, dsl.FuncDep):
            return _logical(eval_fd(e, self.df))
        if isinstance(e, dsl.Implication):
            raise EvalError("implication must be rewritten before evaluation")
        raise EvalError(f"cannot evaluate {type(e).__name__}")

    def eval_unary(self, e: dsl.Unary) -> Value:
        operand = self.eval(e.operand)
        if e.op == "!":
            self._require(operand, "logical", "!")
            return _logical([kleene_not(c) for c in operand.cells])
        self._require(operand, "number", "unary -")
        return _number([None if c is None else -c for c in operand.cells])

    def _require(self, v: Value, kind: str, what: str):
        if v.kind != kind:
            raise EvalError(f"{what} expects a {kind} operand, got {v.kind}")

    @staticmethod
    def _broadcast(a: Value, b: Value):
        la, lb = len(a), len(b)
        if la == lb:
            return a.cells, b.cells
        if la == 1:
            return a.cells * lb, b.cells
        if lb == 1:
            return a.cells, b.cells * la
        raise EvalError(f"cannot combine vectors of lengths {la} and {lb}")

    def eval_binary(self, e: dsl.Binary) -> Value:
        if e.op == "%in%":
            return self.eval_in(e)
        lhs = self.eval(e.lhs)
        rhs = self.eval(e.rhs)
        if e.op in ("&", "|"):
            self._require(lhs, "logical", e.op)
            self._require(rhs, "logical", e.op)
            la, lb = self._broadcast(lhs, rhs)
            fn = kleene_and if e.op == "&" else kleene_or
            return _logical([fn(a, b) for a, b in zip(la, lb)])
        if e.op in _CMP:
            if lhs.kind == "frame" or rhs.kind == "frame":
                raise EvalError(f"cannot compare whole datasets with {e.op}")
            if lhs.kind != rhs.kind:
                raise EvalError(f"cannot compare {lhs.kind} with {rhs.kind}")
            op = _CMP[e.op]
            la, lb = self._broadcast(lhs, rhs)
            return _logical(
                [None if a is None or b is None else op(a, b) for a, b in zip(la, lb)]
            )
        if e.op in _ARITH:
            self._require(lhs, "number", e.op)
            self._require(rhs, "number", e.op)
            op = _ARITH[e.op]
            la, lb = self._broadcast(lhs, rhs)
            out = []
            for a, b in zip(la, lb):
                if a is None or b is None:
                    out.append(None)
                else:
                    try:
                        out.append(op(a, b))
                    except ZeroDivisionError:
                        out.append(float("inf") if a > 0 else float("-inf") if a < 0 else None)
            return _number(out)
        raise EvalError(f"unknown operator {e.op!r}")

    def eval_in(self, e: dsl.Binary) -> Value:
        lhs = self.eval(e.lhs)
        rhs = self.eval(e.rhs)
        if lhs.kind == "frame" or rhs.kind == "frame":
            raise EvalError("cannot apply %in% to a whole dataset")
        if lhs.kind != rhs.kind:
            raise EvalError(f"cannot test {lhs.kind} membership in a {rhs.kind} vector")
        members = set(c for c in rhs.cells if c is not None)
        return _logical([None if c is None else c in members for c in lhs.cells])

    # -- function calls -----------------------------------------------------

    def eval_call(self, e: dsl.Call) -> Value:
        fname = e.fname
        handler = getattr(self, "_fn_" + fname.replace(".", "_"), None)
        if handler is None:
            raise EvalError(f"unknown function {fname!r}")
        return handler(e)

    def _positional(self, e: dsl.Call, count: int, allow_named=()) -> list[Value]:
        for k in e.named_args:
            if k not in allow_named:
                raise EvalError(f"{e.fname} got an unexpected argument {k!r}")
        if len(e.args) != count:
            raise EvalError(f"{e.fname} expects {count} argument(s), got {len(e.args)}")
        return [self.eval(a) for a in e.args]

    def _na_rm(self, e: dsl.Call) -> bool:
        if "na.rm" not in e.named_args:
            return False
        v = self.eval(e.named_args["na.rm"])
        if v.kind != "logical" or len(v) != 1 or v.cells[0] is None:
            raise EvalError("na.rm must be TRUE or FALSE")
        return v.cells[0]

    def _the_frame(self, e: dsl.Call) -> DataFrame:
        if len(e.args) == 0:
            return self.df
        (v,) = self._positional(e, 1)
        if v.kind != "frame":
            raise EvalError(f"{e.fname} expects the dataset '.'")
        return v.frame

    def _fn_nrow(self, e):
        return _number([float(self._the_frame(e).n)])

    def _fn_number_of_records(self, e):
        return _number([float(self._the_frame(e).n)])

    def _fn_ncol(self, e):
        return _number([float(len(self._the_frame(e).columns))])

    def _fn_names(self, e):
        return _text(list(self._the_frame(e).names))

    def _fn_abs(self, e):
        (v,) = self._positional(e, 1)
        self._require(v, "number", "abs")
        return _number([None if c is None else abs(c) for c in v.cells])

    def _logical_reduce(self, e, empty, shortcut):
        (v,) = self._positional(e, 1, allow_named=("na.rm",))
        self._require(v, "logical", e.fname)
        cells = v.cells
        if self._na_rm(e):
            cells = [c for c in cells if c is not None]
        result = empty
        for c in cells:
            if c is shortcut:
                return _logical([shortcut])
            if c is None:
                result = None
        return _logical([result])

    def _fn_all(self, e):
        return self._logical_reduce(e, True, False)

    def _fn_any(self, e):
        return self._logical_reduce(e, False, True)

    def _numeric_cells(self, e, allow_named=("na.rm",)):
        (v,) = self._positional(e, 1, allow_named=allow_named)
        self._require(v, "number", e.fname)
        cells = v.cells
        if self._na_rm(e):
            cells = [c for c in cells if c is not None]
        return cells

    def _numeric_aggregate(self, e, fn):
        cells = self._numeric_cells(e)
        if any(c is None for c in cells):
            return _number([None])
        if not cells:
            return _number([None])
        return _number([float(fn(cells))])

    def _fn_mean(self, e):
        return self._numeric_aggregate(e, statistics.fmean)

    def _fn_sum(self, e):
        return self._numeric_aggregate(e, sum)

    def _fn_min(self, e):
        return self._numeric_aggregate(e, min)

    def _fn_max(self, e):
        return self._numeric_aggregate(e, max)

    def _fn_median(self, e):
        return self._numeric_aggregate(e, statistics.median)

    def _fn_cor(self, e):
        x, y = self._positional(e, 2)
        self._require(x, "number", "cor")
        self._require(y, "number", "cor")
        if len(x) != len(y):
            raise EvalError("cor expects vectors of equal length")
        pairs = [(a, b) for a, b in zip(x.cells, y.cells) if a is not None and b is not None]
        if len(pairs) < 2:
            return _number([None])
        try:
            r = statistics.correlation([p[0] for p in pairs], [p[1] for p in pairs])
        except statistics.StatisticsError:
            return _number([None])
        return _number([r])

    def _fn_grepl(self, e):
        pattern, v = self._positional(e, 2)
        if pattern.kind != "text" or len(pattern) != 1 or pattern.cells[0] is None:
            raise EvalError("grepl expects a pattern string as first argument")
        self._require(v, "text", "grepl")
        rx = _re.compile(pattern.cells[0])
        return _logical(
            [None if c is None else rx.search(c) is not None for c in v.cells]
        )

    def _key_rows(self, e: dsl.Call) -> list[tuple]:
        if not e.args:
            raise EvalError(f"{e.fname} expects at least one argument")
        if e.named_args:
            raise EvalError(f"{e.fname} takes no named arguments")
        vectors = [self.eval(a) for a in e.args]
        n = max(len(v) for v in vectors)
        cols = []
        for v in vectors:
            if v.kind == "frame":
                raise EvalError(f"{e.fname} expects column vectors")
            cells = v.cells * n if len(v) == 1 and n > 1 else v.cells
            if len(cells) != n:
                raise EvalError(f"cannot combine vectors of lengths {len(cells)} and {n}")
            cols.append(cells)
        return [tuple(col[i] for col in cols) for i in range(n)]

    def _fn_duplicated(self, e):
        rows = self._key_rows(e)
        seen = set()
        out = []
        for row in rows:
            out.append(row in seen)
            seen.add(row)
        return _logical(out)

    def _fn_is_unique(self, e):
        rows = self._key_rows(e)
        counts = {}
        for row in rows:
            counts[row] = counts.get(row, 0) + 1
        return _logical([counts[row] == 1 for row in rows])

    def _fn_all_unique(self, e):
        cells = self._fn_is_unique(e).cells
        return _logical([all(cells)])

    def _fn_is_complete(self, e):
        rows = self._key_rows(e)
        return _logical([all(c is not None for c in row) for row in rows])

    def _fn_all_complete(self, e):
        cells = self._fn_is_complete(e).cells
        return _logical([all(cells)])

    def _type_test(self, e, kind):
        (v,) = self._positional(e, 1)
        return _logical([v.kind == kind])

    def _fn_is_numeric(self, e):
        return self._type_test(e, "number")

    def _fn_is_character(self, e):
        return self._type_test(e, "text")

    def _fn_is_logical(self, e):
        return self._type_test(e, "logical")

    def _fn_is_na(self, e):
        (v,) = self._positional(e, 1)
        if v.kind == "frame":
            raise EvalError("is.na expects a vector")
        return _logical([c is None for c in v.cells])

    def _fn_c(self, e):
        if e.named_args:
            raise EvalError("c takes no named arguments")
        vectors = [self.eval(a) for a in e.args]
        kinds = {v.kind for v in vectors if v.kind != "logical" or any(
            c is not None for c in v.cells)}
        kinds.discard("frame")
        if len(kinds) > 1:
            raise EvalError("c cannot mix cell types")
        cells = []
        for v in vectors:
            if v.kind == "frame":
                raise EvalError("c expects vectors")
            cells.extend(v.cells)
        kind = kinds.pop() if kinds else "logical"
        return Value(kind, cells)


def eval_expr(e: dsl.Expression, df: DataFrame, ref=None) -> Value:
    """Evaluate a rewritten expression against a frame."""
    return Evaluator(df, ref).eval(e)


# ---------------------------------------------------------------------------
# Functional dependencies
# ---------------------------------------------------------------------------


def eval_fd(fd: dsl.FuncDep, df: DataFrame) -> list:
    """Tri-state per-record check of a functional dependency.

    Records are grouped on the determinant combination (missing is its own
    key); the group's first record in row order sets the reference dependent
    combination. A record with a missing dependent cell is unverifiable.
    """
    for name in fd.determinant + fd.dependent:
        if not df.has_column(name):
            raise EvalError(f"object {name!r} not found")
    det = [df.column(name).cells() for name in fd.determinant]
    dep = [df.column(name).cells() for name in fd.dependent]
    reference: dict[tuple, tuple] = {}
    out = []
    for i in range(df.n):
        key = tuple(col[i] for col in det)
        combo = tuple(col[i] for col in dep)
        if key not in reference:
            reference[key] = combo
        if any(c is None for c in combo):
            out.append(None)
        else:
            ref_combo = reference[key]
            if any(c is None for c in ref_combo):
                out.append(None)
            else:
                out.append(combo == ref_combo)
    return out


# ---------------------------------------------------------------------------
# Confrontation
# ---------------------------------------------------------------------------


@dataclass
class RuleOutcome:
    name: str
    expression: str
    result: list | None = None  # tri-state cells, or None when errored
    error: str | None = None
    warnings: list[str] = field(default_factory=list)


@dataclass
class Validation:
    outcomes: list[RuleOutcome]
    key_name: str | None = None
    key_values: list[str] | None = None
    call_text: str = ""
    created: datetime | None = None
    n_records: int = 0

    def __len__(self):
        return len(self.outcomes)

    def subset(self, selector) -> "Validation":
        """Select outcomes by 1-based index or by rule name."""
        by_name = {o.name: o for o in self.outcomes}
        picked = []
        for sel in selector:
            if isinstance(sel, str):
                if sel not in by_name:
                    raise DataError(f"unknown rule name {sel!r}")
                picked.append(by_name[sel])
            else:
                if not 1 <= sel <= len(self.outcomes):
                    raise DataError(f"rule index {sel} out of range")
                picked.append(self.outcomes[sel - 1])
        return Validation(
            picked, self.key_name, self.key_values, self.call_text, self.created,
            self.n_records,
        )


def prepare_rule(rule: Rule, opts: OptionSet) -> dsl.Expression:
    """Implication and tolerance rewriting with resolved options."""
    body = dsl.rewrite_implication(rule.body)
    return dsl.rewrite_tolerance(body, opts.lin_eq_eps, opts.lin_ineq_eps)


def confront(
    df: DataFrame,
    rs: RuleSet,
    key: str | None = None,
    ref=None,
    opts: dict | None = None,
    now: datetime | None = None,
) -> Validation:
    """Evaluate every rule of a rule set against one frame."""
    resolved = rs.resolved_options(opts)
    key_values = None
    if key is not None:
        if not df.has_column(key):
            raise DataError(f"unknown key column {key!r}")
        col = df.column(key)
        if any(col.missing):
            raise DataError(f"key column {key!r} has missing cells")
        key_values = [str(v) for v in col.values]

    outcomes = []
    for rule in rs.rules:
        body = prepare_rule(rule, resolved)
        expression = dsl.render(body)
        outcome = RuleOutcome(rule.name, expression)
        try:
            with _warnings.catch_warnings(record=True) as caught:
                _warnings.simplefilter("always")
                value = eval_expr(body, df, ref)
            if value.kind != "logical":
                raise EvalError(
                    f"rule {rule.name!r} does not evaluate to a logical value"
                )
            cells = list(value.cells)
            if resolved.na_value in (True, False):
                cells = [resolved.na_value if c is None else c for c in cells]
            outcome.result = cells
            for w in caught:
                message = str(w.message)
                if resolved.raise_ == "all":
                    raise EvalError(message)
                outcome.warnings.append(message)
        except EvalError as err:
            if resolved.raise_ in ("error", "all"):
                raise
            outcome.error = str(err)
        outcomes.append(outcome)

    return Validation(
        outcomes,
        key_name=key,
        key_values=key_values,
        call_text="confront(...)",
        created=now or datetime.now(),
        n_records=df.n,
    )


def check_that(df: DataFrame, *sources: str, key=None, ref=None, opts=None) -> Validation:
    """Shorthand: build a rule set from source strings and confront it."""
    if not sources:
        raise DataError("a rule set must contain at least one rule")
    rs, _ = new_ruleset([(None, s) for s in sources])
    return confront(df, rs, key=key, ref=ref, opts=opts)
