import itertools
import random

import pytest

from checkmate import dsl, from_dict
from checkmate.engine import (
    check_that,
    confront,
    eval_expr,
    eval_fd,
    kleene_and,
    kleene_not,
    kleene_or,
)
from checkmate.errors import DataError, EvalError
from checkmate.results import summarize
from checkmate.rules import new_ruleset, subset


def expr(source):
    return dsl.parse(source).body


def cells(source, df, ref=None):
    return eval_expr(expr(source), df, ref).cells


class TestKleene:
    T, F, N = True, False, None

    def test_and(self):
        assert kleene_and(self.T, self.T) is True
        assert kleene_and(self.T, self.F) is False
        assert kleene_and(self.F, self.N) is False
        assert kleene_and(self.N, self.F) is False
        assert kleene_and(self.T, self.N) is None
        assert kleene_and(self.N, self.N) is None

    def test_or(self):
        assert kleene_or(self.F, self.F) is False
        assert kleene_or(self.T, self.N) is True
        assert kleene_or(self.N, self.T) is True
        assert kleene_or(self.F, self.N) is None
        assert kleene_or(self.N, self.N) is None

    def test_not(self):
        assert kleene_not(self.T) is False
        assert kleene_not(self.F) is True
        assert kleene_not(self.N) is None

    def test_de_morgan(self):
        for a, b in itertools.product([True, False, None], repeat=2):
            assert kleene_not(kleene_and(a, b)) == kleene_or(
                kleene_not(a), kleene_not(b)
            )


class TestEvalExpr:
    def test_comparison(self):
        df = from_dict({"x": [1.0, -1.0, None]})
        assert cells("x >= 0", df) == [True, False, None]

    def test_missing_propagates_through_arithmetic(self):
        df = from_dict({"x": [1.0, None], "y": [2.0, 2.0]})
        assert cells("x + y > 0", df) == [True, None]

    def test_broadcast_scalar(self):
        df = from_dict({"x": [1.0, 2.0, 3.0]})
        assert cells("x > 2", df) == [False, False, True]

    def test_broadcast_length_error(self):
        df = from_dict({"x": [1.0, 2.0]})
        with pytest.raises(EvalError):
            cells("x > c(1, 2, 3)", df)

    def test_no_coercion_between_text_and_number(self):
        df = from_dict({"x": ["1", "2"]})
        with pytest.raises(EvalError):
            cells("x > 0", df)

    def test_logical_on_number_rejected(self):
        df = from_dict({"x": [1.0]})
        with pytest.raises(EvalError):
            cells("x | x", df)

    def test_unknown_variable(self):
        df = from_dict({"x": [1.0]})
        with pytest.raises(EvalError) as exc:
            cells("nosuch > 0", df)
        assert "nosuch" in str(exc.value)

    def test_membership(self):
        df = from_dict({"size": ["sc0", "sc9", None]})
        assert cells('size %in% c("sc0", "sc1")', df) == [True, False, None]

    def test_membership_against_reference(self):
        df = from_dict({"size": ["sc0", "sc9"]})
        result = cells("size %in% codelist", df, ref={"codelist": ["sc0", "sc1"]})
        assert result == [True, False]

    def test_division_by_zero_is_infinite(self):
        df = from_dict({"x": [1.0], "y": [0.0]})
        assert cells("x/y > 1000", df) == [True]

    def test_power(self):
        df = from_dict({"x": [3.0]})
        assert cells("x ^ 2 == 9", df) == [True]

    def test_unary_minus(self):
        df = from_dict({"x": [3.0, None]})
        assert cells("-x < 0", df) == [True, None]

    def test_dataset_functions(self):
        df = from_dict({"x": [1.0, 2.0], "y": [0.0, 0.0]})
        assert cells("nrow(.) >= 2", df) == [True]
        assert cells("ncol(.) == 2", df) == [True]
        assert cells('"x" %in% names(.)', df) == [True]
        assert cells("number_of_records() == 2", df) == [True]

    def test_reference_dataset(self):
        df = from_dict({"x": [1.0]})
        other = from_dict({"a": [1.0], "b": [2.0], "c": [3.0]})
        assert cells("ncol(ext) == 3", df, ref={"ext": other}) == [True]


class TestBuiltins:
    def test_aggregates_with_missing(self):
        df = from_dict({"x": [1.0, 3.0, None]})
        assert cells("mean(x) >= 1", df) == [None]
        assert cells("mean(x, na.rm = TRUE) == 2", df) == [True]
        assert cells("sum(x, na.rm = TRUE) == 4", df) == [True]
        assert cells("min(x, na.rm = TRUE) == 1", df) == [True]
        assert cells("max(x, na.rm = TRUE) == 3", df) == [True]
        assert cells("median(x, na.rm = TRUE) == 2", df) == [True]

    def test_all_any(self):
        df = from_dict({"x": [1.0, 2.0, None]})
        assert cells("all(x > 0)", df) == [None]
        assert cells("all(x > 0, na.rm = TRUE)", df) == [True]
        assert cells("any(x > 1.5)", df) == [True]
        assert cells("any(x > 99)", df) == [None]
        assert cells("any(x > 99, na.rm = TRUE)", df) == [False]

    def test_abs(self):
        df = from_dict({"x": [-2.0, 2.0, None]})
        assert cells("abs(x) == 2", df) == [True, True, None]

    def test_grepl(self):
        df = from_dict({"size": ["sc0", "mid", None]})
        assert cells('grepl("^sc", size)', df) == [True, False, None]

    def test_duplicated_and_uniqueness(self):
        df = from_dict({"id": ["a", "b", "a"]})
        assert cells("duplicated(id)", df) == [False, False, True]
        assert cells("is_unique(id)", df) == [False, True, False]
        assert cells("all_unique(id)", df) == [False]
        assert cells("!any(duplicated(id))", df) == [False]

    def test_multi_column_uniqueness(self):
        df = from_dict({"a": ["x", "x"], "b": [1.0, 2.0]})
        assert cells("is_unique(a, b)", df) == [True, True]

    def test_completeness(self):
        df = from_dict({"x": [1.0, None], "y": [1.0, 1.0]})
        assert cells("is_complete(x, y)", df) == [True, False]
        assert cells("all_complete(x, y)", df) == [False]
        assert cells("is.na(x)", df) == [False, True]

    def test_type_tests(self):
        df = from_dict({"x": [1.0], "s": ["a"], "b": [True]}, {"b": "boolean"})
        assert cells("is.numeric(x)", df) == [True]
        assert cells("is.numeric(s)", df) == [False]
        assert cells("is.character(s)", df) == [True]
        assert cells("is.logical(b)", df) == [True]

    def test_cor(self):
        df = from_dict({"x": [1.0, 2.0, 3.0], "y": [2.0, 4.0, 6.0]})
        assert cells("cor(x, y) > 0.99", df) == [True]

    def test_cor_with_too_few_pairs(self):
        df = from_dict({"x": [1.0, None], "y": [2.0, 4.0]})
        assert cells("cor(x, y) > 0", df) == [None]

    def test_c_mixing_types_rejected(self):
        df = from_dict({"x": [1.0]})
        with pytest.raises(EvalError):
            cells('x %in% c(1, "a")', df)

    def test_unknown_function(self):
        df = from_dict({"x": [1.0]})
        with pytest.raises(EvalError):
            cells("frobnicate(x) > 0", df)


class TestFunctionalDependency:
    def test_postal_code_example(self):
        df = from_dict(
            {
                "city": ["Rome", "Rome", "Oslo", "Oslo"],
                "postal_code": ["00100", "00100", "0001", "0002"],
            }
        )
        fd = expr("city ~ postal_code")
        assert eval_fd(fd, df) == [True, True, True, False]

    def test_first_record_sets_reference(self):
        df = from_dict({"k": ["a", "a", "a"], "v": [1.0, 2.0, 1.0]})
        assert eval_fd(expr("k ~ v"), df) == [True, False, True]

    def test_missing_dependent_is_unverifiable(self):
        df = from_dict({"k": ["a", "a"], "v": [1.0, None]})
        assert eval_fd(expr("k ~ v"), df) == [True, None]

    def test_missing_determinant_is_its_own_group(self):
        df = from_dict({"k": [None, None], "v": [1.0, 2.0]})
        assert eval_fd(expr("k ~ v"), df) == [True, False]

    def test_multi_column_fd(self):
        df = from_dict(
            {
                "street": ["a", "a", "a"],
                "number": [1.0, 1.0, 2.0],
                "zip": ["x", "y", "x"],
            }
        )
        assert eval_fd(expr("street + number ~ zip"), df) == [True, False, True]

    def test_unknown_column(self):
        df = from_dict({"k": ["a"]})
        with pytest.raises(EvalError):
            eval_fd(expr("k ~ nope"), df)

    def test_random_frames_match_pairwise_oracle(self):
        # oracle: a record holds iff its dependent combination equals that of
        # the first record sharing its determinant combination
        rng = random.Random(5150)
        for _ in range(300):
            n = rng.randint(1, 8)
            det = [rng.choice(["a", "b", None]) for _ in range(n)]
            dep = [rng.choice(["x", "y", None]) for _ in range(n)]
            df = from_dict({"d": det, "v": dep}, {"d": "text", "v": "text"})
            got = eval_fd(expr("d ~ v"), df)
            for i in range(n):
                first = min(j for j in range(n) if det[j] == det[i])
                if dep[i] is None or dep[first] is None:
                    assert got[i] is None
                else:
                    assert got[i] == (dep[i] == dep[first])


class TestConfront:
    def test_summary_counts_on_sample(self, retailers, retailer_rules):
        v = confront(retailers, retailer_rules, key="id")
        by_name = {row.name: row for row in summarize(v)}
        expected = {
            "st": (60, 54, 0, 6),
            "to": (60, 56, 0, 4),
            "or": (60, 23, 1, 36),
            "st.cs": (60, 50, 0, 10),
            "bl": (60, 19, 4, 37),
            "mn": (1, 1, 0, 0),
        }
        for name, (items, passes, fails, nas) in expected.items():
            row = by_name[name]
            assert (row.items, row.passes, row.fails, row.nNA) == (
                items,
                passes,
                fails,
                nas,
            ), name

    def test_key_values_recorded(self, retailers, retailer_rules):
        v = confront(retailers, retailer_rules, key="id")
        assert v.key_name == "id"
        assert v.key_values[0] == "RET01"
        assert v.n_records == 60

    def test_unknown_key(self, retailers, retailer_rules):
        with pytest.raises(DataError):
            confront(retailers, retailer_rules, key="nope")

    def test_key_with_missing_cells(self, retailer_rules):
        df = from_dict({"id": ["a", None], "staff": [1.0, 2.0]})
        with pytest.raises(DataError):
            confront(df, retailer_rules, key="id")

    def test_error_is_captured_per_rule(self, retailers):
        v = check_that(retailers, "staff >= 0", "employees >= 0")
        assert v.outcomes[0].error is None
        assert "employees" in v.outcomes[1].error
        assert v.outcomes[1].result is None

    def test_raise_error_propagates(self, retailers):
        rs, _ = new_ruleset([(None, "employees >= 0")])
        with pytest.raises(EvalError):
            confront(retailers, rs, opts={"raise": "error"})

    def test_na_value_false_transposes_na_to_fail(self, retailers, retailer_rules):
        only_to = subset(retailer_rules, ["to"])
        default = summarize(confront(retailers, only_to))[0]
        forced = summarize(confront(retailers, only_to, opts={"na.value": False}))[0]
        assert (default.passes, default.fails, default.nNA) == (56, 0, 4)
        assert (forced.passes, forced.fails, forced.nNA) == (56, 4, 0)

    def test_na_value_true(self, retailers, retailer_rules):
        only_to = subset(retailer_rules, ["to"])
        forced = summarize(confront(retailers, only_to, opts={"na.value": True}))[0]
        assert (forced.passes, forced.fails, forced.nNA) == (60, 0, 0)

    def test_tolerance_applies_to_expression(self, retailers, retailer_rules):
        v = confront(retailers, retailer_rules)
        by_name = {o.name: o for o in v.outcomes}
        assert by_name["st"].expression == "(staff - 0) >= -1e-08"
        assert by_name["bl"].expression == (
            "abs(turnover + other.rev - total.rev) < 1e-08"
        )
        assert by_name["st.cs"].expression == "!(staff > 0) | (staff.costs > 0)"
        assert by_name["mn"].expression == "mean(profit, na.rm = TRUE) >= 1"

    def test_zero_epsilon_changes_equality_outcome(self):
        df = from_dict({"x": [1.0], "y": [1.0 + 1e-12]})
        rs, _ = new_ruleset([(None, "x == y")])
        assert confront(df, rs).outcomes[0].result == [True]
        strict = confront(df, rs, opts={"lin.eq.eps": 0.0})
        assert strict.outcomes[0].result == [False]

    def test_subset_of_validation(self, retailers, retailer_rules):
        v = confront(retailers, retailer_rules, key="id")
        picked = v.subset(["bl", 1])
        assert [o.name for o in picked.outcomes] == ["bl", "st"]
        assert picked.key_values == v.key_values

    def test_check_that_matches_confront(self, retailers):
        direct = check_that(retailers, "staff >= 0")
        rs, _ = new_ruleset([(None, "staff >= 0")])
        via_ruleset = confront(retailers, rs)
        assert direct.outcomes[0].result == via_ruleset.outcomes[0].result

    def test_check_that_requires_rules(self, retailers):
        with pytest.raises(DataError):
            check_that(retailers)

    def test_non_logical_rule_is_an_error(self):
        # classify() drops this at rule-set build time, so drive confront directly
        df = from_dict({"x": [1.0]})
        rs, _ = new_ruleset([(None, "is.numeric(x)")])
        rs.rules[0].body = expr("x + 1")
        v = confront(df, rs)
        assert v.outcomes[0].error is not None
