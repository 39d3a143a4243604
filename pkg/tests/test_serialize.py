"""Linearization fidelity: frozen byte templates, turn aggregation, column
typing, and parse-back round-trips."""

import random

import pytest

from tabseq.errors import NotApplicable, UnknownObjective
from tabseq.model import Context, ContextKind, Example, Objective, Table, validate_table
from tabseq.serialize import (
    Region,
    SerializeMode,
    aggregate_turns,
    annotate_column_types,
    context_slot_text,
    kind_token,
    linearize,
    parse_linearized,
    reference_column_typer,
    render_decoder_prefix,
    render_pieces,
)

from conftest import make_example


def _one_row_example(context: Context) -> Example:
    t = validate_table(["name", "age"], [["alice", "30"]], table_id="t")
    return Example(example_id="e", table=t, context=context, source="s")


NL = Context(kind=ContextKind.NL, text="who is oldest")


class TestFrozenTemplates:
    # these three strings are the fixed output contract; do not regenerate
    def test_nl_context(self):
        ex = _one_row_example(NL)
        assert (
            linearize(ex)
            == "<context> <text_NL> who is oldest <header> name | age <row> 0 alice | 30"
        )

    def test_missing_context(self):
        ex = _one_row_example(Context.missing())
        assert (
            linearize(ex)
            == "<context> <missing_context> <header> name | age <row> 0 alice | 30"
        )

    def test_rf(self):
        ex = _one_row_example(NL)
        assert linearize(ex, SerializeMode.RF) == "who is oldest,name,age,alice,30"

    def test_sql_context_token(self):
        ex = _one_row_example(Context(kind=ContextKind.SQL, text="select name"))
        assert linearize(ex).startswith("<context> <text_SQL> select name <header>")

    def test_multi_row_indices(self):
        t = validate_table(["h"], [["a"], ["b"], ["c"]])
        ex = Example(example_id="e", table=t, context=Context.missing(), source="s")
        assert linearize(ex).endswith("<row> 0 a <row> 1 b <row> 2 c")

    def test_rf_missing_values_are_nan(self):
        t = validate_table(["h", ""], [["", "x"]])
        ex = Example(example_id="e", table=t, context=Context.missing(), source="s")
        assert linearize(ex, SerializeMode.RF) == "nan,h,nan,nan,x"

    def test_unified_missing_placeholders(self):
        t = validate_table(["h", ""], [["", "x"]])
        ex = Example(example_id="e", table=t, context=Context.missing(), source="s")
        assert linearize(ex) == (
            "<context> <missing_context> <header> h | <missing_column> "
            "<row> 0 <missing_cell> | x"
        )


class TestTurns:
    def test_aggregation_format(self):
        c = Context(kind=ContextKind.NL, text="first", turns=("second", "third"))
        assert aggregate_turns(c) == "first || second | third"

    def test_no_turns_returns_text(self):
        assert aggregate_turns(NL) == "who is oldest"

    def test_sql_not_applicable(self):
        c = Context(kind=ContextKind.SQL, text="select 1")
        with pytest.raises(NotApplicable):
            aggregate_turns(c)

    def test_slot_text_aggregates_nl_only(self):
        c = Context(kind=ContextKind.NL, text="a", turns=("b",))
        assert context_slot_text(c) == "a || b"
        s = Context(kind=ContextKind.SQL, text="select 1")
        assert context_slot_text(s) == "select 1"

    def test_linearized_contains_aggregation(self):
        t = validate_table(["h"], [["x"]])
        c = Context(kind=ContextKind.NL, text="first", turns=("second",))
        ex = Example(example_id="e", table=t, context=c, source="s")
        assert "<text_NL> first || second <header>" in linearize(ex)


class TestColumnTyper:
    def test_numbers(self):
        assert reference_column_typer(["1", "2.5", "-3", "1,200"]) == "number"

    def test_dates(self):
        assert reference_column_typer(["2021-01-02", "1999/12/31", "3.4.2020"]) == "date"

    def test_month_name_dates(self):
        assert reference_column_typer(["Jan 3, 2020", "14 February 1999"]) == "date"

    def test_text_fallback(self):
        assert reference_column_typer(["alice", "bob", "42"]) == "text"

    def test_eighty_percent_threshold(self):
        # 4 of 5 numeric is exactly 80%
        assert reference_column_typer(["1", "2", "3", "4", "x"]) == "number"
        assert reference_column_typer(["1", "2", "3", "x", "y"]) == "text"

    def test_missing_cells_ignored(self):
        assert reference_column_typer(["<missing_cell>", "5"]) == "number"

    def test_nan_string_is_not_numeric(self):
        assert reference_column_typer(["nan", "inf"]) == "text"

    def test_annotate_fills_types(self):
        t = validate_table(["n", "s"], [["1", "a"], ["2", "b"]])
        out = annotate_column_types(t)
        assert out.column_types == ("number", "text")

    def test_custom_typer_plugs_in(self):
        t = validate_table(["a"], [["x"]])
        out = annotate_column_types(t, typer=lambda cells: "custom")
        assert out.column_types == ("custom",)

    def test_types_rendered_with_colon(self):
        t = annotate_column_types(validate_table(["n"], [["1"], ["2"]]))
        ex = Example(example_id="e", table=t, context=Context.missing(), source="s")
        assert "<header> n:number <row>" in linearize(ex, include_types=True)
        # and omitted without the flag
        assert "<header> n <row>" in linearize(ex)


class TestDecoderPrefix:
    @pytest.mark.parametrize(
        "objective,token",
        [
            (Objective.DENOISE, "<denoising>"),
            (Objective.NL_GENERATION, "<NL_generation>"),
            (Objective.SQL_GENERATION, "<SQL_generation>"),
            (Objective.NL_COMPLETION, "<NL_completion>"),
            (Objective.SQL_COMPLETION, "<SQL_completion>"),
        ],
    )
    def test_unified_tokens(self, objective, token):
        assert render_decoder_prefix(objective) == token

    def test_rf_bare_forms(self):
        assert render_decoder_prefix(Objective.DENOISE, SerializeMode.RF) == "denoising"
        assert (
            render_decoder_prefix(Objective.NL_GENERATION, SerializeMode.RF)
            == "nl_generation"
        )

    def test_unknown_objective_rejected(self):
        with pytest.raises(UnknownObjective):
            render_decoder_prefix("not-an-objective")

    def test_kind_tokens(self):
        assert kind_token(ContextKind.NL) == "<text_NL>"
        assert kind_token(ContextKind.SQL) == "<text_SQL>"
        assert kind_token(ContextKind.NL, SerializeMode.RF) == "text_nl"


class TestPieces:
    def test_structural_labels_cover_markers(self):
        ex = _one_row_example(NL)
        pieces = render_pieces(ex)
        by_text = {}
        for p in pieces:
            by_text.setdefault(p.text, p.region)
        assert by_text["<context>"] is Region.STRUCTURAL
        assert by_text["<header>"] is Region.STRUCTURAL
        assert by_text["<row>"] is Region.STRUCTURAL
        assert by_text["|"] is Region.STRUCTURAL
        assert by_text["who is oldest"] is Region.CONTEXT
        assert by_text["name"] is Region.HEADER
        assert by_text["alice"] is Region.CELL

    def test_header_ordinals(self):
        ex = _one_row_example(NL)
        ords = [p.header_ord for p in render_pieces(ex) if p.region is Region.HEADER]
        assert ords == [0, 1]

    def test_placeholders_are_structural(self):
        t = validate_table(["h", ""], [["", "x"]])
        ex = Example(example_id="e", table=t, context=Context.missing(), source="s")
        for p in render_pieces(ex):
            if p.text in ("<missing_cell>", "<missing_column>", "<missing_context>"):
                assert p.region is Region.STRUCTURAL


class TestParseBack:
    def test_simple_round_trip(self):
        ex = _one_row_example(NL)
        parsed = parse_linearized(linearize(ex))
        assert parsed.kind is ContextKind.NL
        assert parsed.context_text == "who is oldest"
        assert parsed.headers == ("name", "age")
        assert parsed.rows == (("alice", "30"),)

    def test_missing_context_round_trip(self):
        ex = _one_row_example(Context.missing())
        parsed = parse_linearized(linearize(ex))
        assert parsed.kind is ContextKind.MISSING
        assert parsed.context_text == ""

    def test_random_round_trip(self, rng):
        for i in range(200):
            ex = make_example(rng, example_id=f"e{i}")
            parsed = parse_linearized(linearize(ex))
            assert parsed.headers == ex.table.headers
            assert parsed.rows == ex.table.rows
            if ex.context.is_missing:
                assert parsed.kind is ContextKind.MISSING
            else:
                assert parsed.kind is ex.context.kind
                assert parsed.context_text == context_slot_text(ex.context)

    def test_garbage_rejected(self):
        with pytest.raises(ValueError):
            parse_linearized("just some words")
        with pytest.raises(ValueError):
            parse_linearized("<context> <text_NL> q")  # no header section
