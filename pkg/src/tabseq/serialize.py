"""Rendering examples into the unified linearized string.

The unified layout is::

    <context> <text_NL|text_SQL> ctx... <header> h1 | h2 <row> 0 c11 | c12 <row> 1 ...

with a missing-context token when there is no text, placeholder tokens for
missing headers/cells, and 0-based row indices.  The ablation layout (RF)
drops every reserved token: components are comma-joined, missing values
become the literal ``nan``, and row indices disappear.

Single spaces between elements are normative; the renderer works on typed
pieces so region labels can be attached without re-parsing the string.
"""

from __future__ import annotations

import re
from dataclasses import dataclass
from enum import Enum, IntEnum
from typing import Callable, Sequence

from tabseq import vocab
from tabseq.errors import NotApplicable, UnknownObjective
from tabseq.model import Context, ContextKind, Example, Objective, Table


class SerializeMode(Enum):
    UNIFIED = "unified"
    RF = "rf"


class Region(IntEnum):
    """Which masking rate a token falls under."""

    CONTEXT = 0
    HEADER = 1
    CELL = 2
    STRUCTURAL = 3


@dataclass(frozen=True)
class Piece:
    """One rendered fragment: its text, region, and (for headers) which
    header column it belongs to."""

    text: str
    region: Region
    header_ord: int | None = None


def aggregate_turns(context: Context) -> str:
    """Fold extra turns into one string: ``text || turn1 | turn2 | ...``."""
    if context.kind is not ContextKind.NL:
        raise NotApplicable(f"turn aggregation undefined for kind={context.kind.value}")
    if not context.turns:
        return context.text
    return context.text + " || " + " | ".join(context.turns)


def context_slot_text(context: Context) -> str:
    """Context string as it appears in the linearized input."""
    if context.kind is ContextKind.NL:
        return aggregate_turns(context)
    return context.text


_KIND_TOKENS = {
    ContextKind.NL: vocab.TEXT_NL_TOKEN,
    ContextKind.SQL: vocab.TEXT_SQL_TOKEN,
}

_PREFIX_TOKENS = {
    Objective.DENOISE: vocab.DENOISING_TOKEN,
    Objective.NL_COMPLETION: vocab.NL_COMPLETION_TOKEN,
    Objective.SQL_COMPLETION: vocab.SQL_COMPLETION_TOKEN,
    Objective.NL_GENERATION: vocab.NL_GENERATION_TOKEN,
    Objective.SQL_GENERATION: vocab.SQL_GENERATION_TOKEN,
}


def kind_token(kind: ContextKind, mode: SerializeMode = SerializeMode.UNIFIED) -> str:
    tok = _KIND_TOKENS[kind]
    return vocab.RF_PLAIN[tok] if mode is SerializeMode.RF else tok


def render_decoder_prefix(
    objective: Objective, mode: SerializeMode = SerializeMode.UNIFIED
) -> str:
    """Task-identifier token placed at the front of the decoder input.

    The decoder target never carries it.  In RF mode a bare lowercase word
    stands in so the decoder still sees a task tag without any reserved
    vocabulary."""
    try:
        tok = _PREFIX_TOKENS[objective]
    except (KeyError, TypeError):
        raise UnknownObjective(f"no task token for {objective!r}") from None
    return vocab.RF_PLAIN[tok] if mode is SerializeMode.RF else tok


def _render_header(h: str, types, i: int, rf: bool) -> tuple[str, Region]:
    missing = not h or h == vocab.MISSING_COLUMN
    if missing:
        return (vocab.RF_MISSING if rf else vocab.MISSING_COLUMN), Region.STRUCTURAL
    if types is not None:
        return f"{h}:{types[i]}", Region.HEADER
    return h, Region.HEADER


def _render_cell(c: str, rf: bool) -> tuple[str, Region]:
    if not c or c == vocab.MISSING_CELL:
        return (vocab.RF_MISSING if rf else vocab.MISSING_CELL), Region.STRUCTURAL
    return c, Region.CELL


def render_pieces(
    example: Example,
    mode: SerializeMode = SerializeMode.UNIFIED,
    task_tag: Objective | None = None,
    include_types: bool = False,
) -> list[Piece]:
    """Typed fragments whose joined text is the linearized input.

    Unified pieces are joined with single spaces; RF pieces are joined with
    nothing (the comma separators are pieces themselves).
    """
    rf = mode is SerializeMode.RF
    table = example.table
    context = example.context
    types = table.column_types if include_types and table.column_types else None

    pieces: list[Piece] = []
    add = pieces.append
    if rf:
        sep = Piece(",", Region.STRUCTURAL)
        if task_tag is not None:
            add(Piece(render_decoder_prefix(task_tag, mode), Region.STRUCTURAL))
            add(sep)
        if context.is_missing:
            add(Piece(vocab.RF_MISSING, Region.STRUCTURAL))
        else:
            add(Piece(context_slot_text(context), Region.CONTEXT))
        for i, h in enumerate(table.headers):
            add(sep)
            text, region = _render_header(h, types, i, rf=True)
            add(Piece(text, region, header_ord=i if region is Region.HEADER else None))
        for row in table.rows:
            for c in row:
                add(sep)
                text, region = _render_cell(c, rf=True)
                add(Piece(text, region))
        return pieces

    if task_tag is not None:
        add(Piece(render_decoder_prefix(task_tag, mode), Region.STRUCTURAL))
    add(Piece(vocab.CONTEXT_TOKEN, Region.STRUCTURAL))
    if context.is_missing:
        add(Piece(vocab.MISSING_CONTEXT, Region.STRUCTURAL))
    else:
        add(Piece(_KIND_TOKENS[context.kind], Region.STRUCTURAL))
        add(Piece(context_slot_text(context), Region.CONTEXT))
    add(Piece(vocab.HEADER_TOKEN, Region.STRUCTURAL))
    for i, h in enumerate(table.headers):
        if i:
            add(Piece(vocab.CELL_SEP_RENDERED, Region.STRUCTURAL))
        text, region = _render_header(h, types, i, rf=False)
        add(Piece(text, region, header_ord=i if region is Region.HEADER else None))
    for r, row in enumerate(table.rows):
        add(Piece(vocab.ROW_TOKEN, Region.STRUCTURAL))
        add(Piece(str(r), Region.STRUCTURAL))
        for j, c in enumerate(row):
            if j:
                add(Piece(vocab.CELL_SEP_RENDERED, Region.STRUCTURAL))
            text, region = _render_cell(c, rf=False)
            add(Piece(text, region))
    return pieces


def linearize(
    example: Example,
    mode: SerializeMode = SerializeMode.UNIFIED,
    task_tag: Objective | None = None,
    include_types: bool = False,
) -> str:
    """Render an example to its single-string form."""
    pieces = render_pieces(example, mode, task_tag, include_types)
    glue = "" if mode is SerializeMode.RF else " "
    return glue.join(p.text for p in pieces)


# --- reference column typer -------------------------------------------------

ColumnTyper = Callable[[Sequence[str]], str]

_DATE_PATTERNS = [
    re.compile(r"^\d{4}[-/.]\d{1,2}[-/.]\d{1,2}$"),
    re.compile(r"^\d{1,2}[-/.]\d{1,2}[-/.]\d{2,4}$"),
    re.compile(
        r"^(?:jan|feb|mar|apr|may|jun|jul|aug|sep|oct|nov|dec)[a-z]*\.?\s+\d{1,2},?\s+\d{4}$",
        re.IGNORECASE,
    ),
    re.compile(
        r"^\d{1,2}\s+(?:jan|feb|mar|apr|may|jun|jul|aug|sep|oct|nov|dec)[a-z]*\.?\s+\d{4}$",
        re.IGNORECASE,
    ),
]

_NON_FINITE = {"nan", "inf", "-inf", "+inf", "infinity", "-infinity", "+infinity"}


def _is_number(s: str) -> bool:
    s = s.strip().replace(",", "")
    if s.lower() in _NON_FINITE:
        return False
    try:
        float(s)
    except ValueError:
        return False
    return True


def _is_date(s: str) -> bool:
    s = s.strip()
    return any(p.match(s) for p in _DATE_PATTERNS)


def reference_column_typer(cells: Sequence[str]) -> str:
    """Tag a column ``number``/``date``/``text`` by an 80% majority of its
    non-missing cells."""
    vals = [c for c in cells if c and c != vocab.MISSING_CELL]
    if not vals:
        return "text"
    threshold = 0.8 * len(vals)
    if sum(1 for c in vals if _is_number(c)) >= threshold:
        return "number"
    if sum(1 for c in vals if _is_date(c)) >= threshold:
        return "date"
    return "text"


def annotate_column_types(table: Table, typer: ColumnTyper | None = None) -> Table:
    """Fill column_types using the given typer (reference typer by default)."""
    typer = typer or reference_column_typer
    types = tuple(
        typer([row[i] for row in table.rows]) for i in range(table.n_cols)
    )
    return Table(
        table_id=table.table_id,
        headers=table.headers,
        rows=table.rows,
        column_types=types,
        meta=table.meta,
    )


# --- parse-back -------------------------------------------------------------


@dataclass(frozen=True)
class ParsedLinearization:
    """Structure recovered from a unified-format string."""

    kind: ContextKind
    context_text: str
    headers: tuple[str, ...]
    rows: tuple[tuple[str, ...], ...]


def parse_linearized(s: str) -> ParsedLinearization:
    """Recover structure from a unified-format string.

    Only valid when no content token collides with a reserved token or the
    bare ``|`` separator; used for round-trip checks and inspection.
    """
    toks = s.split()
    if not toks or toks[0] != vocab.CONTEXT_TOKEN:
        raise ValueError("input does not start with the context token")
    i = 1
    if i < len(toks) and toks[i] == vocab.MISSING_CONTEXT:
        kind, ctx_words, i = ContextKind.MISSING, [], i + 1
    else:
        if i >= len(toks) or toks[i] not in (vocab.TEXT_NL_TOKEN, vocab.TEXT_SQL_TOKEN):
            raise ValueError("missing context-kind token")
        kind = ContextKind.NL if toks[i] == vocab.TEXT_NL_TOKEN else ContextKind.SQL
        i += 1
        ctx_words = []
        while i < len(toks) and toks[i] != vocab.HEADER_TOKEN:
            ctx_words.append(toks[i])
            i += 1
    if i >= len(toks) or toks[i] != vocab.HEADER_TOKEN:
        raise ValueError("missing header token")
    i += 1

    def take_cells(stop: set[str]) -> tuple[list[str], int]:
        nonlocal i
        cells, cur = [], []
        while i < len(toks) and toks[i] not in stop:
            if toks[i] == vocab.CELL_SEP_RENDERED:
                cells.append(" ".join(cur))
                cur = []
            else:
                cur.append(toks[i])
            i += 1
        cells.append(" ".join(cur))
        return cells, i

    headers, _ = take_cells({vocab.ROW_TOKEN})
    rows = []
    expected = 0
    while i < len(toks):
        if toks[i] != vocab.ROW_TOKEN:
            raise ValueError(f"expected row token at position {i}")
        i += 1
        if i >= len(toks) or toks[i] != str(expected):
            raise ValueError(f"expected row index {expected}")
        i += 1
        cells, _ = take_cells({vocab.ROW_TOKEN})
        rows.append(tuple(cells))
        expected += 1

    return ParsedLinearization(
        kind=kind,
        context_text=" ".join(ctx_words),
        headers=tuple(headers),
        rows=tuple(rows),
    )
