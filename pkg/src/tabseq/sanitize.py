"""Table and context cleanup: cell scrubbing, column repair, row selection,
and word-count truncation.

Row selection is the only stage here that needs randomness; everything else
is a pure string transform.  The overlap scorer works on word-level
3-grams (lowercased, punctuation stripped at word edges).
"""

from __future__ import annotations

import random
import re
import unicodedata
from dataclasses import dataclass

from tabseq.errors import AllColumnsInvalid
from tabseq.model import Context, ContextKind, Example, Table
from tabseq.vocab import MISSING_CELL


@dataclass(frozen=True)
class SanitizeConfig:
    max_rows: int = 40
    max_cell_words: int = 10
    max_context_words: int = 40

    def __post_init__(self):
        if min(self.max_rows, self.max_cell_words, self.max_context_words) < 1:
            raise ValueError("all sanitize limits must be >= 1")


# The Cc category is the fixed codepoint set U+0000-001F, U+007F-009F;
# tab/newline/CR survive as whitespace and collapse below.
_CONTROL_RE = re.compile("[\x00-\x08\x0b\x0c\x0e-\x1f\x7f-\x9f]")


def clean_text(s: str) -> str:
    """Strip control characters and collapse whitespace runs to one space."""
    if _CONTROL_RE.search(s):
        s = _CONTROL_RE.sub("", s)
    return " ".join(s.split())


def _is_invalid_header(h: str) -> bool:
    # Empty after cleaning, or nothing but punctuation.
    if not h:
        return True
    return all(unicodedata.category(ch).startswith("P") for ch in h)


def sanitize_table(table: Table) -> Table:
    """Scrub cell text, drop duplicate/invalid columns, drop degenerate rows.

    Among columns with byte-equal cleaned headers only the leftmost
    survives.  Rows whose cells are all byte-equal are dropped, but only
    for tables with at least two columns; in a single-column table every
    row would match vacuously.
    """
    headers = [clean_text(h) for h in table.headers]

    keep: list[int] = []
    seen: set[str] = set()
    for i, h in enumerate(headers):
        if _is_invalid_header(h) or h in seen:
            continue
        seen.add(h)
        keep.append(i)
    if not keep:
        raise AllColumnsInvalid(f"table {table.table_id!r}: no valid columns remain")

    new_headers = tuple(headers[i] for i in keep)
    new_types = (
        tuple(table.column_types[i] for i in keep) if table.column_types else None
    )

    new_rows = []
    for row in table.rows:
        cells = []
        for i in keep:
            c = clean_text(row[i])
            cells.append(c if c else MISSING_CELL)
        if len(cells) >= 2 and len(set(cells)) == 1:
            continue
        new_rows.append(tuple(cells))

    return Table(
        table_id=table.table_id,
        headers=new_headers,
        rows=tuple(new_rows),
        column_types=new_types,
        meta=table.meta,
    )


def sanitize_context(context: Context) -> Context:
    """Scrub context text and turns; demote to MISSING if nothing is left."""
    if context.is_missing:
        return context
    text = clean_text(context.text)
    turns = tuple(t for t in (clean_text(t) for t in context.turns) if t)
    if not text:
        return Context.missing()
    return Context(kind=context.kind, text=text, turns=turns)


def _words(s: str) -> list[str]:
    out = []
    for w in s.lower().split():
        w = w.strip(_EDGE_PUNCT)
        if w:
            out.append(w)
    return out


_EDGE_PUNCT = "".join(
    chr(c) for c in range(0x20, 0x3000) if unicodedata.category(chr(c)).startswith("P")
)


def word_3grams(s: str) -> set[tuple[str, str, str]]:
    w = _words(s)
    return {(w[i], w[i + 1], w[i + 2]) for i in range(len(w) - 2)}


def row_overlap_score(context_grams: set, row) -> int:
    """Count of 3-grams shared between the context and the row's cells
    joined with single spaces."""
    if not context_grams:
        return 0
    return len(context_grams & word_3grams(" ".join(row)))


def select_rows(
    table: Table, context: Context, cfg: SanitizeConfig, rng: random.Random
) -> Table:
    """Keep at most max_rows rows, preferring rows that share 3-grams with
    the context.

    Ties break toward the smaller original row index, and when fewer than
    max_rows rows overlap at all the remainder is a seeded uniform sample
    of the non-overlapping rows.  Output rows keep their original order.
    Table-only examples just get a seeded uniform subset.
    """
    n = table.n_rows
    if n <= cfg.max_rows:
        return table

    if context.is_missing:
        kept = sorted(rng.sample(range(n), cfg.max_rows))
    else:
        grams = word_3grams(" ".join((context.text, *context.turns)))
        scores = [row_overlap_score(grams, row) for row in table.rows]
        positive = [i for i in range(n) if scores[i] > 0]
        positive.sort(key=lambda i: (-scores[i], i))
        if len(positive) >= cfg.max_rows:
            kept = sorted(positive[: cfg.max_rows])
        else:
            zero = [i for i in range(n) if scores[i] == 0]
            fill = rng.sample(zero, cfg.max_rows - len(positive))
            kept = sorted(positive + fill)

    return Table(
        table_id=table.table_id,
        headers=table.headers,
        rows=tuple(table.rows[i] for i in kept),
        column_types=table.column_types,
        meta=table.meta,
    )


def _truncate_words(s: str, limit: int) -> str:
    return " ".join(s.split()[:limit])


def truncate_cells(table: Table, cfg: SanitizeConfig) -> Table:
    """Cap every cell and every header at max_cell_words words."""
    return Table(
        table_id=table.table_id,
        headers=tuple(_truncate_words(h, cfg.max_cell_words) for h in table.headers),
        rows=tuple(
            tuple(_truncate_words(c, cfg.max_cell_words) for c in row)
            for row in table.rows
        ),
        column_types=table.column_types,
        meta=table.meta,
    )


def truncate_context(context: Context, cfg: SanitizeConfig) -> Context:
    """Cap the context text and each turn at max_context_words words."""
    if context.is_missing:
        return context
    return Context(
        kind=context.kind,
        text=_truncate_words(context.text, cfg.max_context_words),
        turns=tuple(_truncate_words(t, cfg.max_context_words) for t in context.turns),
    )


def sanitize_pipeline(
    example: Example, cfg: SanitizeConfig, rng: random.Random
) -> Example:
    """Run the full cleanup: table scrub, context scrub, row selection,
    then cell and context truncation.  Row scoring deliberately sees the
    untruncated cells."""
    try:
        table = sanitize_table(example.table)
    except AllColumnsInvalid as err:
        raise AllColumnsInvalid(str(err), example_id=example.example_id) from None
    context = sanitize_context(example.context)
    table = select_rows(table, context, cfg, rng)
    table = truncate_cells(table, cfg)
    context = truncate_context(context, cfg)
    return Example(
        example_id=example.example_id,
        table=table,
        context=context,
        source=example.source,
    )
