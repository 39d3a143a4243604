"""Core domain types: tables, contexts, examples, and objective settings.

Everything here is immutable after construction so instances can be shared
freely across worker processes.
"""

from __future__ import annotations

from dataclasses import dataclass, field, replace
from enum import Enum

from tabseq.errors import EmptyHeaders, EmptyTable
from tabseq.vocab import MISSING_CELL


class ContextKind(Enum):
    NL = "nl"
    SQL = "sql"
    MISSING = "missing"


class Objective(Enum):
    """Which pretraining task a record was built for.

    Values are the wire names used in emitted records.
    """

    DENOISE = "denoise"
    NL_GENERATION = "nl_generation"
    SQL_GENERATION = "sql_generation"
    NL_COMPLETION = "nl_completion"
    SQL_COMPLETION = "sql_completion"


@dataclass(frozen=True)
class Table:
    """A header row plus a row-major cell grid.

    Invariants enforced at construction: headers non-empty, every row has
    exactly one cell per header, and column_types (when present) has one
    tag per header.  Absent cells must already be the missing-cell
    placeholder; use :func:`validate_table` to repair raw input.
    """

    table_id: str
    headers: tuple[str, ...]
    rows: tuple[tuple[str, ...], ...]
    column_types: tuple[str, ...] | None = None
    meta: tuple[tuple[str, str], ...] = ()

    def __post_init__(self):
        object.__setattr__(self, "headers", tuple(self.headers))
        object.__setattr__(self, "rows", tuple(tuple(r) for r in self.rows))
        if self.column_types is not None:
            object.__setattr__(self, "column_types", tuple(self.column_types))
        if isinstance(self.meta, dict):
            object.__setattr__(self, "meta", tuple(sorted(self.meta.items())))
        if not self.headers:
            raise EmptyHeaders("table has no headers")
        width = len(self.headers)
        for i, row in enumerate(self.rows):
            if len(row) != width:
                raise ValueError(f"row {i} has {len(row)} cells, expected {width}")
        if self.column_types is not None and len(self.column_types) != width:
            raise ValueError(
                f"column_types has {len(self.column_types)} entries, expected {width}"
            )

    @property
    def n_rows(self) -> int:
        return len(self.rows)

    @property
    def n_cols(self) -> int:
        return len(self.headers)

    def meta_dict(self) -> dict[str, str]:
        return dict(self.meta)


@dataclass(frozen=True)
class Context:
    """Text or SQL attached to a table, or explicitly nothing.

    MISSING means no text and no turns; SQL never carries turns (multi-turn
    aggregation is defined for natural-language context only).
    """

    kind: ContextKind
    text: str = ""
    turns: tuple[str, ...] = ()

    def __post_init__(self):
        object.__setattr__(self, "turns", tuple(self.turns))
        if self.kind is ContextKind.MISSING:
            if self.text or self.turns:
                raise ValueError("missing context must have empty text and turns")
        else:
            if not self.text:
                raise ValueError(f"kind={self.kind.value} requires non-empty text")
        if self.kind is ContextKind.SQL and self.turns:
            raise ValueError("sql context cannot carry extra turns")

    @classmethod
    def missing(cls) -> "Context":
        return cls(kind=ContextKind.MISSING)

    @property
    def is_missing(self) -> bool:
        return self.kind is ContextKind.MISSING


@dataclass(frozen=True)
class Example:
    """One (table, context) unit flowing through the pipeline."""

    example_id: str
    table: Table
    context: Context
    source: str = ""

    def with_table(self, table: Table) -> "Example":
        return replace(self, table=table)

    def with_context(self, context: Context) -> "Example":
        return replace(self, context=context)


@dataclass(frozen=True)
class ObjectiveConfig:
    """Masking rates, mixing probabilities, and sequence-length limits.

    Defaults are the reference settings: 15% of cell tokens and 50% of
    context tokens span-corrupted with mean span length 3, 40% of headers
    fully masked, denoising chosen 60% of the time, and 1024-token inputs
    padded but never packed.
    """

    cell_mask_rate: float = 0.15
    text_mask_rate: float = 0.50
    header_mask_rate: float = 0.40
    mean_span_len: int = 3
    denoise_prob: float = 0.60
    table_only_mcp_only_prob: float = 0.50
    generation_prob: float = 0.50
    max_len: int = 1024
    max_sentinels: int = 100
    global_seed: int = 0

    def __post_init__(self):
        for name in (
            "cell_mask_rate",
            "text_mask_rate",
            "header_mask_rate",
            "denoise_prob",
            "table_only_mcp_only_prob",
            "generation_prob",
        ):
            v = getattr(self, name)
            if not 0.0 <= v <= 1.0:
                raise ValueError(f"{name} must be in [0, 1], got {v}")
        if self.mean_span_len < 1:
            raise ValueError(f"mean_span_len must be >= 1, got {self.mean_span_len}")
        if self.max_len < 2:
            raise ValueError(f"max_len must be >= 2, got {self.max_len}")
        if self.max_sentinels < 1:
            raise ValueError(f"max_sentinels must be >= 1, got {self.max_sentinels}")


def validate_table(
    raw_headers,
    raw_rows,
    table_id: str = "",
    column_types=None,
    meta=None,
) -> Table:
    """Repair raw header/row input into a rectangular Table.

    Ragged rows are padded on the right with the missing-cell placeholder;
    rows longer than the header row are truncated on the right.  Cells that
    are empty or whitespace-only become the placeholder so later masking
    can recognize and avoid them.
    """
    headers = [str(h) for h in raw_headers]
    if not headers:
        raise EmptyHeaders("table has no headers")
    if not raw_rows:
        raise EmptyTable("table has no rows")
    width = len(headers)
    fixed_rows = []
    for raw in raw_rows:
        cells = [str(c) for c in raw[:width]]
        cells += [MISSING_CELL] * (width - len(cells))
        cells = [c if c.strip() else MISSING_CELL for c in cells]
        fixed_rows.append(tuple(cells))
    return Table(
        table_id=table_id,
        headers=tuple(headers),
        rows=tuple(fixed_rows),
        column_types=tuple(column_types) if column_types else None,
        meta=meta or (),
    )
