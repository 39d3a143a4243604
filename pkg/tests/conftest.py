"""Shared builders for the test suite.

Random inputs are always drawn from seeded generators so failures replay
exactly.  Content words come from a pool that cannot collide with reserved
tokens, the bare cell separator, or pure digits (row indices), keeping
parse-back unambiguous.
"""

from __future__ import annotations

import json
import random
from pathlib import Path

import pytest

from tabseq.model import Context, ContextKind, Example, validate_table

WORDS = (
    "amber basalt cedar delta ember fjord garnet harbor iris juniper "
    "kelp lumen mica nectar ochre pelican quartz rowan sable tundra "
    "umber violet willow yarrow zephyr cobalt dune ferric grotto heath"
).split()


def make_table(rng: random.Random, n_rows: int, n_cols: int, cell_words=(1, 3)):
    headers = [
        " ".join(rng.choice(WORDS) for _ in range(rng.randint(1, 2)))
        for _ in range(n_cols)
    ]
    rows = [
        [
            " ".join(rng.choice(WORDS) for _ in range(rng.randint(*cell_words)))
            for _ in range(n_cols)
        ]
        for _ in range(n_rows)
    ]
    return validate_table(headers, rows, table_id="t")


def make_context(rng: random.Random, n_words: int, kind: ContextKind | None = None):
    if n_words == 0:
        return Context.missing()
    if kind is None:
        kind = ContextKind.NL if rng.random() < 0.5 else ContextKind.SQL
    text = " ".join(rng.choice(WORDS) for _ in range(n_words))
    return Context(kind=kind, text=text)


def make_example(
    rng: random.Random,
    example_id: str = "ex:0",
    n_rows: int | None = None,
    n_cols: int | None = None,
    ctx_words: int | None = None,
    kind: ContextKind | None = None,
    source: str = "test",
) -> Example:
    n_rows = n_rows if n_rows is not None else rng.randint(1, 10)
    n_cols = n_cols if n_cols is not None else rng.randint(1, 5)
    ctx_words = ctx_words if ctx_words is not None else rng.randint(0, 12)
    return Example(
        example_id=example_id,
        table=make_table(rng, n_rows, n_cols),
        context=make_context(rng, ctx_words, kind),
        source=source,
    )


def example_to_canonical(example: Example) -> dict:
    """Example as a canonical corpus record object."""
    obj = {
        "headers": list(example.table.headers),
        "rows": [list(r) for r in example.table.rows],
    }
    ctx = example.context
    if not ctx.is_missing:
        c = {"kind": ctx.kind.value, "text": ctx.text}
        if ctx.turns:
            c["turns"] = list(ctx.turns)
        obj["context"] = c
    return obj


def write_corpus(path: Path, examples) -> None:
    with open(path, "w", encoding="utf-8") as fh:
        for ex in examples:
            fh.write(json.dumps(example_to_canonical(ex), ensure_ascii=False) + "\n")


@pytest.fixture
def rng() -> random.Random:
    return random.Random(20240817)
