"""Corpus manifest loading and source readers.

A corpus manifest is TOML: a list of sources (name, path, format, category,
optional proportion percentage) plus run-level settings.  Unknown keys are
rejected so typos fail loudly instead of silently using a default.  Relative
paths resolve against the manifest's own directory.

Readers are lenient per record and strict per stream: a malformed line or
CSV file is skipped (reported through a callback), while an I/O failure on
an open stream propagates and aborts the run.
"""

from __future__ import annotations

import csv
import json
import random
from dataclasses import dataclass, field, fields, replace
from enum import Enum
from pathlib import Path
from typing import Callable, Iterator

try:
    import tomllib
except ModuleNotFoundError:  # pragma: no cover - py310 fallback
    import tomli as tomllib

from tabseq.errors import (
    DecodeError,
    EmptyHeaders,
    EmptyTable,
    ParseError,
    ValidationError,
)
from tabseq.model import Context, ContextKind, Example, ObjectiveConfig, validate_table
from tabseq.objectives import round_half
from tabseq.rng import stream_seed

SkipCallback = Callable[[str, int, str], None]


class SourceFormat(Enum):
    CANONICAL = "canonical"
    CSV_DIR = "csv_dir"


class SourceCategory(Enum):
    TABLE_ONLY = "table_only"
    TABLE_TEXT = "table_text"
    TABLE_SQL = "table_sql"


@dataclass(frozen=True)
class SourceEntry:
    name: str
    path: Path
    format: SourceFormat
    category: SourceCategory
    proportion: float = 100.0


@dataclass(frozen=True)
class CorpusManifest:
    sources: tuple[SourceEntry, ...]
    output_dir: Path
    shard_size: int = 1000
    seed: int = 0
    objective_config: ObjectiveConfig = field(default_factory=ObjectiveConfig)


_TOP_KEYS = {"sources", "output_dir", "shard_size", "seed", "objective_config"}
_SOURCE_KEYS = {"name", "path", "format", "category", "proportion"}
_CFG_KEYS = {f.name for f in fields(ObjectiveConfig)} - {"global_seed"}


def _reject_unknown(table: dict, allowed: set, where: str) -> None:
    unknown = sorted(set(table) - allowed)
    if unknown:
        raise ValidationError(
            f"unknown key '{unknown[0]}' in {where} "
            f"(allowed: {', '.join(sorted(allowed))})"
        )


def _enum_value(enum_cls, raw, where: str):
    try:
        return enum_cls(raw)
    except ValueError:
        allowed = ", ".join(e.value for e in enum_cls)
        raise ValidationError(
            f"{where} must be one of: {allowed} (got {raw!r})"
        ) from None


def load_manifest(path: Path) -> CorpusManifest:
    """Parse and validate a corpus manifest.

    The per-example seed lives at the top level as ``seed``; the objective
    config's global_seed is derived from it and may not be set directly.
    """
    path = Path(path)
    text = path.read_text(encoding="utf-8")
    try:
        data = tomllib.loads(text)
    except tomllib.TOMLDecodeError as err:
        raise ParseError(f"{path}: {err}") from None

    _reject_unknown(data, _TOP_KEYS, "manifest")
    base = path.resolve().parent

    seed = data.get("seed", 0)
    if not isinstance(seed, int) or isinstance(seed, bool):
        raise ValidationError(f"seed must be an integer, got {seed!r}")
    shard_size = data.get("shard_size", 1000)
    if not isinstance(shard_size, int) or shard_size < 1:
        raise ValidationError(f"shard_size must be an integer >= 1, got {shard_size!r}")

    raw_cfg = data.get("objective_config", {})
    if not isinstance(raw_cfg, dict):
        raise ValidationError("objective_config must be a table")
    if "global_seed" in raw_cfg:
        raise ValidationError(
            "objective_config.global_seed is not settable; use top-level 'seed'"
        )
    _reject_unknown(raw_cfg, _CFG_KEYS, "objective_config")
    try:
        cfg = ObjectiveConfig(global_seed=seed, **raw_cfg)
    except (TypeError, ValueError) as err:
        raise ValidationError(f"objective_config: {err}") from None

    raw_sources = data.get("sources")
    if not isinstance(raw_sources, list) or not raw_sources:
        raise ValidationError("manifest needs at least one [[sources]] entry")
    sources = []
    names = set()
    for i, raw in enumerate(raw_sources):
        where = f"sources[{i}]"
        if not isinstance(raw, dict):
            raise ValidationError(f"{where} must be a table")
        _reject_unknown(raw, _SOURCE_KEYS, where)
        missing = [k for k in ("name", "path", "format", "category") if k not in raw]
        if missing:
            raise ValidationError(f"{where} is missing required key '{missing[0]}'")
        name = raw["name"]
        if not isinstance(name, str) or not name:
            raise ValidationError(f"{where}.name must be a non-empty string")
        if name in names:
            raise ValidationError(f"duplicate source name {name!r}")
        names.add(name)
        proportion = raw.get("proportion", 100.0)
        if isinstance(proportion, bool) or not isinstance(proportion, (int, float)):
            raise ValidationError(f"{where}.proportion must be a number")
        if proportion <= 0:
            raise ValidationError(f"{where}.proportion must be > 0, got {proportion}")
        src_path = Path(raw["path"])
        if not src_path.is_absolute():
            src_path = base / src_path
        sources.append(
            SourceEntry(
                name=name,
                path=src_path,
                format=_enum_value(SourceFormat, raw["format"], f"{where}.format"),
                category=_enum_value(SourceCategory, raw["category"], f"{where}.category"),
                proportion=float(proportion),
            )
        )

    out = data.get("output_dir", "out")
    if not isinstance(out, str) or not out:
        raise ValidationError("output_dir must be a non-empty string")
    out_path = Path(out)
    if not out_path.is_absolute():
        out_path = base / out_path

    return CorpusManifest(
        sources=tuple(sources),
        output_dir=out_path,
        shard_size=shard_size,
        seed=seed,
        objective_config=cfg,
    )


def _context_from_record(obj: dict, category: SourceCategory) -> Context:
    if category is SourceCategory.TABLE_ONLY:
        return Context.missing()
    raw = obj.get("context")
    if raw is None:
        return Context.missing()
    if not isinstance(raw, dict):
        raise DecodeError("context must be an object")
    kind = raw.get("kind", "missing")
    if kind not in ("nl", "sql", "missing"):
        raise DecodeError(f"context.kind must be nl/sql/missing, got {kind!r}")
    text = raw.get("text", "")
    turns = raw.get("turns", [])
    if not isinstance(text, str):
        raise DecodeError("context.text must be a string")
    if not isinstance(turns, list) or any(not isinstance(t, str) for t in turns):
        raise DecodeError("context.turns must be a list of strings")
    try:
        return Context(kind=ContextKind(kind), text=text, turns=tuple(turns))
    except ValueError as err:
        raise DecodeError(str(err)) from None


def example_from_record(
    obj: dict, example_id: str, source_name: str, category: SourceCategory
) -> Example:
    """Build an Example from one canonical-format record object."""
    if not isinstance(obj, dict):
        raise DecodeError("record must be a JSON object")
    headers = obj.get("headers")
    rows = obj.get("rows")
    if not isinstance(headers, list) or not isinstance(rows, list):
        raise DecodeError("record needs 'headers' and 'rows' arrays")
    meta = obj.get("meta") or {}
    if not isinstance(meta, dict):
        raise DecodeError("meta must be an object")
    try:
        table = validate_table(
            headers,
            rows,
            table_id=example_id,
            meta={str(k): str(v) for k, v in meta.items()},
        )
    except (EmptyHeaders, EmptyTable) as err:
        raise DecodeError(str(err)) from None
    context = _context_from_record(obj, category)
    return Example(
        example_id=example_id, table=table, context=context, source=source_name
    )


def _read_canonical(source: SourceEntry, on_skip: SkipCallback | None) -> Iterator[Example]:
    with open(source.path, encoding="utf-8") as fh:
        for idx, line in enumerate(fh):
            line = line.strip()
            try:
                if not line:
                    raise DecodeError("empty line")
                try:
                    obj = json.loads(line)
                except ValueError as err:
                    raise DecodeError(f"invalid json: {err}") from None
                yield example_from_record(
                    obj, f"{source.name}:{idx}", source.name, source.category
                )
            except DecodeError as err:
                if on_skip is not None:
                    on_skip(source.name, idx, str(err))


def _read_csv_dir(source: SourceEntry, on_skip: SkipCallback | None) -> Iterator[Example]:
    files = sorted(source.path.glob("*.csv"))
    for idx, f in enumerate(files):
        try:
            with open(f, encoding="utf-8", newline="") as fh:
                grid = list(csv.reader(fh))
            if not grid:
                raise DecodeError(f"{f.name}: empty file")
            try:
                table = validate_table(
                    grid[0],
                    grid[1:],
                    table_id=f"{source.name}:{idx}",
                    meta={"file": f.name},
                )
            except (EmptyHeaders, EmptyTable) as err:
                raise DecodeError(f"{f.name}: {err}") from None
        except DecodeError as err:
            if on_skip is not None:
                on_skip(source.name, idx, str(err))
            continue
        yield Example(
            example_id=f"{source.name}:{idx}",
            table=table,
            context=Context.missing(),
            source=source.name,
        )


def read_examples(
    source: SourceEntry, on_skip: SkipCallback | None = None
) -> Iterator[Example]:
    """Stream examples from one source; skipped records go to on_skip."""
    if source.format is SourceFormat.CANONICAL:
        return _read_canonical(source, on_skip)
    return _read_csv_dir(source, on_skip)


def count_records(source: SourceEntry) -> int:
    """Raw record slots in a source, before any skipping."""
    if source.format is SourceFormat.CANONICAL:
        with open(source.path, encoding="utf-8") as fh:
            return sum(1 for _ in fh)
    return len(sorted(source.path.glob("*.csv")))


def iter_source(
    source: SourceEntry, seed: int, on_skip: SkipCallback | None = None
) -> Iterator[Example]:
    """Stream a source with its proportion applied.

    proportion > 100 repeats every record floor(p/100) times and samples the
    fractional remainder; proportion < 100 samples a subset.  Repeats get a
    ``#k`` suffix on the example id so downstream seeded draws differ per
    copy.  The index sample is seeded by (seed, source name), independent of
    other sources.
    """
    if source.proportion == 100.0:
        yield from read_examples(source, on_skip)
        return
    n = count_records(source)
    if n == 0:
        return
    target = round_half(source.proportion / 100.0 * n)
    copies, rem = divmod(target, n)
    rng = random.Random(stream_seed(seed, source.name, "source_sample"))
    extra = set(rng.sample(range(n), rem))
    for ex in read_examples(source, on_skip):
        idx = int(ex.example_id.rsplit(":", 1)[1])
        reps = copies + (1 if idx in extra else 0)
        for k in range(reps):
            if k == 0:
                yield ex
            else:
                yield replace(ex, example_id=f"{ex.example_id}#{k}")
