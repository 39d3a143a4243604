"""Supervised mixture assembly for the prefinetuning stage.

Each entry is an NDJSON file of supervised pairs (or a slice of the
pretraining corpus replayed through the generation objective) with a
proportion: 100 keeps every record once, 8 samples 8% of them, 150 keeps
every record and repeats a sampled half.  Sampling is seeded per entry, the
combined list is shuffled once globally, and every record passes through
the same pad/truncate step as pretraining.

Inputs here carry column type tags (``header:number``) since downstream
tasks lean on them; an exclusion-id list per entry turns evaluation-set
leakage into a hard error.
"""

from __future__ import annotations

import json
import logging
import random
from dataclasses import dataclass, field, replace
from enum import Enum
from pathlib import Path
from typing import Sequence

try:
    import tomllib
except ModuleNotFoundError:  # pragma: no cover - py310 fallback
    import tomli as tomllib

from tabseq import vocab
from tabseq.errors import (
    DecodeError,
    EntryReadError,
    LeakageError,
    NoContext,
    ParseError,
    ValidationError,
)
from tabseq.ingest import SourceCategory, example_from_record
from tabseq.model import Context, ContextKind, Example, Objective, ObjectiveConfig
from tabseq.objectives import (
    Seq2SeqRecord,
    make_generation,
    pad_truncate,
    round_half,
)
from tabseq.rng import example_rng, stream_seed
from tabseq.sanitize import SanitizeConfig, sanitize_pipeline
from tabseq.serialize import (
    SerializeMode,
    annotate_column_types,
    kind_token,
    linearize,
    render_decoder_prefix,
)
from tabseq.tokenization import TokenizerPort, WhitespaceTokenizer

log = logging.getLogger(__name__)


class IoKind(Enum):
    TEXT_TABLE_TO_SQL = "text_table_to_sql"
    TABLE_TO_TEXT = "table_to_text"
    TEXT_TABLE_TO_ANSWER = "text_table_to_answer"
    SQL_TABLE_TO_ANSWER = "sql_table_to_answer"
    TEXT_TO_SQL = "text_to_sql"
    PRETRAIN_REPLAY = "pretrain_replay"


@dataclass(frozen=True)
class MixtureEntry:
    name: str
    records: Path
    proportion: float
    io_kind: IoKind
    exclusion_ids: Path | None = None


@dataclass(frozen=True)
class MixtureManifest:
    entries: tuple[MixtureEntry, ...]
    output_dir: Path
    shard_size: int = 1000
    seed: int = 0
    target_total: int | None = None


_TOP_KEYS = {"entries", "output_dir", "shard_size", "seed", "target_total"}
_ENTRY_KEYS = {"name", "records", "proportion", "io_kind", "exclusion_ids"}


def load_mixture_manifest(path: Path) -> MixtureManifest:
    path = Path(path)
    text = path.read_text(encoding="utf-8")
    try:
        data = tomllib.loads(text)
    except tomllib.TOMLDecodeError as err:
        raise ParseError(f"{path}: {err}") from None

    unknown = sorted(set(data) - _TOP_KEYS)
    if unknown:
        raise ValidationError(f"unknown key '{unknown[0]}' in mixture manifest")
    base = path.resolve().parent

    seed = data.get("seed", 0)
    if not isinstance(seed, int) or isinstance(seed, bool):
        raise ValidationError(f"seed must be an integer, got {seed!r}")
    shard_size = data.get("shard_size", 1000)
    if not isinstance(shard_size, int) or shard_size < 1:
        raise ValidationError(f"shard_size must be an integer >= 1, got {shard_size!r}")
    target_total = data.get("target_total")
    if target_total is not None and (
        not isinstance(target_total, int) or target_total < 0
    ):
        raise ValidationError(f"target_total must be an integer >= 0, got {target_total!r}")

    raw_entries = data.get("entries")
    if not isinstance(raw_entries, list) or not raw_entries:
        raise ValidationError("mixture manifest needs at least one [[entries]] entry")
    entries = []
    names = set()
    for i, raw in enumerate(raw_entries):
        where = f"entries[{i}]"
        if not isinstance(raw, dict):
            raise ValidationError(f"{where} must be a table")
        unknown = sorted(set(raw) - _ENTRY_KEYS)
        if unknown:
            raise ValidationError(f"unknown key '{unknown[0]}' in {where}")
        for key in ("name", "records", "proportion", "io_kind"):
            if key not in raw:
                raise ValidationError(f"{where} is missing required key '{key}'")
        name = raw["name"]
        if not isinstance(name, str) or not name:
            raise ValidationError(f"{where}.name must be a non-empty string")
        if name in names:
            raise ValidationError(f"duplicate entry name {name!r}")
        names.add(name)
        proportion = raw["proportion"]
        if isinstance(proportion, bool) or not isinstance(proportion, (int, float)):
            raise ValidationError(f"{where}.proportion must be a number")
        if proportion <= 0:
            raise ValidationError(f"{where}.proportion must be > 0")
        try:
            io_kind = IoKind(raw["io_kind"])
        except ValueError:
            allowed = ", ".join(k.value for k in IoKind)
            raise ValidationError(
                f"{where}.io_kind must be one of: {allowed}"
            ) from None
        rec_path = Path(raw["records"])
        if not rec_path.is_absolute():
            rec_path = base / rec_path
        excl = raw.get("exclusion_ids")
        if excl is not None:
            if not isinstance(excl, str):
                raise ValidationError(f"{where}.exclusion_ids must be a path string")
            excl_path = Path(excl)
            if not excl_path.is_absolute():
                excl_path = base / excl_path
        else:
            excl_path = None
        entries.append(
            MixtureEntry(
                name=name,
                records=rec_path,
                proportion=float(proportion),
                io_kind=io_kind,
                exclusion_ids=excl_path,
            )
        )

    out = data.get("output_dir", "pft_out")
    if not isinstance(out, str) or not out:
        raise ValidationError("output_dir must be a non-empty string")
    out_path = Path(out)
    if not out_path.is_absolute():
        out_path = base / out_path

    return MixtureManifest(
        entries=tuple(entries),
        output_dir=out_path,
        shard_size=shard_size,
        seed=seed,
        target_total=target_total,
    )


_SQL_OUT = {IoKind.TEXT_TABLE_TO_SQL, IoKind.TEXT_TO_SQL}
_NEEDS_TABLE = {
    IoKind.TEXT_TABLE_TO_SQL,
    IoKind.TABLE_TO_TEXT,
    IoKind.TEXT_TABLE_TO_ANSWER,
    IoKind.SQL_TABLE_TO_ANSWER,
}


def _load_exclusions(entry: MixtureEntry) -> set[str]:
    if entry.exclusion_ids is None:
        return set()
    try:
        lines = entry.exclusion_ids.read_text(encoding="utf-8").splitlines()
    except OSError as err:
        raise EntryReadError(f"{entry.name}: cannot read exclusion file: {err}") from None
    return {ln.strip() for ln in lines if ln.strip()}


def _supervised_record(
    entry: MixtureEntry,
    obj: dict,
    idx: int,
    tokenizer: TokenizerPort,
) -> Seq2SeqRecord:
    where = f"{entry.name}: line {idx}"
    rec_id = obj.get("id")
    if rec_id is None or isinstance(rec_id, (dict, list)):
        raise EntryReadError(f"{where}: missing or invalid 'id'")
    rec_id = str(rec_id)
    input_text = obj.get("input_text", "")
    output_text = obj.get("output_text", "")
    if not isinstance(input_text, str) or not isinstance(output_text, str):
        raise EntryReadError(f"{where}: input_text/output_text must be strings")
    if not output_text.strip():
        raise EntryReadError(f"{where}: output_text must be non-empty")
    kind = entry.io_kind
    if kind not in (IoKind.TABLE_TO_TEXT,) and not input_text.strip():
        raise EntryReadError(f"{where}: input_text must be non-empty for {kind.value}")

    if kind is IoKind.TEXT_TO_SQL:
        enc = [vocab.CONTEXT_TOKEN, vocab.TEXT_NL_TOKEN]
        enc.extend(tokenizer.tokenize(input_text))
    else:
        raw_table = obj.get("table")
        if kind in _NEEDS_TABLE and raw_table is None:
            raise EntryReadError(f"{where}: 'table' is required for {kind.value}")
        try:
            example = example_from_record(
                {"headers": raw_table["headers"], "rows": raw_table["rows"]},
                example_id=f"{entry.name}:{rec_id}",
                source_name=entry.name,
                category=SourceCategory.TABLE_ONLY,
            )
        except (DecodeError, KeyError, TypeError) as err:
            raise EntryReadError(f"{where}: bad table: {err}") from None
        if kind is IoKind.SQL_TABLE_TO_ANSWER:
            context = Context(kind=ContextKind.SQL, text=input_text)
        elif input_text.strip():
            context = Context(kind=ContextKind.NL, text=input_text)
        else:
            context = Context.missing()
        example = replace(
            example,
            table=annotate_column_types(example.table),
            context=context,
        )
        text = linearize(example, SerializeMode.UNIFIED, include_types=True)
        enc = tokenizer.tokenize(text)

    if kind in _SQL_OUT:
        objective = Objective.SQL_GENERATION
        out_kind = ContextKind.SQL
    else:
        objective = Objective.NL_GENERATION
        out_kind = ContextKind.NL
    tgt = [kind_token(out_kind)]
    tgt.extend(tokenizer.tokenize(output_text))
    prefix = render_decoder_prefix(objective)
    return Seq2SeqRecord(
        example_id=f"{entry.name}:{rec_id}",
        objective=objective,
        encoder_input=tuple(enc),
        decoder_input=(prefix, *tgt),
        decoder_target=tuple(tgt),
        meta={"source": entry.name, "io_kind": kind.value},
    )


def _replay_record(
    entry: MixtureEntry,
    obj: dict,
    idx: int,
    seed: int,
    tokenizer: TokenizerPort,
) -> Seq2SeqRecord | None:
    """Pretraining-corpus record replayed through the generation objective.

    Records without a context cannot generate and are dropped (None)."""
    where = f"{entry.name}: line {idx}"
    try:
        example = example_from_record(
            obj, f"{entry.name}:{idx}", entry.name, SourceCategory.TABLE_TEXT
        )
    except DecodeError as err:
        raise EntryReadError(f"{where}: {err}") from None
    rng = example_rng(seed, example.example_id, "sanitize")
    example = sanitize_pipeline(example, SanitizeConfig(), rng)
    example = replace(example, table=annotate_column_types(example.table))
    try:
        rec = make_generation(example, tokenizer, include_types=True)
    except NoContext:
        return None
    meta = {"source": entry.name, "io_kind": IoKind.PRETRAIN_REPLAY.value, **rec.meta}
    return replace(rec, meta=meta)


def read_entry(
    entry: MixtureEntry, seed: int, tokenizer: TokenizerPort | None = None
) -> list[Seq2SeqRecord]:
    """Load one entry's base records (before proportion expansion)."""
    tokenizer = tokenizer or WhitespaceTokenizer()
    exclusions = _load_exclusions(entry)
    try:
        lines = entry.records.read_text(encoding="utf-8").splitlines()
    except OSError as err:
        raise EntryReadError(f"{entry.name}: cannot read records: {err}") from None

    records: list[Seq2SeqRecord] = []
    for idx, line in enumerate(lines):
        line = line.strip()
        if not line:
            continue
        try:
            obj = json.loads(line)
        except ValueError as err:
            raise EntryReadError(f"{entry.name}: line {idx}: invalid json: {err}") from None
        if entry.io_kind is IoKind.PRETRAIN_REPLAY:
            check_id = str(idx)
            rec = _replay_record(entry, obj, idx, seed, tokenizer)
        else:
            rec = _supervised_record(entry, obj, idx, tokenizer)
            check_id = rec.example_id.split(":", 1)[1]
        if check_id in exclusions:
            raise LeakageError(
                f"entry {entry.name!r}: record id {check_id!r} is on the exclusion list"
            )
        if rec is not None:
            records.append(rec)
    return records


def expand_entry(
    base: Sequence[Seq2SeqRecord], proportion: float, rng: random.Random
) -> list[Seq2SeqRecord]:
    """Apply a percentage: whole copies plus a sampled fractional remainder.

    The result holds round(p/100 * len(base)) records; each base record
    appears either floor(p/100) or floor(p/100)+1 times.
    """
    n = len(base)
    if n == 0:
        return []
    target = round_half(proportion / 100.0 * n)
    copies, rem = divmod(target, n)
    extra = set(rng.sample(range(n), rem))
    out: list[Seq2SeqRecord] = []
    for i, rec in enumerate(base):
        out.extend([rec] * (copies + (1 if i in extra else 0)))
    return out


def build_mixture(
    entries: Sequence[MixtureEntry],
    seed: int = 0,
    target_total: int | None = None,
    tokenizer: TokenizerPort | None = None,
    cfg: ObjectiveConfig | None = None,
) -> list[Seq2SeqRecord]:
    """Assemble, shuffle, and pad the full prefinetuning mixture."""
    tokenizer = tokenizer or WhitespaceTokenizer()
    cfg = cfg or ObjectiveConfig(global_seed=seed)

    combined: list[Seq2SeqRecord] = []
    for entry in entries:
        base = read_entry(entry, seed, tokenizer)
        if not base:
            log.warning("mixture entry %r has no records; skipping", entry.name)
            continue
        rng = random.Random(stream_seed(seed, entry.name, "mixture_sample"))
        combined.extend(expand_entry(base, entry.proportion, rng))

    random.Random(stream_seed(seed, "mixture", "shuffle")).shuffle(combined)
    if target_total is not None:
        combined = combined[:target_total]
    return [pad_truncate(rec, cfg) for rec in combined]
