"""Command-line front end.

Exit codes: 0 success, 1 validation failure, 2 runtime/I-O error, 64 usage
error.  Set TABSEQ_LOG=debug|info|warning|error to control log verbosity.
"""

from __future__ import annotations

import argparse
import json
import logging
import os
import re
import sys
from pathlib import Path

from tabseq import __version__, vocab
from tabseq.emit import STATS_NAME, compute_stats, iter_shard_file, read_shards, record_to_json
from tabseq.errors import TabseqError, ValidationError
from tabseq.ingest import SourceCategory, example_from_record, load_manifest
from tabseq.mixture import load_mixture_manifest
from tabseq.model import ContextKind, Example, ObjectiveConfig
from tabseq.objectives import apply_denoise, make_completion, make_generation
from tabseq.pipeline import run_pft, run_pretrain
from tabseq.rng import example_rng
from tabseq.sanitize import SanitizeConfig, sanitize_pipeline
from tabseq.serialize import SerializeMode, annotate_column_types, linearize
from tabseq.tokenization import encode_regions

log = logging.getLogger(__name__)

EX_OK = 0
EX_INVALID = 1
EX_RUNTIME = 2
EX_USAGE = 64


class _Parser(argparse.ArgumentParser):
    # argparse exits 2 on bad usage by default; the contract here is 64
    def error(self, message):
        self.print_usage(sys.stderr)
        self.exit(EX_USAGE, f"{self.prog}: error: {message}\n")


def _build_parser() -> _Parser:
    parser = _Parser(prog="tabseq", description=__doc__)
    parser.add_argument("--version", action="version", version=f"tabseq {__version__}")
    sub = parser.add_subparsers(dest="command", required=True, parser_class=_Parser)

    p = sub.add_parser("validate", help="check a manifest without building")
    p.add_argument("manifest", type=Path)
    p.add_argument("--pft", action="store_true", help="treat as a mixture manifest")

    p = sub.add_parser("build-pretrain", help="build pretraining shards")
    p.add_argument("manifest", type=Path)
    p.add_argument("--seed", type=int, default=None, help="override manifest seed")
    p.add_argument(
        "--mode",
        choices=[m.value for m in SerializeMode],
        default=SerializeMode.UNIFIED.value,
    )
    p.add_argument("--workers", type=int, default=1)
    p.add_argument(
        "--debug-provenance",
        action="store_true",
        help="tag each record's meta with its originating example id",
    )

    p = sub.add_parser("build-pft", help="build the supervised mixture")
    p.add_argument("manifest", type=Path)
    p.add_argument("--seed", type=int, default=None, help="override manifest seed")

    p = sub.add_parser("stats", help="show run statistics")
    p.add_argument("out_dir", type=Path)
    p.add_argument("--json", action="store_true", help="raw JSON output")

    p = sub.add_parser("inspect", help="pretty-print records from a shard")
    p.add_argument("shard", type=Path)
    p.add_argument("--limit", type=int, default=5)
    p.add_argument("--no-color", action="store_true")

    p = sub.add_parser("vocab", help="write the reserved-token vocabulary")
    p.add_argument("--out", default="-", help="output path, or - for stdout")
    p.add_argument("--max-sentinels", type=int, default=vocab.DEFAULT_MAX_SENTINELS)

    p = sub.add_parser(
        "transform",
        help="apply one pipeline stage to canonical records from stdin (NDJSON)",
    )
    p.add_argument(
        "--op",
        choices=["sanitize", "linearize", "denoise", "generation", "completion"],
        default="linearize",
        help="which stage to apply to each input record",
    )
    p.add_argument(
        "--mode",
        choices=[m.value for m in SerializeMode],
        default=SerializeMode.UNIFIED.value,
    )
    p.add_argument("--types", action="store_true", help="append :type tags to headers")
    p.add_argument("--seed", type=int, default=0, help="seed for the seeded stages")

    return parser


def _cmd_validate(args) -> int:
    if args.pft:
        manifest = load_mixture_manifest(args.manifest)
        for entry in manifest.entries:
            if not entry.records.exists():
                raise ValidationError(f"entry {entry.name!r}: no such file {entry.records}")
            if entry.exclusion_ids is not None and not entry.exclusion_ids.exists():
                raise ValidationError(
                    f"entry {entry.name!r}: no such file {entry.exclusion_ids}"
                )
        print(f"mixture manifest OK: {len(manifest.entries)} entries")
        return EX_OK
    manifest = load_manifest(args.manifest)
    for source in manifest.sources:
        if not source.path.exists():
            raise ValidationError(f"source {source.name!r}: no such path {source.path}")
    print(f"manifest OK: {len(manifest.sources)} sources, seed={manifest.seed}")
    return EX_OK


def _cmd_build_pretrain(args) -> int:
    manifest = load_manifest(args.manifest)
    result = run_pretrain(
        manifest,
        seed=args.seed,
        mode=SerializeMode(args.mode),
        workers=max(1, args.workers),
        debug_provenance=args.debug_provenance,
    )
    print(
        f"wrote {result.n_records} records in {len(result.manifest['shards'])} "
        f"shards to {result.manifest_path.parent}"
    )
    return EX_OK


def _cmd_build_pft(args) -> int:
    manifest = load_mixture_manifest(args.manifest)
    result = run_pft(manifest, seed=args.seed)
    print(
        f"wrote {result.n_records} records in {len(result.manifest['shards'])} "
        f"shards to {result.manifest_path.parent}"
    )
    return EX_OK


def _cmd_stats(args) -> int:
    stats_path = args.out_dir / STATS_NAME
    if stats_path.exists():
        stats = json.loads(stats_path.read_text(encoding="utf-8"))
    else:
        stats = compute_stats(read_shards(args.out_dir))
    if args.json:
        print(json.dumps(stats, ensure_ascii=False, indent=2))
        return EX_OK
    print(f"records: {stats['total_records']}")
    for section in ("objectives", "sources", "denoise_branches"):
        if stats.get(section):
            rows = ", ".join(f"{k}={v}" for k, v in stats[section].items())
            print(f"{section}: {rows}")
    rates = stats.get("mask_rates", {})
    shown = {k: round(v, 4) for k, v in rates.items() if v is not None}
    if shown:
        print(f"mask_rates: {shown}")
    for section in ("encoder_len_hist", "decoder_target_len_hist"):
        if stats.get(section):
            rows = ", ".join(f"{k}: {v}" for k, v in stats[section].items())
            print(f"{section}: {rows}")
    return EX_OK


_SENTINEL_RE = re.compile(r"^(<sentinel_\d+>|sentinel_\d+)$")


def _paint(token: str, reserved: set, color: bool) -> str:
    if not color:
        return token
    if token == vocab.PAD_TOKEN:
        return f"\x1b[2m{token}\x1b[0m"
    if _SENTINEL_RE.match(token):
        return f"\x1b[35m{token}\x1b[0m"
    if token in reserved:
        return f"\x1b[36m{token}\x1b[0m"
    return token


def _cmd_inspect(args) -> int:
    color = sys.stdout.isatty() and not args.no_color
    reserved = vocab.registry_set()
    for i, rec in enumerate(iter_shard_file(args.shard)):
        if i >= args.limit:
            break
        print(f"record {i}  id={rec.example_id}  objective={rec.objective.value}")
        enc = [t for t in rec.encoder_input if t != vocab.PAD_TOKEN]
        n_pad = len(rec.encoder_input) - len(enc)
        print(f"  encoder ({len(enc)} + {n_pad} pad):")
        print("    " + " ".join(_paint(t, reserved, color) for t in enc))
        print(f"  decoder_target ({len(rec.decoder_target)}):")
        print("    " + " ".join(_paint(t, reserved, color) for t in rec.decoder_target))
        print(f"  meta: {json.dumps(rec.meta, ensure_ascii=False)}")
    return EX_OK


def _cmd_vocab(args) -> int:
    if args.max_sentinels < 1:
        raise ValidationError("--max-sentinels must be >= 1")
    tokens = vocab.registry(args.max_sentinels)
    if args.out == "-":
        sys.stdout.write("\n".join(tokens) + "\n")
    else:
        vocab.write_vocab_file(Path(args.out), args.max_sentinels)
        print(f"wrote {len(tokens)} tokens to {args.out}")
    return EX_OK


def _example_to_record(example: Example) -> dict:
    """Inverse of example_from_record, minus source bookkeeping."""
    out: dict = {
        "headers": list(example.table.headers),
        "rows": [list(r) for r in example.table.rows],
    }
    if example.table.meta:
        out["meta"] = dict(example.table.meta)
    ctx = example.context
    if ctx.kind is not ContextKind.MISSING:
        rendered: dict = {"kind": ctx.kind.value, "text": ctx.text}
        if ctx.turns:
            rendered["turns"] = list(ctx.turns)
        out["context"] = rendered
    return out


def _transform_one(example: Example, args, mode: SerializeMode) -> str:
    if args.op == "linearize":
        out = {"linearized": linearize(example, mode, include_types=args.types)}
        return json.dumps(out, ensure_ascii=False, separators=(",", ":"))
    if args.op == "sanitize":
        rng = example_rng(args.seed, example.example_id, "sanitize")
        clean = sanitize_pipeline(example, SanitizeConfig(), rng)
        return json.dumps(
            _example_to_record(clean), ensure_ascii=False, separators=(",", ":")
        )
    if args.op == "denoise":
        seq = encode_regions(example, mode=mode, include_types=args.types)
        cfg = ObjectiveConfig(global_seed=args.seed)
        return record_to_json(apply_denoise(seq, cfg, example.example_id))
    if args.op == "generation":
        return record_to_json(make_generation(example, mode=mode, include_types=args.types))
    return record_to_json(make_completion(example, mode=mode, include_types=args.types))


def _cmd_transform(args) -> int:
    mode = SerializeMode(args.mode)
    for i, line in enumerate(sys.stdin):
        line = line.strip()
        if not line:
            continue
        try:
            obj = json.loads(line)
            example = example_from_record(
                obj, f"stdin:{i}", "stdin", SourceCategory.TABLE_TEXT
            )
            if args.types:
                table = annotate_column_types(example.table)
                example = example.with_table(table)
            out_line = _transform_one(example, args, mode)
        except (TabseqError, ValueError) as err:
            out_line = json.dumps(
                {"error": str(err)}, ensure_ascii=False, separators=(",", ":")
            )
        sys.stdout.write(out_line + "\n")
        sys.stdout.flush()
    return EX_OK


_COMMANDS = {
    "validate": _cmd_validate,
    "build-pretrain": _cmd_build_pretrain,
    "build-pft": _cmd_build_pft,
    "stats": _cmd_stats,
    "inspect": _cmd_inspect,
    "vocab": _cmd_vocab,
    "transform": _cmd_transform,
}


def _setup_logging() -> None:
    level_name = os.environ.get("TABSEQ_LOG", "warning").upper()
    level = getattr(logging, level_name, None)
    if not isinstance(level, int):
        level = logging.WARNING
    logging.basicConfig(
        level=level, format="%(levelname)s %(name)s: %(message)s", stream=sys.stderr
    )


def main(argv=None) -> int:
    _setup_logging()
    parser = _build_parser()
    args = parser.parse_args(argv)
    try:
        return _COMMANDS[args.command](args)
    except TabseqError as err:
        print(f"tabseq: {err}", file=sys.stderr)
        return EX_INVALID
    except OSError as err:
        print(f"tabseq: {err}", file=sys.stderr)
        return EX_RUNTIME


if __name__ == "__main__":
    sys.exit(main())
