"""Sharded NDJSON output with a run manifest and aggregate stats.

Each shard is ``shard-{index:05d}.ndrec``: one JSON object per line, compact
separators, UTF-8, fixed key order (example_id, objective, encoder_input,
decoder_input, decoder_target, meta).  The run manifest records the config
snapshot, the seed, and a sha256 digest per shard so byte-level determinism
can be checked without re-reading record contents.

Writes are all-or-nothing: an I/O failure removes any partially written
shards before the error propagates.
"""

from __future__ import annotations

import hashlib
import json
from dataclasses import dataclass
from pathlib import Path
from typing import Iterable, Iterator

from tabseq.errors import ValidationError
from tabseq.model import Objective
from tabseq.objectives import Seq2SeqRecord

SHARD_PATTERN = "shard-{:05d}.ndrec"
MANIFEST_NAME = "manifest.json"
STATS_NAME = "stats.json"
SKIP_REPORT_NAME = "skip_report.ndjson"


@dataclass(frozen=True)
class SkipEntry:
    """One dropped input record and why."""

    source: str
    record_index: int
    reason: str


def record_to_json(record: Seq2SeqRecord) -> str:
    obj = {
        "example_id": record.example_id,
        "objective": record.objective.value,
        "encoder_input": list(record.encoder_input),
        "decoder_input": list(record.decoder_input),
        "decoder_target": list(record.decoder_target),
        "meta": record.meta,
    }
    return json.dumps(obj, ensure_ascii=False, separators=(",", ":"))


def record_from_json(line: str) -> Seq2SeqRecord:
    obj = json.loads(line)
    return Seq2SeqRecord(
        example_id=obj["example_id"],
        objective=Objective(obj["objective"]),
        encoder_input=tuple(obj["encoder_input"]),
        decoder_input=tuple(obj["decoder_input"]),
        decoder_target=tuple(obj["decoder_target"]),
        meta=obj["meta"],
    )


_LEN_BUCKETS = [64, 128, 256, 512, 1024, 2048]


def _bucket(n: int) -> str:
    lo = 0
    for hi in _LEN_BUCKETS:
        if n < hi:
            return f"{lo}-{hi - 1}"
        lo = hi
    return f"{_LEN_BUCKETS[-1]}+"


_BUCKET_LABELS = ["0-63", "64-127", "128-255", "256-511", "512-1023", "1024-2047", "2048+"]


class StatsAccumulator:
    """Streaming aggregation of record counts, mask rates, and lengths."""

    def __init__(self) -> None:
        self.total = 0
        self.objectives: dict[str, int] = {}
        self.sources: dict[str, int] = {}
        self.branches: dict[str, int] = {}
        self.masked = {"cell_tokens": 0, "context_tokens": 0, "headers": 0}
        self.totals = {"cell_tokens": 0, "context_tokens": 0, "headers": 0}
        self.enc_hist: dict[str, int] = {}
        self.dec_hist: dict[str, int] = {}

    def add(self, record: Seq2SeqRecord) -> None:
        self.total += 1
        meta = record.meta
        obj = record.objective.value
        self.objectives[obj] = self.objectives.get(obj, 0) + 1
        src = meta.get("source", "")
        self.sources[src] = self.sources.get(src, 0) + 1
        branch = meta.get("denoise_branch")
        if branch is not None:
            self.branches[branch] = self.branches.get(branch, 0) + 1
        for key in self.masked:
            m = meta.get(f"masked_{key}")
            if m is not None:
                self.masked[key] += m
                self.totals[key] += meta[f"total_{key}"]
        b = _bucket(meta.get("encoder_len", len(record.encoder_input)))
        self.enc_hist[b] = self.enc_hist.get(b, 0) + 1
        b = _bucket(meta.get("decoder_target_len", len(record.decoder_target)))
        self.dec_hist[b] = self.dec_hist.get(b, 0) + 1

    def result(self) -> dict:
        def ordered_hist(h: dict[str, int]) -> dict[str, int]:
            return {k: h[k] for k in _BUCKET_LABELS if k in h}

        rates = {
            key: (self.masked[key] / self.totals[key] if self.totals[key] else None)
            for key in self.masked
        }
        return {
            "total_records": self.total,
            "objectives": dict(sorted(self.objectives.items())),
            "sources": dict(sorted(self.sources.items())),
            "denoise_branches": dict(sorted(self.branches.items())),
            "mask_rates": rates,
            "masked_counts": {
                key: [self.masked[key], self.totals[key]] for key in self.masked
            },
            "encoder_len_hist": ordered_hist(self.enc_hist),
            "decoder_target_len_hist": ordered_hist(self.dec_hist),
        }


def compute_stats(records: Iterable[Seq2SeqRecord]) -> dict:
    acc = StatsAccumulator()
    for record in records:
        acc.add(record)
    return acc.result()


@dataclass(frozen=True)
class WriteResult:
    manifest: dict
    stats: dict
    n_records: int
    manifest_path: Path


def write_shards(
    records: Iterable[Seq2SeqRecord],
    out_dir: Path,
    shard_size: int,
    config: dict,
    seed: int,
) -> WriteResult:
    """Stream records into fixed-size shards and write manifest + stats."""
    if shard_size < 1:
        raise ValidationError(f"shard_size must be >= 1, got {shard_size}")
    out_dir = Path(out_dir)
    out_dir.mkdir(parents=True, exist_ok=True)

    shards: list[dict] = []
    acc = StatsAccumulator()
    written: list[Path] = []
    fh = None
    digest = None
    count = 0
    try:
        for record in records:
            if fh is None:
                name = SHARD_PATTERN.format(len(shards))
                path = out_dir / name
                fh = open(path, "w", encoding="utf-8")
                written.append(path)
                digest = hashlib.sha256()
                count = 0
            line = record_to_json(record) + "\n"
            fh.write(line)
            digest.update(line.encode("utf-8"))
            acc.add(record)
            count += 1
            if count == shard_size:
                fh.close()
                shards.append(
                    {"name": written[-1].name, "count": count, "digest": digest.hexdigest()}
                )
                fh = None
        if fh is not None:
            fh.close()
            shards.append(
                {"name": written[-1].name, "count": count, "digest": digest.hexdigest()}
            )
            fh = None
    except OSError:
        if fh is not None:
            fh.close()
        for path in written:
            path.unlink(missing_ok=True)
        raise

    stats = acc.result()
    (out_dir / STATS_NAME).write_text(
        json.dumps(stats, ensure_ascii=False, indent=2) + "\n", encoding="utf-8"
    )
    manifest = {
        "config": config,
        "seed": seed,
        "shards": shards,
        "stats_path": STATS_NAME,
    }
    manifest_path = out_dir / MANIFEST_NAME
    manifest_path.write_text(
        json.dumps(manifest, ensure_ascii=False, indent=2) + "\n", encoding="utf-8"
    )
    return WriteResult(
        manifest=manifest,
        stats=stats,
        n_records=acc.total,
        manifest_path=manifest_path,
    )


def write_skip_report(entries: Iterable[SkipEntry], path: Path) -> int:
    n = 0
    with open(path, "w", encoding="utf-8") as fh:
        for e in entries:
            obj = {"source": e.source, "record_index": e.record_index, "reason": e.reason}
            fh.write(json.dumps(obj, ensure_ascii=False, separators=(",", ":")) + "\n")
            n += 1
    return n


def iter_shard_file(path: Path) -> Iterator[Seq2SeqRecord]:
    with open(path, encoding="utf-8") as fh:
        for line in fh:
            line = line.strip()
            if line:
                yield record_from_json(line)


def read_shards(out_dir: Path, verify: bool = False) -> Iterator[Seq2SeqRecord]:
    """Records in manifest order; optionally re-check shard digests."""
    out_dir = Path(out_dir)
    manifest = json.loads((out_dir / MANIFEST_NAME).read_text(encoding="utf-8"))
    for entry in manifest["shards"]:
        path = out_dir / entry["name"]
        if verify:
            actual = hashlib.sha256(path.read_bytes()).hexdigest()
            if actual != entry["digest"]:
                raise ValidationError(
                    f"digest mismatch for {entry['name']}: "
                    f"manifest {entry['digest'][:12]}.., file {actual[:12]}.."
                )
        yield from iter_shard_file(path)
