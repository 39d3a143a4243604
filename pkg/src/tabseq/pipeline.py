"""End-to-end runs: manifest in, shard directory out.

The pretraining run streams every source through sanitize + objective
mixing and into the shard writer.  Work is distributed with an ordered pool
map, and every random draw is keyed by (seed, example id, stage), so output
bytes are identical for any worker count.
"""

from __future__ import annotations

import logging
from dataclasses import asdict, replace
from functools import partial
from multiprocessing import Pool
from typing import Iterable, Iterator

from tabseq.emit import SKIP_REPORT_NAME, SkipEntry, WriteResult, write_shards, write_skip_report
from tabseq.errors import AllColumnsInvalid, SkipRecord
from tabseq.ingest import CorpusManifest, iter_source
from tabseq.mixture import MixtureManifest, build_mixture
from tabseq.model import Example, ObjectiveConfig
from tabseq.objectives import Seq2SeqRecord, mix_one
from tabseq.rng import example_rng
from tabseq.sanitize import SanitizeConfig, sanitize_pipeline
from tabseq.serialize import SerializeMode

log = logging.getLogger(__name__)


def _index_of(example_id: str) -> int:
    """Source record index from an example id like 'src:14' or 'src:14#2'."""
    tail = example_id.rsplit(":", 1)[1]
    return int(tail.split("#", 1)[0])


def process_example(
    example: Example,
    cfg: ObjectiveConfig,
    sanitize_cfg: SanitizeConfig,
    mode: SerializeMode,
    debug_provenance: bool,
) -> tuple[str, object]:
    """Sanitize and mix one example; picklable unit of pool work."""
    try:
        rng = example_rng(cfg.global_seed, example.example_id, "sanitize")
        clean = sanitize_pipeline(example, sanitize_cfg, rng)
        rec = mix_one(
            clean, cfg, mode=mode, debug_provenance=debug_provenance
        )
        return ("ok", rec)
    except (AllColumnsInvalid, SkipRecord) as err:
        return ("skip", (example.source, _index_of(example.example_id), str(err)))


def _map_ordered(func, items: Iterable, workers: int) -> Iterator:
    if workers <= 1:
        yield from map(func, items)
        return
    with Pool(processes=workers) as pool:
        yield from pool.imap(func, items, chunksize=32)


def run_pretrain(
    manifest: CorpusManifest,
    seed: int | None = None,
    mode: SerializeMode = SerializeMode.UNIFIED,
    workers: int = 1,
    debug_provenance: bool = False,
    sanitize_cfg: SanitizeConfig | None = None,
) -> WriteResult:
    """Build the pretraining corpus described by a manifest.

    A seed given here overrides the manifest's.  Returns the write result;
    skip_report.ndjson lands next to the shards either way.
    """
    eff_seed = manifest.seed if seed is None else seed
    cfg = replace(manifest.objective_config, global_seed=eff_seed)
    sanitize_cfg = sanitize_cfg or SanitizeConfig()
    skips: list[SkipEntry] = []

    def examples() -> Iterator[Example]:
        for source in manifest.sources:
            def on_skip(src: str, idx: int, reason: str) -> None:
                skips.append(SkipEntry(src, idx, reason))

            yield from iter_source(source, eff_seed, on_skip)

    worker = partial(
        process_example,
        cfg=cfg,
        sanitize_cfg=sanitize_cfg,
        mode=mode,
        debug_provenance=debug_provenance,
    )

    def records() -> Iterator[Seq2SeqRecord]:
        for status, payload in _map_ordered(worker, examples(), workers):
            if status == "ok":
                yield payload
            else:
                skips.append(SkipEntry(*payload))

    config_snapshot = {
        "kind": "pretrain",
        "mode": mode.value,
        "shard_size": manifest.shard_size,
        "objective_config": asdict(cfg),
        "sanitize": asdict(sanitize_cfg),
        "sources": [
            {
                "name": s.name,
                "format": s.format.value,
                "category": s.category.value,
                "proportion": s.proportion,
            }
            for s in manifest.sources
        ],
    }
    result = write_shards(
        records(), manifest.output_dir, manifest.shard_size, config_snapshot, eff_seed
    )
    # read-side and mix-side skips interleave differently per worker count;
    # sort so the report is reproducible
    skips.sort(key=lambda e: (e.source, e.record_index, e.reason))
    n_skipped = write_skip_report(skips, manifest.output_dir / SKIP_REPORT_NAME)
    log.info(
        "pretrain run: %d records in %d shards, %d skipped",
        result.n_records,
        len(result.manifest["shards"]),
        n_skipped,
    )
    return result


def run_pft(manifest: MixtureManifest, seed: int | None = None) -> WriteResult:
    """Build the supervised prefinetuning mixture described by a manifest."""
    eff_seed = manifest.seed if seed is None else seed
    records = build_mixture(
        manifest.entries, seed=eff_seed, target_total=manifest.target_total
    )
    config_snapshot = {
        "kind": "pft",
        "shard_size": manifest.shard_size,
        "target_total": manifest.target_total,
        "entries": [
            {
                "name": e.name,
                "proportion": e.proportion,
                "io_kind": e.io_kind.value,
            }
            for e in manifest.entries
        ],
    }
    result = write_shards(
        records, manifest.output_dir, manifest.shard_size, config_snapshot, eff_seed
    )
    log.info(
        "pft run: %d records in %d shards",
        result.n_records,
        len(result.manifest["shards"]),
    )
    return result
