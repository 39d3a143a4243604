"""Deterministic conversion of table corpora into seq2seq pretraining data.

Tables (optionally paired with natural-language text or SQL) are cleaned,
linearized into a reserved-token format, and turned into denoising,
generation, and completion records, sharded as NDJSON with a run manifest.
A supervised mixture builder covers the prefinetuning stage.  Every random
choice is keyed by (seed, example id, stage), so runs reproduce bit-for-bit
at any worker count.
"""

from tabseq.emit import (
    SkipEntry,
    StatsAccumulator,
    WriteResult,
    compute_stats,
    read_shards,
    record_from_json,
    record_to_json,
    write_shards,
)
from tabseq.errors import TabseqError
from tabseq.ingest import (
    CorpusManifest,
    SourceCategory,
    SourceEntry,
    SourceFormat,
    iter_source,
    load_manifest,
    read_examples,
)
from tabseq.mixture import (
    IoKind,
    MixtureEntry,
    MixtureManifest,
    build_mixture,
    load_mixture_manifest,
)
from tabseq.model import (
    Context,
    ContextKind,
    Example,
    Objective,
    ObjectiveConfig,
    Table,
    validate_table,
)
from tabseq.objectives import (
    CorruptionPlan,
    Seq2SeqRecord,
    apply_denoise,
    make_completion,
    make_generation,
    mix_objectives,
    mix_one,
    pad_truncate,
    plan_mcp,
    plan_span_corruption,
)
from tabseq.pipeline import run_pft, run_pretrain
from tabseq.sanitize import SanitizeConfig, sanitize_pipeline
from tabseq.serialize import (
    Region,
    SerializeMode,
    aggregate_turns,
    annotate_column_types,
    linearize,
    parse_linearized,
    render_decoder_prefix,
)
from tabseq.tokenization import (
    LabeledTokenSeq,
    TokenizerPort,
    WhitespaceTokenizer,
    check_tokenizer,
    encode_regions,
)

__version__ = "0.1.0"

__all__ = [
    "CorpusManifest",
    "Context",
    "ContextKind",
    "CorruptionPlan",
    "Example",
    "IoKind",
    "LabeledTokenSeq",
    "MixtureEntry",
    "MixtureManifest",
    "Objective",
    "ObjectiveConfig",
    "Region",
    "SanitizeConfig",
    "Seq2SeqRecord",
    "SerializeMode",
    "SkipEntry",
    "SourceCategory",
    "SourceEntry",
    "SourceFormat",
    "StatsAccumulator",
    "Table",
    "TabseqError",
    "TokenizerPort",
    "WhitespaceTokenizer",
    "WriteResult",
    "aggregate_turns",
    "annotate_column_types",
    "apply_denoise",
    "build_mixture",
    "check_tokenizer",
    "compute_stats",
    "encode_regions",
    "iter_source",
    "linearize",
    "load_manifest",
    "load_mixture_manifest",
    "make_completion",
    "make_generation",
    "mix_objectives",
    "mix_one",
    "pad_truncate",
    "parse_linearized",
    "plan_mcp",
    "plan_span_corruption",
    "read_examples",
    "read_shards",
    "record_from_json",
    "record_to_json",
    "run_pft",
    "run_pretrain",
    "sanitize_pipeline",
    "validate_table",
    "write_shards",
]
