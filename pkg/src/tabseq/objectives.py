"""Self-supervised objectives over labeled token sequences.

Four record shapes come out of here:

* denoising: span corruption over cell and context tokens plus whole-header
  masked column prediction, spliced into one sentinel sequence;
* context generation: encoder sees the table with the context slot emptied,
  decoder reproduces the full context;
* context completion: encoder keeps the first half of the context, decoder
  produces the second half;
* the mixer, which routes each example to one of the above by seeded coin
  flips (denoising 60% by default, the rest split between generation and
  completion).

All randomness is drawn from per-example streams keyed by (global seed,
example id, stage), so results do not depend on worker count or on how many
examples preceded this one.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field, replace
from typing import Callable, Iterable, Iterator, Sequence

from tabseq import vocab
from tabseq.errors import (
    EmptyRegion,
    NoContext,
    NoHeaders,
    SkipRecord,
    TooShort,
)
from tabseq.model import Context, ContextKind, Example, Objective, ObjectiveConfig
from tabseq.rng import example_rng
from tabseq.serialize import (
    Region,
    SerializeMode,
    context_slot_text,
    kind_token,
    render_decoder_prefix,
)
from tabseq.tokenization import (
    LabeledTokenSeq,
    TokenizerPort,
    WhitespaceTokenizer,
    encode_regions,
)

Span = tuple[int, int]


def round_half(x: float) -> int:
    # round-half-up for non-negative x; avoids banker's rounding surprises
    return int(math.floor(x + 0.5))


@dataclass(frozen=True)
class CorruptionPlan:
    """Disjoint, non-adjacent half-open token spans chosen for masking."""

    spans: tuple[Span, ...]

    @property
    def n_spans(self) -> int:
        return len(self.spans)

    @property
    def n_masked(self) -> int:
        return sum(e - s for s, e in self.spans)


def _composition_pos(n: int, k: int, rng) -> list[int]:
    """k parts >= 1 summing to n, uniform over compositions."""
    if k == 1:
        return [n]
    cuts = sorted(rng.sample(range(1, n), k - 1))
    bounds = [0] + cuts + [n]
    return [bounds[i + 1] - bounds[i] for i in range(k)]


def _composition_nonneg(n: int, k: int, rng) -> list[int]:
    """k parts >= 0 summing to n, uniform over compositions."""
    if k == 1:
        return [n]
    if n == 0:
        return [0] * k
    bars = sorted(rng.sample(range(n + k - 1), k - 1))
    parts = []
    prev = -1
    for b in bars:
        parts.append(b - prev - 1)
        prev = b
    parts.append(n + k - 2 - prev)
    return parts


def _runs(indices: Sequence[int]) -> list[tuple[int, int]]:
    """Maximal (start, length) runs of consecutive values."""
    runs = []
    start = prev = indices[0]
    for i in indices[1:]:
        if i != prev + 1:
            runs.append((start, prev - start + 1))
            start = i
        prev = i
    runs.append((start, prev - start + 1))
    return runs


def plan_span_corruption(
    indices: Sequence[int], rate: float, mean_span: int, rng
) -> CorruptionPlan:
    """Choose masked spans over one region of the token stream.

    ``indices`` are the region's absolute token positions in ascending order.
    The masked-token count is exact: max(1, round(rate * len(indices))).
    Spans never cross gaps in ``indices`` (gaps hold structural tokens), and
    two spans inside one run keep at least one unmasked token between them.
    Span count targets masked/mean_span but yields to structure: a region
    chopped into short runs gets more, shorter spans.
    """
    if not indices:
        raise EmptyRegion("cannot corrupt an empty region")
    if not 0.0 < rate <= 1.0:
        raise ValueError(f"rate must be in (0, 1], got {rate}")
    if mean_span < 1:
        raise ValueError(f"mean_span must be >= 1, got {mean_span}")

    total = len(indices)
    n = min(total, max(1, round_half(rate * total)))
    runs = _runs(indices)

    # apportion n masked tokens over runs by largest remainder, ties broken
    # by a seeded shuffle so early runs are not favored
    quotas = [n * length / total for _, length in runs]
    alloc = [min(int(q), length) for q, (_, length) in zip(quotas, runs)]
    order = list(range(len(runs)))
    rng.shuffle(order)
    priority = sorted(order, key=lambda j: -(quotas[j] - int(quotas[j])))
    leftover = n - sum(alloc)
    while leftover > 0:
        progressed = False
        for j in priority:
            if leftover == 0:
                break
            if alloc[j] < runs[j][1]:
                alloc[j] += 1
                leftover -= 1
                progressed = True
        if not progressed:  # unreachable: n <= sum of run lengths
            break

    spans: list[Span] = []
    for (start, length), m in zip(runs, alloc):
        if m == 0:
            continue
        k = min(max(1, round_half(m / mean_span)), m, length - m + 1)
        sizes = _composition_pos(m, k, rng)
        free = length - m - (k - 1)
        gaps = _composition_nonneg(free, k + 1, rng)
        pos = start + gaps[0]
        for t in range(k):
            spans.append((pos, pos + sizes[t]))
            pos += sizes[t] + 1 + gaps[t + 1]
    return CorruptionPlan(spans=tuple(spans))


def plan_mcp(seq: LabeledTokenSeq, rate: float, rng) -> CorruptionPlan:
    """Choose whole headers to mask: each span is one header's full extent."""
    extents = seq.header_extents
    if not extents:
        raise NoHeaders("no maskable headers")
    h = len(extents)
    k = min(h, max(1, round_half(rate * h)))
    chosen = sorted(rng.sample(range(h), k))
    return CorruptionPlan(spans=tuple(extents[i] for i in chosen))


def _merge_for_budget(
    spans: list[Span], regions: Sequence[Region], budget: int
) -> list[Span]:
    """Reduce span count to the sentinel budget.

    Prefers merging the leftmost adjacent pair whose gap holds no structural
    tokens (the gap gets masked too); falls back to dropping tail spans.
    """
    spans = list(spans)
    while len(spans) > budget:
        merged = False
        for i in range(len(spans) - 1):
            gap_ok = all(
                regions[p] is not Region.STRUCTURAL
                for p in range(spans[i][1], spans[i + 1][0])
            )
            if gap_ok:
                spans[i] = (spans[i][0], spans[i + 1][1])
                del spans[i + 1]
                merged = True
                break
        if not merged:
            spans.pop()
    return spans


def _sentinel_namer(mode: SerializeMode) -> Callable[[int], str]:
    return vocab.rf_sentinel if mode is SerializeMode.RF else vocab.sentinel


def _splice(
    tokens: Sequence[str], spans: Sequence[Span], namer: Callable[[int], str]
) -> tuple[list[str], list[str]]:
    """Replace each span with a numbered sentinel; target holds each
    sentinel followed by the tokens it hid."""
    enc: list[str] = []
    tgt: list[str] = []
    cursor = 0
    for k, (s, e) in enumerate(spans, start=1):
        enc.extend(tokens[cursor:s])
        enc.append(namer(k))
        tgt.append(namer(k))
        tgt.extend(tokens[s:e])
        cursor = e
    enc.extend(tokens[cursor:])
    return enc, tgt


@dataclass(frozen=True)
class Seq2SeqRecord:
    """One emitted pretraining record.

    decoder_input is always the task token followed by decoder_target; the
    invariant is enforced here so downstream code can rely on it.
    """

    example_id: str
    objective: Objective
    encoder_input: tuple[str, ...]
    decoder_input: tuple[str, ...]
    decoder_target: tuple[str, ...]
    meta: dict = field(default_factory=dict)

    def __post_init__(self):
        if not self.decoder_input or self.decoder_input[1:] != self.decoder_target:
            raise ValueError("decoder_input must be task token + decoder_target")


def apply_denoise(
    seq: LabeledTokenSeq, cfg: ObjectiveConfig, example_id: str
) -> Seq2SeqRecord:
    """Build a denoising record from a labeled sequence.

    Examples with context run cell corruption, context corruption, and
    header masking jointly.  Table-only examples (no context tokens) flip a
    coin: header masking alone, or header masking plus cell corruption.
    Raises SkipRecord when nothing is maskable.
    """
    cells = seq.indices_of(Region.CELL)
    text = seq.indices_of(Region.CONTEXT)
    table_only = not text

    want_cells = True
    branch = "joint"
    if table_only:
        coin = example_rng(cfg.global_seed, example_id, "denoise.branch")
        if coin.random() < cfg.table_only_mcp_only_prob:
            want_cells = False
            branch = "mcp_only"
        else:
            branch = "mcp_cells"

    spans: list[Span] = []
    if want_cells and cells:
        plan = plan_span_corruption(
            cells,
            cfg.cell_mask_rate,
            cfg.mean_span_len,
            example_rng(cfg.global_seed, example_id, "denoise.cells"),
        )
        spans.extend(plan.spans)
    if text:
        plan = plan_span_corruption(
            text,
            cfg.text_mask_rate,
            cfg.mean_span_len,
            example_rng(cfg.global_seed, example_id, "denoise.text"),
        )
        spans.extend(plan.spans)
    if seq.header_extents:
        plan = plan_mcp(
            seq,
            cfg.header_mask_rate,
            example_rng(cfg.global_seed, example_id, "denoise.headers"),
        )
        spans.extend(plan.spans)

    if not spans:
        raise SkipRecord("nothing maskable in example")
    spans.sort()
    spans = _merge_for_budget(spans, seq.regions, cfg.max_sentinels)

    # actual masked counts, measured from the final spans
    masked = {Region.CELL: 0, Region.CONTEXT: 0, Region.HEADER: 0}
    covered: set[int] = set()
    for s, e in spans:
        covered.update(range(s, e))
        for p in range(s, e):
            r = seq.regions[p]
            if r in masked:
                masked[r] += 1
    masked_headers = sum(
        1 for s, e in seq.header_extents if all(p in covered for p in range(s, e))
    )

    meta: dict = {"denoise_branch": branch}
    if want_cells and cells:
        meta["masked_cell_tokens"] = masked[Region.CELL]
        meta["total_cell_tokens"] = len(cells)
    if text:
        meta["masked_context_tokens"] = masked[Region.CONTEXT]
        meta["total_context_tokens"] = len(text)
    if seq.header_extents:
        meta["masked_headers"] = masked_headers
        meta["total_headers"] = len(seq.header_extents)

    namer = _sentinel_namer(seq.mode)
    enc, tgt = _splice(seq.tokens, spans, namer)
    prefix = render_decoder_prefix(Objective.DENOISE, seq.mode)
    return Seq2SeqRecord(
        example_id=example_id,
        objective=Objective.DENOISE,
        encoder_input=tuple(enc),
        decoder_input=(prefix, *tgt),
        decoder_target=tuple(tgt),
        meta=meta,
    )


_GEN_OBJECTIVE = {
    ContextKind.NL: Objective.NL_GENERATION,
    ContextKind.SQL: Objective.SQL_GENERATION,
}
_COMPLETION_OBJECTIVE = {
    ContextKind.NL: Objective.NL_COMPLETION,
    ContextKind.SQL: Objective.SQL_COMPLETION,
}


def make_generation(
    example: Example,
    tokenizer: TokenizerPort | None = None,
    mode: SerializeMode = SerializeMode.UNIFIED,
    include_types: bool = False,
) -> Seq2SeqRecord:
    """Encoder sees the table with an emptied context slot; decoder emits
    the context-kind token followed by the full context text."""
    tokenizer = tokenizer or WhitespaceTokenizer()
    context = example.context
    if context.is_missing:
        raise NoContext("generation needs a context")
    stripped = encode_regions(
        example.with_context(Context.missing()), tokenizer, mode, include_types
    )
    tgt = [kind_token(context.kind, mode)]
    tgt.extend(tokenizer.tokenize(context_slot_text(context)))
    objective = _GEN_OBJECTIVE[context.kind]
    prefix = render_decoder_prefix(objective, mode)
    return Seq2SeqRecord(
        example_id=example.example_id,
        objective=objective,
        encoder_input=stripped.tokens,
        decoder_input=(prefix, *tgt),
        decoder_target=tuple(tgt),
        meta={},
    )


def make_completion(
    example: Example,
    tokenizer: TokenizerPort | None = None,
    mode: SerializeMode = SerializeMode.UNIFIED,
    include_types: bool = False,
) -> Seq2SeqRecord:
    """Encoder keeps the first floor(w/2) context words; decoder emits the
    kind token followed by the remaining words."""
    tokenizer = tokenizer or WhitespaceTokenizer()
    context = example.context
    if context.is_missing:
        raise NoContext("completion needs a context")
    words = context_slot_text(context).split()
    if len(words) < 2:
        raise TooShort("completion needs at least two context words")
    cut = len(words) // 2
    head = Context(kind=context.kind, text=" ".join(words[:cut]), turns=())
    half = encode_regions(
        example.with_context(head), tokenizer, mode, include_types
    )
    tgt = [kind_token(context.kind, mode)]
    tgt.extend(tokenizer.tokenize(" ".join(words[cut:])))
    objective = _COMPLETION_OBJECTIVE[context.kind]
    prefix = render_decoder_prefix(objective, mode)
    return Seq2SeqRecord(
        example_id=example.example_id,
        objective=objective,
        encoder_input=half.tokens,
        decoder_input=(prefix, *tgt),
        decoder_target=tuple(tgt),
        meta={},
    )


def pad_truncate(
    record: Seq2SeqRecord,
    cfg: ObjectiveConfig,
    mode: SerializeMode = SerializeMode.UNIFIED,
) -> Seq2SeqRecord:
    """Fix the encoder at exactly max_len tokens; never pack examples.

    Truncating a denoising encoder drops tail sentinels, and the target is
    rebuilt to keep only segments whose sentinel survived.  The decoder
    target is capped at max_len - 1 so task token + target still fits in
    max_len.  Pre-truncation lengths land in meta.
    """
    max_len = cfg.max_len
    enc = list(record.encoder_input)
    tgt = list(record.decoder_target)
    prefix = record.decoder_input[0]
    meta = dict(record.meta)
    meta["encoder_len"] = len(enc)
    meta["decoder_target_len"] = len(tgt)

    if len(enc) > max_len:
        enc = enc[:max_len]
        if record.objective is Objective.DENOISE:
            namer = _sentinel_namer(mode)
            surviving = []
            expected = 1
            for t in enc:
                if t == namer(expected):
                    surviving.append(expected)
                    expected += 1
            segments: dict[int, list[str]] = {}
            current = None
            expected = 1
            for t in tgt:
                if t == namer(expected):
                    current = expected
                    segments[current] = [t]
                    expected += 1
                elif current is not None:
                    segments[current].append(t)
            tgt = [tok for k in surviving for tok in segments.get(k, [])]
    if len(tgt) > max_len - 1:
        tgt = tgt[: max_len - 1]
    enc.extend([vocab.PAD_TOKEN] * (max_len - len(enc)))

    return replace(
        record,
        encoder_input=tuple(enc),
        decoder_input=(prefix, *tgt),
        decoder_target=tuple(tgt),
        meta=meta,
    )


def mix_one(
    example: Example,
    cfg: ObjectiveConfig,
    tokenizer: TokenizerPort | None = None,
    mode: SerializeMode = SerializeMode.UNIFIED,
    include_types: bool = False,
    debug_provenance: bool = False,
) -> Seq2SeqRecord:
    """Route one example to an objective and produce its padded record.

    Coin order is fixed: u1 picks denoising (always drawn, and table-only
    examples denoise regardless of it); otherwise u2 picks generation vs
    completion.  Completion falls back to generation when the context is a
    single word; denoising falls back to generation when nothing is
    maskable, unless the example is table-only, in which case SkipRecord
    propagates.
    """
    tokenizer = tokenizer or WhitespaceTokenizer()
    rng = example_rng(cfg.global_seed, example.example_id, "mix")
    u1 = rng.random()
    table_only = example.context.is_missing

    if table_only or u1 < cfg.denoise_prob:
        seq = encode_regions(example, tokenizer, mode, include_types)
        try:
            rec = apply_denoise(seq, cfg, example.example_id)
        except SkipRecord:
            if table_only:
                raise
            rec = make_generation(example, tokenizer, mode, include_types)
    else:
        if rng.random() < cfg.generation_prob:
            rec = make_generation(example, tokenizer, mode, include_types)
        else:
            try:
                rec = make_completion(example, tokenizer, mode, include_types)
            except TooShort:
                rec = make_generation(example, tokenizer, mode, include_types)

    meta = {"source": example.source, **rec.meta}
    if debug_provenance:
        meta["provenance"] = [example.example_id]
    rec = replace(rec, meta=meta)
    return pad_truncate(rec, cfg, mode)


def mix_objectives(
    examples: Iterable[Example],
    cfg: ObjectiveConfig,
    tokenizer: TokenizerPort | None = None,
    mode: SerializeMode = SerializeMode.UNIFIED,
    include_types: bool = False,
    debug_provenance: bool = False,
    on_skip: Callable[[str, str], None] | None = None,
) -> Iterator[Seq2SeqRecord]:
    """Yield one padded record per usable example, in input order."""
    tokenizer = tokenizer or WhitespaceTokenizer()
    for example in examples:
        try:
            yield mix_one(
                example, cfg, tokenizer, mode, include_types, debug_provenance
            )
        except SkipRecord as err:
            if on_skip is not None:
                on_skip(example.example_id, str(err))
