"""Tokenizer port and region-labeled encoding.

Masking operates on token indices, so every encoded token carries the region
it came from (context / header / cell / structural) and, for header tokens,
which column.  Reserved tokens must stay atomic under any adapter tokenizer;
a tokenizer that splits one is rejected.

The reference tokenizer is whitespace splitting, which makes token streams
and linearized strings mutually recoverable.
"""

from __future__ import annotations

import re
from dataclasses import dataclass
from typing import Protocol, Sequence, runtime_checkable

from tabseq import vocab
from tabseq.errors import TokenizerContractViolation
from tabseq.model import Example
from tabseq.serialize import Region, SerializeMode, render_pieces

_WORD = re.compile(r"\S+")


@runtime_checkable
class TokenizerPort(Protocol):
    def tokenize(self, text: str) -> list[str]: ...

    def detokenize(self, tokens: Sequence[str]) -> str: ...


class WhitespaceTokenizer:
    """Reference tokenizer: split on runs of whitespace, join with spaces."""

    def tokenize(self, text: str) -> list[str]:
        return text.split()

    def detokenize(self, tokens: Sequence[str]) -> str:
        return " ".join(tokens)


def check_tokenizer(
    tokenizer: TokenizerPort, max_sentinels: int = vocab.DEFAULT_MAX_SENTINELS
) -> None:
    """Reject tokenizers that split or drop any reserved token."""
    for tok in vocab.registry(max_sentinels):
        got = tokenizer.tokenize(tok)
        if got != [tok]:
            raise TokenizerContractViolation(
                f"reserved token {tok!r} must tokenize to itself, got {got!r}"
            )


@dataclass(frozen=True)
class LabeledTokenSeq:
    """Encoder-side token stream with per-token region labels.

    header_extents are half-open [start, end) index ranges, one per header
    that produced at least one token, in positional order.  Missing headers
    are placeholders and get no extent.
    """

    tokens: tuple[str, ...]
    regions: tuple[Region, ...]
    header_extents: tuple[tuple[int, int], ...]
    mode: SerializeMode = SerializeMode.UNIFIED

    def __post_init__(self):
        if len(self.tokens) != len(self.regions):
            raise ValueError("tokens and regions must align")

    def indices_of(self, region: Region) -> list[int]:
        return [i for i, r in enumerate(self.regions) if r is region]


def encode_regions(
    example: Example,
    tokenizer: TokenizerPort | None = None,
    mode: SerializeMode = SerializeMode.UNIFIED,
    include_types: bool = False,
) -> LabeledTokenSeq:
    """Tokenize the linearized example, labeling each token with its region.

    A token's label comes from the fragment its first character belongs to;
    in RF mode comma-glued neighbors therefore share the label of the head
    fragment, which is the price of having no separators.
    """
    tokenizer = tokenizer or WhitespaceTokenizer()
    pieces = render_pieces(example, mode, include_types=include_types)

    if mode is SerializeMode.UNIFIED:
        words = [
            (w, p.region, p.header_ord) for p in pieces for w in p.text.split()
        ]
    else:
        s = "".join(p.text for p in pieces)
        regions: list[Region] = []
        ords: list[int | None] = []
        for p in pieces:
            regions.extend([p.region] * len(p.text))
            ords.extend([p.header_ord] * len(p.text))
        words = [
            (m.group(), regions[m.start()], ords[m.start()])
            for m in _WORD.finditer(s)
        ]

    if type(tokenizer) is WhitespaceTokenizer:
        # whitespace tokens are exactly the words; skip the adapter loop
        tokens = [w for w, _, _ in words]
        labels = [r for _, r, _ in words]
        hords = [o for _, _, o in words]
    else:
        reserved = vocab.registry_set()
        tokens, labels, hords = [], [], []
        for w, r, o in words:
            subs = tokenizer.tokenize(w)
            if not subs:
                raise TokenizerContractViolation(f"tokenizer dropped word {w!r}")
            if w in reserved and subs != [w]:
                raise TokenizerContractViolation(
                    f"reserved token {w!r} split into {subs!r}"
                )
            tokens.extend(subs)
            labels.extend([r] * len(subs))
            hords.extend([o] * len(subs))

    extents: list[tuple[int, int]] = []
    start = 0
    cur: int | None = None
    for i, o in enumerate(hords + [None]):  # trailing None flushes the last group
        if o != cur:
            if cur is not None:
                extents.append((start, i))
            start, cur = i, o

    return LabeledTokenSeq(
        tokens=tuple(tokens),
        regions=tuple(labels),
        header_extents=tuple(extents),
        mode=mode,
    )
