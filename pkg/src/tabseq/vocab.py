"""Reserved token inventory.

The registry is a fixed, ordered list so that token ids derived from it
(line numbers in the exported vocabulary file) are stable across runs.
Trainers extend their tokenizers with exactly this list; the pad token is
deliberately not part of it because every real tokenizer already has one.
"""

from __future__ import annotations

CONTEXT_TOKEN = "<context>"
HEADER_TOKEN = "<header>"
ROW_TOKEN = "<row>"
CELL_SEP_TOKEN = "_|"
TEXT_NL_TOKEN = "<text_NL>"
TEXT_SQL_TOKEN = "<text_SQL>"
MISSING_CELL = "<missing_cell>"
MISSING_COLUMN = "<missing_column>"
MISSING_CONTEXT = "<missing_context>"
NL_COMPLETION_TOKEN = "<NL_completion>"
SQL_COMPLETION_TOKEN = "<SQL_completion>"
NL_GENERATION_TOKEN = "<NL_generation>"
SQL_GENERATION_TOKEN = "<SQL_generation>"
DENOISING_TOKEN = "<denoising>"

# Rendered form of CELL_SEP_TOKEN inside linearized strings.  The registry
# entry `_|` is what subword tokenizers need as an atomic piece; in the
# whitespace-tokenized string the separator appears as a bare `|`.
CELL_SEP_RENDERED = "|"

PAD_TOKEN = "<pad>"

DEFAULT_MAX_SENTINELS = 100

# Bare forms used by the no-special-token ablation format: same slots,
# nothing the extended vocabulary would recognize.
RF_MISSING = "nan"
RF_PLAIN = {
    TEXT_NL_TOKEN: "text_nl",
    TEXT_SQL_TOKEN: "text_sql",
    NL_COMPLETION_TOKEN: "nl_completion",
    SQL_COMPLETION_TOKEN: "sql_completion",
    NL_GENERATION_TOKEN: "nl_generation",
    SQL_GENERATION_TOKEN: "sql_generation",
    DENOISING_TOKEN: "denoising",
}


def sentinel(k: int) -> str:
    """k-th sentinel token, 1-based."""
    return f"<sentinel_{k}>"


def rf_sentinel(k: int) -> str:
    return f"sentinel_{k}"


def registry(max_sentinels: int = DEFAULT_MAX_SENTINELS) -> list[str]:
    """Full ordered token registry, fixed tokens first, then sentinels."""
    fixed = [
        CONTEXT_TOKEN,
        HEADER_TOKEN,
        ROW_TOKEN,
        CELL_SEP_TOKEN,
        TEXT_NL_TOKEN,
        TEXT_SQL_TOKEN,
        MISSING_CELL,
        MISSING_COLUMN,
        MISSING_CONTEXT,
        NL_COMPLETION_TOKEN,
        SQL_COMPLETION_TOKEN,
        NL_GENERATION_TOKEN,
        SQL_GENERATION_TOKEN,
        DENOISING_TOKEN,
    ]
    return fixed + [sentinel(k) for k in range(1, max_sentinels + 1)]


def registry_set(max_sentinels: int = DEFAULT_MAX_SENTINELS) -> frozenset[str]:
    return frozenset(registry(max_sentinels))


def write_vocab_file(path, max_sentinels: int = DEFAULT_MAX_SENTINELS) -> None:
    """Write one token per line, in registry order."""
    with open(path, "w", encoding="utf-8") as fh:
        for tok in registry(max_sentinels):
            fh.write(tok + "\n")
