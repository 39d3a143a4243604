"""Registry stability and vocabulary export."""

from tabseq import vocab


def test_registry_size_and_order():
    reg = vocab.registry(100)
    assert len(reg) == 14 + 100
    assert reg[0] == "<context>"
    assert reg[13] == "<denoising>"
    assert reg[14] == "<sentinel_1>"
    assert reg[-1] == "<sentinel_100>"


def test_registry_has_no_duplicates():
    reg = vocab.registry()
    assert len(reg) == len(set(reg))


def test_pad_not_in_registry():
    assert vocab.PAD_TOKEN not in vocab.registry_set()


def test_cell_separator_registry_vs_rendered():
    # the registry entry carries the whole-word marker; the in-string form
    # is the bare pipe
    assert vocab.CELL_SEP_TOKEN == "_|"
    assert vocab.CELL_SEP_RENDERED == "|"


def test_sentinels_one_based():
    assert vocab.sentinel(1) == "<sentinel_1>"
    assert vocab.rf_sentinel(7) == "sentinel_7"


def test_rf_plain_forms_are_not_reserved():
    reserved = vocab.registry_set()
    for bare in vocab.RF_PLAIN.values():
        assert bare not in reserved
    assert vocab.RF_MISSING not in reserved


def test_write_vocab_file(tmp_path):
    path = tmp_path / "vocab.txt"
    vocab.write_vocab_file(path, max_sentinels=5)
    lines = path.read_text(encoding="utf-8").splitlines()
    assert lines == vocab.registry(5)
    assert lines[-1] == "<sentinel_5>"
