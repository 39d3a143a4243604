"""Shard writing, wire format, digests, stats, and skip reports."""

import hashlib
import json

import pytest

from tabseq.emit import (
    MANIFEST_NAME,
    SKIP_REPORT_NAME,
    STATS_NAME,
    SkipEntry,
    compute_stats,
    iter_shard_file,
    read_shards,
    record_from_json,
    record_to_json,
    write_shards,
    write_skip_report,
)
from tabseq.errors import ValidationError
from tabseq.model import Objective


def _rec(i, objective=Objective.DENOISE, meta=None, enc=None):
    from tabseq.objectives import Seq2SeqRecord

    enc = enc or ("<context>", f"w{i}", "<pad>")
    tgt = ("<sentinel_1>", "x")
    return Seq2SeqRecord(
        example_id=f"s:{i}",
        objective=objective,
        encoder_input=tuple(enc),
        decoder_input=("<denoising>", *tgt),
        decoder_target=tgt,
        meta=meta if meta is not None else {"source": "s"},
    )


class TestWireFormat:
    def test_exact_bytes_and_key_order(self):
        rec = _rec(0, meta={"source": "s"})
        expect = (
            '{"example_id":"s:0","objective":"denoise",'
            '"encoder_input":["<context>","w0","<pad>"],'
            '"decoder_input":["<denoising>","<sentinel_1>","x"],'
            '"decoder_target":["<sentinel_1>","x"],'
            '"meta":{"source":"s"}}'
        )
        assert record_to_json(rec) == expect

    def test_non_ascii_preserved(self):
        rec = _rec(0, enc=("<context>", "café"))
        line = record_to_json(rec)
        assert "café" in line
        assert "\\u" not in line

    def test_round_trip(self):
        rec = _rec(3, objective=Objective.NL_GENERATION, meta={"source": "a", "k": 2})
        assert record_from_json(record_to_json(rec)) == rec

    def test_objective_values_survive(self):
        for obj in Objective:
            rec = _rec(0, objective=obj)
            assert record_from_json(record_to_json(rec)).objective is obj


class TestStats:
    def test_counts_by_objective_and_source(self):
        recs = [
            _rec(0, meta={"source": "a", "denoise_branch": "joint"}),
            _rec(1, meta={"source": "b", "denoise_branch": "joint"}),
            _rec(2, objective=Objective.NL_GENERATION, meta={"source": "a"}),
        ]
        stats = compute_stats(recs)
        assert stats["total_records"] == 3
        assert stats["objectives"] == {"denoise": 2, "nl_generation": 1}
        assert stats["sources"] == {"a": 2, "b": 1}
        assert stats["denoise_branches"] == {"joint": 2}

    def test_mask_rates_are_aggregate_ratios(self):
        # sum(masked)/sum(total), not a mean of per-record ratios
        recs = [
            _rec(0, meta={"masked_cell_tokens": 1, "total_cell_tokens": 4}),
            _rec(1, meta={"masked_cell_tokens": 5, "total_cell_tokens": 16}),
        ]
        stats = compute_stats(recs)
        assert stats["mask_rates"]["cell_tokens"] == 6 / 20
        assert stats["masked_counts"]["cell_tokens"] == [6, 20]

    def test_rates_none_when_absent(self):
        stats = compute_stats([_rec(0)])
        assert stats["mask_rates"]["headers"] is None

    def test_length_hist_prefers_meta(self):
        recs = [
            _rec(0, meta={"encoder_len": 63, "decoder_target_len": 0}),
            _rec(1, meta={"encoder_len": 64, "decoder_target_len": 64}),
            _rec(2, meta={"encoder_len": 2048, "decoder_target_len": 127}),
        ]
        stats = compute_stats(recs)
        assert stats["encoder_len_hist"] == {"0-63": 1, "64-127": 1, "2048+": 1}
        assert stats["decoder_target_len_hist"] == {"0-63": 1, "64-127": 2}

    def test_length_hist_falls_back_to_actual(self):
        stats = compute_stats([_rec(0)])  # 3 encoder tokens, no meta lengths
        assert stats["encoder_len_hist"] == {"0-63": 1}


class TestWriteShards:
    def _write(self, tmp_path, n=10, shard_size=4):
        recs = [_rec(i) for i in range(n)]
        res = write_shards(recs, tmp_path, shard_size, config={"k": 1}, seed=9)
        return recs, res

    def test_shard_layout(self, tmp_path):
        _, res = self._write(tmp_path)
        names = [s["name"] for s in res.manifest["shards"]]
        assert names == ["shard-00000.ndrec", "shard-00001.ndrec", "shard-00002.ndrec"]
        assert [s["count"] for s in res.manifest["shards"]] == [4, 4, 2]
        assert res.n_records == 10
        for name in names:
            assert (tmp_path / name).exists()

    def test_digests_match_file_bytes(self, tmp_path):
        _, res = self._write(tmp_path)
        for s in res.manifest["shards"]:
            actual = hashlib.sha256((tmp_path / s["name"]).read_bytes()).hexdigest()
            assert actual == s["digest"]

    def test_manifest_and_stats_written(self, tmp_path):
        _, res = self._write(tmp_path)
        manifest = json.loads((tmp_path / MANIFEST_NAME).read_text(encoding="utf-8"))
        assert manifest == res.manifest
        assert manifest["config"] == {"k": 1}
        assert manifest["seed"] == 9
        assert manifest["stats_path"] == STATS_NAME
        stats = json.loads((tmp_path / STATS_NAME).read_text(encoding="utf-8"))
        assert stats == res.stats
        assert stats["total_records"] == 10

    def test_read_back_equals_input(self, tmp_path):
        recs, _ = self._write(tmp_path)
        assert list(read_shards(tmp_path)) == recs
        assert list(read_shards(tmp_path, verify=True)) == recs

    def test_verify_catches_corruption(self, tmp_path):
        self._write(tmp_path)
        shard = tmp_path / "shard-00001.ndrec"
        shard.write_bytes(shard.read_bytes().replace(b"w5", b"w9"))
        with pytest.raises(ValidationError) as exc:
            list(read_shards(tmp_path, verify=True))
        assert "shard-00001" in str(exc.value)
        # without verify the tampered bytes pass through silently
        assert len(list(read_shards(tmp_path))) == 10

    def test_exact_multiple_of_shard_size(self, tmp_path):
        _, res = self._write(tmp_path, n=8, shard_size=4)
        assert [s["count"] for s in res.manifest["shards"]] == [4, 4]

    def test_empty_input(self, tmp_path):
        _, res = self._write(tmp_path, n=0)
        assert res.manifest["shards"] == []
        assert list(read_shards(tmp_path)) == []

    def test_bad_shard_size(self, tmp_path):
        with pytest.raises(ValidationError):
            write_shards([], tmp_path, 0, config={}, seed=0)

    def test_failure_removes_partial_shards(self, tmp_path):
        def exploding():
            for i in range(6):
                yield _rec(i)
            raise OSError("disk full")

        with pytest.raises(OSError):
            write_shards(exploding(), tmp_path, 4, config={}, seed=0)
        assert list(tmp_path.glob("*.ndrec")) == []
        assert not (tmp_path / MANIFEST_NAME).exists()
        assert not (tmp_path / STATS_NAME).exists()

    def test_iter_shard_file(self, tmp_path):
        recs, _ = self._write(tmp_path, n=3, shard_size=10)
        got = list(iter_shard_file(tmp_path / "shard-00000.ndrec"))
        assert got == recs


class TestSkipReport:
    def test_format_and_count(self, tmp_path):
        path = tmp_path / SKIP_REPORT_NAME
        entries = [
            SkipEntry(source="a", record_index=3, reason="invalid json"),
            SkipEntry(source="b", record_index=0, reason="empty line"),
        ]
        assert write_skip_report(entries, path) == 2
        lines = path.read_text(encoding="utf-8").splitlines()
        assert lines[0] == '{"source":"a","record_index":3,"reason":"invalid json"}'
        assert json.loads(lines[1])["reason"] == "empty line"

    def test_empty_report(self, tmp_path):
        path = tmp_path / SKIP_REPORT_NAME
        assert write_skip_report([], path) == 0
        assert path.read_text(encoding="utf-8") == ""
