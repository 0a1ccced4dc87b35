import json
from pathlib import Path

import numpy as np
import pytest

from readpath.cli import main

from conftest import build_demo


class TestIngest:
    def test_ingest_writes_cache_and_stats(self, tmp_path, capsys):
        cfg = build_demo(tmp_path)
        assert main(["ingest", "--config", str(cfg)]) == 0
        assert (tmp_path / "out" / "corpus.json").exists()
        stats = json.loads(capsys.readouterr().out)
        assert stats["documents"] == 12
        assert stats["tokens"] > 0 and stats["vocabulary"] > 0

    def test_missing_text_file_exit_1_names_id(self, tmp_path, capsys):
        cfg = build_demo(tmp_path)
        (tmp_path / "texts" / "v003.txt").unlink()
        assert main(["ingest", "--config", str(cfg)]) == 1
        assert "v003" in capsys.readouterr().err

    def test_rerun_is_byte_identical(self, tmp_path):
        cfg = build_demo(tmp_path)
        cache = tmp_path / "out" / "corpus.json"
        assert main(["ingest", "--config", str(cfg)]) == 0
        first = cache.read_bytes()
        assert main(["ingest", "--config", str(cfg)]) == 0
        assert cache.read_bytes() == first


class TestRun:
    def test_bundle_is_complete(self, tmp_path):
        cfg = build_demo(tmp_path)
        assert main(["run", "--config", str(cfg)]) == 0
        kdir = tmp_path / "out" / "k2"
        manifest = json.loads((kdir / "manifest.json").read_text())
        assert manifest["files"]
        for name in manifest["files"]:
            assert (kdir / name).exists(), name
        summary = json.loads((kdir / "summary.json").read_text())
        assert summary["documents"] == 12
        for kind in ("T2T", "T2P"):
            block = summary["surprise"][kind]
            assert 0 <= block["p_value_below_null"] <= 1
            assert block["observed_bits_per_step"] >= 0

    def test_k_list_one_bundle_per_k(self, tmp_path):
        cfg = build_demo(tmp_path)
        assert main(["run", "--config", str(cfg), "--topics.k_list", "2,3"]) == 0
        assert (tmp_path / "out" / "k2" / "summary.json").exists()
        assert (tmp_path / "out" / "k3" / "summary.json").exists()

    def test_seed_rerun_identical_and_threads_invariant(self, tmp_path):
        cfg = build_demo(tmp_path)
        assert main(["run", "--config", str(cfg), "--out", str(tmp_path / "o1")]) == 0
        assert main(["run", "--config", str(cfg), "--out", str(tmp_path / "o2")]) == 0
        assert main(["run", "--config", str(cfg), "--out", str(tmp_path / "o3"), "--threads", "4"]) == 0
        ref = (tmp_path / "o1" / "k2" / "summary.json").read_bytes()
        assert (tmp_path / "o2" / "k2" / "summary.json").read_bytes() == ref
        assert (tmp_path / "o3" / "k2" / "summary.json").read_bytes() == ref

    def test_override_flag_changes_k(self, tmp_path):
        cfg = build_demo(tmp_path)
        assert main(["run", "--config", str(cfg), "--k", "3"]) == 0
        assert (tmp_path / "out" / "k3").exists()
        assert not (tmp_path / "out" / "k2").exists()

    def test_unknown_override_rejected(self, tmp_path, capsys):
        cfg = build_demo(tmp_path)
        assert main(["run", "--config", str(cfg), "--topics.nope", "1"]) == 1
        assert "topics.nope" in capsys.readouterr().err

    def test_missing_cache_for_train_exit_1(self, tmp_path, capsys):
        cfg = build_demo(tmp_path)
        assert main(["train", "--config", str(cfg)]) == 1
        assert "corpus cache" in capsys.readouterr().err


class TestStagedPipeline:
    def test_stage_by_stage_matches_run(self, tmp_path):
        cfg = build_demo(tmp_path)
        out2 = tmp_path / "staged"
        for cmd in ("ingest", "train", "surprise", "null", "puborder", "greedy", "ranks", "epochs"):
            assert main([cmd, "--config", str(cfg), "--out", str(out2)]) == 0, cmd
        assert main(["run", "--config", str(cfg), "--out", str(tmp_path / "oneshot")]) == 0
        for name in ("series_t2t.csv", "null_t2p.json", "greedy_t2t.csv", "epochs_t2t.json"):
            staged = (out2 / "k2" / name).read_bytes()
            oneshot = (tmp_path / "oneshot" / "k2" / name).read_bytes()
            assert staged == oneshot, name


class TestReport:
    def test_report_consistent_with_summary(self, tmp_path, capsys):
        cfg = build_demo(tmp_path)
        assert main(["run", "--config", str(cfg)]) == 0
        kdir = tmp_path / "out" / "k2"
        assert main(["report", str(kdir)]) == 0
        out = capsys.readouterr().out
        summary = json.loads((kdir / "summary.json").read_text())
        observed = summary["surprise"]["T2T"]["observed_bits_per_step"]
        assert f"{observed:.4f}" in out
        assert "reading order" in out and "greedy shortest path" in out

    def test_report_missing_bundle(self, tmp_path, capsys):
        assert main(["report", str(tmp_path / "nope")]) == 1
        assert "manifest" in capsys.readouterr().err

    def test_report_names_missing_artifact(self, tmp_path, capsys):
        cfg = build_demo(tmp_path)
        assert main(["run", "--config", str(cfg)]) == 0
        kdir = tmp_path / "out" / "k2"
        (kdir / "null_t2p.json").unlink()
        assert main(["report", str(kdir)]) == 1
        assert "null_t2p.json" in capsys.readouterr().err
