"""Corpus ingestion and the end-to-end command line surface.

CLI tests run in-process through cli.main and assert on exit codes and on
the files each command writes.  Generation configs are kept tiny (2 bars,
budget 4) so the whole file stays fast.
"""
import json
import shutil
import warnings
from pathlib import Path

import pytest

from emodecode import cli
from emodecode.corpus import (
    corpus_sequences,
    dump_corpus,
    ingest_directory,
    labeled_sequences,
    load_corpus,
    load_labels,
)
from emodecode.emotion import EmotionQuadrant
from emodecode.errors import LabelMismatch, MeterImportWarning, NoValidFiles
from emodecode.remi.tokens import VOCAB

GOOD_SOURCES = [f"e{q}_{v}.mid" for q in range(1, 5) for v in range(2)]


@pytest.fixture(scope="module")
def corpus(midi_dir):
    with warnings.catch_warnings(record=True):
        warnings.simplefilter("always")
        return ingest_directory(midi_dir)


class TestIngest:
    def test_skips_bad_files_with_warnings(self, midi_dir):
        with warnings.catch_warnings(record=True) as captured:
            warnings.simplefilter("always")
            corpus = ingest_directory(midi_dir)
        messages = {str(w.message) for w in captured}
        assert any("waltz.mid" in m and "not in 4/4" in m for m in messages)
        assert any("broken.mid" in m for m in messages)
        meter = [w for w in captured if issubclass(w.category, MeterImportWarning)]
        assert len(meter) == 1
        assert [p["source"] for p in corpus["pieces"]] == GOOD_SOURCES

    def test_corpus_format(self, corpus):
        assert corpus["format"] == "remi-corpus-v1"
        for piece in corpus["pieces"]:
            assert piece["tokens"][0] == "START:0"
            assert piece["tokens"][-1] == "END:0"

    def test_dump_bytes_deterministic(self, corpus, midi_dir, tmp_path):
        with warnings.catch_warnings(record=True):
            warnings.simplefilter("always")
            again = ingest_directory(midi_dir)
        dump_corpus(corpus, tmp_path / "a.json")
        dump_corpus(again, tmp_path / "b.json")
        assert (tmp_path / "a.json").read_bytes() == (tmp_path / "b.json").read_bytes()

    def test_empty_directory_rejected(self, tmp_path):
        with pytest.raises(NoValidFiles):
            ingest_directory(tmp_path)

    def test_all_files_skipped_rejected(self, midi_dir, tmp_path):
        shutil.copy(midi_dir / "waltz.mid", tmp_path / "waltz.mid")
        with pytest.warns(MeterImportWarning):
            with pytest.raises(NoValidFiles):
                ingest_directory(tmp_path)

    def test_load_corpus_roundtrip(self, corpus, tmp_path):
        dump_corpus(corpus, tmp_path / "c.json")
        assert load_corpus(tmp_path / "c.json") == corpus

    def test_load_corpus_rejects_wrong_format(self, tmp_path):
        (tmp_path / "c.json").write_text('{"format": "other", "pieces": [1]}')
        with pytest.raises(NoValidFiles, match="remi-corpus-v1"):
            load_corpus(tmp_path / "c.json")

    def test_corpus_sequences_are_valid_ids(self, corpus):
        sequences = corpus_sequences(corpus)
        assert len(sequences) == 8
        for seq in sequences:
            assert seq[0] == VOCAB.start_id
            assert seq[-1] == VOCAB.end_id
            assert VOCAB.validate_ids(seq, require_complete=True) is None


class TestLabels:
    def test_load_labels(self, midi_dir):
        labels = load_labels(midi_dir / "labels.json")
        assert set(labels) == set(GOOD_SOURCES)
        assert labels["e3_1.mid"] is EmotionQuadrant.E3

    def test_labeled_sequences_align(self, corpus, midi_dir):
        pairs = labeled_sequences(corpus, load_labels(midi_dir / "labels.json"))
        assert len(pairs) == 8
        expected = [EmotionQuadrant.parse(src[:2]) for src in GOOD_SOURCES]
        assert [q for _, q in pairs] == expected

    def test_missing_label_rejected(self, corpus, midi_dir):
        labels = load_labels(midi_dir / "labels.json")
        del labels["e2_0.mid"]
        with pytest.raises(LabelMismatch, match="no label for"):
            labeled_sequences(corpus, labels)

    def test_unknown_source_rejected(self, corpus, midi_dir):
        labels = load_labels(midi_dir / "labels.json")
        labels["ghost.mid"] = EmotionQuadrant.E1
        with pytest.raises(LabelMismatch, match="unknown sources"):
            labeled_sequences(corpus, labels)

    def test_label_file_must_be_object(self, tmp_path):
        (tmp_path / "l.json").write_text('["E1"]')
        with pytest.raises(LabelMismatch, match="JSON object"):
            load_labels(tmp_path / "l.json")

    def test_bad_quadrant_name_rejected(self, tmp_path):
        (tmp_path / "l.json").write_text('{"x.mid": "E9"}')
        with pytest.raises(LabelMismatch):
            load_labels(tmp_path / "l.json")


@pytest.fixture(scope="module")
def workspace(midi_dir, tmp_path_factory):
    """Corpus and models built once through the CLI, shared by the tests below."""
    root = tmp_path_factory.mktemp("cli")
    corpus = root / "corpus.json"
    models = root / "models"
    with warnings.catch_warnings(record=True):
        warnings.simplefilter("always")
        assert cli.main(["ingest", str(midi_dir), "--out", str(corpus)]) == 0
    labels = str(midi_dir / "labels.json")
    assert cli.main(["train", str(corpus), "--labels", labels, "--out", str(models)]) == 0
    return root, corpus, models


QUICK = ["--max-bars", "2", "--max-tokens", "120", "--count", "1", "--seed", "4"]


def generate(models: Path, out: Path, *extra: str) -> int:
    args = ["generate", "--models", str(models), "--out", str(out), *QUICK, *extra]
    return cli.main(args)


class TestTrainCommand:
    def test_writes_model_files(self, workspace):
        _, _, models = workspace
        names = {p.name for p in models.iterdir()}
        assert names == {"policy.json", "classifier.json", "discriminator.json", "conditional.json"}

    def test_no_labels_skips_conditional(self, workspace, tmp_path):
        _, corpus, _ = workspace
        assert cli.main(["train", str(corpus), "--out", str(tmp_path / "m")]) == 0
        names = {p.name for p in (tmp_path / "m").iterdir()}
        assert names == {"policy.json", "classifier.json", "discriminator.json"}

    def test_policy_bytes_deterministic(self, workspace, tmp_path):
        _, corpus, models = workspace
        assert cli.main(["train", str(corpus), "--out", str(tmp_path / "m")]) == 0
        assert (tmp_path / "m" / "policy.json").read_bytes() == (models / "policy.json").read_bytes()

    def test_missing_corpus_is_data_error(self, tmp_path):
        assert cli.main(["train", str(tmp_path / "nope.json")]) == 2

    def test_bad_order_is_data_error(self, workspace):
        _, corpus, _ = workspace
        assert cli.main(["train", str(corpus), "--order", "9", "--out", "unused"]) == 2


class TestGenerateCommand:
    @pytest.mark.parametrize("method", cli.METHODS)
    def test_outputs_per_method(self, workspace, tmp_path, method):
        _, _, models = workspace
        out = tmp_path / method
        extra = ["--method", method, "--budget", "4"]
        if method == "sbbs":
            extra += ["--beam", "2", "--top-k", "4"]
        assert generate(models, out, *extra) == 0
        manifest = json.loads((out / "manifest.json").read_text())
        assert manifest["method"] == method
        assert len(manifest["pieces"]) == 4
        for quadrant in ("E1", "E2", "E3", "E4"):
            assert (out / f"{quadrant}_000.mid").exists()
            assert (out / f"{quadrant}_000.tokens.txt").exists()
            assert not (out / f"{quadrant}_000.trace.json").exists()
        for entry in manifest["pieces"]:
            assert VOCAB.validate_ids(entry["token_ids"], require_complete=True) is None

    def test_runs_byte_identical(self, workspace, tmp_path):
        _, _, models = workspace
        first, second = tmp_path / "r1", tmp_path / "r2"
        for out in (first, second):
            assert generate(models, out, "--method", "puct", "--budget", "4") == 0
        assert (first / "manifest.json").read_bytes() == (second / "manifest.json").read_bytes()
        for mid in sorted(first.glob("*.mid")):
            assert mid.read_bytes() == (second / mid.name).read_bytes()

    def test_traces_written_on_request(self, workspace, tmp_path):
        _, _, models = workspace
        out = tmp_path / "tr"
        assert generate(models, out, "--emotion", "e2", "--budget", "4", "--traces") == 0
        trace = json.loads((out / "E2_000.trace.json").read_text())
        assert trace["method"] == "puct"
        assert trace["records"][0]["root_visits"] == 5

    def test_single_emotion_manifest(self, workspace, tmp_path):
        _, _, models = workspace
        out = tmp_path / "single"
        assert generate(models, out, "--method", "topp", "--emotion", "e3") == 0
        manifest = json.loads((out / "manifest.json").read_text())
        assert [p["emotion"] for p in manifest["pieces"]] == ["E3"]
        assert set(manifest["aggregates"]) == {"E3"}

    def test_cs_untrained_emotion_is_data_error(self, workspace, midi_dir, tmp_path, capsys):
        _, corpus, _ = workspace
        partial = {name: "E1" if name[1] in "12" else "E2" for name in GOOD_SOURCES}
        labels = tmp_path / "labels.json"
        labels.write_text(json.dumps(partial))
        models = tmp_path / "m"
        assert cli.main(["train", str(corpus), "--labels", str(labels), "--out", str(models)]) == 0
        assert generate(models, tmp_path / "out", "--method", "cs", "--emotion", "e2") == 0
        assert generate(models, tmp_path / "out2", "--method", "cs", "--emotion", "e3") == 2
        assert "E3" in capsys.readouterr().err

    def test_missing_models_dir_is_data_error(self, tmp_path):
        assert generate(tmp_path / "nowhere", tmp_path / "out") == 2

    def test_bad_emotion_name_is_data_error(self, workspace, tmp_path):
        _, _, models = workspace
        assert generate(models, tmp_path / "out", "--emotion", "e5") == 2

    def test_unknown_method_is_usage_error(self, workspace, tmp_path):
        _, _, models = workspace
        with pytest.raises(SystemExit) as info:
            generate(models, tmp_path / "out", "--method", "beam")
        assert info.value.code == 1


class TestConfigFile:
    def test_sections_merge_with_flag_priority(self, workspace, tmp_path):
        _, _, models = workspace
        config = tmp_path / "cfg.yaml"
        config.write_text("common:\n  seed: 9\n  max_bars: 2\npuct:\n  budget: 4\n")
        flagged = tmp_path / "flagged"
        args = ["generate", "--models", str(models), "--config", str(config),
                "--emotion", "e1", "--max-tokens", "120", "--seed", "4",
                "--out", str(flagged)]
        assert cli.main(args) == 0
        manifest = json.loads((flagged / "manifest.json").read_text())
        assert manifest["seed"] == 4
        assert manifest["config"]["budget"] == 4
        assert manifest["config"]["max_bars"] == 2
        baseline = tmp_path / "baseline"
        assert generate(models, baseline, "--emotion", "e1", "--budget", "4") == 0
        assert (flagged / "E1_000.mid").read_bytes() == (baseline / "E1_000.mid").read_bytes()

    def test_unknown_section_is_data_error(self, workspace, tmp_path, capsys):
        _, _, models = workspace
        config = tmp_path / "cfg.yaml"
        config.write_text("mcts:\n  budget: 4\n")
        args = ["generate", "--models", str(models), "--config", str(config),
                "--out", str(tmp_path / "out")]
        assert cli.main(args) == 2
        assert "mcts" in capsys.readouterr().err

    def test_unknown_key_is_data_error(self, workspace, tmp_path, capsys):
        _, _, models = workspace
        config = tmp_path / "cfg.yaml"
        config.write_text("puct:\n  temperature: 2\n")
        args = ["generate", "--models", str(models), "--config", str(config),
                "--out", str(tmp_path / "out")]
        assert cli.main(args) == 2
        assert "temperature" in capsys.readouterr().err

    def test_unparseable_yaml_is_data_error(self, workspace, tmp_path):
        _, _, models = workspace
        config = tmp_path / "cfg.yaml"
        config.write_text("common: [unclosed\n")
        args = ["generate", "--models", str(models), "--config", str(config),
                "--out", str(tmp_path / "out")]
        assert cli.main(args) == 2


@pytest.fixture(scope="module")
def run_dir(workspace, tmp_path_factory):
    _, _, models = workspace
    out = tmp_path_factory.mktemp("run")
    assert generate(models, out, "--method", "topp") == 0
    return out


class TestEvaluateCommand:
    def test_directory_mode_prints_table(self, run_dir, capsys):
        assert cli.main(["evaluate", str(run_dir)]) == 0
        lines = capsys.readouterr().out.splitlines()
        assert lines[0].split() == ["file", "PR", "NPC", "POLY"]
        assert len(lines) == 5
        assert lines[1].startswith("E1_000.mid")

    def test_directory_without_midi_is_data_error(self, tmp_path):
        assert cli.main(["evaluate", str(tmp_path)]) == 2

    def test_manifest_mode_recomputes(self, run_dir, tmp_path, capsys):
        report_path = tmp_path / "report.json"
        args = ["evaluate", str(run_dir / "manifest.json"), "--out", str(report_path)]
        assert cli.main(args) == 0
        out = capsys.readouterr().out
        assert "topp" in out and "E1" in out and "E4" in out
        report = json.loads(report_path.read_text())
        assert report["method"] == "topp"
        manifest = json.loads((run_dir / "manifest.json").read_text())
        assert report["aggregates"] == manifest["aggregates"]

    def test_stale_manifest_is_data_error(self, run_dir, tmp_path, capsys):
        manifest = json.loads((run_dir / "manifest.json").read_text())
        manifest["pieces"][0]["metrics"]["pitch_range"] += 1.0
        stale = tmp_path / "manifest.json"
        stale.write_text(json.dumps(manifest, sort_keys=True, indent=2) + "\n")
        assert cli.main(["evaluate", str(stale)]) == 2
        assert "pitch_range" in capsys.readouterr().err

    def test_schema_violation_is_data_error(self, tmp_path):
        bad = tmp_path / "manifest.json"
        bad.write_text('{"format": "run-manifest-v1"}')
        assert cli.main(["evaluate", str(bad)]) == 2


class TestCompareCommand:
    def test_two_manifest_table(self, workspace, run_dir, tmp_path, capsys):
        _, _, models = workspace
        other = tmp_path / "puct"
        assert generate(models, other, "--method", "puct", "--budget", "4") == 0
        capsys.readouterr()
        report_path = tmp_path / "merged.json"
        args = ["compare", str(run_dir / "manifest.json"),
                str(other / "manifest.json"), "--out", str(report_path)]
        assert cli.main(args) == 0
        out = capsys.readouterr().out
        assert "topp" in out and "puct" in out
        assert out.splitlines()[0].split() == ["method", "metric", "E1", "E2", "E3", "E4"]
        report = json.loads(report_path.read_text())
        assert set(report) == {"topp", "puct"}
        assert set(report["puct"]) == {"E1", "E2", "E3", "E4"}

    def test_duplicate_method_labels_disambiguated(self, run_dir, capsys):
        args = ["compare", str(run_dir / "manifest.json"), str(run_dir / "manifest.json")]
        assert cli.main(args) == 0
        assert "topp:manifest" in capsys.readouterr().out

    def test_incomplete_manifest_is_data_error(self, workspace, tmp_path, capsys):
        _, _, models = workspace
        partial = tmp_path / "partial"
        assert generate(models, partial, "--method", "topp", "--emotion", "e1") == 0
        args = ["compare", str(partial / "manifest.json"), str(partial / "manifest.json")]
        assert cli.main(args) == 2
        assert "E2" in capsys.readouterr().err


class TestMainSurface:
    def test_no_command_is_usage_error(self):
        with pytest.raises(SystemExit) as info:
            cli.main([])
        assert info.value.code == 1

    def test_version_flag(self, capsys):
        with pytest.raises(SystemExit) as info:
            cli.main(["--version"])
        assert info.value.code == 0
        assert "emodecode" in capsys.readouterr().out

    def test_missing_path_is_data_error(self, tmp_path, capsys):
        assert cli.main(["ingest", str(tmp_path / "absent")]) == 2
        assert "error:" in capsys.readouterr().err

    def test_debug_logging_smoke(self, workspace, tmp_path, monkeypatch):
        _, corpus, _ = workspace
        monkeypatch.setenv("EMODECODE_LOG", "DEBUG")
        assert cli.main(["train", str(corpus), "--out", str(tmp_path / "m")]) == 0
