"""End-to-end subcommand coverage at a tiny training budget."""

import json

import pytest

from tabletext.cli import main
from tabletext.data import read_corpus_dir
from tabletext.model import Model, ModelConfig
from tabletext.training import save_model_checkpoint

TINY = ["--d-word", "6", "--d-field", "6", "--d-hidden", "8", "--d-decoder", "8",
        "--batch-size", "8"]


@pytest.fixture(scope="module")
def trained(tmp_path_factory):
    """One synthetic corpus directory plus a one-epoch checkpoint."""
    root = tmp_path_factory.mktemp("cli")
    data, run = root / "data", root / "run"
    assert main(["synth", "--preset", "order-copy", "--size", "60",
                 "--seed", "3", "--out-dir", str(data)]) == 0
    assert main(["train", "--data", str(data), "--out", str(run),
                 "--epochs", "1", *TINY]) == 0
    return data, run


def test_synth_writes_loadable_directory(tmp_path):
    out = tmp_path / "corpus"
    assert main(["synth", "--preset", "field-subsets", "--size", "40",
                 "--seed", "9", "--out-dir", str(out)]) == 0
    loaded = read_corpus_dir(out)
    assert len(loaded.train) == 32 and len(loaded.valid) == 4 and len(loaded.test) == 4
    assert loaded.truth is not None and "name" in loaded.truth
    assert (out / "spec.json").exists()


def test_synth_rejects_bad_spec_file(tmp_path):
    bad = tmp_path / "spec.json"
    bad.write_text('{"fields": 5}')
    assert main(["synth", "--spec", str(bad), "--out-dir", str(tmp_path / "c")]) == 3


def test_prepare_roundtrip(tmp_path):
    tables = tmp_path / "tables.txt"
    texts = tmp_path / "texts.txt"
    rows, sents = [], []
    for i in range(10):
        rows.append(f"name_1:Person{i} name_2:Green city_1:selby job_1:none")
        sents.append(f"person{i} green lives in selby .")
    tables.write_text("\n".join(rows) + "\n")
    texts.write_text("\n".join(sents) + "\n")
    out = tmp_path / "corpus"
    assert main(["prepare", "--tables", str(tables), "--texts", str(texts),
                 "--out-dir", str(out), "--word-cap", "20",
                 "--min-field-count", "1"]) == 0
    loaded = read_corpus_dir(out)
    assert len(loaded.train) == 8 and len(loaded.valid) == 1 and len(loaded.test) == 1
    assert loaded.truth is None
    # the all-"none" job field was dropped on ingest
    assert "job" not in loaded.vocab.field_to_id
    assert loaded.train[0].table.raw_tokens[-1] == "selby"


def test_prepare_rejects_bad_split(tmp_path):
    (tmp_path / "t.txt").write_text("name_1:a\n")
    (tmp_path / "s.txt").write_text("a .\n")
    code = main(["prepare", "--tables", str(tmp_path / "t.txt"),
                 "--texts", str(tmp_path / "s.txt"),
                 "--out-dir", str(tmp_path / "c"),
                 "--split", "0.5", "0.4", "0.2"])
    assert code == 2


def test_train_writes_checkpoints_and_history(trained):
    _, run = trained
    assert (run / "model.best").exists()
    assert (run / "model.last").exists()
    blob = json.loads((run / "history.json").read_text())
    assert len(blob["history"]) == 1
    assert 0.0 <= blob["best_val_bleu"] <= 1.0


def test_train_resume_continues_epoch_count(trained):
    data, run = trained
    assert main(["train", "--data", str(data), "--out", str(run),
                 "--epochs", "2", "--resume", *TINY]) == 0
    blob = json.loads((run / "history.json").read_text())
    assert [h["epoch"] for h in blob["history"]] == [1]


def test_generate_then_evaluate(trained, tmp_path):
    data, run = trained
    hyps = tmp_path / "hyps.txt"
    assert main(["generate", "--model", str(run / "model.best"),
                 "--vocab", str(data / "vocab.json"),
                 "--records", str(data / "test.jsonl"),
                 "--out", str(hyps)]) == 0
    assert len(hyps.read_text().splitlines()) == 6
    scores = tmp_path / "scores.json"
    assert main(["evaluate", "--hyps", str(hyps),
                 "--refs-records", str(data / "test.jsonl"),
                 "--json", str(scores)]) == 0
    blob = json.loads(scores.read_text())
    assert set(blob) == {"bleu4", "rouge4", "nist4", "segments"}
    assert blob["segments"] == 6


def test_generate_rejects_mismatched_vocab(trained, tmp_path):
    data, run = trained
    other = tmp_path / "other"
    assert main(["synth", "--preset", "field-subsets", "--size", "40",
                 "--out-dir", str(other)]) == 0
    code = main(["generate", "--model", str(run / "model.best"),
                 "--vocab", str(other / "vocab.json"),
                 "--records", str(data / "test.jsonl")])
    assert code == 2


def test_evaluate_missing_file_is_data_error(tmp_path):
    code = main(["evaluate", "--hyps", str(tmp_path / "nope.txt"),
                 "--refs", str(tmp_path / "nope.txt")])
    assert code == 3


def test_ablate_writes_grid_json(trained, tmp_path):
    data, _ = trained
    out = tmp_path / "grid.json"
    assert main(["ablate", "--data", str(data), "--out", str(out),
                 "--epochs", "1", *TINY]) == 0
    blob = json.loads(out.read_text())
    assert len(blob["runs"]) == 6
    by_label = {r["label"]: r for r in blob["runs"]}
    assert "link_rank_fraction" in by_label["hybrid+copy"]
    assert "link_matrix" not in by_label["content+copy"]
    assert blob["effective_links"]["count"] <= blob["effective_links"]["total"]


def test_sweep_writes_twelve_runs(trained, tmp_path):
    data, _ = trained
    out = tmp_path / "sweep.json"
    assert main(["sweep", "--data", str(data), "--out", str(out),
                 "--epochs", "1", *TINY]) == 0
    blob = json.loads(out.read_text())
    labels = [r["label"] for r in blob["runs"]]
    assert len(labels) == 12 and labels[-1] == "adaptive"
    assert labels[0] == "fixed-0.0" and labels[10] == "fixed-1.0"


def test_export_attention_payload(trained, tmp_path):
    data, run = trained
    out = tmp_path / "trace.json"
    assert main(["export-attention", "--model", str(run / "model.best"),
                 "--vocab", str(data / "vocab.json"),
                 "--records", str(data / "test.jsonl"),
                 "--index", "2", "--out", str(out)]) == 0
    blob = json.loads(out.read_text())
    assert {"positions", "output", "steps", "reference"} <= set(blob)
    for step in blob["steps"]:
        assert len(step["used"]) == len(blob["positions"])

    code = main(["export-attention", "--model", str(run / "model.best"),
                 "--vocab", str(data / "vocab.json"),
                 "--records", str(data / "test.jsonl"), "--index", "99"])
    assert code == 2


def test_grad_check_pass_and_fail_paths():
    args = ["grad-check", "--examples", "2", "--sample", "4", "--seed", "1"]
    assert main(args) == 0
    assert main(args + ["--tolerance", "1e-18"]) == 4


def test_checkpoint_refuses_garbage(tmp_path):
    bad = tmp_path / "model.best"
    bad.write_bytes(b"garbage")
    code = main(["generate", "--model", str(bad),
                 "--vocab", str(tmp_path / "vocab.json"),
                 "--records", str(tmp_path / "r.jsonl")])
    assert code == 2


def test_unknown_arguments_exit_two(capsys):
    with pytest.raises(SystemExit) as err:
        main(["train", "--data", "x", "--out", "y", "--bogus"])
    assert err.value.code == 2
    capsys.readouterr()


def test_vocab_mismatch_message_names_both_sizes(trained, tmp_path, capsys):
    data, run = trained
    model = Model(ModelConfig(n_words=5054, n_fields=9, d_word=4, d_field=4,
                              d_hidden=5, d_decoder=5))
    ckpt = tmp_path / "model.best"
    save_model_checkpoint(ckpt, model)
    code = main(["generate", "--model", str(ckpt),
                 "--vocab", str(data / "vocab.json"),
                 "--records", str(data / "test.jsonl")])
    assert code == 2
    assert "5054" in capsys.readouterr().err
