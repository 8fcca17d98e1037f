"""Command-line entry point.

Subcommands cover the whole workflow: turn raw paired files or a
synthetic recipe into a corpus directory, train on it, generate from a
checkpoint, score outputs, run the ablation grid and the gate sweep,
export attention traces, and finite-difference-check the gradients.

Exit codes: 0 success, 2 bad configuration or usage, 3 bad data,
4 numerical failure.
"""

from __future__ import annotations

import argparse
import json
import logging
import sys
from pathlib import Path

from .data import (CorpusSpec, DataError, PRESETS, Vocabularies,
                   build_vocabularies, generate_synthetic_corpus,
                   ingest_paired_files, normalize_token, parse_table,
                   read_corpus_dir, read_records, write_split_dir)
from .decoder import greedy_decode
from .experiments import (ExperimentConfig, attention_payload, effective_links,
                          format_results, link_rank_fraction, run_ablation,
                          run_gate_sweep)
from .metrics import evaluate_corpus, read_token_lines
from .model import (ATTENTION_MODES, COPY_SCORES, GATE_MODES, Model,
                    ModelConfig)
from .training import (NumericalError, TrainConfig, load_model_checkpoint,
                       model_grad_check, train)

logger = logging.getLogger("tabletext")


# ---- shared argument groups -------------------------------------------


def _add_model_args(p: argparse.ArgumentParser) -> None:
    g = p.add_argument_group("model")
    g.add_argument("--d-word", type=int, default=32)
    g.add_argument("--d-field", type=int, default=32)
    g.add_argument("--d-hidden", type=int, default=64)
    g.add_argument("--d-decoder", type=int, default=64)
    g.add_argument("--attention", choices=ATTENTION_MODES, default="hybrid")
    g.add_argument("--no-copy", action="store_true",
                   help="disable copying from the table")
    g.add_argument("--copy-score", choices=COPY_SCORES, default="gated")
    g.add_argument("--gate", choices=GATE_MODES, default="adaptive")
    g.add_argument("--fixed-gate", type=float, default=0.5,
                   help="blend weight when --gate fixed")
    g.add_argument("--max-decode-len", type=int, default=40)
    g.add_argument("--seed", type=int, default=0)


def _add_train_args(p: argparse.ArgumentParser) -> None:
    g = p.add_argument_group("training")
    g.add_argument("--epochs", type=int, default=5)
    g.add_argument("--batch-size", type=int, default=16)
    g.add_argument("--learning-rate", type=float, default=1e-3)
    g.add_argument("--l2", type=float, default=1e-5)


def _model_config(args, vocab: Vocabularies) -> ModelConfig:
    return ModelConfig(
        n_words=vocab.n_words, n_fields=vocab.n_fields,
        d_word=args.d_word, d_field=args.d_field,
        d_hidden=args.d_hidden, d_decoder=args.d_decoder,
        attention_mode=args.attention, copy_enabled=not args.no_copy,
        copy_score=args.copy_score, gate_mode=args.gate,
        fixed_gate=args.fixed_gate, seed=args.seed,
        max_decode_len=args.max_decode_len)


def _experiment_config(args) -> ExperimentConfig:
    return ExperimentConfig(
        d_word=args.d_word, d_field=args.d_field, d_hidden=args.d_hidden,
        d_decoder=args.d_decoder, epochs=args.epochs,
        batch_size=args.batch_size, learning_rate=args.learning_rate,
        l2_coeff=args.l2, seed=args.seed, workers=args.workers,
        copy_enabled=not getattr(args, "no_copy", False),
        archive_dir=args.archive)


# ---- subcommands -------------------------------------------------------


def _cmd_prepare(args) -> int:
    records = ingest_paired_files(args.tables, args.texts)
    fractions = args.split
    if len(fractions) != 3 or abs(sum(fractions) - 1.0) > 1e-9:
        raise ValueError("--split needs three fractions summing to 1")
    n = len(records)
    n_train = int(round(n * fractions[0]))
    n_valid = int(round(n * fractions[1]))
    train_r = records[:n_train]
    valid_r = records[n_train:n_train + n_valid]
    test_r = records[n_train + n_valid:]
    if not train_r or not valid_r or not test_r:
        raise DataError(f"{n} records cannot fill all three splits")
    vocab = build_vocabularies(train_r, args.word_cap, args.min_field_count)
    write_split_dir(args.out_dir, train_r, valid_r, test_r, vocab)
    logger.info("wrote %d/%d/%d records, %d words, %d fields to %s",
                len(train_r), len(valid_r), len(test_r),
                vocab.n_words, vocab.n_fields, args.out_dir)
    return 0


def _cmd_synth(args) -> int:
    if args.spec:
        spec = CorpusSpec.from_json(json.loads(Path(args.spec).read_text()))
        if args.size:
            spec.size = args.size
        spec.seed = args.seed if args.seed is not None else spec.seed
    else:
        spec = PRESETS[args.preset](size=args.size or 2000,
                                    seed=13 if args.seed is None else args.seed)
    corpus = generate_synthetic_corpus(spec)
    write_split_dir(args.out_dir, corpus.train_records, corpus.valid_records,
                    corpus.test_records, corpus.vocab,
                    spec_json=spec.to_json(), truth=corpus.truth)
    logger.info("wrote %d/%d/%d records, %d words, %d fields to %s",
                len(corpus.train_records), len(corpus.valid_records),
                len(corpus.test_records), corpus.vocab.n_words,
                corpus.vocab.n_fields, args.out_dir)
    return 0


def _cmd_train(args) -> int:
    data = read_corpus_dir(args.data)
    model = Model(_model_config(args, data.vocab))
    tcfg = TrainConfig(epochs=args.epochs, batch_size=args.batch_size,
                       learning_rate=args.learning_rate, l2_coeff=args.l2,
                       shuffle_seed=args.seed, checkpoint_dir=args.out)
    resume = str(Path(args.out) / "model.last") if args.resume else None
    result = train(model, data.train, data.valid, data.vocab, tcfg,
                   resume_from=resume)
    history = [{"epoch": s.epoch, "train_nll_per_token": s.train_nll_per_token,
                "val_bleu": s.val_bleu, "seconds": s.seconds}
               for s in result.history]
    (Path(args.out) / "history.json").write_text(json.dumps({
        "history": history, "best_val_bleu": result.best_val_bleu,
        "best_epoch": result.best_epoch}, indent=2))
    print(f"best validation BLEU-4 {100 * result.best_val_bleu:.2f} "
          f"at epoch {result.best_epoch}")
    return 0


def _load_model_and_vocab(model_path, vocab_path) -> tuple[Model, Vocabularies]:
    model, _ = load_model_checkpoint(model_path)
    vocab = Vocabularies.load(vocab_path)
    if model.config.n_words != vocab.n_words or model.config.n_fields != vocab.n_fields:
        raise ValueError(
            f"vocabulary sizes {vocab.n_words}/{vocab.n_fields} do not match "
            f"the checkpoint ({model.config.n_words}/{model.config.n_fields})")
    return model, vocab


def _cmd_generate(args) -> int:
    model, vocab = _load_model_and_vocab(args.model, args.vocab)
    records = read_records(args.records)
    lines = []
    for rec in records:
        table = parse_table(rec["table"], vocab)
        out = greedy_decode(model, table, vocab, max_len=args.max_len)
        lines.append(" ".join(out.tokens))
    text = "\n".join(lines) + "\n"
    if args.out:
        Path(args.out).write_text(text, encoding="utf-8")
        logger.info("wrote %d sentences to %s", len(lines), args.out)
    else:
        sys.stdout.write(text)
    return 0


def _cmd_evaluate(args) -> int:
    hyps = read_token_lines(args.hyps)
    if args.refs_records:
        refs = [[normalize_token(str(t)) for t in rec["target"]]
                for rec in read_records(args.refs_records)]
    else:
        refs = read_token_lines(args.refs)
    report = evaluate_corpus(hyps, refs)
    print(report)
    if args.json:
        Path(args.json).write_text(json.dumps({
            "bleu4": report.bleu4, "rouge4": report.rouge4,
            "nist4": report.nist4, "segments": report.segments}, indent=2))
    return 0


def _grid_json(results, data) -> dict:
    runs = []
    for r in results:
        entry = {"label": r.label, "attention_mode": r.attention_mode,
                 "copy_enabled": r.copy_enabled, "gate_mode": r.gate_mode,
                 "fixed_gate": r.fixed_gate, "diverged": r.diverged,
                 "error": r.error, "best_val_bleu": r.best_val_bleu,
                 "seed": r.seed, "config_hash": r.config_hash}
        if r.report is not None:
            entry.update(bleu4=r.report.bleu4, rouge4=r.report.rouge4,
                         nist4=r.report.nist4)
        if r.link_matrix is not None:
            entry["link_matrix"] = r.link_matrix.tolist()
            if data.truth is not None:
                entry["link_rank_fraction"] = link_rank_fraction(
                    r.link_matrix, data.truth, data.vocab.field_to_id)
        runs.append(entry)
    seen = effective_links(data.train, data.vocab.n_fields)
    return {"runs": runs,
            "effective_links": {"count": int(seen.sum()),
                                "total": int(seen.size),
                                "matrix": seen.tolist()}}


def _cmd_ablate(args) -> int:
    data = read_corpus_dir(args.data)
    results = run_ablation(data.train, data.valid, data.test, data.vocab,
                           _experiment_config(args))
    print(format_results(results))
    if args.out:
        Path(args.out).write_text(json.dumps(_grid_json(results, data), indent=2))
        logger.info("wrote %s", args.out)
    return 0


def _cmd_sweep(args) -> int:
    data = read_corpus_dir(args.data)
    results = run_gate_sweep(data.train, data.valid, data.test, data.vocab,
                             _experiment_config(args))
    print(format_results(results))
    if args.out:
        Path(args.out).write_text(json.dumps(_grid_json(results, data), indent=2))
        logger.info("wrote %s", args.out)
    return 0


def _cmd_export_attention(args) -> int:
    model, vocab = _load_model_and_vocab(args.model, args.vocab)
    records = read_records(args.records)
    if not 0 <= args.index < len(records):
        raise ValueError(f"--index {args.index} outside 0..{len(records) - 1}")
    rec = records[args.index]
    payload = attention_payload(model, rec["table"], vocab,
                                reference=rec.get("target"))
    text = json.dumps(payload, indent=2)
    if args.out:
        Path(args.out).write_text(text)
        logger.info("wrote %s", args.out)
    else:
        print(text)
    return 0


def _cmd_grad_check(args) -> int:
    spec = PRESETS["order-copy"](size=args.examples * 4, seed=args.seed)
    corpus = generate_synthetic_corpus(spec)
    cfg = ModelConfig(n_words=corpus.vocab.n_words, n_fields=corpus.vocab.n_fields,
                      d_word=args.d_word, d_field=args.d_field,
                      d_hidden=args.d_hidden, d_decoder=args.d_decoder,
                      attention_mode=args.attention, copy_enabled=not args.no_copy,
                      copy_score=args.copy_score, gate_mode=args.gate,
                      fixed_gate=args.fixed_gate, seed=args.seed)
    model = Model(cfg)
    report = model_grad_check(model, corpus.train[:args.examples], corpus.vocab,
                              l2_coeff=args.l2, step=args.step,
                              sample=args.sample, seed=args.seed)
    print(report)
    if report.max_rel_error >= args.tolerance:
        raise NumericalError(
            f"gradient check failed: max relative error {report.max_rel_error:.3e} "
            f"at {report.worst_parameter}[{report.worst_index}] "
            f"(tolerance {args.tolerance:.1e})")
    print(f"OK: max relative error {report.max_rel_error:.3e} "
          f"< {args.tolerance:.1e}")
    return 0


# ---- parser ------------------------------------------------------------


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="tabletext",
        description="Order-planning table-to-text generation.")
    parser.add_argument("-v", "--verbose", action="store_true",
                        help="debug-level logging")
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("prepare", help="convert paired table/sentence files "
                                       "into a corpus directory")
    p.add_argument("--tables", required=True)
    p.add_argument("--texts", required=True)
    p.add_argument("--out-dir", required=True)
    p.add_argument("--word-cap", type=int, default=2000)
    p.add_argument("--min-field-count", type=int, default=2)
    p.add_argument("--split", type=float, nargs=3, default=[0.8, 0.1, 0.1],
                   metavar=("TRAIN", "VALID", "TEST"))
    p.set_defaults(func=_cmd_prepare)

    p = sub.add_parser("synth", help="generate a synthetic corpus directory")
    p.add_argument("--preset", choices=sorted(PRESETS), default="order-copy")
    p.add_argument("--spec", help="corpus spec JSON (overrides --preset)")
    p.add_argument("--size", type=int, default=None)
    p.add_argument("--seed", type=int, default=None)
    p.add_argument("--out-dir", required=True)
    p.set_defaults(func=_cmd_synth)

    p = sub.add_parser("train", help="train a model on a corpus directory")
    p.add_argument("--data", required=True)
    p.add_argument("--out", required=True, help="checkpoint directory")
    p.add_argument("--resume", action="store_true",
                   help="continue from OUT/model.last")
    _add_model_args(p)
    _add_train_args(p)
    p.set_defaults(func=_cmd_train)

    p = sub.add_parser("generate", help="greedy-decode tables from a checkpoint")
    p.add_argument("--model", required=True, help="checkpoint file")
    p.add_argument("--vocab", required=True, help="vocab.json")
    p.add_argument("--records", required=True, help="JSONL records")
    p.add_argument("--out", help="output file (default stdout)")
    p.add_argument("--max-len", type=int, default=None)
    p.set_defaults(func=_cmd_generate)

    p = sub.add_parser("evaluate", help="score hypotheses against references")
    p.add_argument("--hyps", required=True, help="one tokenized sentence per line")
    ref = p.add_mutually_exclusive_group(required=True)
    ref.add_argument("--refs", help="one tokenized sentence per line")
    ref.add_argument("--refs-records", help="JSONL records; targets are references")
    p.add_argument("--json", help="also write scores as JSON")
    p.set_defaults(func=_cmd_evaluate)

    p = sub.add_parser("ablate", help="train the attention-mode x copy grid")
    p.add_argument("--data", required=True)
    p.add_argument("--out", help="results JSON")
    p.add_argument("--archive", help="directory for per-run checkpoints "
                                     "and config records")
    p.add_argument("--workers", type=int, default=1)
    _add_model_args(p)
    _add_train_args(p)
    p.set_defaults(func=_cmd_ablate)

    p = sub.add_parser("sweep", help="train fixed blend weights plus the "
                                     "adaptive gate")
    p.add_argument("--data", required=True)
    p.add_argument("--out", help="results JSON")
    p.add_argument("--archive", help="directory for per-run checkpoints "
                                     "and config records")
    p.add_argument("--no-copy", action="store_true",
                   help="run the sweep with the copy path off")
    p.add_argument("--workers", type=int, default=1)
    _add_model_args(p)
    _add_train_args(p)
    p.set_defaults(func=_cmd_sweep)

    p = sub.add_parser("export-attention", help="decode one record and dump "
                                                "its attention trace as JSON")
    p.add_argument("--model", required=True)
    p.add_argument("--vocab", required=True)
    p.add_argument("--records", required=True)
    p.add_argument("--index", type=int, default=0)
    p.add_argument("--out")
    p.set_defaults(func=_cmd_export_attention)

    p = sub.add_parser("grad-check", help="finite-difference check on a tiny "
                                          "synthetic problem")
    p.add_argument("--examples", type=int, default=3)
    p.add_argument("--sample", type=int, default=8,
                   help="entries checked per parameter")
    p.add_argument("--step", type=float, default=1e-5)
    p.add_argument("--tolerance", type=float, default=1e-6)
    p.add_argument("--l2", type=float, default=1e-5)
    _add_model_args(p)
    # tiny dimensions by default: finite differences on the full-size
    # model would take minutes for no extra assurance
    p.set_defaults(func=_cmd_grad_check, d_word=8, d_field=6, d_hidden=10,
                   d_decoder=10)

    return parser


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    logging.basicConfig(
        level=logging.DEBUG if args.verbose else logging.INFO,
        format="%(levelname)s %(message)s", stream=sys.stderr)
    try:
        return args.func(args)
    except DataError as exc:
        print(f"data error: {exc}", file=sys.stderr)
        return 3
    except NumericalError as exc:
        print(f"numerical error: {exc}", file=sys.stderr)
        return 4
    except FileNotFoundError as exc:
        print(f"data error: {exc}", file=sys.stderr)
        return 3
    except ValueError as exc:
        print(f"configuration error: {exc}", file=sys.stderr)
        return 2


if __name__ == "__main__":
    sys.exit(main())
