"""Experiment harness: ablation grid, gate sweep, link diagnostics.

Every run in a grid shares one ExperimentConfig (sizes, budget, seed)
and differs only in the switches under study. Runs are independent and
dispatched through a worker function, so a grid can fan out over
processes where more than one core is available; the default is serial.
A run that aborts on a numerical error is reported as diverged and the
rest of the grid still completes.
"""

from __future__ import annotations

import hashlib
import json
import logging
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, replace
from pathlib import Path

import numpy as np

from .data import UNK, UNKNOWN_FIELD, Example, Vocabularies, parse_table
from .decoder import greedy_decode
from .metrics import EvalReport, evaluate_corpus
from .model import Model, ModelConfig
from .training import NumericalError, TrainConfig, decode_corpus, train

logger = logging.getLogger("tabletext")


@dataclass
class ExperimentConfig:
    """Model sizes and training budget shared by every run in a grid."""

    d_word: int = 32
    d_field: int = 32
    d_hidden: int = 64
    d_decoder: int = 64
    epochs: int = 5
    batch_size: int = 16
    learning_rate: float = 1e-3
    l2_coeff: float = 1e-5
    seed: int = 0
    workers: int = 1
    copy_enabled: bool = True      # sweep runs only; the grid sets it per cell
    archive_dir: str | None = None # per-run checkpoints + config records

    def model_config(self, vocab: Vocabularies, **overrides) -> ModelConfig:
        cfg = ModelConfig(n_words=vocab.n_words, n_fields=vocab.n_fields,
                          d_word=self.d_word, d_field=self.d_field,
                          d_hidden=self.d_hidden, d_decoder=self.d_decoder,
                          seed=self.seed)
        return replace(cfg, **overrides)

    def train_config(self) -> TrainConfig:
        return TrainConfig(epochs=self.epochs, batch_size=self.batch_size,
                           learning_rate=self.learning_rate,
                           l2_coeff=self.l2_coeff, shuffle_seed=self.seed)


@dataclass
class RunResult:
    """One trained-and-scored grid entry."""

    label: str
    attention_mode: str
    copy_enabled: bool
    gate_mode: str
    fixed_gate: float | None
    diverged: bool
    error: str | None
    report: EvalReport | None          # test-split scores; None if diverged
    best_val_bleu: float
    link_matrix: np.ndarray | None     # learned link weights, link/hybrid only
    seed: int = 0
    config_hash: str = ""              # digest of the model+train configs


def _config_hash(mcfg_blob: dict, tcfg_blob: dict) -> str:
    canon = json.dumps({"model": mcfg_blob, "train": tcfg_blob}, sort_keys=True)
    return hashlib.sha256(canon.encode()).hexdigest()[:16]


def _execute_run(payload) -> RunResult:
    """Train one configuration and score it on the test split.

    Top-level function (not a closure) so process pools can ship it.
    With an archive directory set, the cell leaves behind its config
    record (hash, seed, both configs) and its checkpoints, so any cell
    can be re-run or inspected on its own.
    """
    label, mcfg_blob, tcfg_blob, train_ex, valid_ex, test_ex, vocab, archive = payload
    mcfg = ModelConfig.from_json(mcfg_blob)
    tcfg = TrainConfig.from_json(tcfg_blob)
    digest = _config_hash(mcfg_blob, tcfg_blob)
    if archive is not None:
        cell_dir = Path(archive) / label
        cell_dir.mkdir(parents=True, exist_ok=True)
        tcfg = replace(tcfg, checkpoint_dir=str(cell_dir))
        record = {"label": label, "config_hash": digest, "seed": tcfg.shuffle_seed,
                  "model_config": mcfg_blob, "train_config": tcfg_blob}
        (cell_dir / "run.json").write_text(json.dumps(record, indent=2))
    model = Model(mcfg)
    fixed = mcfg.fixed_gate if mcfg.gate_mode == "fixed" else None
    try:
        outcome = train(model, train_ex, valid_ex, vocab, tcfg)
    except NumericalError as exc:
        logger.warning("run %s diverged: %s", label, exc)
        return RunResult(label=label, attention_mode=mcfg.attention_mode,
                         copy_enabled=mcfg.copy_enabled, gate_mode=mcfg.gate_mode,
                         fixed_gate=fixed, diverged=True, error=str(exc),
                         report=None, best_val_bleu=0.0, link_matrix=None,
                         seed=tcfg.shuffle_seed, config_hash=digest)
    hyps = decode_corpus(model, test_ex, vocab)
    report = evaluate_corpus(hyps, [ex.target_tokens for ex in test_ex])
    link = None
    if mcfg.attention_mode in ("link", "hybrid"):
        link = model["link_L"].data.copy()
    logger.info("run %s: %s", label, report)
    return RunResult(label=label, attention_mode=mcfg.attention_mode,
                     copy_enabled=mcfg.copy_enabled, gate_mode=mcfg.gate_mode,
                     fixed_gate=fixed, diverged=False, error=None,
                     report=report, best_val_bleu=outcome.best_val_bleu,
                     link_matrix=link, seed=tcfg.shuffle_seed, config_hash=digest)


def _map_runs(payloads, workers: int) -> list[RunResult]:
    if workers <= 1:
        return [_execute_run(p) for p in payloads]
    with ProcessPoolExecutor(max_workers=workers) as pool:
        return list(pool.map(_execute_run, payloads))


def run_ablation(train_ex: list[Example], valid_ex: list[Example],
                 test_ex: list[Example], vocab: Vocabularies,
                 cfg: ExperimentConfig) -> list[RunResult]:
    """The full switch grid: three attention modes crossed with copying
    on/off, all trained on the same data with the same seed."""
    tcfg_blob = cfg.train_config().to_json()
    payloads = []
    for mode in ("content", "link", "hybrid"):
        for copy_enabled in (True, False):
            label = mode + ("+copy" if copy_enabled else "-copy")
            mcfg = cfg.model_config(vocab, attention_mode=mode,
                                    copy_enabled=copy_enabled)
            payloads.append((label, mcfg.to_json(), tcfg_blob,
                             train_ex, valid_ex, test_ex, vocab,
                             cfg.archive_dir))
    return _map_runs(payloads, cfg.workers)


def run_gate_sweep(train_ex: list[Example], valid_ex: list[Example],
                   test_ex: list[Example], vocab: Vocabularies,
                   cfg: ExperimentConfig) -> list[RunResult]:
    """Hybrid-mode blend study: eleven fixed blend weights 0.0 .. 1.0
    plus one run with the learned adaptive gate. Copying follows
    cfg.copy_enabled: turn it off when the corpus is fully in-vocabulary
    and the attention blend should be the only table reader."""
    tcfg_blob = cfg.train_config().to_json()
    payloads = []
    for value in np.linspace(0.0, 1.0, 11):
        v = round(float(value), 1)
        mcfg = cfg.model_config(vocab, attention_mode="hybrid",
                                gate_mode="fixed", fixed_gate=v,
                                copy_enabled=cfg.copy_enabled)
        payloads.append((f"fixed-{v:.1f}", mcfg.to_json(), tcfg_blob,
                         train_ex, valid_ex, test_ex, vocab, cfg.archive_dir))
    mcfg = cfg.model_config(vocab, attention_mode="hybrid", gate_mode="adaptive",
                            copy_enabled=cfg.copy_enabled)
    payloads.append(("adaptive", mcfg.to_json(), tcfg_blob,
                     train_ex, valid_ex, test_ex, vocab, cfg.archive_dir))
    return _map_runs(payloads, cfg.workers)


def format_results(results: list[RunResult]) -> str:
    """Fixed-width text table of a grid, one row per run."""
    lines = [f"{'run':<12} {'BLEU-4':>7} {'ROUGE-4':>8} {'NIST-4':>7} {'val BLEU':>9}"]
    for r in results:
        if r.diverged:
            lines.append(f"{r.label:<12} {'diverged':>7}")
            continue
        lines.append(f"{r.label:<12} {100 * r.report.bleu4:>7.2f} "
                     f"{100 * r.report.rouge4:>8.2f} {r.report.nist4:>7.2f} "
                     f"{100 * r.best_val_bleu:>9.2f}")
    return "\n".join(lines)


# ---- copy accuracy -----------------------------------------------------


@dataclass
class CopyAccuracy:
    """Positional exact-copy score over out-of-vocabulary targets."""

    accuracy: float     # fraction of OOV reference positions matched exactly
    unk_share: float    # fraction of those positions where the unknown token came out
    n_tokens: int       # OOV reference positions counted


def oov_copy_accuracy(hyps: list[list[str]], refs: list[list[str]],
                      vocab: Vocabularies) -> CopyAccuracy:
    """How much of the uncopyable-without-copying material survives.

    Walks every reference position holding a token outside the word
    vocabulary and checks the hypothesis token at the same position. A
    hypothesis that ends early misses the position. Only models with the
    copy path can score above zero; a vocabulary-only model leaves the
    unknown token (or a guessed in-vocabulary word) at those positions.
    """
    if len(hyps) != len(refs):
        raise ValueError(f"{len(hyps)} hypotheses vs {len(refs)} references")
    hits = unks = total = 0
    for hyp, ref in zip(hyps, refs):
        for i, tok in enumerate(ref):
            if tok in vocab.word_to_id:
                continue
            total += 1
            got = hyp[i] if i < len(hyp) else ""
            hits += got == tok
            unks += got == UNK
    if total == 0:
        raise ValueError("references contain no out-of-vocabulary tokens")
    return CopyAccuracy(accuracy=hits / total, unk_share=unks / total,
                        n_tokens=total)


# ---- link-matrix diagnostics ------------------------------------------


def link_rank_fraction(link: np.ndarray, truth: dict[str, set[str]],
                       field_to_id: dict[str, int]) -> float:
    """How well the learned link weights rank the true field order.

    For every true transition src -> succ, the entry link[src, succ]
    must beat link[src, k] for every mapped field k that is not itself
    a true successor of src. Returns the fraction of transitions that
    win. The unknown-field catch-all is not a real field and does not
    compete, and neither does src itself: multi-token fields train
    their own diagonal entry (staying inside the field is a real,
    frequent step), which says nothing about what the next field is.
    """
    ids = {n: i for n, i in field_to_id.items() if n != UNKNOWN_FIELD}
    wins = 0
    total = 0
    for src, succs in truth.items():
        if src not in ids:
            continue
        si = ids[src]
        succ_ids = {ids[s] for s in succs if s in ids}
        rivals = [i for i in ids.values() if i not in succ_ids and i != si]
        for ti in sorted(succ_ids):
            total += 1
            if all(link[si, ti] > link[si, k] for k in rivals):
                wins += 1
    if total == 0:
        raise ValueError("truth table names no transitions between mapped fields")
    return wins / total


def effective_links(examples: list[Example], n_fields: int) -> np.ndarray:
    """Census of link entries the training tables can actually train.

    Entry (a, b) is effective when some table has positions i < j with
    field a at i and field b at j; all other entries never receive a
    gradient through the link attention. Returns a boolean matrix.
    """
    seen = np.zeros((n_fields, n_fields), dtype=bool)
    for ex in examples:
        f = np.asarray(ex.table.field_ids, dtype=np.intp)
        i, j = np.triu_indices(f.size, k=1)
        seen[f[i], f[j]] = True
    return seen


# ---- attention trace export -------------------------------------------


def attention_payload(model: Model, table_dict: dict, vocab: Vocabularies,
                      reference: list[str] | None = None) -> dict:
    """Decode one table and package every step's attention for plotting.

    The payload is plain JSON material: the table positions with their
    field names, the generated tokens, and per step the used attention
    plus whichever ingredient distributions the mode computes.
    """
    table = parse_table(table_dict, vocab)
    result = greedy_decode(model, table, vocab)
    positions = [{"field": vocab.id_to_field[f], "token": t}
                 for f, t in zip(table.field_ids, table.raw_tokens)]
    steps = []
    for st in result.steps:
        steps.append({
            "token": st.token,
            "used": st.alpha_used.tolist(),
            "content": None if st.alpha_content is None else st.alpha_content.tolist(),
            "link": None if st.alpha_link is None else st.alpha_link.tolist(),
            "gate": st.z_tilde,
        })
    payload = {"positions": positions, "output": result.tokens, "steps": steps}
    if reference is not None:
        payload["reference"] = list(reference)
    return payload
