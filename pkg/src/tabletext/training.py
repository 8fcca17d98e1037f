"""Training loop: teacher-forced NLL + l2, Adam, checkpoints, selection.

The per-example loss is the sentence-level negative log likelihood under
teacher forcing; a batch's loss is the mean over its examples plus the
l2 term, so the batch gradient is exactly the mean of example gradients
plus the regularizer's. Model selection is by validation BLEU-4 after
each epoch; the best parameters are restored into the model when
training finishes.

Checkpoints use a purpose-built container (length-prefixed JSON header
plus a raw little-endian float64 blob, tensors sorted by name) so that
identical runs produce byte-identical files; off-the-shelf archive
formats embed timestamps.
"""

from __future__ import annotations

import json
import logging
import struct
import time
from dataclasses import dataclass, fields as dc_fields
from pathlib import Path

import numpy as np

from .autodiff import GradCheckReport, Parameter, Tape, Tensor, grad_check
from .data import BOS_ID, EOS_ID, Example, Vocabularies
from .decoder import (build_union, copy_projection, decoder_step,
                      greedy_decode, initial_state)
from .encoder import encode_table
from .metrics import bleu4
from .model import Model, ModelConfig

logger = logging.getLogger("tabletext")


class NumericalError(RuntimeError):
    """Training hit a non-finite value; message carries the context."""


@dataclass
class TrainConfig:
    epochs: int = 5
    batch_size: int = 16
    learning_rate: float = 1e-3
    beta1: float = 0.9
    beta2: float = 0.999
    adam_eps: float = 1e-8
    l2_coeff: float = 1e-5
    shuffle_seed: int = 0
    checkpoint_dir: str | None = None

    def validate(self) -> None:
        if self.epochs < 1 or self.batch_size < 1:
            raise ValueError("epochs and batch_size must be positive")
        if not 0.0 <= self.beta1 < 1.0 or not 0.0 <= self.beta2 < 1.0:
            raise ValueError("adam betas must lie in [0, 1)")
        if self.learning_rate <= 0 or self.adam_eps <= 0 or self.l2_coeff < 0:
            raise ValueError("bad optimizer constants")

    def to_json(self) -> dict:
        return {f.name: getattr(self, f.name) for f in dc_fields(self)}

    @classmethod
    def from_json(cls, blob: dict) -> "TrainConfig":
        known = {f.name for f in dc_fields(cls)}
        unknown = set(blob) - known
        if unknown:
            raise ValueError(f"unknown train config keys: {sorted(unknown)}")
        return cls(**blob)


# ---- loss ------------------------------------------------------------


def sequence_nll(tape: Tape, model: Model, example: Example,
                 vocab: Vocabularies) -> tuple[Tensor, int]:
    """Sentence NLL under teacher forcing. Returns (loss, step count).

    Gold routing with copying on: an in-vocabulary token trains its word
    slot; an out-of-vocabulary token that the table can supply trains
    its copy slot; anything else trains the unknown slot.
    """
    cfg = model.config
    enc = encode_table(tape, model, example.table)
    union = build_union(example.table, vocab) if cfg.copy_enabled else None
    proj = copy_projection(tape, model, enc) if cfg.copy_enabled else None
    state = initial_state(tape, model)
    y_prev = BOS_ID
    total: Tensor | None = None
    n_steps = len(example.target_ids)
    for t in range(n_steps):
        state, scores, _ = decoder_step(tape, model, enc, union, proj, state, y_prev)
        if union is not None:
            if t == n_steps - 1:
                gold = EOS_ID
            else:
                gold = union.gold_slot(example.target_tokens[t], vocab)
        else:
            gold = example.target_ids[t]
        logp = tape.log_softmax(scores)
        step_nll = tape.affine(tape.pick(logp, gold), -1.0, 0.0)
        total = step_nll if total is None else tape.add(total, step_nll)
        y_prev = example.target_ids[t]
    assert total is not None
    return total, n_steps


def batch_loss(tape: Tape, model: Model, batch: list[Example],
               vocab: Vocabularies, l2_coeff: float) -> tuple[Tensor, int]:
    """Mean sentence NLL over the batch plus the l2 term."""
    total: Tensor | None = None
    tokens = 0
    for ex in batch:
        nll, n = sequence_nll(tape, model, ex, vocab)
        tokens += n
        total = nll if total is None else tape.add(total, nll)
    loss = tape.affine(total, 1.0 / len(batch), 0.0)
    if l2_coeff > 0.0:
        reg: Tensor | None = None
        for p in model.l2_parameters():
            sq = tape.sum_squares(p)
            reg = sq if reg is None else tape.add(reg, sq)
        if reg is not None:
            loss = tape.add(loss, tape.affine(reg, l2_coeff, 0.0))
    return loss, tokens


# ---- optimizer -------------------------------------------------------


class Adam:
    """Adam with bias correction, state keyed by parameter name."""

    def __init__(self, params: list[Parameter], lr: float = 1e-3,
                 beta1: float = 0.9, beta2: float = 0.999, eps: float = 1e-8):
        self.params = list(params)
        self.lr, self.beta1, self.beta2, self.eps = lr, beta1, beta2, eps
        self.t = 0
        self.m = {p.name: np.zeros_like(p.data) for p in self.params}
        self.v = {p.name: np.zeros_like(p.data) for p in self.params}

    def step(self) -> None:
        self.t += 1
        c1 = 1.0 - self.beta1 ** self.t
        c2 = 1.0 - self.beta2 ** self.t
        for p in self.params:
            g = p.grad
            m = self.m[p.name]
            v = self.v[p.name]
            m *= self.beta1
            m += (1.0 - self.beta1) * g
            v *= self.beta2
            v += (1.0 - self.beta2) * (g * g)
            p.data[...] -= self.lr * (m / c1) / (np.sqrt(v / c2) + self.eps)

    def state_arrays(self) -> dict[str, np.ndarray]:
        out = {}
        for name in sorted(self.m):
            out[f"adam.m.{name}"] = self.m[name]
            out[f"adam.v.{name}"] = self.v[name]
        return out

    def load_state_arrays(self, arrays: dict[str, np.ndarray], t: int) -> None:
        self.t = t
        for name in self.m:
            self.m[name][...] = arrays[f"adam.m.{name}"]
            self.v[name][...] = arrays[f"adam.v.{name}"]


# ---- deterministic checkpoint container ------------------------------

_MAGIC = b"TTCK"


def save_arrays(path, arrays: dict[str, np.ndarray], meta: dict) -> None:
    """Write float64 tensors plus JSON metadata, byte-deterministically."""
    names = sorted(arrays)
    tensors = []
    offset = 0
    for name in names:
        arr = np.ascontiguousarray(arrays[name], dtype=np.float64)
        tensors.append({"name": name, "shape": list(arr.shape), "offset": offset})
        offset += arr.nbytes
    header = json.dumps({"meta": meta, "tensors": tensors},
                        sort_keys=True, separators=(",", ":")).encode()
    with open(path, "wb") as fh:
        fh.write(_MAGIC)
        fh.write(struct.pack("<Q", len(header)))
        fh.write(header)
        for name in names:
            fh.write(np.ascontiguousarray(arrays[name], dtype=np.float64)
                     .tobytes(order="C"))


def load_arrays(path) -> tuple[dict[str, np.ndarray], dict]:
    raw = Path(path).read_bytes()
    if raw[:4] != _MAGIC:
        raise ValueError(f"{path}: not a checkpoint file")
    (hlen,) = struct.unpack("<Q", raw[4:12])
    header = json.loads(raw[12:12 + hlen].decode())
    blob = raw[12 + hlen:]
    arrays = {}
    for spec in header["tensors"]:
        shape = tuple(spec["shape"])
        n = int(np.prod(shape)) if shape else 1
        start = spec["offset"]
        arrays[spec["name"]] = np.frombuffer(
            blob, dtype="<f8", count=n, offset=start).reshape(shape).copy()
    return arrays, header["meta"]


def save_model_checkpoint(path, model: Model, meta: dict | None = None) -> None:
    meta = dict(meta or {})
    meta["config"] = model.config.to_json()
    meta["config_hash"] = model.config.canonical_hash()
    save_arrays(path, {p.name: p.data for p in model.parameters()}, meta)


def load_model_checkpoint(path) -> tuple[Model, dict]:
    arrays, meta = load_arrays(path)
    config = ModelConfig.from_json(meta["config"])
    model = Model(config)
    for p in model.parameters():
        if p.name not in arrays:
            raise ValueError(f"{path}: missing tensor {p.name}")
        if arrays[p.name].shape != p.data.shape:
            raise ValueError(f"{path}: tensor {p.name} has shape "
                             f"{arrays[p.name].shape}, expected {p.data.shape}")
        p.data[...] = arrays[p.name]
    return model, meta


# ---- the loop --------------------------------------------------------


@dataclass
class EpochStats:
    epoch: int
    train_nll_per_token: float
    val_bleu: float
    seconds: float


@dataclass
class TrainResult:
    history: list[EpochStats]
    best_val_bleu: float
    best_epoch: int


def length_buckets(examples: list[Example], batch_size: int) -> list[list[int]]:
    """Stable-sorted by target length, then chopped into batches, so each
    batch holds examples of similar length."""
    order = sorted(range(len(examples)), key=lambda i: (len(examples[i].target_ids), i))
    return [order[i:i + batch_size] for i in range(0, len(order), batch_size)]


def decode_corpus(model: Model, examples: list[Example], vocab: Vocabularies,
                  max_len: int | None = None) -> list[list[str]]:
    return [greedy_decode(model, ex.table, vocab, max_len=max_len).tokens
            for ex in examples]


def _diagnostics(model: Model, loss_val: float, epoch: int, batch_idx: int) -> str:
    worst_p = max(model.parameters(), key=lambda p: float(np.abs(p.data).max()))
    worst_g = max(model.parameters(), key=lambda p: float(np.abs(p.grad).max()))
    return (f"non-finite loss {loss_val!r} at epoch {epoch}, batch {batch_idx}; "
            f"largest parameter {worst_p.name} "
            f"(|max| {float(np.abs(worst_p.data).max()):.3e}), "
            f"largest gradient {worst_g.name} "
            f"(|max| {float(np.abs(worst_g.grad).max()):.3e})")


def train(model: Model, train_examples: list[Example], valid_examples: list[Example],
          vocab: Vocabularies, tcfg: TrainConfig,
          resume_from: str | None = None) -> TrainResult:
    """Run the full loop; afterwards the model holds the best-epoch weights.

    With checkpoint_dir set, "model.best" (best validation BLEU) and
    "model.last" (exact-resume state: parameters, Adam moments, shuffle
    rng, best-so-far snapshot) are maintained after every epoch.
    """
    tcfg.validate()
    if not train_examples or not valid_examples:
        raise ValueError("need non-empty train and valid splits")

    rng = np.random.default_rng(tcfg.shuffle_seed)
    opt = Adam(model.parameters(), lr=tcfg.learning_rate, beta1=tcfg.beta1,
               beta2=tcfg.beta2, eps=tcfg.adam_eps)
    history: list[EpochStats] = []
    best_bleu, best_epoch = -1.0, -1
    best_params = {p.name: p.data.copy() for p in model.parameters()}
    start_epoch = 0

    if resume_from is not None:
        arrays, meta = load_arrays(resume_from)
        if meta.get("config_hash") != model.config.canonical_hash():
            raise ValueError(f"{resume_from}: checkpoint was written for a "
                             "different model config")
        for p in model.parameters():
            p.data[...] = arrays[p.name]
        opt.load_state_arrays(arrays, int(meta["adam_t"]))
        rng.bit_generator.state = meta["rng_state"]
        best_bleu = float(meta["best_bleu"])
        best_epoch = int(meta["best_epoch"])
        best_params = {p.name: arrays[f"best.{p.name}"].copy()
                       for p in model.parameters()}
        start_epoch = int(meta["epoch"]) + 1
        logger.info("resumed from %s at epoch %d", resume_from, start_epoch)

    refs = [ex.target_tokens for ex in valid_examples]
    batches = length_buckets(train_examples, tcfg.batch_size)
    ckpt_dir = Path(tcfg.checkpoint_dir) if tcfg.checkpoint_dir else None
    if ckpt_dir:
        ckpt_dir.mkdir(parents=True, exist_ok=True)

    for epoch in range(start_epoch, tcfg.epochs):
        t0 = time.perf_counter()
        total_nll = 0.0
        total_tokens = 0
        for bi in rng.permutation(len(batches)):
            batch = [train_examples[i] for i in batches[bi]]
            model.zero_grad()
            tape = Tape()
            loss, tokens = batch_loss(tape, model, batch, vocab, tcfg.l2_coeff)
            loss_val = float(loss.data)
            if not np.isfinite(loss_val):
                raise NumericalError(_diagnostics(model, loss_val, epoch, int(bi)))
            tape.backward(loss)
            opt.step()
            total_nll += loss_val * len(batch)
            total_tokens += tokens
        hyps = decode_corpus(model, valid_examples, vocab)
        val_bleu = bleu4(hyps, refs)
        stats = EpochStats(epoch=epoch,
                           train_nll_per_token=total_nll / max(total_tokens, 1),
                           val_bleu=val_bleu,
                           seconds=time.perf_counter() - t0)
        history.append(stats)
        logger.info("epoch %d: nll/token %.4f, val BLEU %.2f, %.1fs",
                    epoch, stats.train_nll_per_token, 100 * val_bleu, stats.seconds)

        if val_bleu > best_bleu:
            best_bleu, best_epoch = val_bleu, epoch
            best_params = {p.name: p.data.copy() for p in model.parameters()}
            if ckpt_dir:
                save_model_checkpoint(ckpt_dir / "model.best", model,
                                      {"epoch": epoch, "val_bleu": val_bleu})
        if ckpt_dir:
            arrays = {p.name: p.data for p in model.parameters()}
            arrays.update(opt.state_arrays())
            arrays.update({f"best.{k}": v for k, v in best_params.items()})
            # the directory the file sits in is not part of the run
            tc_meta = {k: v for k, v in tcfg.to_json().items() if k != "checkpoint_dir"}
            save_arrays(ckpt_dir / "model.last", arrays, {
                "config": model.config.to_json(),
                "config_hash": model.config.canonical_hash(),
                "train_config": tc_meta,
                "epoch": epoch, "adam_t": opt.t,
                "rng_state": rng.bit_generator.state,
                "best_bleu": best_bleu, "best_epoch": best_epoch,
            })

    for p in model.parameters():
        p.data[...] = best_params[p.name]
    return TrainResult(history=history, best_val_bleu=best_bleu, best_epoch=best_epoch)


# ---- whole-model gradient check --------------------------------------


def model_grad_check(model: Model, examples: list[Example], vocab: Vocabularies,
                     l2_coeff: float = 1e-5, step: float = 1e-5,
                     sample: int | None = None, seed: int = 0) -> GradCheckReport:
    """Finite-difference check of the full batch loss over every model
    parameter (inactive ones included: both sides must agree they are
    zero)."""

    def loss_fn(tape: Tape) -> Tensor:
        return batch_loss(tape, model, examples, vocab, l2_coeff)[0]

    return grad_check(loss_fn, model.parameters(), step=step,
                      sample=sample, seed=seed)
