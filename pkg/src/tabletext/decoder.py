"""Decoder: attention-fed LSTM with vocabulary+copy output distribution.

Per step the decoder scores every word in the vocabulary (via its
hidden state) and, when copying is enabled, every table position (via a
bilinear match against the encoder states). Position scores are folded
into a union support -- the word vocabulary followed by one slot per
distinct out-of-vocabulary table token -- with scores for the same
surface token summed before the softmax. Generation is greedy with
lowest-index tie-breaking and stops at the end symbol.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .autodiff import Tape, Tensor
from .data import BOS_ID, EOS_ID, UNK_ID, InfoboxTable, Vocabularies
from .dispatcher import AttentionParts, attention_step, uniform_attention
from .encoder import EncodedTable, encode_table
from .model import Model


@dataclass
class UnionIndex:
    """Output support for one table: word vocab then OOV table tokens."""

    vocab_size: int
    extras: list[str]              # distinct OOV raw tokens, first-seen order
    pos_to_slot: np.ndarray        # [C] union slot fed by each table position

    @property
    def size(self) -> int:
        return self.vocab_size + len(self.extras)

    def token_for(self, slot: int, vocab: Vocabularies) -> str:
        if slot < self.vocab_size:
            return vocab.id_to_word[slot]
        return self.extras[slot - self.vocab_size]

    def word_id_for(self, slot: int) -> int:
        """Embedding id used when the chosen token is fed back in."""
        return slot if slot < self.vocab_size else UNK_ID

    def gold_slot(self, token: str, vocab: Vocabularies) -> int:
        if vocab.has_word(token):
            return vocab.word_to_id[token]
        try:
            return self.vocab_size + self.extras.index(token)
        except ValueError:
            return UNK_ID


def build_union(table: InfoboxTable, vocab: Vocabularies) -> UnionIndex:
    extras: list[str] = []
    slot_of_extra: dict[str, int] = {}
    pos_to_slot = np.empty(table.size, dtype=np.intp)
    for i, (wid, raw) in enumerate(zip(table.word_ids, table.raw_tokens)):
        if wid != UNK_ID or vocab.has_word(raw):
            pos_to_slot[i] = wid
        else:
            if raw not in slot_of_extra:
                slot_of_extra[raw] = vocab.n_words + len(extras)
                extras.append(raw)
            pos_to_slot[i] = slot_of_extra[raw]
    return UnionIndex(vocab_size=vocab.n_words, extras=extras, pos_to_slot=pos_to_slot)


def copy_projection(tape: Tape, model: Model, enc: EncodedTable) -> Tensor:
    """H @ W_copy, computed once per table and reused every step."""
    return tape.matmul(enc.H, model["copy_Wc"])


@dataclass
class DecoderState:
    h: Tensor
    c: Tensor
    alpha_prev: Tensor | None      # None before the first step


def initial_state(tape: Tape, model: Model) -> DecoderState:
    d = model.config.d_decoder
    return DecoderState(h=tape.constant(np.zeros(d)),
                        c=tape.constant(np.zeros(d)), alpha_prev=None)


def decoder_step(tape: Tape, model: Model, enc: EncodedTable,
                 union: UnionIndex | None, copy_proj: Tensor | None,
                 state: DecoderState, y_prev_id: int
                 ) -> tuple[DecoderState, Tensor, AttentionParts]:
    """One step of teacher-forced or free-running decoding.

    Returns the new state, the pre-softmax union scores, and the
    attention breakdown. union/copy_proj are None iff copying is off.
    """
    cfg = model.config
    y_emb = tape.lookup(model["emb_word"], y_prev_id)
    alpha_prev = state.alpha_prev
    if alpha_prev is None:
        alpha_prev = uniform_attention(tape, enc.size)
    parts = attention_step(tape, model, enc, y_emb, alpha_prev, state.h)

    context = tape.matmul(parts.used, enc.H)
    x = tape.tanh(tape.add(tape.matmul(model["dec_Win"],
                                       tape.concat([context, y_emb])),
                           model["dec_bin"]))
    h, c = model.decoder_lstm(tape, x, state.h, state.c)
    scores = tape.add(tape.matmul(model["out_Ws"], h), model["out_bs"])

    if cfg.copy_enabled:
        assert union is not None and copy_proj is not None
        if cfg.copy_score == "gated":
            pos_scores = tape.matmul(tape.sigmoid(copy_proj), h)
        else:
            pos_scores = tape.sigmoid(tape.matmul(copy_proj, h))
        if union.extras:
            scores = tape.concat([scores, tape.constant(np.zeros(len(union.extras)))])
        scores = tape.scatter_add(scores, union.pos_to_slot, pos_scores)

    return DecoderState(h=h, c=c, alpha_prev=parts.used), scores, parts


@dataclass
class StepTrace:
    """What one generation step looked at and produced."""

    token: str
    slot: int
    alpha_used: np.ndarray
    alpha_content: np.ndarray | None
    alpha_link: np.ndarray | None
    z_tilde: float | None


@dataclass
class DecodeResult:
    tokens: list[str]
    steps: list[StepTrace]
    table: InfoboxTable


def _trace_of(parts: AttentionParts, token: str, slot: int) -> StepTrace:
    z = parts.z_tilde
    if isinstance(z, Tensor):
        z = float(z.data)
    return StepTrace(
        token=token, slot=slot,
        alpha_used=parts.used.data.copy(),
        alpha_content=None if parts.content is None else parts.content.data.copy(),
        alpha_link=None if parts.link is None else parts.link.data.copy(),
        z_tilde=z)


def greedy_decode(model: Model, table: InfoboxTable, vocab: Vocabularies,
                  max_len: int | None = None) -> DecodeResult:
    """Deterministic argmax decoding; ties go to the lowest slot."""
    cfg = model.config
    if max_len is None:
        max_len = cfg.max_decode_len
    tape = Tape(recording=False)
    enc = encode_table(tape, model, table)
    union = build_union(table, vocab) if cfg.copy_enabled else None
    copy_proj = copy_projection(tape, model, enc) if cfg.copy_enabled else None

    state = initial_state(tape, model)
    y_prev = BOS_ID
    tokens: list[str] = []
    steps: list[StepTrace] = []
    for _ in range(max_len):
        state, scores, parts = decoder_step(tape, model, enc, union, copy_proj,
                                            state, y_prev)
        slot = int(np.argmax(scores.data))
        if slot == EOS_ID:
            break
        if union is not None:
            token = union.token_for(slot, vocab)
            y_prev = union.word_id_for(slot)
        else:
            token = vocab.id_to_word[slot]
            y_prev = slot
        tokens.append(token)
        steps.append(_trace_of(parts, token, slot))
    return DecodeResult(tokens=tokens, steps=steps, table=table)
