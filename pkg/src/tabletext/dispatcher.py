"""Attention dispatcher: content scoring, link scoring, and their blend.

Content attention scores each table position by agreement between the
previous output word and both the position's field embedding and its
encoder state. Link attention ignores the current word entirely: it
pushes the previous step's attention mass through a learned
field-to-field transition matrix, i.e. "after talking about field a,
talk about field b". The self-adaptive gate blends the two, squashed
into (0.5, 0.7) so neither mechanism is ever switched off; a fixed gate
replaces that with a constant blend for ablations.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .autodiff import Tape, Tensor
from .encoder import EncodedTable
from .model import Model

GATE_SCALE = 0.2
GATE_SHIFT = 0.5


@dataclass
class AttentionParts:
    """One step's attention, with the ingredients kept for tracing."""

    used: Tensor                    # [C] what the decoder consumes
    content: Tensor | None
    link: Tensor | None
    z_tilde: Tensor | float | None  # Tensor (adaptive), float (fixed), None (pure)


def uniform_attention(tape: Tape, size: int) -> Tensor:
    return tape.constant(np.full(size, 1.0 / size))


def content_attention(tape: Tape, model: Model, enc: EncodedTable, y_prev_emb) -> Tensor:
    """Softmax over positions of (field score * encoding score)."""
    q_field = tape.add(tape.matmul(model["att_Wf"], y_prev_emb), model["att_bf"])
    field_scores = tape.matmul(enc.F, q_field)
    q_hidden = tape.add(tape.matmul(model["att_Wc"], y_prev_emb), model["att_bc"])
    hidden_scores = tape.matmul(enc.H, q_hidden)
    return tape.softmax(tape.mul(field_scores, hidden_scores))


def link_attention(tape: Tape, model: Model, enc: EncodedTable, alpha_prev) -> Tensor:
    """Previous attention mass pushed through the link matrix.

    Position i' scores sum_j alpha_prev[j] * L[field_j, field_i'], so
    positions sharing a field id always score identically.
    """
    block = tape.submatrix(model["link_L"], enc.field_ids, enc.field_ids)
    return tape.softmax(tape.matmul(alpha_prev, block))


def adaptive_gate(tape: Tape, model: Model, enc: EncodedTable,
                  alpha_link, h_dec_prev, y_prev_emb) -> Tensor:
    """Scalar blend weight in (0.5, 0.7).

    The field context comes from the current step's link attention over
    the position-wise field embeddings.
    """
    e_field = tape.matmul(alpha_link, enc.F)
    features = tape.concat([h_dec_prev, e_field, y_prev_emb])
    z = tape.sigmoid(tape.dot(model["gate_w"], features))
    return tape.affine(z, GATE_SCALE, GATE_SHIFT)


def blend(tape: Tape, z_tilde, alpha_content, alpha_link) -> Tensor:
    """z*content + (1-z)*link; exact passthrough at z=0 and z=1."""
    if isinstance(z_tilde, float):
        return tape.add(tape.affine(alpha_content, z_tilde, 0.0),
                        tape.affine(alpha_link, 1.0 - z_tilde, 0.0))
    return tape.add(tape.mul(z_tilde, alpha_content),
                    tape.mul(tape.affine(z_tilde, -1.0, 1.0), alpha_link))


def attention_step(tape: Tape, model: Model, enc: EncodedTable,
                   y_prev_emb, alpha_prev, h_dec_prev) -> AttentionParts:
    """Dispatch on the configured mode.

    Pure modes compute only their own mechanism, so the other one's
    parameters are untouched by backward. alpha_prev is whatever
    attention the previous step actually used (uniform at step one).
    """
    mode = model.config.attention_mode
    if mode == "content":
        alpha = content_attention(tape, model, enc, y_prev_emb)
        return AttentionParts(used=alpha, content=alpha, link=None, z_tilde=None)
    if mode == "link":
        alpha = link_attention(tape, model, enc, alpha_prev)
        return AttentionParts(used=alpha, content=None, link=alpha, z_tilde=None)

    alpha_c = content_attention(tape, model, enc, y_prev_emb)
    alpha_l = link_attention(tape, model, enc, alpha_prev)
    if model.config.gate_mode == "fixed":
        z: Tensor | float = float(model.config.fixed_gate)
    else:
        z = adaptive_gate(tape, model, enc, alpha_l, h_dec_prev, y_prev_emb)
    return AttentionParts(used=blend(tape, z, alpha_c, alpha_l),
                          content=alpha_c, link=alpha_l, z_tilde=z)
