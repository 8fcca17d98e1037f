"""Model configuration, parameter container, and the shared LSTM cell.

Parameters live in a flat name->Parameter dict. Which of them actually
receive gradients depends on the configured attention mode, gate mode
and copy switch; active_parameters/l2_parameters encode exactly that,
so disabled mechanisms provably stay untouched during training.
"""

from __future__ import annotations

import hashlib
import json
from dataclasses import dataclass, fields as dc_fields

import numpy as np

from .autodiff import Parameter, Tape

ATTENTION_MODES = ("content", "link", "hybrid")
GATE_MODES = ("adaptive", "fixed")
COPY_SCORES = ("gated", "scalar")


@dataclass
class ModelConfig:
    """Everything that determines the parameter set and forward pass."""

    n_words: int
    n_fields: int
    d_word: int = 32
    d_field: int = 32
    d_hidden: int = 64
    d_decoder: int = 64
    attention_mode: str = "hybrid"
    copy_enabled: bool = True
    copy_score: str = "gated"      # sigma(hW).h' ("gated") or sigma((hW).h') ("scalar")
    gate_mode: str = "adaptive"
    fixed_gate: float = 0.5        # blend weight when gate_mode == "fixed"
    init_scale: float = 0.08
    seed: int = 0
    max_decode_len: int = 40

    def validate(self) -> None:
        if self.attention_mode not in ATTENTION_MODES:
            raise ValueError(f"attention_mode must be one of {ATTENTION_MODES}, "
                             f"got {self.attention_mode!r}")
        if self.gate_mode not in GATE_MODES:
            raise ValueError(f"gate_mode must be one of {GATE_MODES}, got {self.gate_mode!r}")
        if self.copy_score not in COPY_SCORES:
            raise ValueError(f"copy_score must be one of {COPY_SCORES}, got {self.copy_score!r}")
        if not 0.0 <= self.fixed_gate <= 1.0:
            raise ValueError(f"fixed_gate must lie in [0, 1], got {self.fixed_gate}")
        if min(self.n_words, self.n_fields) < 1:
            raise ValueError("vocabulary sizes must be positive")
        if min(self.d_word, self.d_field, self.d_hidden, self.d_decoder) < 1:
            raise ValueError("dimensions must be positive")
        if self.gate_mode == "fixed" and self.attention_mode != "hybrid":
            raise ValueError("a fixed gate only makes sense in hybrid mode")

    def to_json(self) -> dict:
        return {f.name: getattr(self, f.name) for f in dc_fields(self)}

    @classmethod
    def from_json(cls, blob: dict) -> "ModelConfig":
        known = {f.name for f in dc_fields(cls)}
        unknown = set(blob) - known
        if unknown:
            raise ValueError(f"unknown config keys: {sorted(unknown)}")
        return cls(**blob)

    def canonical_hash(self) -> str:
        text = json.dumps(self.to_json(), sort_keys=True, separators=(",", ":"))
        return hashlib.sha256(text.encode()).hexdigest()[:16]


def lstm_step(tape: Tape, Wg, Ug, bg, Wx, Ux, bx, x, h_prev, c_prev):
    """One LSTM step with the three sigmoid gates stacked in Wg/Ug/bg
    as [input; forget; output]. Returns (hidden, cell)."""
    n = h_prev.data.shape[0]
    gates = tape.sigmoid(tape.add(tape.add(tape.matmul(Wg, x), tape.matmul(Ug, h_prev)), bg))
    g_in = tape.slice1d(gates, 0, n)
    g_forget = tape.slice1d(gates, n, 2 * n)
    g_out = tape.slice1d(gates, 2 * n, 3 * n)
    candidate = tape.tanh(tape.add(tape.add(tape.matmul(Wx, x), tape.matmul(Ux, h_prev)), bx))
    c = tape.add(tape.mul(g_in, candidate), tape.mul(g_forget, c_prev))
    h = tape.mul(g_out, tape.tanh(c))
    return h, c


class Model:
    """Parameter container; the forward pass lives in encoder/decoder."""

    def __init__(self, config: ModelConfig):
        config.validate()
        self.config = config
        rng = np.random.default_rng(config.seed)
        s = config.init_scale

        def u(name, *shape):
            self.params[name] = Parameter(name, rng.uniform(-s, s, size=shape))

        def z(name, *shape):
            self.params[name] = Parameter(name, np.zeros(shape))

        c = config
        d_in_enc = c.d_field + c.d_word
        self.params: dict[str, Parameter] = {}

        u("emb_word", c.n_words, c.d_word)
        u("emb_field", c.n_fields, c.d_field)

        u("enc_Wg", 3 * c.d_hidden, d_in_enc)
        u("enc_Ug", 3 * c.d_hidden, c.d_hidden)
        z("enc_bg", 3 * c.d_hidden)
        u("enc_Wx", c.d_hidden, d_in_enc)
        u("enc_Ux", c.d_hidden, c.d_hidden)
        z("enc_bx", c.d_hidden)

        u("att_Wf", c.d_field, c.d_word)
        z("att_bf", c.d_field)
        u("att_Wc", c.d_hidden, c.d_word)
        z("att_bc", c.d_hidden)

        z("link_L", c.n_fields, c.n_fields)
        u("gate_w", c.d_decoder + c.d_field + c.d_word)

        u("dec_Win", c.d_decoder, c.d_hidden + c.d_word)
        z("dec_bin", c.d_decoder)
        u("dec_Wg", 3 * c.d_decoder, c.d_decoder)
        u("dec_Ug", 3 * c.d_decoder, c.d_decoder)
        z("dec_bg", 3 * c.d_decoder)
        u("dec_Wx", c.d_decoder, c.d_decoder)
        u("dec_Ux", c.d_decoder, c.d_decoder)
        z("dec_bx", c.d_decoder)

        u("out_Ws", c.n_words, c.d_decoder)
        z("out_bs", c.n_words)
        u("copy_Wc", c.d_hidden, c.d_decoder)

        # forget gates start open so early gradients reach back in time
        self.params["enc_bg"].data[c.d_hidden:2 * c.d_hidden] = 1.0
        self.params["dec_bg"].data[c.d_decoder:2 * c.d_decoder] = 1.0

    def __getitem__(self, name: str) -> Parameter:
        return self.params[name]

    def parameters(self) -> list[Parameter]:
        return [self.params[k] for k in sorted(self.params)]

    def active_parameters(self) -> list[Parameter]:
        """Parameters the configured forward pass can actually reach."""
        names = {"emb_word", "emb_field",
                 "enc_Wg", "enc_Ug", "enc_bg", "enc_Wx", "enc_Ux", "enc_bx",
                 "dec_Win", "dec_bin", "dec_Wg", "dec_Ug", "dec_bg",
                 "dec_Wx", "dec_Ux", "dec_bx", "out_Ws", "out_bs"}
        mode = self.config.attention_mode
        if mode in ("content", "hybrid"):
            names |= {"att_Wf", "att_bf", "att_Wc", "att_bc"}
        if mode in ("link", "hybrid"):
            names |= {"link_L"}
        if mode == "hybrid" and self.config.gate_mode == "adaptive":
            names |= {"gate_w"}
        if self.config.copy_enabled:
            names |= {"copy_Wc"}
        return [self.params[k] for k in sorted(names)]

    def l2_parameters(self) -> list[Parameter]:
        """Weight matrices under the l2 term: active-path projections and
        recurrences; embeddings, biases, the link matrix and the gate
        vector are left unregularized."""
        active = {p.name for p in self.active_parameters()}
        matrices = {"enc_Wg", "enc_Ug", "enc_Wx", "enc_Ux",
                    "att_Wf", "att_Wc",
                    "dec_Win", "dec_Wg", "dec_Ug", "dec_Wx", "dec_Ux",
                    "out_Ws", "copy_Wc"}
        return [self.params[k] for k in sorted(matrices & active)]

    def zero_grad(self) -> None:
        for p in self.params.values():
            p.zero_grad()

    def encoder_lstm(self, tape: Tape, x, h_prev, c_prev):
        p = self.params
        return lstm_step(tape, p["enc_Wg"], p["enc_Ug"], p["enc_bg"],
                         p["enc_Wx"], p["enc_Ux"], p["enc_bx"], x, h_prev, c_prev)

    def decoder_lstm(self, tape: Tape, x, h_prev, c_prev):
        p = self.params
        return lstm_step(tape, p["dec_Wg"], p["dec_Ug"], p["dec_bg"],
                         p["dec_Wx"], p["dec_Ux"], p["dec_bx"], x, h_prev, c_prev)
