"""Table encoder: an LSTM over the table's (field, word) embedding pairs.

Each content token becomes one position; its input is the concatenation
of its field embedding and word embedding. The stacked hidden states H
are what attention and copying read; the stacked field embeddings F are
reused by the field half of content attention and by the gate.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .autodiff import Tape, Tensor
from .data import InfoboxTable
from .model import Model


@dataclass
class EncodedTable:
    """Per-position encodings for one table."""

    H: Tensor                 # [C, d_hidden] position encodings
    F: Tensor                 # [C, d_field] field embeddings, one per position
    field_ids: np.ndarray     # [C] field id of each position

    @property
    def size(self) -> int:
        return int(self.field_ids.shape[0])


def encode_table(tape: Tape, model: Model, table: InfoboxTable) -> EncodedTable:
    if table.size == 0:
        raise ValueError("cannot encode an empty table")
    emb_word = model["emb_word"]
    emb_field = model["emb_field"]
    h = tape.constant(np.zeros(model.config.d_hidden))
    c = tape.constant(np.zeros(model.config.d_hidden))
    hs, fs = [], []
    for fid, wid in zip(table.field_ids, table.word_ids):
        f = tape.lookup(emb_field, fid)
        w = tape.lookup(emb_word, wid)
        h, c = model.encoder_lstm(tape, tape.concat([f, w]), h, c)
        hs.append(h)
        fs.append(f)
    return EncodedTable(H=tape.stack_rows(hs), F=tape.stack_rows(fs),
                        field_ids=np.asarray(table.field_ids, dtype=np.intp))
