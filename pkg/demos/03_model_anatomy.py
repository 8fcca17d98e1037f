"""A walking tour of one decode step: encoder, both attentions, gate, copy.

Builds a tiny untrained model over a handmade table and inspects the
pieces the decoder assembles each step: the per-position encodings, the
content and link attention distributions, the blend gate, and the union
output support that lets table-only tokens be emitted verbatim.
"""

import numpy as np

from tabletext.autodiff import Tape
from tabletext.data import BOS_ID, build_vocabularies, make_example
from tabletext.decoder import build_union, greedy_decode
from tabletext.dispatcher import attention_step, uniform_attention
from tabletext.encoder import encode_table
from tabletext.model import Model, ModelConfig

record = {
    "table": {
        "name": ["mira", "voss"],
        "city": ["osaka"],
        "team": ["falcons"],
    },
    "target": ["mira", "voss", "plays", "for", "falcons", "of", "osaka"],
}
vocab = build_vocabularies([record], word_cap=100, min_field_count=1)
example = make_example(record, vocab)
table = example.table

print("== table positions")
for i, (fid, wid, raw) in enumerate(zip(table.field_ids, table.word_ids,
                                        table.raw_tokens)):
    print(f"  pos {i}: field={vocab.id_to_field[fid]:<5} token={raw}")

cfg = ModelConfig(n_words=vocab.n_words, n_fields=vocab.n_fields,
                  d_word=8, d_field=8, d_hidden=12, d_decoder=12,
                  attention_mode="hybrid", copy_enabled=True, seed=0)
model = Model(cfg)

tape = Tape()
enc = encode_table(tape, model, table)
print("\n== encoder")
print(f"  H (position encodings): {enc.H.data.shape}")
print(f"  F (field embeddings):   {enc.F.data.shape}")

# One attention step from a cold start: previous token is BOS, previous
# attention is uniform, decoder hidden state is zeros.
y_emb = tape.lookup(model["emb_word"], BOS_ID)
alpha_prev = uniform_attention(tape, enc.size)
h_dec = tape.constant(np.zeros(cfg.d_decoder))
parts = attention_step(tape, model, enc, y_emb, alpha_prev, h_dec)

print("\n== attention ingredients (untrained weights, so near-uniform)")
np.set_printoptions(precision=4, suppress=True)
print(f"  content: {parts.content.data}")
print(f"  link:    {parts.link.data}")
print(f"  gate z~: {parts.z_tilde.data:.4f}  (always inside (0.5, 0.7))")
print(f"  used:    {parts.used.data}")
print(f"  sums:    {parts.content.data.sum():.12f} "
      f"{parts.link.data.sum():.12f} {parts.used.data.sum():.12f}")

# The link signature: positions that share a field id get identical link
# scores, because the link matrix only sees field ids, not words.
name_positions = [i for i, f in enumerate(table.field_ids)
                  if vocab.id_to_field[f] == "name"]
vals = parts.link.data[name_positions]
print(f"\n== link strip: positions {name_positions} share the 'name' field")
print(f"  link weights there: {vals}  (identical: {np.all(vals == vals[0])})")

# The union support: vocabulary words plus one slot per distinct table
# token the vocabulary does not know. Build the vocabulary from a
# training record with a different entity, then encode our table: the
# unseen name tokens become out-of-vocabulary and need copy slots.
train_record = {
    "table": {"name": ["kei", "arai"], "city": ["osaka"], "team": ["falcons"]},
    "target": ["kei", "arai", "plays", "for", "falcons", "of", "osaka"],
}
small_vocab = build_vocabularies([train_record], word_cap=100,
                                 min_field_count=1)
small_example = make_example(record, small_vocab)
union = build_union(small_example.table, small_vocab)
print("\n== copy union when the table holds unseen tokens")
print(f"  vocabulary (from the training record): {small_vocab.id_to_word}")
print(f"  OOV table tokens get extra slots: {union.extras}")
print(f"  position -> union slot: {union.pos_to_slot}")

# Greedy decoding records a full trace per step.
result = greedy_decode(model, table, vocab)
print("\n== greedy decode (untrained, output is arbitrary but traced)")
print(f"  tokens: {result.tokens[:8]}")
st = result.steps[0]
print(f"  step 0 trace: token={st.token!r} slot={st.slot} "
      f"gate={st.z_tilde:.4f}")
print(f"  step 0 used attention: {st.alpha_used}")
