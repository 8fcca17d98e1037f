"""Export an attention trace and render it as an ASCII heat map.

Trains briefly on the branching corpus, decodes one held-out table, and
shows per step where the model looked: the blended attention that fed
the decoder plus its content and link ingredients and the gate that
mixed them. The same payload is what `tabletext export-attention`
writes as JSON for external plotting.
"""

import json

from tabletext.data import generate_synthetic_corpus, order_branch_spec
from tabletext.experiments import attention_payload
from tabletext.model import Model, ModelConfig
from tabletext.training import TrainConfig, train

corpus = generate_synthetic_corpus(order_branch_spec(size=400, seed=3))
vocab = corpus.vocab

cfg = ModelConfig(n_words=vocab.n_words, n_fields=vocab.n_fields,
                  attention_mode="hybrid", copy_enabled=False, seed=2)
model = Model(cfg)
tcfg = TrainConfig(epochs=6, batch_size=16, learning_rate=5e-3,
                   l2_coeff=1e-5, shuffle_seed=2)
result = train(model, corpus.train, corpus.valid, vocab, tcfg)
print(f"trained {tcfg.epochs} epochs, best val BLEU "
      f"{result.best_val_bleu * 100:.2f}")

example = corpus.test[0]
table_dict = {}
for fid, raw in zip(example.table.field_ids, example.table.raw_tokens):
    table_dict.setdefault(vocab.id_to_field[fid], []).append(raw)
payload = attention_payload(model, table_dict, vocab,
                            reference=example.target_tokens)

print("\n== decoded table")
for pos in payload["positions"]:
    print(f"  {pos['field']:<12} {pos['token']}")
print(f"  reference: {' '.join(payload['reference'])}")
print(f"  output:    {' '.join(payload['output'])}")

SHADES = " .:-=+*#%@"


def shade(w: float) -> str:
    return SHADES[min(int(w * len(SHADES)), len(SHADES) - 1)]


cols = [p["token"][:7] for p in payload["positions"]]
print("\n== used attention per step (rows = output tokens)")
print(f"{'':>10} " + " ".join(f"{c:>7}" for c in cols))
for step in payload["steps"]:
    row = " ".join(f"{shade(w):>7}" for w in step["used"])
    print(f"{step['token'][:10]:>10} {row}")

print("\n== gate trajectory (weight on content attention)")
gates = [s["gate"] for s in payload["steps"]]
print("  " + " ".join(f"{g:.3f}" for g in gates))

step0 = payload["steps"][0]
print("\n== first step, full numbers")
print(f"  content: {[round(w, 3) for w in step0['content']]}")
print(f"  link:    {[round(w, 3) for w in step0['link']]}")
print(f"  used:    {[round(w, 3) for w in step0['used']]}")

blob = json.dumps(payload)
print(f"\npayload serialises to {len(blob)} bytes of JSON; the CLI "
      f"equivalent is `tabletext export-attention --model ... --vocab ... "
      f"--records ... --index 0 --out trace.json`")
