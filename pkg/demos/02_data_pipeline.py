"""From a table spec to encoded training examples.

Generates a small synthetic corpus, prints one raw record, and walks
through what the vocabularies and the encoded example look like.
"""

from tabletext.data import generate_synthetic_corpus, order_copy_spec

corpus = generate_synthetic_corpus(order_copy_spec(size=200, seed=13))
vocab = corpus.vocab

record = corpus.train_records[0]
print("one raw record:")
for field, value in record["table"].items():
    print(f"  {field:12s} {' '.join(value)}")
print(f"  target:      {' '.join(record['target'])}")

print(f"\nvocabulary: {vocab.n_words} words (4 reserved), "
      f"{vocab.n_fields} fields (1 unknown catch-all)")
print(f"splits: {len(corpus.train)} train / {len(corpus.valid)} valid / "
      f"{len(corpus.test)} test")

ex = corpus.train[0]
print("\nencoded table, one row per content token:")
for fid, wid, raw in zip(ex.table.field_ids, ex.table.word_ids,
                         ex.table.raw_tokens):
    mark = "" if wid != 3 else "   <- out of vocabulary, copy material"
    print(f"  field {vocab.id_to_field[fid]:12s} word id {wid:3d} "
          f"({raw}){mark}")
print(f"target ids (terminator included): {ex.target_ids}")
print(f"copy candidates: {ex.copy_candidates}")

print("\nfield-transition rules behind the corpus (ground truth):")
for src, succs in sorted(corpus.truth.items()):
    if succs:
        print(f"  {src:12s} -> {', '.join(sorted(succs))}")
