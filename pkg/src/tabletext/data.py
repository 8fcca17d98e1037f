"""Corpus handling: vocabularies, table encoding, file formats, synthetic data.

A raw record is a plain dict, ``{"table": {field: [tokens]}, "target":
[tokens]}``; that is also the canonical JSONL line format. Records are
encoded against a pair of closed vocabularies (disjoint id spaces for
words and field names) into Example objects the model consumes.

Conventions baked in here:
  - all text is decapitalized on the way in,
  - word ids 0..3 are reserved for <pad>/<bos>/<eos>/<unk>,
  - field id 0 is the catch-all for rare field names,
  - a field whose whole content is the single token "none" is dropped,
  - table positions are 0-based.
"""

from __future__ import annotations

import itertools
import json
from collections import Counter
from dataclasses import dataclass
from pathlib import Path

import numpy as np

PAD, BOS, EOS, UNK = "<pad>", "<bos>", "<eos>", "<unk>"
PAD_ID, BOS_ID, EOS_ID, UNK_ID = 0, 1, 2, 3
RESERVED_WORDS = [PAD, BOS, EOS, UNK]
UNKNOWN_FIELD = "<unk>"
UNKNOWN_FIELD_ID = 0
NONE_VALUE = "none"


class DataError(Exception):
    """Malformed input data; carries file/line context when available."""

    def __init__(self, message: str, path: str | None = None, line: int | None = None):
        where = ""
        if path is not None:
            where = f"{path}:" + (f"{line}: " if line is not None else " ")
        super().__init__(where + message)
        self.path = path
        self.line = line


def normalize_token(token: str) -> str:
    return token.strip().lower()


@dataclass
class Vocabularies:
    """Closed word and field inventories with disjoint id spaces."""

    id_to_word: list[str]
    id_to_field: list[str]

    def __post_init__(self):
        self.word_to_id = {w: i for i, w in enumerate(self.id_to_word)}
        self.field_to_id = {f: i for i, f in enumerate(self.id_to_field)}
        if self.id_to_word[:4] != RESERVED_WORDS:
            raise DataError("word vocabulary must start with the reserved tokens")
        if self.id_to_field[0] != UNKNOWN_FIELD:
            raise DataError("field vocabulary must start with the unknown field")

    @property
    def n_words(self) -> int:
        return len(self.id_to_word)

    @property
    def n_fields(self) -> int:
        return len(self.id_to_field)

    def word_id(self, token: str) -> int:
        return self.word_to_id.get(token, UNK_ID)

    def field_id(self, name: str) -> int:
        return self.field_to_id.get(name, UNKNOWN_FIELD_ID)

    def has_word(self, token: str) -> bool:
        return token in self.word_to_id

    def save(self, path) -> None:
        blob = {"words": self.id_to_word, "fields": self.id_to_field}
        Path(path).write_text(json.dumps(blob, ensure_ascii=False, indent=0))

    @classmethod
    def load(cls, path) -> "Vocabularies":
        try:
            blob = json.loads(Path(path).read_text())
            return cls(id_to_word=blob["words"], id_to_field=blob["fields"])
        except (json.JSONDecodeError, KeyError) as exc:
            raise DataError(f"unreadable vocabulary file: {exc}", path=str(path))


def _clean_table(table: dict) -> dict[str, list[str]]:
    """Normalize names/tokens and drop fields whose content is just "none"."""
    out: dict[str, list[str]] = {}
    for name, tokens in table.items():
        name = normalize_token(str(name))
        toks = [normalize_token(str(t)) for t in tokens]
        toks = [t for t in toks if t]
        if not toks or toks == [NONE_VALUE]:
            continue
        out.setdefault(name, []).extend(toks)
    return out


def build_vocabularies(records, word_cap: int, min_field_count: int) -> Vocabularies:
    """Count a record stream and close the two vocabularies.

    Words: the word_cap most frequent tokens across targets and table
    content, ties broken by first occurrence; reserved symbols sit on
    top and do not consume the cap. Fields: names appearing in at least
    min_field_count records (presence-counted, once per record); rarer
    names fall to the unknown field at encode time.
    """
    word_counts: Counter[str] = Counter()
    word_first: dict[str, int] = {}
    field_counts: Counter[str] = Counter()
    field_first: dict[str, int] = {}
    tick = 0

    def see_word(tok: str):
        nonlocal tick
        word_counts[tok] += 1
        if tok not in word_first:
            word_first[tok] = tick
        tick += 1

    n_records = 0
    for rec in records:
        n_records += 1
        table = _clean_table(rec["table"])
        for tok in rec["target"]:
            see_word(normalize_token(str(tok)))
        for name, toks in table.items():
            if name not in field_first:
                field_first[name] = tick
            field_counts[name] += 1
            for tok in toks:
                see_word(tok)
    if n_records == 0:
        raise DataError("empty record stream: cannot build vocabularies")

    ranked = sorted(word_counts, key=lambda w: (-word_counts[w], word_first[w]))
    kept = [w for w in ranked if w not in RESERVED_WORDS][:word_cap]
    fields = [f for f in sorted(field_counts, key=lambda f: (-field_counts[f], field_first[f]))
              if field_counts[f] >= min_field_count and f != UNKNOWN_FIELD]
    return Vocabularies(id_to_word=RESERVED_WORDS + kept,
                        id_to_field=[UNKNOWN_FIELD] + fields)


@dataclass
class InfoboxTable:
    """Encoded table: one entry per content token, in table order.

    A multi-token value occupies consecutive positions sharing one
    field id. raw_tokens keeps the normalized surface forms so the copy
    mechanism can emit tokens the word vocabulary does not contain.
    """

    field_ids: list[int]
    word_ids: list[int]
    raw_tokens: list[str]

    @property
    def size(self) -> int:
        return len(self.field_ids)

    @property
    def pairs(self) -> list[tuple[int, int, str]]:
        return list(zip(self.field_ids, self.word_ids, self.raw_tokens))

    def copy_candidates(self) -> dict[str, list[int]]:
        """Every raw token with the exact 0-based positions where it occurs."""
        out: dict[str, list[int]] = {}
        for i, tok in enumerate(self.raw_tokens):
            out.setdefault(tok, []).append(i)
        return out


def parse_table(table: dict, vocab: Vocabularies) -> InfoboxTable:
    cleaned = _clean_table(table)
    if not cleaned:
        raise DataError("table has no usable fields after filtering")
    field_ids, word_ids, raw = [], [], []
    for name, toks in cleaned.items():
        fid = vocab.field_id(name)
        for tok in toks:
            field_ids.append(fid)
            word_ids.append(vocab.word_id(tok))
            raw.append(tok)
    return InfoboxTable(field_ids=field_ids, word_ids=word_ids, raw_tokens=raw)


@dataclass
class Example:
    """One training/eval item: encoded table plus tokenized target."""

    table: InfoboxTable
    target_tokens: list[str]          # normalized surface, no terminator
    target_ids: list[int]             # word ids, EOS-terminated
    copy_candidates: dict[str, list[int]]


def make_example(record: dict, vocab: Vocabularies) -> Example:
    table = parse_table(record["table"], vocab)
    target_tokens = [normalize_token(str(t)) for t in record["target"]]
    target_tokens = [t for t in target_tokens if t]
    if not target_tokens:
        raise DataError("record has an empty target")
    target_ids = [vocab.word_id(t) for t in target_tokens] + [EOS_ID]
    return Example(table=table, target_tokens=target_tokens,
                   target_ids=target_ids, copy_candidates=table.copy_candidates())


def encode_corpus(records, vocab: Vocabularies) -> list[Example]:
    return [make_example(rec, vocab) for rec in records]


# ---- canonical JSONL record files -----------------------------------


def write_records(path, records) -> None:
    with open(path, "w", encoding="utf-8") as fh:
        for rec in records:
            fh.write(json.dumps(rec, ensure_ascii=False) + "\n")


def read_records(path) -> list[dict]:
    records = []
    with open(path, encoding="utf-8") as fh:
        for lineno, line in enumerate(fh, start=1):
            line = line.strip()
            if not line:
                continue
            try:
                rec = json.loads(line)
            except json.JSONDecodeError as exc:
                raise DataError(f"bad JSON: {exc.msg}", path=str(path), line=lineno)
            if not isinstance(rec, dict) or "table" not in rec or "target" not in rec:
                raise DataError("record needs 'table' and 'target' keys",
                                path=str(path), line=lineno)
            records.append(rec)
    if not records:
        raise DataError("no records found", path=str(path))
    return records


# ---- infobox/sentence paired-file adapter ----------------------------


def ingest_paired_files(table_path, text_path) -> list[dict]:
    """Read the paired table/sentence format into raw records.

    Table lines hold whitespace-separated ``fieldname_k:token`` items
    (k is the 1-based token index within the field); sentence lines hold
    the plain tokenized target. Line i of one file pairs with line i of
    the other. Any malformed item is an error naming file and line.
    """
    table_lines = Path(table_path).read_text(encoding="utf-8").splitlines()
    text_lines = Path(text_path).read_text(encoding="utf-8").splitlines()
    if len(table_lines) != len(text_lines):
        raise DataError(f"line count mismatch: {len(table_lines)} tables vs "
                        f"{len(text_lines)} sentences", path=str(table_path))
    records = []
    for lineno, (tline, sline) in enumerate(zip(table_lines, text_lines), start=1):
        if not tline.strip():
            raise DataError("empty table line", path=str(table_path), line=lineno)
        fields: dict[str, list[tuple[int, str]]] = {}
        order: list[str] = []
        for item in tline.split():
            head, colon, value = item.partition(":")
            if not colon or not value:
                raise DataError(f"item {item!r} is not fieldname_k:token",
                                path=str(table_path), line=lineno)
            name, _, k = head.rpartition("_")
            if not name or not k.isdigit():
                raise DataError(f"item {item!r} has no _k token index",
                                path=str(table_path), line=lineno)
            name = normalize_token(name)
            if name not in fields:
                fields[name] = []
                order.append(name)
            fields[name].append((int(k), normalize_token(value)))
        table = {}
        for name in order:
            toks = [tok for _, tok in sorted(fields[name], key=lambda kv: kv[0])]
            if toks == [NONE_VALUE]:
                continue
            table[name] = toks
        target = [normalize_token(t) for t in sline.split() if normalize_token(t)]
        if not target:
            raise DataError("empty sentence line", path=str(text_path), line=lineno)
        records.append({"table": table, "target": target})
    if not records:
        raise DataError("no records found", path=str(table_path))
    return records


# ---- corpus directories ----------------------------------------------


@dataclass
class CorpusDir:
    """Encoded splits loaded back from a corpus directory."""

    train: list["Example"]
    valid: list["Example"]
    test: list["Example"]
    train_records: list[dict]
    valid_records: list[dict]
    test_records: list[dict]
    vocab: Vocabularies
    truth: dict[str, set[str]] | None


def write_split_dir(out_dir, train_records, valid_records, test_records,
                    vocab: Vocabularies, spec_json: dict | None = None,
                    truth: dict[str, set[str]] | None = None) -> None:
    """Lay a corpus out on disk: three JSONL splits plus the vocabulary,
    and for synthetic data the generating spec and ground-truth order."""
    out = Path(out_dir)
    out.mkdir(parents=True, exist_ok=True)
    write_records(out / "train.jsonl", train_records)
    write_records(out / "valid.jsonl", valid_records)
    write_records(out / "test.jsonl", test_records)
    vocab.save(out / "vocab.json")
    if spec_json is not None:
        (out / "spec.json").write_text(json.dumps(spec_json, indent=2))
    if truth is not None:
        blob = {src: sorted(dst) for src, dst in truth.items()}
        (out / "truth.json").write_text(json.dumps(blob, indent=2))


def read_corpus_dir(path) -> CorpusDir:
    p = Path(path)
    if not (p / "vocab.json").exists():
        raise DataError("not a corpus directory (no vocab.json)", path=str(p))
    vocab = Vocabularies.load(p / "vocab.json")
    splits = {}
    records = {}
    for name in ("train", "valid", "test"):
        records[name] = read_records(p / f"{name}.jsonl")
        splits[name] = encode_corpus(records[name], vocab)
    truth = None
    if (p / "truth.json").exists():
        blob = json.loads((p / "truth.json").read_text())
        truth = {src: set(dst) for src, dst in blob.items()}
    return CorpusDir(train=splits["train"], valid=splits["valid"],
                     test=splits["test"], train_records=records["train"],
                     valid_records=records["valid"], test_records=records["test"],
                     vocab=vocab, truth=truth)


# ---- synthetic corpora ----------------------------------------------


@dataclass
class FieldSpec:
    """One field of a synthetic table.

    Either ``values`` (a finite pool of token sequences, drawn uniformly)
    or ``name_like`` (that many freshly generated rare tokens per
    example, which end up outside the word vocabulary and exercise the
    copy path). include_prob < 1 leaves the field out of some tables.
    """

    name: str
    values: list[list[str]] | None = None
    name_like: int = 0
    include_prob: float = 1.0


@dataclass
class CorpusSpec:
    """Recipe for a synthetic corpus.

    transitions maps a field name (or "start") to a weighted successor
    row; the walk ends at "end" or on an exhausted row. Every generated
    target mentions its table's fields in walk order, so the transition
    rules double as the ground truth for link diagnostics.

    branch_on names a field whose value token switches the whole
    transition table: if that field is present and its first token has
    an entry in branches, the walk uses that table instead. This builds
    corpora whose field order depends on table content, which a purely
    field-level order model cannot capture.
    """

    fields: list[FieldSpec]
    transitions: dict[str, dict[str, float]]
    size: int = 2000
    seed: int = 13
    word_cap: int = 100
    min_field_count: int = 1
    branch_on: str | None = None
    branches: dict[str, dict[str, dict[str, float]]] | None = None

    def to_json(self) -> dict:
        return {
            "fields": [{"name": f.name, "values": f.values,
                        "name_like": f.name_like, "include_prob": f.include_prob}
                       for f in self.fields],
            "transitions": self.transitions,
            "size": self.size, "seed": self.seed,
            "word_cap": self.word_cap, "min_field_count": self.min_field_count,
            "branch_on": self.branch_on, "branches": self.branches,
        }

    @classmethod
    def from_json(cls, blob: dict) -> "CorpusSpec":
        try:
            fields = [FieldSpec(name=f["name"], values=f.get("values"),
                                name_like=f.get("name_like", 0),
                                include_prob=f.get("include_prob", 1.0))
                      for f in blob["fields"]]
            return cls(fields=fields, transitions=blob["transitions"],
                       size=blob["size"], seed=blob.get("seed", 13),
                       word_cap=blob["word_cap"],
                       min_field_count=blob.get("min_field_count", 1),
                       branch_on=blob.get("branch_on"),
                       branches=blob.get("branches"))
        except (KeyError, TypeError) as exc:
            raise DataError(f"bad corpus spec: {exc}")

    def all_transition_tables(self) -> list[dict[str, dict[str, float]]]:
        tables = [self.transitions]
        if self.branches:
            tables.extend(self.branches.values())
        return tables


@dataclass
class SyntheticCorpus:
    """Generated splits plus everything needed to audit them."""

    train: list[Example]
    valid: list[Example]
    test: list[Example]
    train_records: list[dict]
    valid_records: list[dict]
    test_records: list[dict]
    truth: dict[str, set[str]]        # field -> true successor fields
    vocab: Vocabularies
    spec: CorpusSpec


_SYLLABLES = ["ba", "bel", "dor", "fen", "gar", "hul", "jin", "kto", "lan", "mir",
              "nor", "pra", "quu", "rov", "sil", "tam", "ulf", "vex", "wim", "zor"]


def _rare_token(rng: np.random.Generator) -> str:
    # 3-4 syllables: a combination space large enough that individual
    # tokens stay far below the frequency of any closed-pool token
    n = 3 + int(rng.integers(0, 2))
    return "".join(_SYLLABLES[int(i)] for i in rng.integers(0, len(_SYLLABLES), size=n))


def _sample_walk(transitions: dict[str, dict[str, float]], rng: np.random.Generator) -> list[str]:
    """One field ordering consistent with the transition rules."""
    order: list[str] = []
    row = transitions.get("start", {})
    while True:
        choices = [(f, w) for f, w in row.items() if w > 0 and (f == "end" or f not in order)]
        if not choices:
            return order
        names = [f for f, _ in choices]
        weights = np.array([w for _, w in choices], dtype=np.float64)
        nxt = names[int(rng.choice(len(names), p=weights / weights.sum()))]
        if nxt == "end":
            return order
        order.append(nxt)
        row = transitions.get(nxt, {})


def generate_synthetic_corpus(spec: CorpusSpec) -> SyntheticCorpus:
    """Deterministically expand a CorpusSpec into encoded 80/10/10 splits.

    The same spec (seed included) always yields byte-identical records.
    The returned truth table is read straight off the transition rules.
    """
    rng = np.random.default_rng(spec.seed)
    records = []
    for _ in range(spec.size):
        present = [f for f in spec.fields if rng.random() < f.include_prob]
        if not present:
            present = [spec.fields[int(rng.integers(len(spec.fields)))]]
        by_name = {f.name: f for f in present}
        values: dict[str, list[str]] = {}
        for f in present:
            if f.name_like > 0:
                values[f.name] = [_rare_token(rng) for _ in range(f.name_like)]
            elif f.values:
                values[f.name] = list(f.values[int(rng.integers(len(f.values)))])
            else:
                raise DataError(f"field {f.name!r} has neither values nor name_like")
        transitions = spec.transitions
        if spec.branch_on and spec.branches and spec.branch_on in values:
            transitions = spec.branches.get(values[spec.branch_on][0], transitions)
        walk = _sample_walk(transitions, rng)
        mentioned = [name for name in walk if name in by_name]
        table = {f.name: values[f.name] for f in spec.fields if f.name in by_name}
        target = [tok for name in mentioned for tok in values[name]] + ["."]
        records.append({"table": table, "target": target})

    n = spec.size
    n_train = int(round(n * 0.8))
    n_valid = int(round(n * 0.1))
    train_records = records[:n_train]
    valid_records = records[n_train:n_train + n_valid]
    test_records = records[n_train + n_valid:]

    vocab = build_vocabularies(train_records, spec.word_cap, spec.min_field_count)
    truth: dict[str, set[str]] = {}
    for table_rules in spec.all_transition_tables():
        for src, row in table_rules.items():
            if src == "start":
                continue
            truth.setdefault(src, set()).update(
                dst for dst, w in row.items() if w > 0 and dst != "end")
    return SyntheticCorpus(
        train=encode_corpus(train_records, vocab),
        valid=encode_corpus(valid_records, vocab),
        test=encode_corpus(test_records, vocab),
        train_records=train_records, valid_records=valid_records,
        test_records=test_records, truth=truth, vocab=vocab, spec=spec)


# ---- presets ---------------------------------------------------------


def _chain(*names: str) -> dict[str, dict[str, float]]:
    rows = {"start": {names[0]: 1.0}}
    for a, b in zip(names, names[1:]):
        rows[a] = {b: 1.0}
    rows[names[-1]] = {"end": 1.0}
    return rows


_CITIES = [["arlem"], ["brovno"], ["calder"], ["drenth"], ["esker"], ["falen"],
           ["gorlin"], ["harwick"], ["istra"], ["jelgrad"], ["kovel"], ["lurgan"],
           ["morvan"], ["nesbit"], ["ostrov"], ["pellam"], ["quorn"], ["ruthin"],
           ["selby"], ["tirane"]]

_NATIONALITIES = [["british"], ["french"], ["german"], ["italian"], ["spanish"],
                  ["dutch"], ["polish"], ["swedish"], ["danish"], ["irish"],
                  ["greek"], ["czech"]]

_OCCUPATIONS = [["writer"], ["painter"], ["engineer"], ["historian"], ["botanist"],
                ["composer"], ["architect"], ["chemist"], ["sculptor"], ["linguist"],
                ["geologist"], ["economist"]]

_YEARS = [[str(y)] for y in range(1941, 1986)]

_TEAMS = [["albion"], ["rovers"], ["unity"], ["wanderers"], ["juniors"],
          ["rangers"], ["county"], ["thistle"], ["harriers"], ["borough"]]

_AWARDS = [["laurel"], ["medal"], ["shield"], ["garland"], ["cup"],
           ["plaque"], ["ribbon"], ["crest"], ["banner"], ["torch"]]

_LANDMARKS = ["abbey", "bastion", "citadel", "dome", "forum",
              "gallery", "harbor", "keep", "obelisk", "spire"]

_SHADES = [["crimson"], ["amber"], ["teal"], ["ochre"], ["violet"],
           ["indigo"], ["sable"], ["pearl"], ["russet"], ["jade"]]

_METALS = [["copper"], ["iron"], ["silver"], ["cobalt"], ["zinc"],
           ["pewter"], ["bronze"], ["nickel"], ["brass"], ["chrome"]]

# two-token values where both orders occur: any reader that can only see
# a field's tokens as an unordered set gets the order wrong half the time
_TRADE_PAIRS = [("writer", "painter"), ("engineer", "historian"),
                ("botanist", "composer"), ("architect", "chemist")]
_TRADES = [[a, b] for a, b in _TRADE_PAIRS] + [[b, a] for a, b in _TRADE_PAIRS]


def order_copy_spec(size: int = 2000, seed: int = 13) -> CorpusSpec:
    """Biography-shaped corpus exercising ordering and copying at once.

    Targets are deterministic given the table, but the field order is
    decided by the table's content: the class token ("north"/"south")
    swaps the two city fields. A pure field-order model cannot read the
    class value, so it has to guess which city comes first; content
    attention keyed on the previous word resolves it. One step later the
    tables turn: both city fields draw from one shared pool, so after a
    city token the previous word says nothing about which field is next,
    which only field-level routing can answer. Tail fields are optional
    (no position counting), names are freshly generated rare tokens
    (copy pressure), and trade values are token pairs occurring in both
    orders. The word cap admits exactly the closed pools, keeping every
    name token out of vocabulary.
    """
    fields = [
        FieldSpec("name", name_like=2),
        FieldSpec("class", values=[["north"], ["south"]]),
        FieldSpec("workplace", values=_CITIES),
        FieldSpec("residence", values=_CITIES),
        FieldSpec("born", values=_YEARS, include_prob=0.6),
        FieldSpec("nationality", values=_NATIONALITIES, include_prob=0.6),
        FieldSpec("team", values=_TEAMS, include_prob=0.6),
        FieldSpec("trade", values=_TRADES, include_prob=0.7),
    ]
    north = _chain("name", "class", "workplace", "residence",
                   "born", "nationality", "team", "trade")
    south = _chain("name", "class", "residence", "workplace",
                   "born", "nationality", "team", "trade")
    trade_words = {tok for pair in _TRADES for tok in pair}
    in_vocab = (len(_YEARS) + len(_NATIONALITIES) + len(trade_words)
                + len(_CITIES) + len(_TEAMS) + 2 + 1)
    return CorpusSpec(
        fields=fields,
        transitions=north,
        size=size, seed=seed, word_cap=in_vocab, min_field_count=1,
        branch_on="class", branches={"north": north, "south": south})


def order_branch_spec(size: int = 2000, seed: int = 17) -> CorpusSpec:
    """Ordering stress corpus with every value token in vocabulary.

    Built to pull the attention mechanisms apart when they are the only
    table reader (train with the copy path off). The class token decides
    which of the two always-present city fields is verbalized first;
    only attention keyed on the previous word can read that decision.
    The two city fields share one value pool, so one step later the
    previous word cannot say which field comes next; only field-level
    routing can. Trade values are in-vocabulary token pairs occurring in
    both orders, readable only by position-resolved attention. The
    optional tail fields keep the surface order from being a fixed
    position pattern and give the transition rules skip edges.
    """
    cities, years = _CITIES[:10], _YEARS[:10]
    nats, genres = _NATIONALITIES[:10], _OCCUPATIONS[:10]
    fields = [
        FieldSpec("class", values=[["north"], ["south"]]),
        FieldSpec("workplace", values=cities),
        FieldSpec("residence", values=cities),
        FieldSpec("born", values=years, include_prob=0.6),
        FieldSpec("nationality", values=nats, include_prob=0.6),
        FieldSpec("team", values=_TEAMS, include_prob=0.6),
        FieldSpec("award", values=_AWARDS, include_prob=0.6),
        FieldSpec("genre", values=genres, include_prob=0.6),
    ]
    north = _chain("class", "workplace", "residence", "born",
                   "nationality", "team", "award", "genre")
    south = _chain("class", "residence", "workplace", "born",
                   "nationality", "team", "award", "genre")
    in_vocab = (2 + len(cities) + len(years) + len(nats)
                + len(_TEAMS) + len(_AWARDS) + len(genres) + 1)
    return CorpusSpec(
        fields=fields,
        transitions=north,
        size=size, seed=seed, word_cap=in_vocab, min_field_count=1,
        branch_on="class", branches={"north": north, "south": south})


def order_route_spec(size: int = 1500, seed: int = 23) -> CorpusSpec:
    """Ordering stress corpus with every value token in vocabulary.

    Built to pull the attention mechanisms apart when they are the only
    table reader (train with the copy path off), while keeping every
    transition-rule edge trained at full rate so the learned link
    weights can be ranked against the rules. Three design points:

    - The field order is one fixed chain and every field is always
      present, so each of the ten rule edges is exercised by every
      single example; no edge is diluted by branching or omission.
    - Two fields hold multi-token sequences whose order changes per
      table (the tour of landmarks, the lineup of teams). Field-level
      routing sees a multi-token field as one interchangeable strip of
      positions, so those sequences can only be read in order by
      attention keyed on the previous word.
    - The two city fields share one value pool, as do the two year
      fields, so after such a token the previous word alone cannot say
      which field it came from, and therefore which field comes next;
      those steps need field-level routing to stay on the chain.
    """
    tours = [list(t) for t in itertools.permutations(_LANDMARKS, 3)]
    team_names = [t[0] for t in _TEAMS]
    lineups = [list(t) for t in itertools.permutations(team_names, 3)]
    cities, years, debut_years = _CITIES[:10], _YEARS[:10], _YEARS[10:20]
    nats, shades, styles = _NATIONALITIES[:10], _SHADES[:10], _OCCUPATIONS[:10]
    fields = [
        FieldSpec("tour", values=tours),
        FieldSpec("workplace", values=cities),
        FieldSpec("residence", values=cities),
        FieldSpec("born", values=years),
        FieldSpec("died", values=years),
        FieldSpec("nationality", values=nats),
        FieldSpec("language", values=shades),
        FieldSpec("lineup", values=lineups),
        FieldSpec("style", values=styles),
        FieldSpec("award", values=_AWARDS),
        FieldSpec("debut", values=debut_years),
    ]
    chain = _chain("tour", "workplace", "residence", "born", "died",
                   "nationality", "language", "lineup", "style",
                   "award", "debut")
    in_vocab = (len(_LANDMARKS) + len(cities) + len(years) + len(debut_years)
                + len(nats) + len(shades) + len(team_names)
                + len(styles) + len(_AWARDS))
    return CorpusSpec(fields=fields, transitions=chain, size=size, seed=seed,
                      word_cap=in_vocab, min_field_count=1)


def field_subsets_spec(size: int = 400, seed: int = 29) -> CorpusSpec:
    """Sparse-table corpus: most fields are optional, so many ordered
    field pairs never co-occur. Used to exercise the effective-link
    census on something other than the dense chain."""
    pools = [_YEARS, _NATIONALITIES, _OCCUPATIONS, _CITIES]
    fields = [FieldSpec("name", name_like=2)]
    names = ["era", "origin", "trade", "post", "base", "ward", "lodge"]
    for i, nm in enumerate(names):
        fields.append(FieldSpec(nm, values=pools[i % len(pools)],
                                include_prob=0.45))
    return CorpusSpec(
        fields=fields,
        transitions=_chain("name", *names),
        size=size, seed=seed, word_cap=120, min_field_count=1)


def oov_only_spec(size: int = 400, seed: int = 31) -> CorpusSpec:
    """Targets consist of nothing but rare table tokens (plus the final
    period); without the copy path these references are unreachable."""
    return CorpusSpec(
        fields=[FieldSpec("name", name_like=2)],
        transitions=_chain("name"),
        size=size, seed=seed, word_cap=1, min_field_count=1)


PRESETS = {
    "order-copy": order_copy_spec,
    "order-branch": order_branch_spec,
    "order-route": order_route_spec,
    "field-subsets": field_subsets_spec,
    "oov-only": oov_only_spec,
}
