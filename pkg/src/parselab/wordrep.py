"""Type vectors (word/POS/char) and token vectors via bi/bw/fw extraction.

A type vector is word-emb [+ pos-emb] [+ char-BiLSTM final states]; token
vectors contextualize type vectors with the configured sequence extractor.
The artificial root gets dedicated word/POS/char entries and participates
in the sequence LSTMs at a prepended position 0.
"""

from dataclasses import dataclass

from .autodiff import LstmCellParams, concat, lookup_row, run_lstm
from .conllu import base_label

UNK = 0
ROOT = 1
_NUM_RESERVED = 2

EXTRACTORS = ("bi", "bw", "fw")
COMPOSITIONS = ("none", "rc", "lc")


class Vocabulary:
    """Frozen string-to-index maps for words, POS tags, characters and
    relation labels; words below min_count map to the unknown index."""

    def __init__(self, words, upos, chars, deprels, word_freq):
        self.words = list(words)
        self.upos = list(upos)
        self.chars = list(chars)
        self.deprels = list(deprels)
        self.word_freq = dict(word_freq)
        self._word_index = {w: i + _NUM_RESERVED for i, w in enumerate(self.words)}
        self._upos_index = {p: i + _NUM_RESERVED for i, p in enumerate(self.upos)}
        self._char_index = {c: i + _NUM_RESERVED for i, c in enumerate(self.chars)}
        self._deprel_index = {r: i for i, r in enumerate(self.deprels)}

    @property
    def n_words(self):
        return len(self.words) + _NUM_RESERVED

    @property
    def n_upos(self):
        return len(self.upos) + _NUM_RESERVED

    @property
    def n_chars(self):
        return len(self.chars) + _NUM_RESERVED

    @property
    def n_deprels(self):
        return len(self.deprels)

    @property
    def n_rel_dirs(self):
        return 2 * len(self.deprels)

    def word_id(self, form):
        return self._word_index.get(form, UNK)

    def upos_id(self, tag):
        if tag is None:
            return UNK
        return self._upos_index.get(tag, UNK)

    def char_ids(self, form):
        return [self._char_index.get(ch, UNK) for ch in form]

    def deprel_id(self, label):
        return self._deprel_index[base_label(label)]

    def deprel_of(self, index):
        return self.deprels[index]

    def rel_dir_id(self, label, direction):
        if direction not in ("left", "right"):
            raise ValueError(f"bad arc direction {direction!r}")
        return 2 * self.deprel_id(label) + (1 if direction == "right" else 0)

    def freq(self, form):
        return self.word_freq.get(form, 0)


def build_vocab(tb, min_count=1):
    """Vocabulary over a treebank; forms rarer than min_count map to UNK."""
    freq = {}
    for sent in tb:
        for tok in sent.tokens:
            freq[tok.form] = freq.get(tok.form, 0) + 1
    words, upos, chars, deprels = [], [], [], []
    seen_w, seen_p, seen_c, seen_r = set(), set(), set(), set()
    for sent in tb:
        for tok in sent.tokens:
            if freq[tok.form] >= min_count and tok.form not in seen_w:
                seen_w.add(tok.form)
                words.append(tok.form)
            if tok.upos is not None and tok.upos not in seen_p:
                seen_p.add(tok.upos)
                upos.append(tok.upos)
            for ch in tok.form:
                if ch not in seen_c:
                    seen_c.add(ch)
                    chars.append(ch)
            if tok.deprel is not None:
                rel = base_label(tok.deprel)
                if rel not in seen_r:
                    seen_r.add(rel)
                    deprels.append(rel)
    return Vocabulary(words, upos, chars, deprels, freq)


@dataclass
class ReprConfig:
    use_pos: bool = True
    use_char: bool = True
    extractor: str = "bi"
    composition: str = "none"
    word_dim: int = 100
    pos_dim: int = 20
    char_dim: int = 24
    char_hidden: int = 50
    seq_hidden: int = 125

    def __post_init__(self):
        if self.extractor not in EXTRACTORS:
            raise ValueError(f"extractor must be one of {EXTRACTORS}, got {self.extractor!r}")
        if self.composition not in COMPOSITIONS:
            raise ValueError(f"composition must be one of {COMPOSITIONS}, got {self.composition!r}")

    @property
    def type_dim(self):
        dim = self.word_dim
        if self.use_pos:
            dim += self.pos_dim
        if self.use_char:
            dim += 2 * self.char_hidden
        return dim

    @property
    def token_dim(self):
        return 2 * self.seq_hidden if self.extractor == "bi" else self.seq_hidden


class WordRepParams:
    """Embedding tables plus character and sequence LSTM parameters, created
    in a ParameterStore according to the active configuration."""

    def __init__(self, store, vocab, cfg):
        self.cfg = cfg
        self.word = store.add("emb.word", vocab.n_words, cfg.word_dim)
        self.pos = store.add("emb.pos", vocab.n_upos, cfg.pos_dim) if cfg.use_pos else None
        if cfg.use_char:
            self.char = store.add("emb.char", vocab.n_chars, cfg.char_dim)
            self.char_fwd = LstmCellParams(store, "char.fwd", cfg.char_dim, cfg.char_hidden)
            self.char_bwd = LstmCellParams(store, "char.bwd", cfg.char_dim, cfg.char_hidden)
        else:
            self.char = None
        if cfg.extractor in ("bi", "fw"):
            self.seq_fwd = LstmCellParams(store, "seq.fwd", cfg.type_dim, cfg.seq_hidden)
        if cfg.extractor in ("bi", "bw"):
            self.seq_bwd = LstmCellParams(store, "seq.bwd", cfg.type_dim, cfg.seq_hidden)


def _char_component(char_ids, params):
    xs = [lookup_row(params.char, i) for i in char_ids]
    fwd = run_lstm(params.char_fwd, xs, "forward")
    bwd = run_lstm(params.char_bwd, xs, "backward")
    return concat([fwd[-1], bwd[0]])


def type_vector(token, vocab, cfg, params, rng=None, dropout_alpha=0.0):
    """x_i = word-emb [∘ pos-emb] [∘ char final states] for one token.

    With an rng, the word index is replaced by UNK with probability
    alpha / (alpha + freq(form)) so the unknown embedding gets trained.
    """
    wid = vocab.word_id(token.form)
    if rng is not None and dropout_alpha > 0.0:
        p = dropout_alpha / (dropout_alpha + vocab.freq(token.form))
        if rng.random() < p:
            wid = UNK
    parts = [lookup_row(params.word, wid)]
    if cfg.use_pos:
        parts.append(lookup_row(params.pos, vocab.upos_id(token.upos)))
    if cfg.use_char:
        parts.append(_char_component(vocab.char_ids(token.form), params))
    return parts[0] if len(parts) == 1 else concat(parts)


def root_type_vector(vocab, cfg, params):
    """Type vector of the artificial root (dedicated embeddings, never UNK)."""
    parts = [lookup_row(params.word, ROOT)]
    if cfg.use_pos:
        parts.append(lookup_row(params.pos, ROOT))
    if cfg.use_char:
        parts.append(_char_component([ROOT], params))
    return parts[0] if len(parts) == 1 else concat(parts)


def extract_tokens(sentence, vocab, cfg, params, rng=None, dropout_alpha=0.0):
    """Token vectors for positions 0..n (root prepended at 0).

    bi concatenates index-aligned forward and backward LSTM states; bw/fw
    use a single direction.
    """
    if not sentence.tokens:
        raise ValueError("extract_tokens: empty sentence")
    xs = [root_type_vector(vocab, cfg, params)]
    for tok in sentence.tokens:
        xs.append(type_vector(tok, vocab, cfg, params, rng, dropout_alpha))
    if cfg.extractor == "bi":
        fwd = run_lstm(params.seq_fwd, xs, "forward")
        bwd = run_lstm(params.seq_bwd, xs, "backward")
        return [concat([f, b]) for f, b in zip(fwd, bwd)]
    if cfg.extractor == "fw":
        return run_lstm(params.seq_fwd, xs, "forward")
    return run_lstm(params.seq_bwd, xs, "backward")
