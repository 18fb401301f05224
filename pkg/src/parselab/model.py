"""Parser model: configuration features, MLP transition scoring, greedy
parsing, and margin training under the dynamic oracle.

Features are the token vectors of the two top stack items and the first
buffer item (subtree vectors concatenated when composition is on; a trained
padding vector fills empty slots). The MLP has one tanh hidden layer and
one output per labeled transition:

    index 0               SHIFT
    index 1               SWAP
    index 2 + k           LEFT_ARC(label k)
    index 2 + L + k       RIGHT_ARC(label k)
"""

import json
import struct

import numpy as np

from . import transition as tr
from .autodiff import (ParameterStore, add, backward, concat, pick, relu_op,
                       sub, sum_all, tanh_op, tensor, adam_step, affine)
from .composition import CompositionParams, init_subtree, on_arc
from .conllu import Sentence, Token, Treebank
from .wordrep import ReprConfig, Vocabulary, WordRepParams, extract_tokens

from dataclasses import dataclass


@dataclass
class TrainConfig:
    epochs: int = 30
    seed: int = 1
    margin: float = 1.0
    explore_prob: float = 0.1
    explore_from_epoch: int = 2
    word_dropout_alpha: float = 0.25
    lr: float = 0.001
    beta1: float = 0.9
    beta2: float = 0.999
    eps: float = 1e-8


class ParserModel:
    def __init__(self, vocab, cfg, seed=1, mlp_hidden=100, rel_dim=20):
        self.vocab = vocab
        self.cfg = cfg
        self.seed = seed
        self.mlp_hidden = mlp_hidden
        self.rel_dim = rel_dim
        self.store = ParameterStore(seed)
        self.wordrep = WordRepParams(self.store, vocab, cfg)
        if cfg.composition != "none":
            self.composition = CompositionParams(
                self.store, cfg.composition, cfg.token_dim, vocab.n_rel_dirs, rel_dim)
        else:
            self.composition = None
        self.slot_dim = cfg.token_dim * (2 if self.composition else 1)
        self.pad = self.store.add("pad", self.slot_dim, 1)
        self.n_outputs = 2 + 2 * vocab.n_deprels
        self.w1 = self.store.add("mlp.W1", mlp_hidden, 3 * self.slot_dim)
        self.b1 = self.store.add("mlp.b1", mlp_hidden, 1, init="zeros")
        self.w2 = self.store.add("mlp.W2", self.n_outputs, mlp_hidden)
        self.b2 = self.store.add("mlp.b2", self.n_outputs, 1, init="zeros")

    def transition_index(self, t):
        if t.kind == tr.SHIFT:
            return 0
        if t.kind == tr.SWAP:
            return 1
        k = self.vocab.deprel_id(t.label)
        if t.kind == tr.LEFT_ARC:
            return 2 + k
        return 2 + self.vocab.n_deprels + k

    def index_transition(self, i):
        if i == 0:
            return tr.Transition(tr.SHIFT)
        if i == 1:
            return tr.Transition(tr.SWAP)
        L = self.vocab.n_deprels
        if i < 2 + L:
            return tr.Transition(tr.LEFT_ARC, self.vocab.deprel_of(i - 2))
        return tr.Transition(tr.RIGHT_ARC, self.vocab.deprel_of(i - 2 - L))


def start_config(sentence, model, tokens):
    """Initial configuration with per-position subtree states when
    composition is active."""
    config = tr.initial_config(len(sentence.tokens))
    if model.composition is not None:
        for pos, v in enumerate(tokens):
            config.subtree_state[pos] = init_subtree(v)
    return config


def feature_vector(c, tokens, model):
    """Concatenated slot representations for (s1, s0, b0)."""
    slots = [
        c.stack[-2] if len(c.stack) >= 2 else None,
        c.stack[-1] if c.stack else None,
        c.buffer[0] if c.buffer else None,
    ]
    parts = []
    for pos in slots:
        if pos is None:
            parts.append(model.pad)
        elif model.composition is not None:
            parts.append(concat([tokens[pos], c.subtree_state[pos].c]))
        else:
            parts.append(tokens[pos])
    return concat(parts)


def score(c, tokens, model):
    """Unnormalized scores over all labeled transitions."""
    f = feature_vector(c, tokens, model)
    hidden = tanh_op(affine(model.w1, f, model.b1))
    return affine(model.w2, hidden, model.b2)


def _legal_indices(c, model):
    out = []
    L = model.vocab.n_deprels
    if tr.legal(c, tr.SHIFT):
        out.append(0)
    if tr.legal(c, tr.SWAP):
        out.append(1)
    if tr.legal(c, tr.LEFT_ARC):
        out.extend(range(2, 2 + L))
    if tr.legal(c, tr.RIGHT_ARC):
        out.extend(range(2 + L, 2 + 2 * L))
    return out


def _advance(c, t, tokens, model):
    """Apply a transition and run composition on any created arc."""
    arc = tr.arc_of(c, t.kind)
    nxt = tr.apply(c, t)
    if arc is not None:
        on_arc(nxt, arc[0], arc[1], t.label, model.composition, model.vocab)
    return nxt


def greedy_parse(sentence, model, trace=None):
    """Parse with the highest-scoring legal transition until terminal.

    Returns a Sentence carrying predicted heads and labels. The gold
    columns of the input are never read.
    """
    tokens = extract_tokens(sentence, model.vocab, model.cfg, model.wordrep)
    config = start_config(sentence, model, tokens)
    cap = tr.step_cap(len(sentence.tokens))
    while not tr.is_terminal(config):
        assert config.steps <= cap, "transition cap exceeded"
        legal = _legal_indices(config, model)
        assert legal, "no legal transition in non-terminal configuration"
        s = score(config, tokens, model).data[:, 0]
        best = max(legal, key=lambda i: (s[i], -i))
        t = model.index_transition(best)
        config = _advance(config, t, tokens, model)
        if trace is not None:
            trace.append(tr.trace_line(t, config))
    heads = config.heads()
    labels = config.labels()
    out = [Token(t.id, t.form, t.upos, heads[t.id - 1], labels[t.id - 1])
           for t in sentence.tokens]
    return Sentence(out, list(sentence.comments))


def parse_treebank(tb, model, trace=None):
    return Treebank([greedy_parse(s, model, trace) for s in tb.sentences], tb.name)


def _labeled_costs(c, verdict, model):
    """(index, cost) pairs over legal labeled transitions.

    Arc transitions with the correct head but a non-gold label cost one
    more than the base; with a wrong head every label costs the base.
    """
    out = []
    L = model.vocab.n_deprels
    for kind, base in verdict.costs.items():
        if kind == tr.SHIFT:
            out.append((0, base))
        elif kind == tr.SWAP:
            out.append((1, base))
        else:
            offset = 2 if kind == tr.LEFT_ARC else 2 + L
            gold = verdict.gold_labels.get(kind)
            gold_k = model.vocab.deprel_id(gold) if gold is not None else None
            for k in range(L):
                extra = 1 if (kind in verdict.gold_labels and k != gold_k) else 0
                out.append((offset + k, base + extra))
    return out


def train_sentence(sentence, model, tcfg, rng, explore=True):
    """One dynamic-oracle episode over a gold sentence; returns its loss.

    At each step the margin between the best zero-cost transition g and the
    best costly transition w is enforced with a hinge; with probability
    explore_prob the parser follows w instead when w outscores g.
    """
    proj = tr.projective_order(sentence)
    tokens = extract_tokens(sentence, model.vocab, model.cfg, model.wordrep,
                            rng, tcfg.word_dropout_alpha)
    config = start_config(sentence, model, tokens)
    cap = tr.step_cap(len(sentence.tokens))
    hinges = []
    total = 0.0
    while not tr.is_terminal(config):
        assert config.steps <= cap, "transition cap exceeded"
        verdict = tr.oracle(config, sentence, proj)
        costs = _labeled_costs(config, verdict, model)
        zero = [i for i, cost in costs if cost == 0]
        pos = [i for i, cost in costs if cost > 0]
        assert zero, "oracle produced no zero-cost transition"
        scores = score(config, tokens, model)
        s = scores.data[:, 0]
        g = max(zero, key=lambda i: (s[i], -i))
        follow = g
        if pos:
            w = max(pos, key=lambda i: (s[i], -i))
            if s[w] > s[g] - tcfg.margin:
                hinge = relu_op(add(sub(pick(scores, w), pick(scores, g)),
                                    tensor([[tcfg.margin]])))
                hinges.append(hinge)
                total += float(hinge.data[0, 0])
            if explore and s[w] > s[g] and rng.random() < tcfg.explore_prob:
                follow = w
        t = model.index_transition(follow)
        assert tr.legal(config, t.kind)
        config = _advance(config, t, tokens, model)
    if hinges:
        loss = hinges[0] if len(hinges) == 1 else sum_all(concat(hinges))
        backward(loss)
        adam_step(model.store, tcfg.lr, tcfg.beta1, tcfg.beta2, tcfg.eps)
    return total


def train(tb, model, tcfg, dev=None, log_fn=None):
    """Seeded training with per-epoch metrics; keeps best-dev-LAS parameters.

    Returns a list of dicts with keys epoch, train_loss, dev_las, dev_uas
    (the latter two None without a dev treebank).
    """
    from .eval import score_trees

    if not tb.sentences:
        raise ValueError("train: empty treebank")
    rng = np.random.default_rng(tcfg.seed)
    sentences = list(tb.sentences)
    metrics = []
    best_las = -1.0
    best_params = None
    for epoch in range(1, tcfg.epochs + 1):
        order = rng.permutation(len(sentences))
        explore = epoch >= tcfg.explore_from_epoch
        total = 0.0
        for i in order:
            total += train_sentence(sentences[i], model, tcfg, rng, explore)
        row = {"epoch": epoch, "train_loss": total / len(sentences),
               "dev_las": None, "dev_uas": None}
        if dev is not None:
            result = score_trees(dev, parse_treebank(dev, model))
            row["dev_las"] = result.las
            row["dev_uas"] = result.uas
            if result.las > best_las:
                best_las = result.las
                best_params = model.store.copy_values()
        metrics.append(row)
        if log_fn is not None:
            log_fn(row)
    if best_params is not None:
        model.store.load_values(best_params)
    return metrics


MAGIC = b"PSLB1\n"

# Model file layout (little-endian):
#   magic "PSLB1\n"
#   u64 header length, then that many bytes of JSON (sorted keys) holding
#     the configuration block and the vocabulary lists
#   u32 parameter count, then per parameter in store order:
#     u16 name length, name UTF-8, u32 rows, u32 cols, rows*cols float64


def save_model(model, path):
    header = {
        "config": {
            "use_pos": model.cfg.use_pos,
            "use_char": model.cfg.use_char,
            "extractor": model.cfg.extractor,
            "composition": model.cfg.composition,
            "word_dim": model.cfg.word_dim,
            "pos_dim": model.cfg.pos_dim,
            "char_dim": model.cfg.char_dim,
            "char_hidden": model.cfg.char_hidden,
            "seq_hidden": model.cfg.seq_hidden,
            "mlp_hidden": model.mlp_hidden,
            "rel_dim": model.rel_dim,
            "seed": model.seed,
        },
        "vocab": {
            "words": model.vocab.words,
            "upos": model.vocab.upos,
            "chars": model.vocab.chars,
            "deprels": model.vocab.deprels,
            "word_freq": model.vocab.word_freq,
        },
    }
    blob = json.dumps(header, sort_keys=True, separators=(",", ":")).encode("utf-8")
    with open(path, "wb") as f:
        f.write(MAGIC)
        f.write(struct.pack("<Q", len(blob)))
        f.write(blob)
        f.write(struct.pack("<I", len(model.store)))
        for name, t in model.store.items():
            nb = name.encode("utf-8")
            rows, cols = t.data.shape
            f.write(struct.pack("<H", len(nb)))
            f.write(nb)
            f.write(struct.pack("<II", rows, cols))
            f.write(t.data.astype("<f8").tobytes(order="C"))


def load_model(path):
    with open(path, "rb") as f:
        if f.read(len(MAGIC)) != MAGIC:
            raise ValueError(f"{path}: not a parselab model file")
        (hlen,) = struct.unpack("<Q", f.read(8))
        header = json.loads(f.read(hlen).decode("utf-8"))
        cfgd = header["config"]
        vd = header["vocab"]
        vocab = Vocabulary(vd["words"], vd["upos"], vd["chars"], vd["deprels"],
                           vd["word_freq"])
        cfg = ReprConfig(
            use_pos=cfgd["use_pos"], use_char=cfgd["use_char"],
            extractor=cfgd["extractor"], composition=cfgd["composition"],
            word_dim=cfgd["word_dim"], pos_dim=cfgd["pos_dim"],
            char_dim=cfgd["char_dim"], char_hidden=cfgd["char_hidden"],
            seq_hidden=cfgd["seq_hidden"],
        )
        model = ParserModel(vocab, cfg, seed=cfgd["seed"],
                            mlp_hidden=cfgd["mlp_hidden"], rel_dim=cfgd["rel_dim"])
        (count,) = struct.unpack("<I", f.read(4))
        if count != len(model.store):
            raise ValueError(f"{path}: parameter count mismatch")
        for name, t in model.store.items():
            (nlen,) = struct.unpack("<H", f.read(2))
            fname = f.read(nlen).decode("utf-8")
            if fname != name:
                raise ValueError(f"{path}: parameter order mismatch ({fname!r} != {name!r})")
            rows, cols = struct.unpack("<II", f.read(8))
            if (rows, cols) != t.data.shape:
                raise ValueError(f"{path}: shape mismatch for {name}")
            raw = f.read(rows * cols * 8)
            t.data[...] = np.frombuffer(raw, dtype="<f8").reshape(rows, cols)
    return model
