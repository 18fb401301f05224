"""Recursive subtree composition: per-token subtree vectors updated on arcs.

A head's subtree vector starts as a copy of its token vector. Each arc
feeds [head-subtree ; dependent-subtree ; relation] through either an
affine+tanh recurrent cell (+rc) or a shared LSTM cell with a per-head
private carry (+lc). Applied identically at training and parse time on
whatever arcs the parser creates.
"""

from dataclasses import dataclass

from .autodiff import LstmCellParams, Tensor, affine, concat, lookup_row, lstm_step, tanh_op, zeros


class CompositionParams:
    """Relation embeddings plus the rc or lc cell parameters.

    d_c must equal the token-vector dimension of the active extractor;
    inputs to both cells have size 2*d_c + d_r.
    """

    def __init__(self, store, kind, d_c, rel_count, rel_dim=20):
        if kind not in ("rc", "lc"):
            raise ValueError(f"composition cell must be rc or lc, got {kind!r}")
        self.kind = kind
        self.d_c = d_c
        self.rel_dim = rel_dim
        self.rel = store.add("emb.rel", rel_count, rel_dim)
        if kind == "rc":
            self.w = store.add("comp.rc.W", d_c, 2 * d_c + rel_dim)
            self.b = store.add("comp.rc.b", d_c, 1, init="zeros")
        else:
            self.cell = LstmCellParams(store, "comp.lc", 2 * d_c + rel_dim, d_c)

    def rel_vector(self, rel_dir_index):
        return lookup_row(self.rel, rel_dir_index)


@dataclass
class SubtreeState:
    c: Tensor
    memory: tuple | None = None  # (h, c) LSTM carry, present only under +lc


def init_subtree(v):
    """Fresh state for a head: subtree vector is the token vector itself."""
    return SubtreeState(c=v)


def compose_rc(params, head, dep, rel):
    """tanh(W [head.c ; dep.c ; rel] + b) as the head's new subtree vector."""
    x = concat([head.c, dep.c, rel])
    return SubtreeState(c=tanh_op(affine(params.w, x, params.b)))


def compose_lc(params, head, dep, rel):
    """One step of the shared LSTM cell on [head.c ; dep.c ; rel], carrying
    the head's private memory (zero-initialized on first attachment)."""
    if head.memory is None:
        carry = (zeros(params.d_c), zeros(params.d_c))
    else:
        carry = head.memory
    x = concat([head.c, dep.c, rel])
    h_new, c_new = lstm_step(params.cell, carry, x)
    return SubtreeState(c=h_new, memory=(h_new, c_new))


def on_arc(config, head_pos, dep_pos, label, params, vocab):
    """Update the head's subtree state after an arc was added.

    No-op when composition is off (params is None). The dependent's state
    is read but never modified; it is dead after the pop.
    """
    if params is None:
        return
    direction = "left" if dep_pos < head_pos else "right"
    rel = params.rel_vector(vocab.rel_dir_id(label, direction))
    head = config.subtree_state[head_pos]
    dep = config.subtree_state[dep_pos]
    if params.kind == "rc":
        config.subtree_state[head_pos] = compose_rc(params, head, dep, rel)
    else:
        config.subtree_state[head_pos] = compose_lc(params, head, dep, rel)
