"""Unweighted reparsing ensemble: arc votes + maximum spanning arborescence.

Arcs are scored by the number of parsers predicting them; Chu-Liu-Edmonds
extracts the highest-vote arborescence rooted at position 0, ignoring
labels. Final labels come from the majority label among the parsers that
predicted each winning arc.
"""

from collections import Counter
from dataclasses import dataclass

import numpy as np

from .conllu import Sentence, Token, Treebank


@dataclass
class ArcVoteMatrix:
    """votes[h][d] = number of parsers predicting head h for dependent d;
    rows and columns are positions 0..n (column 0 unused)."""
    n: int
    votes: np.ndarray


def collect_votes(trees):
    """Vote matrix from head arrays (1-based lists of equal length)."""
    if not trees:
        raise ValueError("collect_votes: no trees")
    n = len(trees[0])
    for t in trees:
        if len(t) != n:
            raise ValueError(f"collect_votes: length mismatch {len(t)} vs {n}")
    votes = np.zeros((n + 1, n + 1), dtype=np.int64)
    for t in trees:
        for d, h in enumerate(t, start=1):
            votes[h][d] += 1
    return ArcVoteMatrix(n=n, votes=votes)


def _best_incoming(d, candidates):
    # highest weight; ties prefer the lower head index, then the shorter arc
    return min(candidates, key=lambda hw: (-hw[1], hw[0], abs(hw[0] - d)))


def _max_arborescence(nodes, root, weights):
    """Parent map maximizing total weight; weights is {(h, d): w}."""
    incoming = {d: [] for d in nodes if d != root}
    for (h, d), w in weights.items():
        incoming[d].append((h, w))
    best = {d: _best_incoming(d, cands)[0] for d, cands in incoming.items()}

    cycle = None
    for start in best:
        path = []
        seen = set()
        cur = start
        while cur in best and cur not in seen:
            seen.add(cur)
            path.append(cur)
            cur = best[cur]
        if cur in seen:
            cycle = path[path.index(cur):]
            break
    if cycle is None:
        return best

    in_cycle = set(cycle)
    c_id = max(nodes) + 1
    cycle_w = {d: weights[(best[d], d)] for d in in_cycle}
    new_weights = {}
    entry_choice = {}
    exit_choice = {}
    for (h, d), w in weights.items():
        if h in in_cycle and d in in_cycle:
            continue
        if d in in_cycle:
            adj = w - cycle_w[d]
            key = (h, c_id)
            if key not in new_weights or (adj, -d) > (new_weights[key], -entry_choice[h]):
                new_weights[key] = adj
                entry_choice[h] = d
        elif h in in_cycle:
            key = (c_id, d)
            if key not in new_weights or (w, -h) > (new_weights[key], -exit_choice[d]):
                new_weights[key] = w
                exit_choice[d] = h
        else:
            new_weights[(h, d)] = w
    new_nodes = (nodes - in_cycle) | {c_id}
    sub = _max_arborescence(new_nodes, root, new_weights)

    parent = {}
    entry_head = None
    for d, h in sub.items():
        if d == c_id:
            entry_head = h
        elif h == c_id:
            parent[d] = exit_choice[d]
        else:
            parent[d] = h
    for d in in_cycle:
        parent[d] = best[d]
    parent[entry_choice[entry_head]] = entry_head
    return parent


def cle_mst(votes, enforce_single_root=False):
    """Head array of the maximum-vote arborescence rooted at 0.

    The plain arborescence may give the root several dependents; with
    enforce_single_root each candidate root dependent is tried with the
    other root arcs priced out and the best original-weight tree wins.
    """
    matrix = votes.votes if isinstance(votes, ArcVoteMatrix) else np.asarray(votes)
    n = matrix.shape[0] - 1
    if n < 1:
        raise ValueError("cle_mst: need at least one token")
    nodes = set(range(n + 1))

    def solve(weight_of):
        weights = {(h, d): weight_of(h, d)
                   for d in range(1, n + 1) for h in range(0, n + 1) if h != d}
        parent = _max_arborescence(nodes, 0, weights)
        return [parent[d] for d in range(1, n + 1)]

    heads = solve(lambda h, d: float(matrix[h][d]))
    if not enforce_single_root or heads.count(0) <= 1:
        return heads
    big = float(matrix.max()) * (n + 1) + 1.0
    best = None
    for r in range(1, n + 1):
        cand = solve(lambda h, d: float(matrix[h][d]) - (big if h == 0 and d != r else 0.0))
        total = sum(matrix[h][d] for d, h in enumerate(cand, start=1))
        if best is None or total > best[0]:
            best = (total, cand)
    return best[1]


def _majority_label(labels):
    counts = Counter(lbl for lbl in labels if lbl is not None)
    if not counts:
        return None
    top = max(counts.values())
    return sorted(lbl for lbl, c in counts.items() if c == top)[0]


def _combine(template, head_lists, label_lists):
    votes = collect_votes(head_lists)
    heads = cle_mst(votes)
    tokens = []
    for d, tok in enumerate(template.tokens, start=1):
        h = heads[d - 1]
        agreeing = [label_lists[p][d - 1] for p in range(len(head_lists))
                    if head_lists[p][d - 1] == h]
        label = _majority_label(agreeing)
        if label is None:
            label = _majority_label([labels[d - 1] for labels in label_lists])
        tokens.append(Token(tok.id, tok.form, tok.upos, h, label))
    return Sentence(tokens, list(template.comments))


def ensemble_parse(sentence, models):
    """Greedy-parse with every model, vote, and extract the MST."""
    from .model import greedy_parse

    if not models:
        raise ValueError("ensemble_parse: need at least one model")
    preds = [greedy_parse(sentence, m) for m in models]
    return _combine(
        sentence,
        [[t.head for t in p.tokens] for p in preds],
        [[t.deprel for t in p.tokens] for p in preds],
    )


def ensemble_predictions(pred_treebanks):
    """Combine per-parser prediction treebanks (same sentences, same order)."""
    if not pred_treebanks:
        raise ValueError("ensemble_predictions: no inputs")
    counts = {len(tb.sentences) for tb in pred_treebanks}
    if len(counts) != 1:
        raise ValueError("ensemble_predictions: sentence count mismatch")
    out = []
    for idx in range(len(pred_treebanks[0].sentences)):
        sents = [tb.sentences[idx] for tb in pred_treebanks]
        lengths = {len(s.tokens) for s in sents}
        if len(lengths) != 1:
            raise ValueError(f"ensemble_predictions: sentence {idx + 1} length mismatch")
        out.append(_combine(
            sents[0],
            [[t.head for t in s.tokens] for s in sents],
            [[t.deprel for t in s.tokens] for s in sents],
        ))
    return Treebank(out, pred_treebanks[0].name)
