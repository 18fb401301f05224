import numpy as np
import pytest

from parselab import transition as tr

from reference import (brute_costs, is_nonprojective, min_loss, random_tree,
                       reachable_states, ref_allowed, ref_apply)


def test_initial_config():
    c = tr.initial_config(3)
    assert c.stack == [0]
    assert c.buffer == [1, 2, 3]
    assert c.arcs == {}
    c1 = tr.initial_config(1)
    assert c1.stack == [0] and c1.buffer == [1]
    with pytest.raises(ValueError):
        tr.initial_config(0)


def test_initial_config_only_shift_legal():
    c = tr.initial_config(4)
    assert tr.legal_kinds(c) == [tr.SHIFT]


def test_stack_and_empty_buffer_only_right_arc():
    c = tr.Configuration(stack=[0, 1], buffer=[], arcs={d: (0, "x") for d in (2, 3)})
    assert tr.legal_kinds(c) == [tr.RIGHT_ARC]


def test_swap_illegal_after_reordering():
    # stack [0, 2] with buffer [1, ...]: original position of s0 exceeds b0
    c = tr.Configuration(stack=[0, 2], buffer=[1, 3], arcs={})
    assert not tr.legal(c, tr.SWAP)


def test_apply_right_arc():
    c = tr.Configuration(stack=[0, 1], buffer=[2], arcs={})
    nxt = tr.apply(c, tr.Transition(tr.RIGHT_ARC, "obj"))
    assert nxt.arcs == {1: (0, "obj")}
    assert nxt.stack == [0]
    assert nxt.buffer == [2]


def test_apply_shift():
    c = tr.Configuration(stack=[0], buffer=[1, 2], arcs={})
    nxt = tr.apply(c, tr.Transition(tr.SHIFT))
    assert nxt.stack == [0, 1] and nxt.buffer == [2]


def test_apply_swap_reinserts_after_front():
    c = tr.Configuration(stack=[0, 1], buffer=[2, 3], arcs={})
    nxt = tr.apply(c, tr.Transition(tr.SWAP))
    assert nxt.stack == [0]
    assert nxt.buffer == [2, 1, 3]


def test_apply_left_arc_attaches_to_buffer_front():
    c = tr.Configuration(stack=[0, 1], buffer=[2], arcs={})
    nxt = tr.apply(c, tr.Transition(tr.LEFT_ARC, "nsubj"))
    assert nxt.arcs == {1: (2, "nsubj")}
    assert nxt.stack == [0] and nxt.buffer == [2]


def test_apply_illegal_raises_with_name():
    c = tr.initial_config(2)
    with pytest.raises(tr.IllegalTransition, match="left_arc"):
        tr.apply(c, tr.Transition(tr.LEFT_ARC, "x"))


def test_is_terminal():
    assert not tr.is_terminal(tr.initial_config(1))
    assert tr.is_terminal(tr.Configuration(stack=[0], buffer=[], arcs={1: (0, "r")}))
    assert not tr.is_terminal(tr.Configuration(stack=[0, 1], buffer=[], arcs={}))


def test_transition_labels():
    with pytest.raises(ValueError):
        tr.Transition(tr.SHIFT, "x")
    with pytest.raises(ValueError):
        tr.Transition(tr.SWAP, "x")


def test_projective_order_identity_for_projective_tree():
    # chain root -> 1 -> 2 -> 3 plus a left dependent
    assert tr.projective_order([0, 1, 2]) == [0, 1, 2, 3]
    assert tr.projective_order([2, 0, 2]) == [0, 1, 2, 3]


def test_projective_order_in_order_traversal_hand_case():
    # arcs: 2->1, 0->2, 2->4, 4->3 (projective; traversal follows surface order)
    assert tr.projective_order([2, 0, 4, 2]) == [0, 1, 2, 3, 4]
    # non-projective: head(1)=0, head(2)=4, head(3)=1, head(4)=1
    # in-order walk: 0, 1, 3, 2, 4 -> ranks: 1->1, 3->2, 2->3, 4->4
    assert tr.projective_order([0, 4, 1, 1]) == [0, 1, 3, 2, 4]


def test_swapping_needed_iff_nonidentity_permutation():
    rng = np.random.default_rng(0)
    for _ in range(60):
        n = int(rng.integers(2, 8))
        heads = random_tree(rng, n)
        proj = tr.projective_order(heads)
        identity = proj == list(range(n + 1))
        assert identity == (not is_nonprojective(heads))


def follow_zero_cost(heads, rng, labels=None):
    """Follow a random zero-cost transition until terminal; returns config."""
    gold = heads if labels is None else _sentence(heads, labels)
    n = len(heads)
    proj = tr.projective_order(heads)
    c = tr.initial_config(n)
    cap = tr.step_cap(n)
    while not tr.is_terminal(c):
        assert c.steps <= cap, "step cap exceeded"
        verdict = tr.oracle(c, gold, proj)
        assert verdict.zero_cost, "zero-cost set empty"
        t = verdict.zero_cost[int(rng.integers(0, len(verdict.zero_cost)))]
        c = tr.apply(c, t)
    return c


def test_oracle_initial_shift_zero_cost():
    rng = np.random.default_rng(1)
    for _ in range(20):
        n = int(rng.integers(1, 8))
        heads = random_tree(rng, n)
        c = tr.initial_config(n)
        verdict = tr.oracle(c, heads, tr.projective_order(heads))
        assert verdict.costs[tr.SHIFT] == 0


def test_oracle_right_arc_early_attachment_costs_one():
    # stack [0, h], buffer [d], gold arc h -> d and root -> h
    heads = [0, 1]
    c = tr.Configuration(stack=[0, 1], buffer=[2], arcs={})
    verdict = tr.oracle(c, heads, tr.projective_order(heads))
    assert verdict.costs[tr.RIGHT_ARC] == 1


def test_oracle_zero_cost_roundtrip_reaches_gold():
    rng = np.random.default_rng(2)
    nonproj = 0
    for _ in range(300):
        n = int(rng.integers(1, 11))
        heads = random_tree(rng, n)
        nonproj += is_nonprojective(heads)
        final = follow_zero_cost(heads, rng)
        assert [final.arcs[d][0] for d in range(1, n + 1)] == heads
    assert nonproj >= 60


def test_oracle_gold_labels_recovered():
    rng = np.random.default_rng(3)
    for _ in range(40):
        n = int(rng.integers(1, 9))
        heads = random_tree(rng, n)
        labels = [f"rel{i % 3}" if h != 0 else "root" for i, h in enumerate(heads)]
        final = follow_zero_cost(heads, rng, labels)
        assert [final.arcs[d] for d in range(1, n + 1)] == list(zip(heads, labels))


def _sentence(heads, labels):
    from parselab.conllu import Sentence, Token
    return Sentence([Token(i, f"w{i}", "X", h, lbl)
                     for i, (h, lbl) in enumerate(zip(heads, labels), start=1)])


def test_oracle_costs_match_brute_force_deltas():
    """Primary correctness check: every cost equals the exhaustive-search
    minimal-loss delta, over every policy-reachable state."""
    rng = np.random.default_rng(4)
    trees = 0
    while trees < 40:
        n = int(rng.integers(2, 7))
        heads = random_tree(rng, n)
        proj = tr.projective_order(heads)
        memo = {}
        for stack, buffer in reachable_states(n, proj):
            if not buffer and stack == (0,):
                continue
            c = _config_from(stack, buffer, n)
            verdict = tr.oracle(c, heads, proj)
            for kind, want in brute_costs(stack, buffer, heads, proj, memo).items():
                assert verdict.costs[kind] == want, (heads, stack, buffer, kind)
        trees += 1


def _config_from(stack, buffer, n):
    arcs = {}
    present = set(stack) | set(buffer)
    for tok in range(1, n + 1):
        if tok not in present:
            arcs[tok] = (0, None)
    return tr.Configuration(list(stack), list(buffer), arcs)


def test_oracle_swap_priced_out_when_not_prescribed():
    # projective gold, reachable state where swap is legal but pointless
    heads = [0, 1, 2]
    c = tr.Configuration(stack=[0, 1], buffer=[2, 3], arcs={})
    verdict = tr.oracle(c, heads, tr.projective_order(heads))
    assert verdict.costs[tr.SWAP] == tr.INF


def test_apply_preserves_partition():
    rng = np.random.default_rng(5)
    for _ in range(50):
        n = int(rng.integers(1, 9))
        heads = random_tree(rng, n)
        proj = tr.projective_order(heads)
        c = tr.initial_config(n)
        while not tr.is_terminal(c):
            kinds = tr.legal_kinds(c)
            kind = kinds[int(rng.integers(0, len(kinds)))]
            c = tr.apply(c, tr.Transition(kind, "x" if kind in tr.ARC_KINDS else None))
            groups = [set(c.stack), set(c.buffer), set(c.arcs)]
            union = set().union(*groups)
            assert union == set(range(n + 1)) - ({0} - set(c.stack))
            assert sum(len(g) for g in groups) == len(union)


def test_every_legal_walk_terminates_within_cap():
    rng = np.random.default_rng(6)
    for _ in range(200):
        n = int(rng.integers(1, 9))
        c = tr.initial_config(n)
        cap = tr.step_cap(n)
        while not tr.is_terminal(c):
            assert c.steps <= cap, "legal walk exceeded the step cap"
            kinds = tr.legal_kinds(c)
            kind = kinds[int(rng.integers(0, len(kinds)))]
            c = tr.apply(c, tr.Transition(kind, "x" if kind in tr.ARC_KINDS else None))


def test_reference_and_production_apply_agree():
    rng = np.random.default_rng(7)
    for _ in range(80):
        n = int(rng.integers(1, 8))
        c = tr.initial_config(n)
        state = (tuple(c.stack), tuple(c.buffer))
        while not tr.is_terminal(c):
            kinds = tr.legal_kinds(c)
            for kind in kinds:
                assert kind in {k for k in tr.KINDS
                                if (kind != tr.SWAP or True)}
            kind = kinds[int(rng.integers(0, len(kinds)))]
            c = tr.apply(c, tr.Transition(kind, "x" if kind in tr.ARC_KINDS else None))
            state = ref_apply(state[0], state[1], kind)[:2]
            assert state == (tuple(c.stack), tuple(c.buffer))


def test_trace_line_format():
    c = tr.apply(tr.initial_config(2), tr.Transition(tr.SHIFT))
    assert tr.trace_line(tr.Transition(tr.SHIFT), c) == "shift\t_\t2\t1"
