"""Arc-hybrid transition system extended with Swap, plus its oracle.

Positions are token ids; the artificial root is position 0 and sits at the
bottom of the stack. LEFT_ARC attaches the stack top to the buffer front,
RIGHT_ARC to the item below it, and SWAP moves the stack top back into the
buffer directly behind the front token.

The oracle is static with respect to Swap: whenever the stack top follows
the buffer front in the projective order of the gold tree, Swap is the one
zero-cost transition. Elsewhere Swap is priced out (INF) and the remaining
transitions get exact attachment-loss deltas, where "exact" is relative to
derivations that keep following that same swap policy.
"""

from dataclasses import dataclass, field

SHIFT = "shift"
SWAP = "swap"
LEFT_ARC = "left_arc"
RIGHT_ARC = "right_arc"
KINDS = (SHIFT, SWAP, LEFT_ARC, RIGHT_ARC)
ARC_KINDS = (LEFT_ARC, RIGHT_ARC)

INF = float("inf")


class IllegalTransition(ValueError):
    pass


@dataclass(frozen=True)
class Transition:
    kind: str
    label: str | None = None

    def __post_init__(self):
        if self.kind in (SHIFT, SWAP) and self.label is not None:
            raise ValueError(f"{self.kind} carries no label")

    def __repr__(self):
        return self.kind if self.label is None else f"{self.kind}({self.label})"


@dataclass
class Configuration:
    stack: list
    buffer: list
    arcs: dict  # dependent -> (head, label)
    subtree_state: dict = field(default_factory=dict)
    steps: int = 0

    @property
    def n(self):
        # positions are 0..n with 0 the root
        return len(self.stack) + len(self.buffer) + len(self.arcs) - 1

    def arc_set(self):
        return {(h, lbl, d) for d, (h, lbl) in self.arcs.items()}

    def heads(self):
        """Predicted head per token 1..n; None where unattached."""
        n = self.n
        out = [None] * n
        for d, (h, _) in self.arcs.items():
            out[d - 1] = h
        return out

    def labels(self):
        n = self.n
        out = [None] * n
        for d, (_, lbl) in self.arcs.items():
            out[d - 1] = lbl
        return out

    def clone(self):
        return Configuration(
            list(self.stack), list(self.buffer), dict(self.arcs),
            dict(self.subtree_state), self.steps,
        )


def initial_config(n):
    if n < 1:
        raise ValueError("initial_config: sentence length must be >= 1")
    return Configuration(stack=[0], buffer=list(range(1, n + 1)), arcs={})


def is_terminal(c):
    return not c.buffer and c.stack == [0]


def step_cap(n):
    # swap legality bounds swaps by the number of id-inversions; generous cap
    return n * n + 4 * n


def legal(c, t):
    kind = t.kind if isinstance(t, Transition) else t
    if kind == SHIFT:
        return bool(c.buffer)
    if kind == LEFT_ARC:
        return bool(c.buffer) and len(c.stack) >= 2 and c.stack[-1] != 0
    if kind == RIGHT_ARC:
        return len(c.stack) >= 2
    if kind == SWAP:
        return (bool(c.buffer) and len(c.stack) >= 2 and c.stack[-1] != 0
                and c.stack[-1] < c.buffer[0])
    raise ValueError(f"unknown transition kind {kind!r}")


def legal_kinds(c):
    return [k for k in KINDS if legal(c, k)]


def apply(c, t):
    """Apply a legal transition, returning a new Configuration."""
    if not legal(c, t):
        kind = t.kind if isinstance(t, Transition) else t
        raise IllegalTransition(f"{kind} illegal in stack={c.stack} buffer={c.buffer}")
    kind, label = (t.kind, t.label) if isinstance(t, Transition) else (t, None)
    new = c.clone()
    new.steps += 1
    if kind == SHIFT:
        new.stack.append(new.buffer.pop(0))
    elif kind == LEFT_ARC:
        dep = new.stack.pop()
        new.arcs[dep] = (new.buffer[0], label)
    elif kind == RIGHT_ARC:
        dep = new.stack.pop()
        new.arcs[dep] = (new.stack[-1], label)
    elif kind == SWAP:
        moved = new.stack.pop()
        new.buffer.insert(1, moved)
    return new


def arc_of(c, kind):
    """(head, dependent) the arc transition would create, or None."""
    if kind == LEFT_ARC and legal(c, LEFT_ARC):
        return (c.buffer[0], c.stack[-1])
    if kind == RIGHT_ARC and legal(c, RIGHT_ARC):
        return (c.stack[-2], c.stack[-1])
    return None


def projective_order(gold):
    """Rank of each position 0..n under in-order traversal of the gold tree.

    Each head is visited in its surface slot among its dependents, and
    dependents are visited in surface order; projective trees map to the
    identity. Returns a list proj with proj[0] == 0.
    """
    heads = gold.heads() if hasattr(gold, "heads") else list(gold)
    n = len(heads)
    children = [[] for _ in range(n + 1)]
    for d, h in enumerate(heads, start=1):
        children[h].append(d)
    proj = [0] * (n + 1)
    counter = 0

    # iterative in-order walk; items at each node are (children + self) by id
    agenda = [0]
    while agenda:
        node = agenda.pop()
        if node < 0:  # marker: assign the head itself
            proj[-node - 1] = counter
            counter += 1
            continue
        items = sorted(children[node] + [node])
        for item in reversed(items):
            if item == node:
                agenda.append(-node - 1)
            else:
                agenda.append(item)
    return proj


def swap_prescribed(c, proj):
    """True when the static swap policy fires: stack top follows buffer front
    in projective order and Swap is legal."""
    return (bool(c.buffer) and len(c.stack) >= 2 and c.stack[-1] != 0
            and proj[c.stack[-1]] > proj[c.buffer[0]]
            and c.stack[-1] < c.buffer[0])


@dataclass
class OracleVerdict:
    costs: dict          # kind -> cost (INF for priced-out Swap)
    gold_labels: dict    # arc kind -> gold deprel when the arc head is correct
    zero_cost: list      # Transitions with cost 0; arc kinds carry gold label

    def zero_cost_kinds(self):
        return {t.kind for t in self.zero_cost}


def _can_bounce(x, buffer, proj):
    """Whether stack token x can still be pulled back into the buffer: some
    pending buffer token precedes it in projective order and the swap would
    be id-legal."""
    return any(proj[y] < proj[x] and x < y for y in buffer)


def arc_reachable(c, h, d, proj):
    """Whether a derivation following the swap policy can still create h -> d.

    d must be an unattached token (on the stack or in the buffer); h may be
    any position including the root.
    """
    if d in c.arcs:
        return False
    if h != 0 and h != d and h in c.arcs:
        # popped heads are gone for good
        return False
    if d in c.buffer:
        return True
    # d is on the stack
    idx = c.stack.index(d)
    if h == c.stack[idx - 1]:
        return True
    if h in c.buffer:
        return True
    if h in c.stack:
        if c.stack.index(h) > idx:
            # h sits above d: h must re-enter the buffer first
            return _can_bounce(h, c.buffer, proj)
        # h is buried below d (or is the non-adjacent root): d must re-enter
        # the buffer and come back around
        return _can_bounce(d, c.buffer, proj)
    return False


def _state_loss(c, gheads, proj):
    """Number of unattached tokens whose gold arc is no longer reachable."""
    loss = 0
    for d in c.stack[1:] + c.buffer:
        if not arc_reachable(c, gheads[d - 1], d, proj):
            loss += 1
    return loss


def _dynamic_costs(c, gheads, proj):
    """Attachment-loss deltas for SHIFT / LEFT_ARC / RIGHT_ARC, relative to
    derivations that keep following the eager swap policy."""
    base = _state_loss(c, gheads, proj)
    costs = {}
    for kind in (SHIFT, LEFT_ARC, RIGHT_ARC):
        if not legal(c, kind):
            continue
        nxt = apply(c, Transition(kind) if kind == SHIFT else Transition(kind, None))
        mistake = 0
        arc = arc_of(c, kind)
        if arc is not None and gheads[arc[1] - 1] != arc[0]:
            mistake = 1
        costs[kind] = mistake + _state_loss(nxt, gheads, proj) - base
    return costs


def oracle(c, gold, proj):
    """Cost per legal transition plus the zero-cost set.

    gold may be a Sentence or a plain list of gold heads; labels are taken
    from the Sentence when available (else arc transitions carry None).
    """
    if hasattr(gold, "tokens"):
        gheads = [t.head for t in gold.tokens]
        glabels = [t.deprel for t in gold.tokens]
    else:
        gheads = list(gold)
        glabels = [None] * len(gheads)

    kinds = legal_kinds(c)
    if swap_prescribed(c, proj):
        costs = {SWAP: 0}
        dyn = _dynamic_costs(c, gheads, proj)
        for k in kinds:
            if k != SWAP:
                costs[k] = max(1, dyn.get(k, 1))
    else:
        costs = _dynamic_costs(c, gheads, proj)
        if SWAP in kinds:
            costs[SWAP] = INF

    gold_labels = {}
    for kind in ARC_KINDS:
        arc = arc_of(c, kind)
        if arc is not None:
            h, d = arc
            if gheads[d - 1] == h:
                gold_labels[kind] = glabels[d - 1]

    zero = []
    for k in kinds:
        if costs.get(k, INF) == 0:
            if k in ARC_KINDS:
                zero.append(Transition(k, gold_labels.get(k)))
            else:
                zero.append(Transition(k))
    return OracleVerdict(costs=costs, gold_labels=gold_labels, zero_cost=zero)


def trace_line(t, c_after):
    """Debug trace row: kind, label, resulting stack/buffer sizes."""
    label = t.label if t.label is not None else "_"
    return f"{t.kind}\t{label}\t{len(c_after.stack)}\t{len(c_after.buffer)}"
