"""CoNLL-U reading/writing and treebank-level statistics.

Tokens keep the columns the parser uses: ID, FORM, UPOS, HEAD, DEPREL.
Multiword-token ranges ("3-4") and empty nodes ("5.1") are skipped.
Relation labels are compared and counted after truncating subtypes at ":".
"""

from dataclasses import dataclass, field

# Universal relations not in this set (aux, cop, mark, det, clf, case, cc,
# punct, dep, root) are treated as function relations for head-direction
# statistics. Overridable per call / via the CLI.
DEFAULT_CONTENT_RELATIONS = frozenset({
    "nsubj", "obj", "iobj", "csubj", "ccomp", "xcomp", "obl", "vocative",
    "expl", "dislocated", "advcl", "advmod", "discourse", "nmod", "appos",
    "nummod", "acl", "amod", "conj", "fixed", "flat", "compound", "list",
    "parataxis", "orphan", "goeswith", "reparandum",
})


class ConlluError(ValueError):
    """Malformed CoNLL-U input."""


def base_label(deprel):
    """Universal part of a relation label: 'nmod:poss' -> 'nmod'."""
    return deprel.split(":", 1)[0] if deprel else deprel


@dataclass
class Token:
    id: int
    form: str
    upos: str | None = None
    head: int | None = None
    deprel: str | None = None

    @property
    def chars(self):
        return list(self.form)


@dataclass
class Sentence:
    tokens: list
    comments: list = field(default_factory=list)

    def __len__(self):
        return len(self.tokens)

    def heads(self):
        """Gold head per token, index-aligned with positions 1..n."""
        return [t.head for t in self.tokens]

    def is_fully_annotated(self):
        return all(t.head is not None for t in self.tokens)


@dataclass
class Treebank:
    sentences: list
    name: str = ""

    def __len__(self):
        return len(self.sentences)

    def __iter__(self):
        return iter(self.sentences)


@dataclass
class TreebankStats:
    right_headedness: float | None
    left_headedness: float | None
    avg_dependency_length: float
    avg_sentence_length: float
    avg_arc_depth: float
    nonprojective_arc_fraction: float
    # raw numerators/denominators so stats of concatenated treebanks can be
    # recombined as weighted means
    content_arcs: int = 0
    right_headed_content_arcs: int = 0
    arc_count: int = 0
    token_count: int = 0
    sentence_count: int = 0


def _is_skippable_id(col):
    return "-" in col or "." in col


def _validate_tree(sentence, ordinal, line_no):
    n = len(sentence.tokens)
    for t in sentence.tokens:
        if not 0 <= t.head <= n:
            raise ConlluError(
                f"sentence {ordinal} (line {line_no}): head {t.head} out of range for length {n}"
            )
        if t.head == t.id:
            raise ConlluError(
                f"sentence {ordinal} (line {line_no}): token {t.id} is its own head"
            )
    roots = [t.id for t in sentence.tokens if t.head == 0]
    if len(roots) != 1:
        raise ConlluError(
            f"sentence {ordinal} (line {line_no}): expected exactly one root, got {len(roots)}"
        )
    # every head chain must reach the artificial root; a stuck chain is a cycle
    for t in sentence.tokens:
        seen = set()
        cur = t.id
        while cur != 0:
            if cur in seen:
                raise ConlluError(f"sentence {ordinal} (line {line_no}): cyclic tree")
            seen.add(cur)
            cur = sentence.tokens[cur - 1].head


def parse_conllu(text, name=""):
    """Parse CoNLL-U text into a Treebank.

    Raises ConlluError naming the sentence ordinal and line for malformed
    column counts, bad head indices, multiple roots, or cyclic trees.
    """
    sentences = []
    tokens = []
    comments = []
    ordinal = 1

    def flush(line_no):
        nonlocal tokens, comments, ordinal
        if not tokens and not comments:
            return
        if tokens:
            expected = list(range(1, len(tokens) + 1))
            if [t.id for t in tokens] != expected:
                raise ConlluError(
                    f"sentence {ordinal} (line {line_no}): token ids not consecutive from 1"
                )
            sent = Sentence(tokens, comments)
            heads = [t.head for t in tokens]
            present = [h for h in heads if h is not None]
            if present and len(present) != len(heads):
                raise ConlluError(
                    f"sentence {ordinal} (line {line_no}): mixed annotated/unannotated heads"
                )
            if present:
                _validate_tree(sent, ordinal, line_no)
            sentences.append(sent)
            ordinal += 1
        tokens = []
        comments = []

    line_no = 0
    for line_no, raw in enumerate(text.split("\n"), start=1):
        line = raw.rstrip("\r")
        if not line.strip():
            flush(line_no)
            continue
        if line.startswith("#"):
            comments.append(line)
            continue
        cols = line.split("\t")
        if len(cols) != 10:
            raise ConlluError(
                f"sentence {ordinal} (line {line_no}): expected 10 columns, got {len(cols)}"
            )
        if _is_skippable_id(cols[0]):
            continue
        try:
            tid = int(cols[0])
        except ValueError:
            raise ConlluError(f"sentence {ordinal} (line {line_no}): bad token id {cols[0]!r}")
        head = None
        if cols[6] != "_":
            try:
                head = int(cols[6])
            except ValueError:
                raise ConlluError(
                    f"sentence {ordinal} (line {line_no}): non-integer head {cols[6]!r}"
                )
        upos = None if cols[3] == "_" else cols[3]
        deprel = None if cols[7] == "_" else cols[7]
        if head is not None and not deprel:
            raise ConlluError(
                f"sentence {ordinal} (line {line_no}): head present but deprel missing"
            )
        tokens.append(Token(tid, cols[1], upos, head, deprel))

    flush(line_no)
    return Treebank(sentences, name)


def read_conllu(path):
    with open(path, encoding="utf-8") as f:
        return parse_conllu(f.read(), name=str(path))


def write_conllu(tb):
    """Serialize a Treebank; parse_conllu(write_conllu(tb)) == tb on retained fields."""
    out = []
    for sent in tb.sentences:
        for c in sent.comments:
            out.append(c)
        for t in sent.tokens:
            out.append("\t".join([
                str(t.id), t.form, "_",
                t.upos if t.upos is not None else "_",
                "_", "_",
                str(t.head) if t.head is not None else "_",
                t.deprel if t.deprel is not None else "_",
                "_", "_",
            ]))
        out.append("")
    return "\n".join(out) + ("\n" if out else "")


def write_conllu_file(tb, path):
    with open(path, "w", encoding="utf-8") as f:
        f.write(write_conllu(tb))


def gold_depths(heads):
    """Depth per token (root's children at depth 1) from a 1-based head list."""
    n = len(heads)
    depths = [0] * (n + 1)
    for tid in range(1, n + 1):
        d = 0
        cur = tid
        while cur != 0:
            cur = heads[cur - 1]
            d += 1
        depths[tid] = d
    return depths[1:]


def crossing_arcs(heads):
    """Indices (1-based dependents) of arcs crossed by at least one other arc."""
    n = len(heads)
    spans = []
    for d in range(1, n + 1):
        h = heads[d - 1]
        spans.append((min(h, d), max(h, d), d))
    crossed = set()
    for i in range(len(spans)):
        a1, b1, d1 = spans[i]
        for j in range(i + 1, len(spans)):
            a2, b2, d2 = spans[j]
            if (a1 < a2 < b1 < b2) or (a2 < a1 < b2 < b1):
                crossed.add(d1)
                crossed.add(d2)
    return crossed


def treebank_stats(tb, content_relations=DEFAULT_CONTENT_RELATIONS):
    """Head-direction, length, depth, and projectivity statistics.

    right_headedness is computed over arcs whose base relation label is in
    content_relations; it is None when the treebank has no such arcs.
    """
    if not tb.sentences:
        raise ValueError("treebank_stats: empty treebank")
    content = 0
    right = 0
    dep_len_sum = 0
    arc_count = 0
    token_count = 0
    depth_sum = 0
    crossed_count = 0
    for sent in tb.sentences:
        if not sent.is_fully_annotated():
            raise ValueError("treebank_stats: treebank has unannotated sentences")
        heads = sent.heads()
        n = len(heads)
        token_count += n
        for t in sent.tokens:
            if t.head != 0:
                dep_len_sum += abs(t.head - t.id)
                arc_count += 1
            if t.deprel is not None and base_label(t.deprel) in content_relations and t.head != 0:
                content += 1
                if t.head > t.id:
                    right += 1
        depth_sum += sum(gold_depths(heads))
        crossed_count += len(crossing_arcs(heads))
    return TreebankStats(
        right_headedness=(right / content) if content else None,
        left_headedness=((content - right) / content) if content else None,
        avg_dependency_length=dep_len_sum / arc_count if arc_count else 0.0,
        avg_sentence_length=token_count / len(tb.sentences),
        avg_arc_depth=depth_sum / token_count if token_count else 0.0,
        nonprojective_arc_fraction=crossed_count / token_count if token_count else 0.0,
        content_arcs=content,
        right_headed_content_arcs=right,
        arc_count=arc_count,
        token_count=token_count,
        sentence_count=len(tb.sentences),
    )
