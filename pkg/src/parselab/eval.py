"""Attachment scoring, Pearson correlation, and experiment-grid reports."""

import json
import math
from dataclasses import dataclass

from .conllu import base_label

EXTRACTOR_ORDER = ("bi", "bw", "fw")
BLOCK_ORDER = ((True, True), (True, False), (False, True), (False, False))


@dataclass
class Score:
    uas: float
    las: float
    token_count: int


def score_trees(gold, pred):
    """Micro-averaged UAS/LAS over all tokens (punctuation included).

    Labels are compared on their universal part (subtype after ':' ignored).
    Sentence counts and lengths must line up.
    """
    if len(gold.sentences) != len(pred.sentences):
        raise ValueError(
            f"score_trees: {len(gold.sentences)} gold vs {len(pred.sentences)} predicted sentences"
        )
    tokens = 0
    head_hits = 0
    label_hits = 0
    for idx, (g, p) in enumerate(zip(gold.sentences, pred.sentences), start=1):
        if len(g.tokens) != len(p.tokens):
            raise ValueError(f"score_trees: sentence {idx} length mismatch")
        for gt, pt in zip(g.tokens, p.tokens):
            tokens += 1
            if gt.head == pt.head:
                head_hits += 1
                if (gt.deprel is not None and pt.deprel is not None
                        and base_label(gt.deprel) == base_label(pt.deprel)):
                    label_hits += 1
    if tokens == 0:
        raise ValueError("score_trees: no tokens")
    return Score(uas=head_hits / tokens, las=label_hits / tokens, token_count=tokens)


def pearson(xs, ys):
    """Sample Pearson correlation; degenerate inputs are an error, not NaN."""
    if len(xs) != len(ys):
        raise ValueError("pearson: length mismatch")
    if len(xs) < 3:
        raise ValueError("pearson: need at least 3 points")
    n = len(xs)
    mx = sum(xs) / n
    my = sum(ys) / n
    dx = [x - mx for x in xs]
    dy = [y - my for y in ys]
    vx = sum(d * d for d in dx)
    vy = sum(d * d for d in dy)
    if vx == 0.0 or vy == 0.0:
        raise ValueError("pearson: zero variance")
    return sum(a * b for a, b in zip(dx, dy)) / math.sqrt(vx * vy)


def _block_title(pos, char):
    return f"pos{'+' if pos else '-'}char{'+' if char else '-'}"


def _las_points(value):
    las = getattr(value, "las", value)
    return las * 100.0 if las <= 1.0 else float(las)


@dataclass
class GridReport:
    columns: list
    blocks: list  # dicts: title, langs, cells {lang: {col: float|None}}, avg {col: float|None}
    marked: set   # (title, lang-or-"av", column) where +lc beats its base by > 0.5

    def to_json(self):
        payload = []
        for b in self.blocks:
            payload.append({
                "block": b["title"],
                "columns": self.columns,
                "rows": {lang: b["cells"][lang] for lang in b["langs"]},
                "average": b["avg"],
            })
        return json.dumps(payload, sort_keys=True, indent=2)

    def _cell_text(self, b, lang, col):
        v = b["cells"][lang].get(col) if lang != "av" else b["avg"].get(col)
        if v is None:
            return "-"
        mark = "*" if (b["title"], lang, col) in self.marked else ""
        return f"{v:.1f}{mark}"

    def to_tsv(self):
        lines = []
        for b in self.blocks:
            lines.append("\t".join([b["title"]] + self.columns))
            for lang in b["langs"] + ["av"]:
                lines.append("\t".join([lang] + [self._cell_text(b, lang, c) for c in self.columns]))
        return "\n".join(lines) + "\n"

    def to_text(self):
        widths = [max(6, len(c) + 1) for c in self.columns]
        name_w = max([4] + [len(lang) for b in self.blocks for lang in b["langs"]]) + 1
        lines = []
        for b in self.blocks:
            lines.append(b["title"])
            lines.append(" " * name_w + "".join(c.rjust(w) for c, w in zip(self.columns, widths)))
            for lang in b["langs"] + ["av"]:
                row = lang.ljust(name_w)
                row += "".join(self._cell_text(b, lang, c).rjust(w) for c, w in zip(self.columns, widths))
                lines.append(row)
            lines.append("")
        return "\n".join(lines)


def grid_report(results):
    """Arrange (lang, extractor, composition, pos, char) -> Score results into
    the four pos/char blocks with per-language rows and an unweighted average
    row; cells where +lc beats its base column by > 0.5 LAS points are marked.

    Scores may be Score objects or plain LAS values (fractions or points).
    """
    comps = sorted({k[2] for k in results} - {"none"}, key=lambda c: (c != "rc", c))
    columns = []
    for ext in EXTRACTOR_ORDER:
        columns.append(ext)
        for comp in comps:
            columns.append(f"{ext}+{comp}")
    langs = sorted({k[0] for k in results})

    def column_key(col):
        ext, _, comp = col.partition("+")
        return ext, comp or "none"

    blocks = []
    marked = set()
    for pos, char in BLOCK_ORDER:
        cells = {}
        for lang in langs:
            row = {}
            for col in columns:
                ext, comp = column_key(col)
                value = results.get((lang, ext, comp, pos, char))
                row[col] = None if value is None else _las_points(value)
            cells[lang] = row
        avg = {}
        for col in columns:
            vals = [cells[lang][col] for lang in langs if cells[lang][col] is not None]
            avg[col] = sum(vals) / len(vals) if vals else None
        block = {"title": _block_title(pos, char), "langs": langs, "cells": cells, "avg": avg}
        if any(v is not None for row in cells.values() for v in row.values()):
            blocks.append(block)
            for col in columns:
                if not col.endswith("+lc"):
                    continue
                base = col[:-3]
                for lang in langs:
                    v, b = cells[lang][col], cells[lang][base]
                    if v is not None and b is not None and v - b > 0.5:
                        marked.add((block["title"], lang, col))
                if avg[col] is not None and avg[base] is not None and avg[col] - avg[base] > 0.5:
                    marked.add((block["title"], "av", col))
    if not blocks:
        blocks = [{"title": _block_title(True, True), "langs": [], "cells": {}, "avg": {c: None for c in columns}}]
    return GridReport(columns=columns, blocks=blocks, marked=marked)
