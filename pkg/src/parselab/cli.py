"""Command-line interface: train, parse, eval, stats, ensemble, experiment.

Configuration precedence is CLI flags > config file (flat key=value lines,
'#' comments) > built-in defaults. Exit codes: 0 ok, 1 internal error,
2 usage or input error.
"""

import argparse
import json
import sys
from pathlib import Path

import numpy as np

from .conllu import (ConlluError, DEFAULT_CONTENT_RELATIONS, read_conllu,
                     treebank_stats, write_conllu, write_conllu_file)
from .ensemble import ensemble_predictions
from .eval import grid_report, score_trees
from .model import (ParserModel, TrainConfig, greedy_parse, load_model,
                    parse_treebank, save_model, train)
from .wordrep import ReprConfig, build_vocab


class UsageError(ValueError):
    pass


REPR_DEFAULTS = {
    "extractor": "bi", "composition": "none", "pos": True, "char": True,
    "word_dim": 100, "pos_dim": 20, "char_dim": 24, "char_hidden": 50,
    "seq_hidden": 125, "rel_dim": 20, "mlp_hidden": 100, "min_count": 1,
}
TRAIN_DEFAULTS = {
    "epochs": 30, "seed": 1, "margin": 1.0, "explore": 0.1,
    "explore_from_epoch": 2, "word_dropout": 0.25, "lr": 0.001,
}


def _add_repr_flags(p):
    p.add_argument("--extractor", choices=["bi", "bw", "fw"], default=None)
    p.add_argument("--composition", choices=["none", "rc", "lc"], default=None)
    p.add_argument("--pos", action=argparse.BooleanOptionalAction, default=None)
    p.add_argument("--char", action=argparse.BooleanOptionalAction, default=None)
    for flag in ("word-dim", "pos-dim", "char-dim", "char-hidden", "seq-hidden",
                 "rel-dim", "mlp-hidden", "min-count"):
        p.add_argument(f"--{flag}", type=int, default=None)


def _add_train_flags(p):
    p.add_argument("--epochs", type=int, default=None)
    p.add_argument("--seed", type=int, default=None)
    p.add_argument("--margin", type=float, default=None)
    p.add_argument("--explore", type=float, default=None)
    p.add_argument("--explore-from-epoch", type=int, default=None)
    p.add_argument("--word-dropout", type=float, default=None)
    p.add_argument("--lr", type=float, default=None)


def _load_config_file(path):
    values = {}
    for line_no, raw in enumerate(Path(path).read_text(encoding="utf-8").splitlines(), 1):
        line = raw.split("#", 1)[0].strip()
        if not line:
            continue
        if "=" not in line:
            raise UsageError(f"{path}:{line_no}: expected key=value")
        key, _, value = line.partition("=")
        values[key.strip().replace("-", "_")] = value.strip()
    return values


def _coerce(value, like):
    if isinstance(like, bool):
        return value.lower() in ("1", "true", "yes", "on") if isinstance(value, str) else bool(value)
    if isinstance(like, int):
        return int(value)
    if isinstance(like, float):
        return float(value)
    return value


def _resolve(args, defaults):
    """flag > config file > default, per key in defaults."""
    file_values = _load_config_file(args.config) if getattr(args, "config", None) else {}
    out = {}
    for key, default in defaults.items():
        flag = getattr(args, key, None)
        if flag is not None:
            out[key] = flag
        elif key in file_values:
            out[key] = _coerce(file_values[key], default)
        else:
            out[key] = default
    return out


def _repr_config(opts):
    return ReprConfig(
        use_pos=opts["pos"], use_char=opts["char"],
        extractor=opts["extractor"], composition=opts["composition"],
        word_dim=opts["word_dim"], pos_dim=opts["pos_dim"],
        char_dim=opts["char_dim"], char_hidden=opts["char_hidden"],
        seq_hidden=opts["seq_hidden"],
    )


def _train_config(opts, seed=None):
    return TrainConfig(
        epochs=opts["epochs"], seed=opts["seed"] if seed is None else seed,
        margin=opts["margin"], explore_prob=opts["explore"],
        explore_from_epoch=opts["explore_from_epoch"],
        word_dropout_alpha=opts["word_dropout"], lr=opts["lr"],
    )


def _metrics_tsv(metrics):
    lines = ["epoch\ttrain-loss\tdev-LAS\tdev-UAS"]
    for row in metrics:
        las = "-" if row["dev_las"] is None else f"{row['dev_las'] * 100:.2f}"
        uas = "-" if row["dev_uas"] is None else f"{row['dev_uas'] * 100:.2f}"
        lines.append(f"{row['epoch']}\t{row['train_loss']:.4f}\t{las}\t{uas}")
    return "\n".join(lines) + "\n"


def cmd_train(args):
    opts = _resolve(args, {**REPR_DEFAULTS, **TRAIN_DEFAULTS})
    tb = read_conllu(args.train)
    if not tb.sentences:
        raise UsageError(f"{args.train}: no sentences")
    dev = read_conllu(args.dev) if args.dev else None
    vocab = build_vocab(tb, min_count=opts["min_count"])
    model = ParserModel(vocab, _repr_config(opts), seed=opts["seed"],
                        mlp_hidden=opts["mlp_hidden"], rel_dim=opts["rel_dim"])
    tcfg = _train_config(opts)

    def log(row):
        las = "-" if row["dev_las"] is None else f"{row['dev_las'] * 100:.2f}"
        print(f"epoch {row['epoch']}: loss {row['train_loss']:.4f} dev-LAS {las}")

    metrics = train(tb, model, tcfg, dev=dev, log_fn=log if args.verbose else None)
    save_model(model, args.model)
    if args.metrics:
        Path(args.metrics).write_text(_metrics_tsv(metrics), encoding="utf-8")
    return 0


def cmd_parse(args):
    model = load_model(args.model)
    tb = read_conllu(args.input)
    trace = [] if args.trace else None
    pred = parse_treebank(tb, model, trace)
    write_conllu_file(pred, args.output)
    if args.trace:
        Path(args.trace).write_text("\n".join(trace) + "\n", encoding="utf-8")
    return 0


def cmd_eval(args):
    gold = read_conllu(args.gold)
    pred = read_conllu(args.pred)
    result = score_trees(gold, pred)
    print(f"LAS\t{result.las * 100:.2f}")
    print(f"UAS\t{result.uas * 100:.2f}")
    print(f"tokens\t{result.token_count}")
    return 0


def cmd_stats(args):
    tb = read_conllu(args.input)
    relations = DEFAULT_CONTENT_RELATIONS
    if args.content_relations:
        relations = frozenset(r.strip() for r in args.content_relations.split(",") if r.strip())
    stats = treebank_stats(tb, relations)
    for key in ("right_headedness", "left_headedness", "avg_dependency_length",
                "avg_sentence_length", "avg_arc_depth", "nonprojective_arc_fraction"):
        value = getattr(stats, key)
        print(f"{key}\t{'absent' if value is None else f'{value:.4f}'}")
    return 0


def _ensemble_inputs(args):
    if args.predictions:
        names = [Path(p).name for p in args.predictions]
        tbs = [read_conllu(p) for p in args.predictions]
        return names, tbs
    if not args.models or not args.input:
        raise UsageError("ensemble needs --predictions or --models with --input")
    names = [Path(m).name for m in args.models]
    tb = read_conllu(args.input)
    tbs = [parse_treebank(tb, load_model(m)) for m in args.models]
    return names, tbs


def cmd_ensemble(args):
    names, tbs = _ensemble_inputs(args)
    if args.ablate_one and len(tbs) < 2:
        raise UsageError("--ablate-one requires at least 2 models")
    combined = ensemble_predictions(tbs)
    if args.output:
        write_conllu_file(combined, args.output)
    gold = read_conllu(args.gold) if args.gold else None
    if gold is not None:
        full = score_trees(gold, combined)
        print(f"full\t{full.uas * 100:.2f}")
        if args.ablate_one:
            for i, name in enumerate(names):
                rest = [tb for j, tb in enumerate(tbs) if j != i]
                ablated = score_trees(gold, ensemble_predictions(rest))
                print(f"-{name}\t{ablated.uas * 100:.2f}")
    elif args.ablate_one:
        raise UsageError("--ablate-one needs --gold to score against")
    return 0


def _parse_list(text, cast=str):
    return [cast(v) for v in text.split(",") if v.strip()]


def cmd_experiment(args):
    opts = _resolve(args, {**REPR_DEFAULTS, **TRAIN_DEFAULTS})
    tb = read_conllu(args.train)
    dev = read_conllu(args.dev)
    lang = args.lang or Path(args.train).stem
    seeds = _parse_list(args.seeds, int)
    extractors = _parse_list(args.extractors)
    compositions = _parse_list(args.compositions)
    axis = {"both": [True, False], "on": [True], "off": [False]}
    pos_values = axis[args.pos_axis]
    char_values = axis[args.char_axis]

    rows = []
    for pos in pos_values:
        for char in char_values:
            for ext in extractors:
                for comp in compositions:
                    for seed in seeds:
                        cell_opts = dict(opts, pos=pos, char=char,
                                         extractor=ext, composition=comp)
                        vocab = build_vocab(tb, min_count=opts["min_count"])
                        model = ParserModel(vocab, _repr_config(cell_opts), seed=seed,
                                            mlp_hidden=opts["mlp_hidden"],
                                            rel_dim=opts["rel_dim"])
                        train(tb, model, _train_config(opts, seed=seed), dev=dev)
                        result = score_trees(dev, parse_treebank(dev, model))
                        rows.append({
                            "lang": lang, "extractor": ext, "composition": comp,
                            "pos": pos, "char": char, "seed": seed,
                            "las": result.las, "uas": result.uas,
                        })
                        if args.verbose:
                            print(f"{lang} {ext} {comp} pos={pos} char={char} "
                                  f"seed={seed}: LAS {result.las * 100:.2f}")

    results = {}
    for row in rows:
        key = (row["lang"], row["extractor"], row["composition"], row["pos"], row["char"])
        results.setdefault(key, []).append(row["las"])
    averaged = {k: sum(v) / len(v) for k, v in results.items()}
    report = grid_report(averaged)
    if args.out:
        Path(f"{args.out}.json").write_text(
            json.dumps(rows, sort_keys=True, indent=2), encoding="utf-8")
        Path(f"{args.out}.tsv").write_text(report.to_tsv(), encoding="utf-8")
        Path(f"{args.out}.txt").write_text(report.to_text(), encoding="utf-8")
    print(report.to_text())
    return 0


def build_parser():
    p = argparse.ArgumentParser(prog="parselab",
                                description="transition-based dependency parsing laboratory")
    sub = p.add_subparsers(dest="command", required=True)

    t = sub.add_parser("train", help="train a parser model")
    t.add_argument("--train", required=True)
    t.add_argument("--dev")
    t.add_argument("--model", required=True)
    t.add_argument("--metrics")
    t.add_argument("--config")
    t.add_argument("--verbose", action="store_true")
    _add_repr_flags(t)
    _add_train_flags(t)
    t.set_defaults(func=cmd_train)

    pa = sub.add_parser("parse", help="parse a CoNLL-U file with a trained model")
    pa.add_argument("--model", required=True)
    pa.add_argument("--input", required=True)
    pa.add_argument("--output", required=True)
    pa.add_argument("--trace", help="write one transition per line to this file")
    pa.set_defaults(func=cmd_parse)

    e = sub.add_parser("eval", help="score predictions against gold")
    e.add_argument("--gold", required=True)
    e.add_argument("--pred", required=True)
    e.set_defaults(func=cmd_eval)

    s = sub.add_parser("stats", help="treebank statistics")
    s.add_argument("--input", required=True)
    s.add_argument("--content-relations",
                   help="comma-separated relation labels for head-direction stats")
    s.set_defaults(func=cmd_stats)

    en = sub.add_parser("ensemble", help="reparsing ensemble over several parsers")
    en.add_argument("--predictions", nargs="+", help="per-parser prediction files")
    en.add_argument("--models", nargs="+", help="model files to run on --input")
    en.add_argument("--input")
    en.add_argument("--gold")
    en.add_argument("--output")
    en.add_argument("--ablate-one", action="store_true",
                    help="also score the ensemble with each parser left out")
    en.set_defaults(func=cmd_ensemble)

    x = sub.add_parser("experiment", help="run the ablation grid")
    x.add_argument("--train", required=True)
    x.add_argument("--dev", required=True)
    x.add_argument("--lang")
    x.add_argument("--out", help="output prefix for .json/.tsv/.txt")
    x.add_argument("--seeds", default="1")
    x.add_argument("--extractors", default="bi,bw,fw")
    x.add_argument("--compositions", default="none,lc")
    x.add_argument("--pos-axis", choices=["both", "on", "off"], default="on")
    x.add_argument("--char-axis", choices=["both", "on", "off"], default="on")
    x.add_argument("--config")
    x.add_argument("--verbose", action="store_true")
    _add_repr_flags(x)
    _add_train_flags(x)
    x.set_defaults(func=cmd_experiment)

    return p


def main(argv=None):
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        return args.func(args)
    except (UsageError, ConlluError, FileNotFoundError) as exc:
        print(f"parselab: {exc}", file=sys.stderr)
        return 2
    except ValueError as exc:
        print(f"parselab: {exc}", file=sys.stderr)
        return 2
    except Exception as exc:  # noqa: BLE001
        print(f"parselab: internal error: {exc}", file=sys.stderr)
        return 1


if __name__ == "__main__":
    sys.exit(main())
