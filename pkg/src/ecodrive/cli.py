"""Command-line entry point: ``ecodrive <command> ...``.

Exit status is 0 on success, 1 for bad input and 2 for internal or
validation failures (for example a diverging training run).
"""
from __future__ import annotations

import argparse
import dataclasses
import json
import sys
from pathlib import Path

from . import mlp, pipeline, synth, trace
from .config import Config, load_config, load_profile
from .errors import Diverged, EcodriveError, EmptyTrace
from .features import FEATURE_SETS

EXIT_OK, EXIT_INPUT, EXIT_INTERNAL = 0, 1, 2


def _config(args) -> Config:
    cfg = load_config(args.config) if args.config else Config()
    if args.profile:
        cfg = dataclasses.replace(cfg, vehicle=load_profile(args.profile))
    if args.seed is not None:
        cfg = dataclasses.replace(cfg, train=dataclasses.replace(cfg.train, seed=args.seed))
    return cfg


def _write(text: str, out) -> None:
    if out:
        Path(out).write_text(text, encoding="utf-8")
    else:
        sys.stdout.write(text)


def cmd_decode(args) -> int:
    with open(args.log, encoding="utf-8") as fh:
        result = pipeline.decode_log(fh)
    for lineno, msg in result.diagnostics:
        print(f"{args.log}:{lineno}: {msg}", file=sys.stderr)
    if args.strict and result.diagnostics:
        return EXIT_INPUT
    if not result.samples:
        raise EmptyTrace(f"{args.log}: no decodable samples")
    _write(trace.to_csv_text(result.samples), args.out)
    return EXIT_OK


def cmd_generate(args) -> int:
    cfg = _config(args)
    window_s = args.window_s or cfg.train_window_s
    seed = 0 if args.seed is None else args.seed
    if args.route or args.style:
        if not (args.route and args.style):
            print("--route and --style go together", file=sys.stderr)
            return EXIT_INPUT
        spec = synth.ScenarioSpec(args.route, args.style, args.duration_s, seed, args.noise)
        trip = synth.generate(spec, cfg.vehicle, cfg.scenario)
        _write(trace.to_csv_text(trip), args.out)
        return EXIT_OK
    if not args.out:
        print("corpus generation needs --out <directory>", file=sys.stderr)
        return EXIT_INPUT
    corpus = synth.generate_corpus(args.n_per_class, seed, args.duration_s, args.noise,
                                   cfg.vehicle, cfg.scenario)
    corpus.write(args.out, window_s)
    print(f"wrote {len(corpus)} trips to {args.out} (labels per {window_s:g} s window)")
    return EXIT_OK


def cmd_train(args) -> int:
    cfg = _config(args)
    train = cfg.train
    overrides = {k: v for k, v in (("max_cycles", args.cycles),
                                   ("learning_rate", args.learning_rate),
                                   ("hidden", args.hidden)) if v is not None}
    if overrides:
        cfg = dataclasses.replace(cfg, train=dataclasses.replace(train, **overrides))
    window_s = args.window_s or cfg.train_window_s
    corpus = pipeline.load_corpus(args.corpus, window_s, cfg.vehicle)
    result = pipeline.train_from_corpus(corpus, args.target, cfg)
    mlp.save(result.model, args.out)
    m = result.metrics()
    print(f"target: {args.target}  rows: {m['rows']}  cycles: {m['cycles']}")
    print(f"final SSE: {m['final_sse']!r}  (MSE {m['final_mse']!r})")
    print(f"training accuracy: {m['accuracy']:.4f}")
    for lab, acc in m["per_class_accuracy"].items():
        print(f"  {lab:<11} {'-' if acc is None else f'{acc:.4f}'}")
    print("confusion (rows true, columns predicted):")
    for lab, row in zip(m["labels"], m["confusion"]):
        print(f"  {lab:<11} " + " ".join(f"{v:>6}" for v in row))
    if args.metrics:
        Path(args.metrics).write_text(json.dumps(m, indent=2) + "\n", encoding="utf-8")
    return EXIT_OK


def cmd_analyze(args) -> int:
    cfg = _config(args)
    n_in = len(FEATURE_SETS[cfg.feature_set])
    route = pipeline.load_weights(args.route_weights, "route", n_in)
    style = pipeline.load_weights(args.style_weights, "style", n_in)
    trip = trace.read_trip(args.trace, cfg.vehicle)
    report = pipeline.analyze(trip, cfg.vehicle, route, style, cfg, args.window_s)
    text = pipeline.report_table(report) if args.table else pipeline.report_dumps(report)
    _write(text, args.out)
    return EXIT_OK


def cmd_style_report(args) -> int:
    reports = [pipeline.report_loads(Path(p).read_text(encoding="utf-8"))
               for p in args.reports]
    table = pipeline.style_table(reports)
    text = (pipeline.style_table_text(table) if args.table
            else json.dumps(table, indent=2) + "\n")
    _write(text, args.out)
    return EXIT_OK


def build_parser() -> argparse.ArgumentParser:
    common = argparse.ArgumentParser(add_help=False)
    common.add_argument("--profile", help="INI file with a [vehicle] section")
    common.add_argument("--config", help="INI file with any configuration sections")
    common.add_argument("--seed", type=int)
    common.add_argument("--window-s", type=float, dest="window_s")
    common.add_argument("--strict", action="store_true",
                        help="treat any per-line diagnostic as an error")
    common.add_argument("--out", help="output path (default stdout)")

    p = argparse.ArgumentParser(prog="ecodrive", description=__doc__.splitlines()[0])
    sub = p.add_subparsers(dest="command", required=True)

    d = sub.add_parser("decode", parents=[common],
                       help="hex frame log (<t_ms> <frame> per line) to trace CSV")
    d.add_argument("log")
    d.set_defaults(func=cmd_decode)

    g = sub.add_parser("generate", parents=[common], help="synthetic trip or labelled corpus")
    g.add_argument("--n-per-class", type=int, default=10)
    g.add_argument("--duration-s", type=int, default=300)
    g.add_argument("--noise", type=float, default=0.1)
    g.add_argument("--route", choices=mlp.ROUTE_LABELS)
    g.add_argument("--style", choices=mlp.STYLE_LABELS)
    g.set_defaults(func=cmd_generate)

    t = sub.add_parser("train", parents=[common], help="train the route or style network")
    t.add_argument("corpus", help="directory with trip CSVs and labels.csv")
    t.add_argument("--target", choices=("route", "style"), required=True)
    t.add_argument("--cycles", type=int)
    t.add_argument("--learning-rate", type=float)
    t.add_argument("--hidden", type=int)
    t.add_argument("--metrics", help="also write metrics as JSON here")
    t.set_defaults(func=cmd_train)

    a = sub.add_parser("analyze", parents=[common], help="classify and cost one trip")
    a.add_argument("trace")
    a.add_argument("--route-weights", required=True)
    a.add_argument("--style-weights", required=True)
    a.add_argument("--table", action="store_true", help="human-readable output")
    a.set_defaults(func=cmd_analyze)

    s = sub.add_parser("style-report", parents=[common],
                       help="consumption statistics per driving style over reports")
    s.add_argument("reports", nargs="+")
    s.add_argument("--table", action="store_true", help="human-readable output")
    s.set_defaults(func=cmd_style_report)
    return p


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    if args.command == "train" and args.out is None:
        print("train needs --out <weights file>", file=sys.stderr)
        return EXIT_INPUT
    try:
        return args.func(args)
    except Diverged as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_INTERNAL
    except (EcodriveError, OSError, KeyError, ValueError) as exc:
        print(f"error: {type(exc).__name__}: {exc}", file=sys.stderr)
        return EXIT_INPUT
    except Exception as exc:  # noqa: BLE001
        print(f"internal error: {type(exc).__name__}: {exc}", file=sys.stderr)
        return EXIT_INTERNAL


if __name__ == "__main__":
    sys.exit(main())
