"""Command-line entry point: ``lipspeak generate|train|evaluate|compare``.

Exit codes: 0 success, 1 usage error, 2 runtime or numeric failure.
"""

import argparse
import csv
import json
import logging
import sys
from pathlib import Path


from . import experiment as ex
from .corpus import save_csv, GEOMETRY_FIELDS
from .errors import InvalidInputError, NumericError, StageError

log = logging.getLogger("lipspeak")



class UsageError(Exception):
    pass


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        self.print_help(sys.stderr)
        raise UsageError(f"{self.prog}: error: {message}")


def _add_data_flags(p):
    src = p.add_mutually_exclusive_group()
    src.add_argument("--data", help="labeled CSV (label,f1,...,fn)")
    src.add_argument("--spec", help="synthetic corpus spec file (key = value)")


def _add_run_flags(p, with_choice=True):
    _add_data_flags(p)
    if with_choice:
        p.add_argument("--features", choices=ex.FEATURE_METHODS, default="pca")
        p.add_argument("--classifier", choices=ex.CLASSIFIERS, default="rbf")
    p.add_argument("--components", type=int, default=6, metavar="M")
    p.add_argument("--split", type=float, default=0.5, metavar="FRACTION",
                   help="training fraction of the stratified split")
    p.add_argument("--paper-split", action="store_true",
                   help="train and test on the full set (fraction 1.0)")
    p.add_argument("--paper-params", action="store_true",
                   help="reference hyperparameters verbatim (RBF spread 25, raw BP inputs)")
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--report", help="write the JSON report here (figures alongside)")
    p.add_argument("--no-figures", action="store_true", help="skip PNG figures")


def build_parser():
    parser = _Parser(prog="lipspeak", description="Lip-feature speaker identification.")
    parser.add_argument("-v", "--verbose", action="store_true")
    sub = parser.add_subparsers(dest="command", required=True, parser_class=_Parser)

    g = sub.add_parser("generate", help="write a synthetic corpus as CSV")
    g.add_argument("--spec", help="synthetic corpus spec file; defaults if omitted")
    g.add_argument("--out", required=True)
    g.add_argument("--seed", type=int, help="override the spec's seed")

    t = sub.add_parser("train", help="fit one feature/classifier pipeline and test it")
    _add_run_flags(t)
    t.add_argument("--model-out", help="write the fitted pipeline (JSON)")

    e = sub.add_parser("evaluate", help="score a saved pipeline on a dataset")
    _add_data_flags(e)
    e.add_argument("--model-in", required=True)
    e.add_argument("--split", type=float, default=None, metavar="FRACTION",
                   help="score only the held-out part of this stratified split")
    e.add_argument("--seed", type=int, default=0)
    e.add_argument("--report")
    e.add_argument("--no-figures", action="store_true")

    c = sub.add_parser("compare", help="all {PCA, ICA} x {BP, RBF, LVQ} cells")
    _add_run_flags(c, with_choice=False)
    return parser


def _config(args, **extra):
    if not args.data and not args.spec:
        raise UsageError("one of --data or --spec is required")
    synthetic = ex.SyntheticConfig.from_file(args.spec) if args.spec else None
    fields = dict(data_path=args.data, synthetic=synthetic, components=args.components,
                  split=args.split, paper_split=args.paper_split,
                  paper_params=args.paper_params, seed=args.seed)
    fields.update(extra)
    if not args.paper_split and not (0.0 < args.split <= 1.0):
        raise UsageError("--split must be in (0, 1]")
    return ex.ExperimentConfig(**fields)


def _write_json(path, obj):
    Path(path).write_text(json.dumps(obj, indent=1, sort_keys=True) + "\n", encoding="utf-8")


def _write_rows(path, rows):
    with open(path, "w", newline="", encoding="utf-8") as fh:
        csv.writer(fh).writerows(rows)


def _emit_report(args, report):
    print(report.render())
    if args.report:
        _write_json(args.report, report.to_dict())
        stem = Path(args.report).with_suffix("")
        _write_rows(f"{stem}_confusion.csv", [[""] + report.label_mapping] + [
            [name] + [int(v) for v in row]
            for name, row in zip(report.label_mapping, report.confusion)])
        if not args.no_figures:
            from .plotting import report_figures
            report_figures(args.report, report=report)
        print(f"report written to {args.report}")


def cmd_generate(args):
    cfg = ex.SyntheticConfig.from_file(args.spec) if args.spec else ex.SyntheticConfig()
    if args.seed is not None:
        cfg = ex.with_overrides(cfg, seed=args.seed)
    ds = cfg.generate()
    header = (["label"] + list(GEOMETRY_FIELDS) if cfg.mode == "geometry"
              else ["label"] + [f"px{i}" for i in range(ds.feature_dim)])
    save_csv(ds, args.out, header)
    print(f"wrote {len(ds)} samples ({ds.num_classes} classes, {ds.feature_dim} features) "
          f"to {args.out}")


def cmd_train(args):
    cfg = _config(args, features=args.features, classifier=args.classifier)
    report, pipe = ex.run_experiment(cfg, return_pipeline=True)
    _emit_report(args, report)
    if args.model_out:
        pipe.save(args.model_out)
        print(f"model written to {args.model_out}")


def cmd_evaluate(args):
    if not args.data and not args.spec:
        raise UsageError("one of --data or --spec is required")
    pipe = ex.Pipeline.load(args.model_in)
    synthetic = ex.SyntheticConfig.from_file(args.spec) if args.spec else None
    cfg = ex.ExperimentConfig(data_path=args.data, synthetic=synthetic,
                              split=args.split or 1.0, seed=args.seed)
    ds = ex.load_dataset(cfg)
    if list(ds.label_names) != list(pipe.label_names):
        raise InvalidInputError(
            f"dataset labels {list(ds.label_names)} do not match model labels "
            f"{list(pipe.label_names)}")
    test = ds if args.split is None else ex.make_split(cfg, ds)[1]
    echo = {"model_in": args.model_in, "data_path": args.data, "spec": args.spec,
            "split": args.split, "seed": args.seed}
    report = ex.evaluate_pipeline(pipe, test, echo)
    _emit_report(args, report)


def cmd_compare(args):
    cfg = _config(args)
    table = ex.compare_all(cfg)
    print(table.render())
    if args.report:
        _write_json(args.report, table.to_dict())
        stem = Path(args.report).with_suffix("")
        _write_rows(f"{stem}_table.csv", table.rows())
        if not args.no_figures:
            from .plotting import report_figures
            report_figures(args.report, table=table)
        print(f"report written to {args.report}")
    return 0 if table.best is not None else 2


COMMANDS = {"generate": cmd_generate, "train": cmd_train, "evaluate": cmd_evaluate,
            "compare": cmd_compare}


def main(argv=None):
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
        logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING,
                            format="%(levelname)s %(name)s: %(message)s")
        rc = COMMANDS[args.command](args)
        return 0 if rc is None else rc
    except UsageError as exc:
        print(exc, file=sys.stderr)
        return 1
    except (StageError, InvalidInputError, NumericError, OSError, ValueError) as exc:
        print(f"lipspeak: error: {exc}", file=sys.stderr)
        return 2
    except SystemExit as exc:  # --help
        return int(exc.code or 0)


if __name__ == "__main__":
    sys.exit(main())
