"""Command-line entry point.

Exit status: 0 success, 1 usage error, 2 data/format error, 3 numerical
degeneracy (zero covariance, N > K, no positive eigenvalue, no convergence).
"""

from __future__ import annotations

import argparse
import contextlib
import csv
import json
import logging
import os
import sys
import tempfile
from pathlib import Path

from . import classifier as eig
from . import naive_bayes as nb
from .datasets import DEFAULT_SEED, SyntheticSpec, generate_synthetic, read_dataset, write_dataset
from .errors import DataError, DegenerateError, EigendroidError
from .evaluation import (
    cross_validate,
    export_mapping,
    make_folds,
    write_fold_mappings,
    write_mapping,
)
from .features import default_catalog, extract_batch, load_catalog, read_bundles, save_catalog
from .ranking import rank_features, select_top

log = logging.getLogger("eigendroid")

EXIT_OK, EXIT_USAGE, EXIT_DATA, EXIT_DEGENERATE = 0, 1, 2, 3


class UsageError(Exception):
    pass


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        self.print_usage(sys.stderr)
        self.exit(EXIT_USAGE, f"{self.prog}: error: {message}\n")


@contextlib.contextmanager
def atomic_output(path, mode="w"):
    """Open a temp file beside ``path``; rename over it only on success."""
    path = Path(path)
    parent = path.parent if str(path.parent) else Path(".")
    parent.mkdir(parents=True, exist_ok=True)
    fd, tmp = tempfile.mkstemp(prefix=f".{path.name}.", suffix=".tmp", dir=parent)
    try:
        with os.fdopen(fd, mode, encoding="utf-8", newline="") as fh:
            yield fh
        umask = os.umask(0)
        os.umask(umask)
        os.chmod(tmp, 0o666 & ~umask)
        os.replace(tmp, path)
    except BaseException:
        with contextlib.suppress(FileNotFoundError):
            os.unlink(tmp)
        raise


def _load_any_model(path):
    try:
        with open(path, encoding="utf-8") as fh:
            doc = json.load(fh)
    except json.JSONDecodeError as exc:
        raise DataError(f"{path}: model does not parse: {exc}") from None
    if isinstance(doc, dict) and doc.get("format") == nb.NB_FORMAT:
        return "nb", nb.nb_from_dict(doc)
    return "eigenspace", eig.model_from_dict(doc)


# ---- subcommands -----------------------------------------------------------


def cmd_extract(args):
    catalog = load_catalog(args.catalog) if args.catalog else default_catalog()
    bundles = read_bundles(args.input)
    data = extract_batch(bundles, catalog, threads=args.threads)
    with atomic_output(args.output) as fh:
        write_dataset(data, fh)
    log.info("extracted %d apps x %d features", len(data), data.n_features)


def cmd_gen(args):
    spec = SyntheticSpec(
        n_features=args.features,
        n_malware=args.malware,
        n_benign=args.benign,
        informative=args.informative,
        delta=args.delta,
        seed=args.seed,
    )
    data = generate_synthetic(spec)
    with atomic_output(args.output) as fh:
        write_dataset(data, fh)


def _write_ranking(ranked, k, fh):
    w = csv.writer(fh, lineterminator="\n")
    w.writerow(["rank", "name", "score"])
    for r, (name, score) in enumerate(list(ranked)[:k], start=1):
        w.writerow([r, name, repr(score)])


def cmd_rank(args):
    catalog = load_catalog(args.catalog) if args.catalog else None
    data = read_dataset(args.data, catalog.names if catalog else None)
    ranked = rank_features(data, catalog)
    k = args.top if args.top is not None else len(ranked)
    reduced_catalog, reduced = select_top(ranked, k, data, catalog)
    with atomic_output(args.output) as fh:
        _write_ranking(ranked, k, fh)
    if args.reduced_data:
        with atomic_output(args.reduced_data) as fh:
            write_dataset(reduced, fh)
    if args.reduced_catalog:
        if reduced_catalog is None:
            raise UsageError("--reduced-catalog requires --catalog")
        with atomic_output(args.reduced_catalog) as fh:
            json.dump(reduced_catalog.to_dict(), fh, indent=2)
            fh.write("\n")


def cmd_train(args):
    catalog = load_catalog(args.catalog) if args.catalog else None
    data = read_dataset(args.data, catalog.names if catalog else None)
    if args.algorithm == "nb":
        doc = nb.nb_to_dict(nb.nb_train(data, args.alpha))
    else:
        version = catalog.version if catalog else "unversioned"
        model = eig.train(data, args.variance, catalog_version=version)
        log.info("trained: K=%d N=%d N'=%d", model.n_samples, model.n_features, model.n_components)
        doc = eig.model_to_dict(model)
    with atomic_output(args.model) as fh:
        json.dump(doc, fh, indent=1)
        fh.write("\n")


def cmd_classify(args):
    kind, model = _load_any_model(args.model)
    if args.algorithm and args.algorithm != kind:
        raise DataError(f"{args.model} holds a {kind} model, not {args.algorithm}")
    data = read_dataset(args.data, model.feature_names)
    fn = nb.nb_classify if kind == "nb" else eig.classify
    results = eig.classify_batch(model, data, threads=args.threads, classify_fn=fn)
    with atomic_output(args.output) as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(["app_id", "predicted", "score", "nearest_app_id"])
        for app_id, r in zip(data.app_ids, results):
            w.writerow([app_id, r.label, repr(r.score), r.nearest_app_id or ""])


def cmd_map(args):
    model = eig.load_model(args.model)
    data = read_dataset(args.data, model.feature_names)
    records = export_mapping(model, data, threads=args.threads)
    with atomic_output(args.output) as fh:
        write_mapping(records, fh)


def _crossval_reports(data, args, baseline):
    plan = make_folds(data, args.folds, args.seed)
    reports = [
        cross_validate(data, variance_threshold=args.variance, algorithm="eigenspace",
                       threads=args.threads, plan=plan)
    ]
    if baseline == "nb":
        reports.append(
            cross_validate(data, algorithm="nb", alpha=args.alpha, threads=args.threads, plan=plan)
        )
    return reports


def _write_reports(reports, fh):
    w = csv.writer(fh, lineterminator="\n")
    for i, rep in enumerate(reports):
        rows = rep.rows()
        w.writerows(rows if i == 0 else rows[1:])


def _summary(reports):
    lines = [f"{'':12s}" + "".join(f"{m:>8s}" for m in ("TPR", "FPR", "TNR", "FNR", "ACC", "ERR"))]
    for rep in reports:
        label = "Eigenspace" if rep.algorithm == "eigenspace" else "NB"
        lines.append(f"{label:12s}" + "".join(f"{x:8.3f}" for x in rep.mean.as_tuple()))
    return "\n".join(lines)


def cmd_crossval(args):
    data = read_dataset(args.data)
    reports = _crossval_reports(data, args, args.baseline)
    with atomic_output(args.report) as fh:
        _write_reports(reports, fh)
    if args.mapping:
        with atomic_output(args.mapping) as fh:
            write_fold_mappings(reports[0].folds, fh)
    print(_summary(reports))


def cmd_repro(args):
    out = Path(args.output)
    out.mkdir(parents=True, exist_ok=True)
    spec = SyntheticSpec(
        n_features=args.features,
        n_malware=args.malware,
        n_benign=args.benign,
        informative=args.informative,
        delta=args.delta,
        seed=args.seed,
    )
    data = generate_synthetic(spec)
    with atomic_output(out / "dataset.csv") as fh:
        write_dataset(data, fh)
    ranked = rank_features(data)
    k = args.top if args.top is not None else min(100, data.n_features)
    _, reduced = select_top(ranked, k, data)
    with atomic_output(out / "ranking.csv") as fh:
        _write_ranking(ranked, k, fh)
    with atomic_output(out / "reduced.csv") as fh:
        write_dataset(reduced, fh)
    reports = _crossval_reports(reduced, args, "nb")
    with atomic_output(out / "report.csv") as fh:
        _write_reports(reports, fh)
    with atomic_output(out / "mapping.csv") as fh:
        write_fold_mappings(reports[0].folds, fh)
    print(_summary(reports))


# ---- parser ------------------------------------------------------------------


def _variance(text):
    try:
        v = float(text)
    except ValueError:
        raise argparse.ArgumentTypeError(f"not a number: {text!r}") from None
    if not 0.0 < v <= 1.0:
        raise argparse.ArgumentTypeError("variance threshold must be in (0, 1]")
    return v


def _positive_int(text):
    try:
        v = int(text)
    except ValueError:
        raise argparse.ArgumentTypeError(f"not an integer: {text!r}") from None
    if v < 1:
        raise argparse.ArgumentTypeError("must be >= 1")
    return v


def _positive_float(text):
    try:
        v = float(text)
    except ValueError:
        raise argparse.ArgumentTypeError(f"not a number: {text!r}") from None
    if v <= 0:
        raise argparse.ArgumentTypeError("must be > 0")
    return v


def build_parser():
    common = _Parser(add_help=False)
    common.add_argument("-v", "--verbose", action="count", default=0)
    common.add_argument("--threads", type=_positive_int, default=1,
                        help="worker threads (results are order-stable; default 1)")

    p = _Parser(prog="eigendroid", description="Eigenspace malware classification toolkit")
    sub = p.add_subparsers(dest="command", required=True, parser_class=_Parser)

    s = sub.add_parser("extract", parents=[common], help="keyword features from decoded apps")
    s.add_argument("--catalog", help="catalog JSON (default: shipped 100-feature catalog)")
    s.add_argument("--input", required=True, help="directory with one subdirectory per app")
    s.add_argument("--output", required=True)
    s.set_defaults(func=cmd_extract)

    s = sub.add_parser("gen", parents=[common], help="synthetic two-class dataset")
    _gen_args(s)
    s.add_argument("--output", required=True)
    s.set_defaults(func=cmd_gen)

    s = sub.add_parser("rank", parents=[common], help="gain-ratio feature ranking")
    s.add_argument("--data", required=True)
    s.add_argument("--top", type=_positive_int)
    s.add_argument("--output", required=True)
    s.add_argument("--catalog")
    s.add_argument("--reduced-data")
    s.add_argument("--reduced-catalog")
    s.set_defaults(func=cmd_rank)

    s = sub.add_parser("train", parents=[common], help="train a model")
    s.add_argument("--data", required=True)
    s.add_argument("--variance", type=_variance, default=eig.DEFAULT_VARIANCE)
    s.add_argument("--model", required=True)
    s.add_argument("--catalog")
    s.add_argument("--algorithm", choices=("eigenspace", "nb"), default="eigenspace")
    s.add_argument("--alpha", type=_positive_float, default=1.0)
    s.set_defaults(func=cmd_train)

    s = sub.add_parser("classify", parents=[common], help="classify vectors with a model")
    s.add_argument("--model", required=True)
    s.add_argument("--data", required=True)
    s.add_argument("--output", required=True)
    s.add_argument("--algorithm", choices=("eigenspace", "nb"))
    s.set_defaults(func=cmd_classify)

    s = sub.add_parser("crossval", parents=[common], help="stratified k-fold evaluation")
    s.add_argument("--data", required=True)
    _cv_args(s)
    s.add_argument("--baseline", choices=("nb",))
    s.add_argument("--report", required=True)
    s.add_argument("--mapping", help="also write per-fold test->train mapping CSV")
    s.set_defaults(func=cmd_crossval)

    s = sub.add_parser("map", parents=[common], help="test->train nearest-sample mapping")
    s.add_argument("--model", required=True)
    s.add_argument("--data", required=True)
    s.add_argument("--output", required=True)
    s.set_defaults(func=cmd_map)

    s = sub.add_parser("repro", parents=[common], help="gen -> rank -> crossval with defaults")
    _gen_args(s)
    s.add_argument("--top", type=_positive_int)
    _cv_args(s)
    s.add_argument("--output", required=True, help="output directory")
    s.set_defaults(func=cmd_repro)

    s = sub.add_parser("catalog", parents=[common], help="write the default catalog")
    s.add_argument("--output", required=True)
    s.set_defaults(func=lambda a: save_catalog(default_catalog(), a.output))
    return p


def _gen_args(s):
    s.add_argument("--features", type=_positive_int, default=100)
    s.add_argument("--malware", type=_positive_int, default=500)
    s.add_argument("--benign", type=_positive_int, default=500)
    s.add_argument("--informative", type=int, default=30)
    s.add_argument("--delta", type=float, default=0.35)
    s.add_argument("--seed", type=int, default=DEFAULT_SEED)


def _cv_args(s):
    s.add_argument("--folds", type=int, default=5)
    if not any(a.dest == "seed" for a in s._actions):
        s.add_argument("--seed", type=int, default=DEFAULT_SEED)
    s.add_argument("--variance", type=_variance, default=eig.DEFAULT_VARIANCE)
    s.add_argument("--alpha", type=_positive_float, default=1.0)


def main(argv=None) -> int:
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as exc:  # --help, usage errors
        return exc.code if isinstance(exc.code, int) else EXIT_USAGE
    logging.basicConfig(
        level=logging.WARNING - 10 * min(args.verbose, 2),
        format="%(levelname)s %(message)s",
        stream=sys.stderr,
    )
    try:
        args.func(args)
    except UsageError as exc:
        print(f"eigendroid: error: {exc}", file=sys.stderr)
        return EXIT_USAGE
    except DegenerateError as exc:
        print(f"eigendroid: degenerate input: {exc}", file=sys.stderr)
        return EXIT_DEGENERATE
    except (EigendroidError, OSError, ValueError) as exc:
        print(f"eigendroid: error: {exc}", file=sys.stderr)
        return EXIT_DATA
    return EXIT_OK


if __name__ == "__main__":
    sys.exit(main())
