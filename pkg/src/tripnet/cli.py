"""Command-line entry point: ``tripnet <command> ...``.

Exit codes: 0 success, 2 bad input or arguments, 3 numeric divergence,
4 I/O failure.
"""
import argparse
import logging
import sys

from . import __version__, data, kernels, store
from ._io import atomic_write_text
from .errors import ArgumentError, TripnetError
from .evaluation import ZeroPolicy, evaluate_model, export_pairs
from .train import TrainConfig, train
from .tune import GridSpec, grid_search, parse_grid

EXIT_OK, EXIT_INPUT, EXIT_DIVERGENCE, EXIT_IO = 0, 2, 3, 4

log = logging.getLogger("tripnet")


def _split_arg(text):
    try:
        parts = tuple(float(x) for x in text.split(","))
    except ValueError:
        raise ArgumentError(f"--split expects three comma-separated fractions, got {text!r}") from None
    if len(parts) != 3:
        raise ArgumentError(f"--split expects three comma-separated fractions, got {text!r}")
    return parts


def _load_dataset(path, target):
    table = data.parse_csv(path)
    cleaned, report = data.clean(table)
    log.info("cleaned %s: rows_in=%d rows_out=%d removed_fraction=%.4f", path,
             report.rows_in, report.rows_out, report.removed_fraction)
    return cleaned, report, data.assemble(cleaned, target_name=target)


def cmd_gen_data(args):
    table = data.synthesize(args.rows, args.seed, args.noise)
    atomic_write_text(args.out, table.to_csv(feature_ints=True))
    if args.show_truth:
        print(data.describe_truth())
        print(f"noise: target * exp({args.noise!r} * z), z ~ N(0, 1)")


def cmd_train(args):
    fracs = _split_arg(args.split)
    cleaned, report, ds = _load_dataset(args.data, args.target)
    if args.clean_report:
        sys.stderr.write(report.to_text())
    train_idx, val_idx, test_idx = data.split_indices(ds.n, *fracs, seed=args.seed)
    tr, va, te = ds.subset(train_idx), ds.subset(val_idx), ds.subset(test_idx)

    scaler = data.fit_scaler(ds if args.scale_mode == "paper" else tr)
    use_split_val = va.n > 0
    config = TrainConfig(batch_size=args.batch, epochs=args.epochs, learning_rate=args.lr,
                         seed=args.seed,
                         validation_fraction=0.0 if use_split_val else args.validation_fraction)
    model = train(data.apply_scaler(tr, scaler), config,
                  validation=data.apply_scaler(va, scaler) if use_split_val else None,
                  scaler=scaler, backend=args.backend)

    store.save(model, args.model_out, include_timestamp=args.timestamp)
    atomic_write_text(args.curve_out, model.curve.to_csv())
    if args.test_out:
        test_rows = data.RawTable(cleaned.header, cleaned.values[test_idx], cleaned.source)
        atomic_write_text(args.test_out, test_rows.to_csv())
    if use_split_val:
        print("split=validation " + evaluate_model(model, va, ZeroPolicy.EXCLUDE).summary())
    if te.n > 0:
        print("split=test " + evaluate_model(model, te, ZeroPolicy.EXCLUDE).summary())


def cmd_tune(args):
    batch_sizes, epochs_list = parse_grid(args.grid)
    _, _, ds = _load_dataset(args.data, args.target)
    ds = data.apply_scaler(ds, data.fit_scaler(ds))
    grid = GridSpec(batch_sizes, epochs_list, folds=args.folds,
                    base=TrainConfig(learning_rate=args.lr, seed=args.seed))
    result = grid_search(ds, grid, workers=args.workers, backend=args.backend)
    print(result.table())
    for c in result.cells:
        if c.diverged:
            print(f"diverged: batch={c.batch_size} epochs={c.epochs}")
    print(f"best: batch={result.best_config.batch_size} epochs={result.best_config.epochs}")


def cmd_evaluate(args):
    model = store.load(args.model)
    _, _, ds = _load_dataset(args.data, model.target_name)
    report = evaluate_model(model, ds, ZeroPolicy(args.zero_policy))
    if args.pairs_out:
        export_pairs(report, args.pairs_out)
    print(report.summary())


def cmd_predict(args):
    model = store.load(args.model)
    features = data.feature_matrix(data.parse_csv(args.input), model.schema)
    if features.shape[0] == 0:
        raise ArgumentError(f"{args.input} has no data rows")
    pred = model.predict(features)
    lines = ["index,predicted"] + [f"{i},{p!r}" for i, p in enumerate(pred.tolist())]
    atomic_write_text(args.out, "\n".join(lines) + "\n")


def cmd_schema(args):
    for name in data.NHTS_SCHEMA.columns:
        print(name)


def build_parser():
    p = argparse.ArgumentParser(prog="tripnet", description=__doc__.splitlines()[0])
    p.add_argument("--version", action="version",
                   version=f"tripnet {__version__} (model schema {store.SCHEMA_VERSION})")
    p.add_argument("-v", "--verbose", action="store_true")
    sub = p.add_subparsers(dest="command", required=True)
    backends = sorted(kernels.BACKENDS)

    g = sub.add_parser("gen-data", help="write a synthetic survey-shaped CSV")
    g.add_argument("--rows", type=int, default=10000)
    g.add_argument("--seed", type=int, default=1)
    g.add_argument("--noise", type=float, default=0.02, help="lognormal noise sd")
    g.add_argument("--out", required=True)
    g.add_argument("--show-truth", action="store_true", help="print the generative coefficients")
    g.set_defaults(func=cmd_gen_data)

    t = sub.add_parser("train", help="train a model and write it with its loss curve")
    t.add_argument("--data", required=True)
    t.add_argument("--target", required=True, choices=data.TARGETS)
    t.add_argument("--batch", type=int, default=20)
    t.add_argument("--epochs", type=int, default=5)
    t.add_argument("--lr", type=float, default=0.001)
    t.add_argument("--seed", type=int, default=1)
    t.add_argument("--split", default="0.7,0.2,0.1", help="train,validation,test fractions")
    t.add_argument("--validation-fraction", type=float, default=0.2,
                   help="hold-out taken from the training part when --split has no validation")
    t.add_argument("--scale-mode", choices=("train", "paper"), default="train",
                   help="fit the scaler on the training split (default) or on all rows")
    t.add_argument("--model-out", required=True)
    t.add_argument("--curve-out", required=True)
    t.add_argument("--test-out", help="also write the test-split rows (unscaled) as CSV")
    t.add_argument("--timestamp", action="store_true", help="record created_at in the model")
    t.add_argument("--clean-report", action="store_true", help="print the cleaning report")
    t.add_argument("--backend", choices=backends)
    t.set_defaults(func=cmd_train)

    u = sub.add_parser("tune", help="grid-search batch size and epochs by k-fold CV")
    u.add_argument("--data", required=True)
    u.add_argument("--target", required=True, choices=data.TARGETS)
    u.add_argument("--grid", default="batch=10,20,40;epochs=5,10,20")
    u.add_argument("--folds", type=int, default=5)
    u.add_argument("--seed", type=int, default=1)
    u.add_argument("--lr", type=float, default=0.001)
    u.add_argument("--workers", type=int, default=1)
    u.add_argument("--backend", choices=backends)
    u.set_defaults(func=cmd_tune)

    e = sub.add_parser("evaluate", help="MAPE of a saved model on a CSV")
    e.add_argument("--model", required=True)
    e.add_argument("--data", required=True)
    e.add_argument("--zero-policy", choices=[z.value for z in ZeroPolicy], default="error")
    e.add_argument("--pairs-out")
    e.set_defaults(func=cmd_evaluate)

    r = sub.add_parser("predict", help="predict targets for feature rows")
    r.add_argument("--model", required=True)
    r.add_argument("--input", required=True)
    r.add_argument("--out", required=True)
    r.set_defaults(func=cmd_predict)

    s = sub.add_parser("schema", help="print canonical feature and target names")
    s.set_defaults(func=cmd_schema)
    return p


def main(argv=None):
    parser = build_parser()
    args = parser.parse_args(argv)
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING,
                        format="%(levelname)s: %(message)s")
    try:
        args.func(args)
    except TripnetError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return exc.exit_code
    except OSError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_IO
    return EXIT_OK


if __name__ == "__main__":
    sys.exit(main())
