"""Time the training kernels on the end-to-end synthetic workload.

    python benchmarks/bench_kernels.py [--rows 10000] [--epochs 50] [--repeats 3]

Reports the best wall time per backend, the speedup, and how far the
trained parameters of the two backends drift apart (rounding only).
"""
import argparse
import time

import numpy as np

from tripnet import data, kernels
from tripnet.nn import flatten_params
from tripnet.train import TrainConfig, train


def workload(rows, seed):
    cleaned, _ = data.clean(data.synthesize(rows, seed=seed))
    ds = data.assemble(cleaned, target_name="person_trips")
    tr_idx, va_idx, _ = data.split_indices(ds.n, 0.7, 0.2, 0.1, seed=1)
    tr, va = ds.subset(tr_idx), ds.subset(va_idx)
    scaler = data.fit_scaler(tr)
    return data.apply_scaler(tr, scaler), data.apply_scaler(va, scaler)


def bench(backend, tr, va, config, repeats):
    best, model = float("inf"), None
    for _ in range(repeats):
        start = time.perf_counter()
        model = train(tr, config, validation=va, backend=backend)
        best = min(best, time.perf_counter() - start)
    return best, model


def main():
    parser = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    parser.add_argument("--rows", type=int, default=10000)
    parser.add_argument("--epochs", type=int, default=50)
    parser.add_argument("--repeats", type=int, default=3)
    args = parser.parse_args()

    tr, va = workload(args.rows, seed=7)
    config = TrainConfig(epochs=args.epochs, validation_fraction=0.0)
    print(f"workload: {tr.n} training rows, batch {config.batch_size}, {config.epochs} epochs")
    results = {}
    for name in sorted(kernels.BACKENDS):
        elapsed, model = bench(name, tr, va, config, args.repeats)
        results[name] = (elapsed, model)
        print(f"{name:>8}: {elapsed:8.3f} s  final train loss {model.curve.train_loss[-1]:.6g}")
    if "cython" not in results:
        print("compiled backend not built; run `python setup.py build_ext --inplace`")
        return
    py, cy = results["python"], results["cython"]
    drift = np.abs(flatten_params(py[1].network) - flatten_params(cy[1].network)).max()
    print(f" speedup: {py[0] / cy[0]:.1f}x")
    print(f"   drift: max |theta_python - theta_cython| = {drift:.2e}")


if __name__ == "__main__":
    main()
