"""Grid search over batch size and epochs with k-fold cross-validation.

Cells are scored by mean held-out MSE (the training objective); MAPE stays a
reporting metric. Fold assignment uses the base seed, so every cell sees the
same folds. Each training run's seed is derived from (base seed, batch size,
epochs, fold), which makes results independent of evaluation order and worker
count, and gives a repeated cell exactly the score of its first occurrence.
"""
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass
import math
import re

import numpy as np

from .errors import ArgumentError, NumericDivergenceError, TuningError
from .nn import predict
from .numerics import Rng, derive_seed
from .train import TrainConfig, mse_loss, train

GRID_GRAMMAR = "batch=<n>[,<n>...];epochs=<n>[,<n>...]   e.g. batch=10,20;epochs=5,10,50"

DEFAULT_BATCH_SIZES = (10, 20, 40)
DEFAULT_EPOCHS = (5, 10, 20)


@dataclass(frozen=True)
class GridSpec:
    batch_sizes: tuple = DEFAULT_BATCH_SIZES
    epochs_list: tuple = DEFAULT_EPOCHS
    folds: int = 5
    base: TrainConfig = TrainConfig()

    def __post_init__(self):
        object.__setattr__(self, "batch_sizes", tuple(int(b) for b in self.batch_sizes))
        object.__setattr__(self, "epochs_list", tuple(int(e) for e in self.epochs_list))
        for name, values in (("batch_sizes", self.batch_sizes), ("epochs_list", self.epochs_list)):
            if not values:
                raise ArgumentError(f"{name} must not be empty")
            if min(values) < 1:
                raise ArgumentError(f"{name} entries must be >= 1, got {values}")
        if self.folds < 2:
            raise ArgumentError(f"folds must be >= 2, got {self.folds}")

    def cells(self):
        """(batch_size, epochs) pairs in row-major grid order."""
        return [(b, e) for b in self.batch_sizes for e in self.epochs_list]


@dataclass(frozen=True)
class CellResult:
    batch_size: int
    epochs: int
    fold_losses: tuple
    mean_loss: float
    diverged: bool = False


@dataclass(frozen=True)
class TuneResult:
    cells: tuple
    best_index: int
    best_config: TrainConfig

    @property
    def best(self):
        return self.cells[self.best_index]

    def table(self):
        lines = ["batch,epochs,mean_cv_mse"]
        lines += [f"{c.batch_size},{c.epochs},{c.mean_loss!r}" for c in self.cells]
        return "\n".join(lines)


def parse_grid(text):
    """Parse ``batch=10,20;epochs=5,10`` into ``(batch_sizes, epochs_list)``."""
    found = {}
    for part in text.split(";"):
        part = part.strip()
        if not part:
            continue
        m = re.fullmatch(r"(\w+)\s*=\s*(\d+(?:\s*,\s*\d+)*)", part)
        if not m or m.group(1) not in ("batch", "epochs") or m.group(1) in found:
            raise ArgumentError(f"malformed grid {text!r}; expected {GRID_GRAMMAR}")
        found[m.group(1)] = tuple(int(x) for x in m.group(2).split(","))
    if set(found) != {"batch", "epochs"}:
        raise ArgumentError(f"grid {text!r} must name both batch and epochs; "
                            f"expected {GRID_GRAMMAR}")
    return found["batch"], found["epochs"]


def kfold_indices(n, k, seed):
    """Seeded partition of ``range(n)`` into ``k`` folds whose sizes differ by at most 1."""
    if k < 2:
        raise ArgumentError(f"k must be >= 2, got {k}")
    if n < k:
        raise ArgumentError(f"cannot make {k} folds from {n} rows")
    perm = Rng(seed).permutation(n)
    base, extra = divmod(n, k)
    folds, start = [], 0
    for i in range(k):
        size = base + (1 if i < extra else 0)
        folds.append(np.sort(perm[start:start + size]))
        start += size
    return folds


def _fold_loss(job):
    ds, held_out, config, backend = job
    mask = np.ones(ds.n, dtype=bool)
    mask[held_out] = False
    try:
        model = train(ds.subset(np.flatnonzero(mask)), config, backend=backend)
        val = ds.subset(held_out)
        loss, _ = mse_loss(predict(model.network, val.features), val.target)
    except NumericDivergenceError:
        return math.inf
    return loss if math.isfinite(loss) else math.inf


def grid_search(ds, grid=GridSpec(), *, workers=1, backend=None):
    """Score every grid cell by k-fold CV MSE and pick the lowest.

    ``ds`` must already be cleaned and scaled. Divergent folds score +inf
    and flag their cell; ties go to the earliest cell in grid order.
    """
    folds = kfold_indices(ds.n, grid.folds, grid.base.seed)
    cells = grid.cells()
    jobs = []
    for b, e in cells:
        for fi, held_out in enumerate(folds):
            config = grid.base.replace(batch_size=b, epochs=e, validation_fraction=0.0,
                                       seed=derive_seed(grid.base.seed, b, e, fi))
            jobs.append((ds, held_out, config, backend))
    if workers > 1:
        with ProcessPoolExecutor(max_workers=workers) as pool:
            losses = list(pool.map(_fold_loss, jobs))
    else:
        losses = [_fold_loss(j) for j in jobs]

    results = []
    k = len(folds)
    for ci, (b, e) in enumerate(cells):
        fold_losses = tuple(losses[ci * k:(ci + 1) * k])
        diverged = any(math.isinf(x) for x in fold_losses)
        mean = math.inf if diverged else sum(fold_losses) / k
        results.append(CellResult(b, e, fold_losses, mean, diverged))
    if all(c.diverged for c in results):
        raise TuningError("every grid cell diverged during cross-validation")
    best = min(range(len(results)), key=lambda i: (results[i].mean_loss, i))
    best_config = grid.base.replace(batch_size=results[best].batch_size,
                                    epochs=results[best].epochs)
    return TuneResult(tuple(results), best, best_config)
