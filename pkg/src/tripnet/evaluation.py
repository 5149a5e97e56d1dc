"""MAPE-based evaluation and actual-vs-predicted exports.

"Accuracy" is reported as ``100 - MAPE``: a 2% mean deviation reads as 98%
accuracy. It is not a classification accuracy.
"""
from dataclasses import dataclass
from enum import Enum

import numpy as np

from ._io import atomic_write_text
from .errors import ArgumentError, EmptyEvaluationError, SchemaError, ShapeError, ZeroActualError


class ZeroPolicy(str, Enum):
    ERROR = "error"
    EXCLUDE = "exclude"


@dataclass(frozen=True)
class EvalReport:
    n: int
    mape_percent: float
    accuracy_percent: float
    actual: np.ndarray
    predicted: np.ndarray
    excluded_zero_actuals: int = 0

    @property
    def pairs(self):
        return list(zip(self.actual.tolist(), self.predicted.tolist()))

    def summary(self):
        return (f"mape={self.mape_percent:.10g} accuracy={self.accuracy_percent:.10g} "
                f"n={self.n} excluded={self.excluded_zero_actuals}")


def mape(actual, forecast, zero_policy=ZeroPolicy.ERROR):
    """Mean absolute percentage error, ``100/n * sum(|A - F| / |A|)``."""
    zero_policy = ZeroPolicy(zero_policy)
    a = np.asarray(actual, dtype=np.float64).ravel()
    f = np.asarray(forecast, dtype=np.float64).ravel()
    if a.shape != f.shape:
        raise ShapeError(f"actual has {a.size} values, forecast has {f.size}")
    if a.size == 0:
        raise ArgumentError("MAPE needs at least one pair")
    zero = a == 0.0
    if zero.any() and zero_policy is ZeroPolicy.ERROR:
        raise ZeroActualError(int(np.argmax(zero)))
    keep = ~zero
    n = int(keep.sum())
    if n == 0:
        raise EmptyEvaluationError("every actual value is zero; nothing left to evaluate")
    value = 100.0 * float(np.mean(np.abs(a[keep] - f[keep]) / np.abs(a[keep])))
    return EvalReport(n, value, 100.0 - value, a, f, int(zero.sum()))


def evaluate_model(model, ds, zero_policy=ZeroPolicy.ERROR):
    """Score ``model`` on an UNscaled dataset; pairs keep input row order."""
    if ds.schema.features != model.schema.features:
        missing = [c for c in model.schema.features if c not in ds.schema.features]
        raise SchemaError(f"dataset schema does not match model (missing: {', '.join(missing) or 'order differs'})")
    if ds.n == 0:
        raise ArgumentError("cannot evaluate on an empty dataset")
    return mape(ds.target.ravel(), model.predict(ds.features), zero_policy)


def pairs_csv(report):
    lines = ["index,actual,predicted"]
    lines += [f"{i},{a!r},{p!r}" for i, (a, p) in enumerate(report.pairs)]
    return "\n".join(lines) + "\n"


def export_pairs(report, destination):
    if report.actual.size == 0:
        raise ArgumentError("refusing to export an empty report")
    atomic_write_text(destination, pairs_csv(report))
