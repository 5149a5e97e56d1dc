"""JSON model documents.

Floats are written with Python's shortest round-trip repr, so a save/load
cycle restores every weight bit for bit. Loading re-validates everything.
"""
from datetime import datetime, timezone
import json
import math
import os

import numpy as np

from ._io import atomic_write_text
from .data import FeatureSchema, ScalerParams
from .errors import CorruptionError, TripnetError, VersionError
from .nn import Activation, DenseLayer, Network, param_count
from .train import LossCurve, TrainConfig, TrainedModel

SCHEMA_VERSION = 1


def to_document(model, include_timestamp=False):
    _, total = param_count(model.network)
    doc = {
        "schema_version": SCHEMA_VERSION,
        "dims": model.network.dims,
        "total_params": total,
        "layers": [
            {
                "fan_in": layer.fan_in,
                "fan_out": layer.fan_out,
                "activation": layer.activation.value,
                "weights": layer.weights.ravel().tolist(),
                "bias": layer.bias.ravel().tolist(),
            }
            for layer in model.network.layers
        ],
        "scaler": {"means": model.scaler.means.tolist(), "stds": model.scaler.stds.tolist()},
        "features": list(model.schema.features),
        "target": model.target_name,
        "train_config": model.config.to_dict(),
        "loss_curve": {"train": list(model.curve.train_loss), "val": list(model.curve.val_loss)},
    }
    if include_timestamp:
        doc["created_at"] = datetime.now(timezone.utc).isoformat(timespec="seconds")
    return doc


def dumps(model, include_timestamp=False):
    return json.dumps(to_document(model, include_timestamp), indent=2, allow_nan=False) + "\n"


def save(model, destination, include_timestamp=False):
    atomic_write_text(destination, dumps(model, include_timestamp))


def _floats(value, field, length):
    if not isinstance(value, list) or len(value) != length:
        got = len(value) if isinstance(value, list) else type(value).__name__
        raise CorruptionError(field, f"expected {length} numbers, got {got}")
    if not all(isinstance(x, (int, float)) and not isinstance(x, bool) for x in value):
        raise CorruptionError(field, "contains non-numeric entries")
    arr = np.array(value, dtype=np.float64)
    if not np.isfinite(arr).all():
        raise CorruptionError(field, "contains non-finite entries")
    return arr


def _count(value, field):
    if not isinstance(value, int) or isinstance(value, bool) or value < 1:
        raise CorruptionError(field, f"expected a positive integer, got {value!r}")
    return value


def from_document(doc):
    if not isinstance(doc, dict):
        raise CorruptionError("<root>", "expected a JSON object")
    version = doc.get("schema_version")
    if version != SCHEMA_VERSION:
        raise VersionError(f"unsupported model schema_version {version!r} "
                           f"(this build reads version {SCHEMA_VERSION})")
    for key in ("layers", "scaler", "features", "target", "train_config"):
        if key not in doc:
            raise CorruptionError(key, "missing")

    if not isinstance(doc["layers"], list) or not doc["layers"]:
        raise CorruptionError("layers", "expected a non-empty list")
    layers = []
    for i, entry in enumerate(doc["layers"]):
        where = f"layers[{i}]"
        if not isinstance(entry, dict):
            raise CorruptionError(where, "expected an object")
        fi = _count(entry.get("fan_in"), f"{where}.fan_in")
        fo = _count(entry.get("fan_out"), f"{where}.fan_out")
        try:
            act = Activation(entry.get("activation"))
        except ValueError:
            raise CorruptionError(f"{where}.activation",
                                  f"unknown activation {entry.get('activation')!r}") from None
        w = _floats(entry.get("weights"), f"{where}.weights", fi * fo).reshape(fi, fo)
        b = _floats(entry.get("bias"), f"{where}.bias", fo).reshape(1, fo)
        if layers and layers[-1].fan_out != fi:
            raise CorruptionError(f"{where}.fan_in",
                                  f"{fi} does not match previous fan_out {layers[-1].fan_out}")
        layers.append(DenseLayer(w, b, act))
    net = Network(tuple(layers))

    if "dims" in doc and doc["dims"] != net.dims:
        raise CorruptionError("dims", f"{doc['dims']} does not match layers {net.dims}")
    if "total_params" in doc and doc["total_params"] != param_count(net)[1]:
        raise CorruptionError("total_params",
                              f"{doc['total_params']} != {param_count(net)[1]} from layers")

    features = doc["features"]
    if not isinstance(features, list) or not all(isinstance(f, str) for f in features):
        raise CorruptionError("features", "expected a list of names")
    try:
        schema = FeatureSchema(tuple(features))
    except TripnetError as exc:
        raise CorruptionError("features", str(exc)) from None
    if len(features) != net.n_inputs:
        raise CorruptionError("features", f"{len(features)} names for {net.n_inputs} inputs")

    sc = doc["scaler"]
    if not isinstance(sc, dict):
        raise CorruptionError("scaler", "expected an object")
    means = _floats(sc.get("means"), "scaler.means", len(features))
    stds = _floats(sc.get("stds"), "scaler.stds", len(features))
    if not (stds > 0).all():
        raise CorruptionError("scaler.stds", "entries must be > 0")
    scaler = ScalerParams(means, stds)

    target = doc["target"]
    if target not in schema.targets:
        raise CorruptionError("target", f"unknown target {target!r}")

    try:
        config = TrainConfig(**doc["train_config"])
    except (TypeError, TripnetError) as exc:
        raise CorruptionError("train_config", str(exc)) from None

    curve_doc = doc.get("loss_curve", {"train": [], "val": []})
    try:
        curve = LossCurve(tuple(float(x) for x in curve_doc["train"]),
                          tuple(float(x) for x in curve_doc["val"]))
    except (TypeError, KeyError, ValueError):
        raise CorruptionError("loss_curve", "expected {train: [...], val: [...]}") from None
    if not all(math.isfinite(x) and x >= 0 for x in curve.train_loss + curve.val_loss):
        raise CorruptionError("loss_curve", "entries must be finite and >= 0")

    return TrainedModel(net, scaler, schema, target, curve, config)


def loads(text):
    try:
        doc = json.loads(text)
    except json.JSONDecodeError as exc:
        raise CorruptionError("<root>", f"not valid JSON ({exc})") from None
    return from_document(doc)


def load(source):
    if isinstance(source, (str, os.PathLike)):
        with open(source, encoding="utf-8") as fh:
            return loads(fh.read())
    return loads(source.read())
