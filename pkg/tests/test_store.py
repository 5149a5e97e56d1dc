import io
import json

import numpy as np
import pytest

from tripnet import data, store
from tripnet.errors import CorruptionError, VersionError
from tripnet.nn import flatten_params
from tripnet.train import TrainConfig, train


@pytest.fixture(scope="module")
def model():
    ds = data.assemble(data.clean(data.synthesize(300, 5, 0.02))[0], target_name="vehicle_trips")
    sc = data.fit_scaler(ds)
    return train(data.apply_scaler(ds, sc), TrainConfig(epochs=3), scaler=sc)


def test_round_trip_is_bit_exact(model, tmp_path, rng):
    path = tmp_path / "m.json"
    store.save(model, path)
    back = store.load(path)
    assert flatten_params(back.network).tobytes() == flatten_params(model.network).tobytes()
    assert back.scaler.means.tobytes() == model.scaler.means.tobytes()
    assert back.scaler.stds.tobytes() == model.scaler.stds.tobytes()
    assert back.config == model.config and back.curve == model.curve
    assert back.target_name == "vehicle_trips"
    x = rng.normal(size=(50, 16)) * 3 + 2
    assert back.predict(x).tobytes() == model.predict(x).tobytes()


def test_saves_are_byte_identical(model, tmp_path):
    store.save(model, tmp_path / "a.json")
    store.save(model, tmp_path / "b.json")
    assert (tmp_path / "a.json").read_bytes() == (tmp_path / "b.json").read_bytes()


def test_timestamp_is_optional(model):
    assert "created_at" not in store.to_document(model)
    doc = store.to_document(model, include_timestamp=True)
    assert doc["created_at"].endswith("+00:00")
    assert store.from_document(doc).target_name == model.target_name


def test_document_layout(model):
    doc = json.loads(store.dumps(model))
    for key in ("schema_version", "layers", "scaler", "features", "target", "train_config"):
        assert key in doc
    assert doc["schema_version"] == 1
    assert doc["dims"] == [16, 5, 5, 1]
    assert doc["total_params"] == 121
    assert [l["activation"] for l in doc["layers"]] == ["relu", "tanh", "identity"]
    assert set(doc["layers"][0]) == {"fan_in", "fan_out", "activation", "weights", "bias"}
    assert set(doc["scaler"]) == {"means", "stds"}
    assert doc["features"][0] == "hh_veh_0"


def _tampered(model, edit):
    doc = store.to_document(model)
    edit(doc)
    return io.StringIO(json.dumps(doc))


def test_truncated_weights_are_rejected(model):
    src = _tampered(model, lambda d: d["layers"][1]["weights"].pop())
    with pytest.raises(CorruptionError, match=r"layers\[1\]\.weights"):
        store.load(src)


@pytest.mark.parametrize("edit,field", [
    (lambda d: d["layers"][0]["bias"].append(0.0), "layers[0].bias"),
    (lambda d: d["layers"][2].update(fan_in=4), "layers[2]"),
    (lambda d: d["layers"][0].update(activation="sigmoid"), "layers[0].activation"),
    (lambda d: d["scaler"]["stds"].__setitem__(3, 0.0), "scaler.stds"),
    (lambda d: d["scaler"]["means"].pop(), "scaler.means"),
    (lambda d: d.update(dims=[16, 5, 1]), "dims"),
    (lambda d: d.update(total_params=120), "total_params"),
    (lambda d: d.update(target="bike_trips"), "target"),
    (lambda d: d["features"].pop(), "features"),
    (lambda d: d["train_config"].update(epochs=0), "train_config"),
    (lambda d: d.pop("scaler"), "scaler"),
    (lambda d: d["layers"][0]["weights"].__setitem__(0, "x"), "layers[0].weights"),
])
def test_inconsistent_documents_are_rejected(model, edit, field):
    with pytest.raises(CorruptionError) as info:
        store.load(_tampered(model, edit))
    assert info.value.field.startswith(field)


def test_version_zero_is_a_version_error(model):
    with pytest.raises(VersionError):
        store.load(_tampered(model, lambda d: d.update(schema_version=0)))


def test_garbage_is_a_corruption_error():
    with pytest.raises(CorruptionError):
        store.loads("{not json")
    with pytest.raises(CorruptionError):
        store.loads("[1, 2]")
