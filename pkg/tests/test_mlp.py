import math
from dataclasses import replace

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from ecodrive import mlp
from ecodrive.errors import (BadTopology, CorruptFile, DimensionMismatch, Diverged,
                             EmptySet, VersionMismatch)
from ecodrive.mlp import LabeledSet, TrainConfig


def oracle_sse(w_h, b_h, w_o, b_o, xs, ts):
    """Plain-loop SSE, no numpy arithmetic."""
    total = 0.0
    for x, t in zip(xs, ts):
        hidden = [1 / (1 + math.exp(-(b_h[j] + sum(w_h[j][i] * x[i] for i in range(len(x))))))
                  for j in range(len(b_h))]
        for k in range(len(b_o)):
            z = b_o[k] + sum(w_o[k][j] * hidden[j] for j in range(len(hidden)))
            total += (1 / (1 + math.exp(-z)) - t[k]) ** 2
    return total


def finite_difference_gradient(model, data, eps=1e-5):
    arrays = [model.w_hidden, model.b_hidden, model.w_out, model.b_out]
    xs, ts = data.x.tolist(), data.y.tolist()
    grads = []
    for a_idx, arr in enumerate(arrays):
        g = np.zeros_like(arr)
        for idx in np.ndindex(arr.shape):
            vals = []
            for sign in (+1, -1):
                bumped = [x.copy() for x in arrays]
                bumped[a_idx][idx] += sign * eps
                vals.append(oracle_sse(*(b.tolist() for b in bumped), xs, ts))
            g[idx] = (vals[0] - vals[1]) / (2 * eps)
        grads.append(g.ravel())
    return np.concatenate(grads)


def random_problem(rng, sizes, n_rows=5, scale=1.0):
    model = mlp.init(sizes, int(rng.integers(1 << 30)), init_range=scale)
    x = rng.uniform(0, 1, (n_rows, sizes[0]))
    return model, LabeledSet.from_classes(x, rng.integers(0, 3, n_rows))


def rel_error(a, b):
    return np.linalg.norm(a - b) / max(np.linalg.norm(a) + np.linalg.norm(b), 1e-300)


@pytest.mark.parametrize("sizes", [(1, 3, 3), (2, 4, 3), (4, 5, 3), (6, 8, 3)])
def test_gradient_matches_finite_differences(sizes):
    rng = np.random.default_rng(sum(sizes))
    for _ in range(3):
        model, data = random_problem(rng, sizes)
        assert rel_error(mlp.gradient(model, data), finite_difference_gradient(model, data)) < 1e-6


def test_oracle_agrees_with_sse():
    model, data = random_problem(np.random.default_rng(0), (3, 4, 3))
    p = [a.tolist() for a in (model.w_hidden, model.b_hidden, model.w_out, model.b_out)]
    assert oracle_sse(*p, data.x.tolist(), data.y.tolist()) == pytest.approx(mlp.sse(model, data))


def test_init_deterministic():
    a, b = mlp.init([6, 8, 3], 1), mlp.init([6, 8, 3], 1)
    assert a.equals(b)
    assert not a.equals(mlp.init([6, 8, 3], 2))
    assert np.all(np.abs(a.params()) <= 0.5)


@pytest.mark.parametrize("sizes", [[6, 8, 4], [6, 3], [0, 8, 3], [6, 8, 3, 3]])
def test_init_bad_topology(sizes):
    with pytest.raises(BadTopology):
        mlp.init(sizes, 0)


def zero_model(n_in=2, n_h=3):
    m = mlp.init([n_in, n_h, 3], 0)
    return m.with_params(np.zeros_like(m.params()))


def test_forward_zero_weights():
    assert np.all(mlp.forward(zero_model(), [0.3, 0.9]) == 0.5)


def test_forward_tiny_model():
    m = mlp.MlpModel((1, 1, 3), np.ones((1, 1)), np.zeros(1), np.ones((3, 1)), np.zeros(3))
    h, o = mlp.hidden_and_output(m, [1.0])
    assert h[0] == pytest.approx(0.7310585786300049, abs=1e-12)
    assert np.allclose(o, 0.6750375273768237, atol=1e-12)


def test_forward_dimension_mismatch():
    with pytest.raises(DimensionMismatch):
        mlp.forward(zero_model(), [1.0, 2.0, 3.0])


@settings(max_examples=50)
@given(st.lists(st.floats(0, 1), min_size=6, max_size=6), st.integers(0, 2**31))
def test_forward_open_unit_interval(x, seed):
    out = mlp.forward(mlp.init([6, 8, 3], seed), x)
    assert np.all((out > 0) & (out < 1))


def test_sse_examples():
    data = LabeledSet.from_classes([[0.1, 0.2]], [0])
    assert mlp.sse(zero_model(), data) == pytest.approx(0.75)
    with pytest.raises(EmptySet):
        mlp.sse(zero_model(), LabeledSet(np.empty((0, 2)), np.empty((0, 3))))


def test_sse_exact_fit_is_zero():
    m = zero_model()
    out = mlp.forward(m, [0.0, 0.0])
    data = LabeledSet(np.zeros((1, 2)), np.eye(3)[[0]])
    assert mlp.sse(m, data, targets=out[None, :]) == 0.0


def test_sse_additive():
    rng = np.random.default_rng(3)
    model, a = random_problem(rng, (4, 5, 3), 7)
    _, b = random_problem(rng, (4, 5, 3), 4)
    assert mlp.sse(model, a + b) == pytest.approx(mlp.sse(model, a) + mlp.sse(model, b))


def test_labeled_set_requires_one_hot():
    with pytest.raises(ValueError):
        LabeledSet(np.zeros((1, 2)), np.array([[0.5, 0.5, 0.0]]))


def test_compiled_cycle_matches_reference_updates():
    rng = np.random.default_rng(11)
    model, data = random_problem(rng, (4, 6, 3), 9)
    ref = model
    for x, t in zip(data.x, data.y):
        ref = mlp.online_step_reference(ref, x, t, 0.2)
    trained, _ = mlp.train(model, data, TrainConfig(max_cycles=1))
    assert np.allclose(trained.params(), ref.params(), rtol=0, atol=1e-12)


def test_zero_learning_rate_changes_nothing():
    model, data = random_problem(np.random.default_rng(1), (3, 4, 3), 6)
    trained, hist = mlp.train(model, data, TrainConfig(learning_rate=0.0, max_cycles=5))
    assert trained.equals(model)
    assert len(set(hist.sse)) == 1 and hist.cycles == 5


def separable_set(n=60, seed=0):
    rng = np.random.default_rng(seed)
    cls = np.arange(n) % 3
    centers = np.array([[0.15, 0.2], [0.5, 0.8], [0.85, 0.25]])
    return LabeledSet.from_classes(centers[cls] + rng.normal(0, 0.04, (n, 2)), cls)


def test_training_reduces_sse_and_is_deterministic():
    data = separable_set()
    cfg = TrainConfig(max_cycles=300)
    m1, h1 = mlp.train(mlp.init([2, 5, 3], 4), data, cfg)
    m2, h2 = mlp.train(mlp.init([2, 5, 3], 4), data, cfg)
    assert h1.sse[-1] < h1.sse[0]
    assert h1.sse == h2.sse and m1.equals(m2)
    assert mlp.accuracy(m1, data) == 1.0
    assert h1.mse[-1] == pytest.approx(h1.sse[-1] / (len(data) * 3))


def test_shuffled_training_is_seeded():
    data = separable_set()
    cfg = TrainConfig(max_cycles=20, shuffle=True, seed=9)
    a = mlp.train(mlp.init([2, 5, 3], 4), data, cfg)[1].sse
    b = mlp.train(mlp.init([2, 5, 3], 4), data, cfg)[1].sse
    c = mlp.train(mlp.init([2, 5, 3], 4), data, replace(cfg, seed=10))[1].sse
    assert a == b and a != c


def test_target_sse_stops_early():
    data = separable_set()
    _, hist = mlp.train(mlp.init([2, 5, 3], 4), data, TrainConfig(max_cycles=500, target_sse=5.0))
    assert hist.sse[-1] <= 5.0 and hist.cycles < 500


def test_full_batch_descent_non_increasing():
    data = separable_set(30, seed=2)
    model = mlp.init([2, 6, 3], 8)
    prev = mlp.sse(model, data)
    for _ in range(50):
        model = model.with_params(model.params() - 1e-3 * mlp.gradient(model, data))
        cur = mlp.sse(model, data)
        assert cur <= prev
        prev = cur


def test_diverged():
    data = separable_set()
    model = mlp.init([2, 5, 3], 0)
    with pytest.raises(Diverged):
        mlp.train(model, data, TrainConfig(learning_rate=math.inf, max_cycles=3))


def test_train_dimension_mismatch():
    with pytest.raises(DimensionMismatch):
        mlp.train(mlp.init([3, 4, 3], 0), separable_set(), TrainConfig(max_cycles=1))


def test_classify_and_tie_break():
    m = mlp.MlpModel((1, 1, 3), np.zeros((1, 1)), np.zeros(1), np.zeros((3, 1)),
                     np.array([0.0, 0.0, -1.0]), labels=mlp.STYLE_LABELS)
    label, out = mlp.classify(m, [0.4])
    assert label == "quiet" and out[0] == out[1]
    m2 = replace(m, b_out=np.array([2.2, -2.2, -1.4]))
    assert mlp.classify(m2, [0.4])[0] == "quiet"
    m3 = replace(m, b_out=np.array([-2.0, 0.3, 1.0]))
    assert mlp.classify(m3, [0.4])[0] == "aggressive"


@given(st.lists(st.floats(0, 1), min_size=6, max_size=6), st.integers(0, 2**31))
def test_classify_invariant_under_monotone_transform(x, seed):
    m = mlp.init([6, 4, 3], seed)
    out = mlp.forward(m, x)
    assert np.argmax(out) == mlp.predict_classes(m, x)[0] == np.argmax(np.log(out) * 2 - 7)


def test_save_load_round_trip(tmp_path):
    rng = np.random.default_rng(5)
    m = mlp.init([6, 8, 3], 77, labels=mlp.ROUTE_LABELS)
    m = m.with_params(m.params() * rng.uniform(-3, 3, m.params().size))
    mlp.save(m, tmp_path / "w.json")
    back = mlp.load(tmp_path / "w.json")
    assert back.equals(m) and back.labels == mlp.ROUTE_LABELS
    x = rng.uniform(0, 1, (50, 6))
    assert np.array_equal(mlp.forward(back, x), mlp.forward(m, x))


def test_load_truncated(tmp_path):
    text = mlp.dumps(mlp.init([6, 8, 3], 1))
    with pytest.raises(CorruptFile):
        mlp.loads(text[: len(text) // 2])


def test_load_four_outputs():
    import json
    doc = json.loads(mlp.dumps(mlp.init([2, 2, 3], 1)))
    doc["layer_sizes"] = [2, 2, 4]
    doc["layers"][1]["weights"].append([0.0, 0.0])
    doc["layers"][1]["biases"].append(0.0)
    with pytest.raises(BadTopology):
        mlp.loads(json.dumps(doc))


def test_load_version_mismatch():
    with pytest.raises(VersionMismatch):
        mlp.loads(mlp.dumps(mlp.init([2, 2, 3], 1)).replace('"version": 1', '"version": 99'))


def test_load_shape_corrupt():
    import json
    doc = json.loads(mlp.dumps(mlp.init([2, 2, 3], 1)))
    del doc["layers"][0]["biases"]
    with pytest.raises(CorruptFile):
        mlp.loads(json.dumps(doc))


def test_confusion_counts():
    data = separable_set()
    m, _ = mlp.train(mlp.init([2, 5, 3], 4), data, TrainConfig(max_cycles=300))
    conf = mlp.confusion(m, data)
    assert conf.sum() == len(data) and np.trace(conf) == len(data)
