"""Three-layer (input, hidden, output) sigmoid network trained by online
backpropagation on the sum of squared errors.

Every network here has exactly three output nodes, one per class.
"""
from __future__ import annotations

import json
import math
from dataclasses import dataclass, field, replace
from pathlib import Path
from typing import Optional, Sequence

import numpy as np
from numba import njit

from .errors import (BadTopology, CorruptFile, DimensionMismatch, Diverged,
                     EmptySet, VersionMismatch)

N_OUTPUTS = 3
ROUTE_LABELS = ("urban", "suburban", "highway")
STYLE_LABELS = ("quiet", "normal", "aggressive")

FORMAT_NAME = "ecodrive-mlp"
FORMAT_VERSION = 1


@dataclass(frozen=True, eq=False)
class MlpModel:
    layer_sizes: tuple[int, int, int]
    w_hidden: np.ndarray    # (n_hidden, n_in)
    b_hidden: np.ndarray    # (n_hidden,)
    w_out: np.ndarray       # (3, n_hidden)
    b_out: np.ndarray       # (3,)
    labels: tuple[str, str, str] = ("0", "1", "2")
    activation: str = "logistic"

    def __post_init__(self):
        check_topology(self.layer_sizes)
        n_in, n_h, n_out = self.layer_sizes
        shapes = {"w_hidden": (n_h, n_in), "b_hidden": (n_h,),
                  "w_out": (n_out, n_h), "b_out": (n_out,)}
        for name, shape in shapes.items():
            arr = getattr(self, name)
            if arr.shape != shape:
                raise BadTopology(f"{name} has shape {arr.shape}, expected {shape}")
            if not np.all(np.isfinite(arr)):
                raise ValueError(f"{name} contains non-finite weights")
        if len(self.labels) != N_OUTPUTS:
            raise BadTopology(f"need {N_OUTPUTS} labels, got {len(self.labels)}")
        if self.activation != "logistic":
            raise ValueError(f"unsupported activation {self.activation!r}")

    @property
    def n_in(self) -> int:
        return self.layer_sizes[0]

    def params(self) -> np.ndarray:
        """All weights and biases as one flat vector."""
        return np.concatenate([self.w_hidden.ravel(), self.b_hidden,
                               self.w_out.ravel(), self.b_out])

    def with_params(self, vec) -> "MlpModel":
        n_in, n_h, n_out = self.layer_sizes
        vec = np.asarray(vec, dtype=float)
        cuts = np.cumsum([n_h * n_in, n_h, n_out * n_h])
        a, b, c, d = np.split(vec, cuts)
        return replace(self, w_hidden=a.reshape(n_h, n_in).copy(), b_hidden=b.copy(),
                       w_out=c.reshape(n_out, n_h).copy(), b_out=d.copy())

    def equals(self, other: "MlpModel") -> bool:
        return (self.layer_sizes == other.layer_sizes
                and self.labels == other.labels
                and np.array_equal(self.params(), other.params()))


@dataclass(frozen=True)
class TrainConfig:
    learning_rate: float = 0.2
    max_cycles: int = 1000
    target_sse: float = 0.0
    seed: int = 0
    init_range: float = 0.5
    hidden: int = 8
    shuffle: bool = False
    # One-hot targets are mapped to (low, high) before training.
    target_low: float = 0.0
    target_high: float = 1.0

    def __post_init__(self):
        if self.learning_rate < 0:
            raise ValueError("learning_rate must be >= 0")
        if self.max_cycles < 1:
            raise ValueError("max_cycles must be >= 1")
        if self.init_range <= 0:
            raise ValueError("init_range must be positive")
        if self.hidden < 1:
            raise ValueError("hidden must be >= 1")


@dataclass(frozen=True, eq=False)
class LabeledSet:
    x: np.ndarray   # (n, n_in), features in [0, 1]
    y: np.ndarray   # (n, 3), exact one-hot rows

    def __post_init__(self):
        x = np.atleast_2d(np.asarray(self.x, dtype=float))
        y = np.atleast_2d(np.asarray(self.y, dtype=float))
        object.__setattr__(self, "x", x)
        object.__setattr__(self, "y", y)
        if len(x) != len(y):
            raise DimensionMismatch(f"{len(x)} inputs but {len(y)} targets")
        if y.size and (y.shape[1] != N_OUTPUTS or not np.all((y == 0) | (y == 1))
                       or not np.all(y.sum(axis=1) == 1)):
            raise ValueError("targets must be one-hot rows of length 3")

    @classmethod
    def from_classes(cls, x, classes: Sequence[int]) -> "LabeledSet":
        classes = np.asarray(classes, dtype=int)
        y = np.zeros((len(classes), N_OUTPUTS))
        y[np.arange(len(classes)), classes] = 1.0
        return cls(np.asarray(x, float).reshape(len(classes), -1), y)

    def __len__(self):
        return len(self.x)

    @property
    def classes(self) -> np.ndarray:
        return self.y.argmax(axis=1)

    def subset(self, idx) -> "LabeledSet":
        return LabeledSet(self.x[idx], self.y[idx])

    def __add__(self, other: "LabeledSet") -> "LabeledSet":
        return LabeledSet(np.vstack([self.x, other.x]), np.vstack([self.y, other.y]))


@dataclass
class History:
    """SSE and MSE over the whole set: entry 0 before training, then one per cycle."""
    sse: list[float] = field(default_factory=list)
    mse: list[float] = field(default_factory=list)

    @property
    def cycles(self) -> int:
        return len(self.sse) - 1


def check_topology(layer_sizes) -> None:
    sizes = tuple(layer_sizes)
    if len(sizes) != 3:
        raise BadTopology(f"need [inputs, hidden, outputs], got {list(sizes)}")
    if any(int(s) != s or s < 1 for s in sizes):
        raise BadTopology(f"layer sizes must be positive integers, got {list(sizes)}")
    if sizes[2] != N_OUTPUTS:
        raise BadTopology(f"output layer must have {N_OUTPUTS} nodes, got {sizes[2]}")


def init(layer_sizes, seed: int, init_range: float = 0.5,
         labels: Sequence[str] = ("0", "1", "2")) -> MlpModel:
    """Fresh model, weights and biases uniform in [-init_range, init_range]."""
    check_topology(layer_sizes)
    n_in, n_h, n_out = (int(s) for s in layer_sizes)
    rng = np.random.default_rng(seed)
    u = lambda *shape: rng.uniform(-init_range, init_range, size=shape)
    return MlpModel((n_in, n_h, n_out), u(n_h, n_in), u(n_h), u(n_out, n_h),
                    u(n_out), tuple(labels))


def sigmoid(z):
    with np.errstate(over="ignore"):
        return 1.0 / (1.0 + np.exp(-z))


def _check_inputs(model: MlpModel, x: np.ndarray) -> None:
    if x.shape[-1] != model.n_in:
        raise DimensionMismatch(
            f"model expects {model.n_in} inputs, got {x.shape[-1]}")


def hidden_and_output(model: MlpModel, x):
    x = np.asarray(x, dtype=float)
    _check_inputs(model, x)
    h = sigmoid(x @ model.w_hidden.T + model.b_hidden)
    o = sigmoid(h @ model.w_out.T + model.b_out)
    return h, o


def forward(model: MlpModel, x) -> np.ndarray:
    """Output activations for one input vector (or a batch of row vectors)."""
    return hidden_and_output(model, x)[1]


def _targets(data: LabeledSet, low: float = 0.0, high: float = 1.0) -> np.ndarray:
    return low + (high - low) * data.y


def sse(model: MlpModel, data: LabeledSet, targets=None) -> float:
    if len(data) == 0:
        raise EmptySet("SSE of an empty set")
    t = data.y if targets is None else targets
    return float(np.sum((forward(model, data.x) - t) ** 2))


def gradient(model: MlpModel, data: LabeledSet, targets=None) -> np.ndarray:
    """Gradient of the SSE over ``data`` w.r.t. ``model.params()``."""
    if len(data) == 0:
        raise EmptySet("gradient of an empty set")
    t = data.y if targets is None else targets
    h, o = hidden_and_output(model, data.x)
    d_out = 2.0 * (o - t) * o * (1.0 - o)                 # (n, 3)
    d_hid = (d_out @ model.w_out) * h * (1.0 - h)          # (n, n_h)
    return np.concatenate([(d_hid.T @ data.x).ravel(), d_hid.sum(axis=0),
                           (d_out.T @ h).ravel(), d_out.sum(axis=0)])


@njit(cache=False)
def _online_cycle(w1, b1, w2, b2, x, t, order, lr):
    n_h, n_in = w1.shape
    n_out = w2.shape[0]
    h = np.empty(n_h)
    o = np.empty(n_out)
    d2 = np.empty(n_out)
    d1 = np.empty(n_h)
    for r in order:
        for j in range(n_h):
            s = b1[j]
            for i in range(n_in):
                s += w1[j, i] * x[r, i]
            h[j] = 1.0 / (1.0 + math.exp(-s)) if s > -700.0 else 0.0
        for k in range(n_out):
            s = b2[k]
            for j in range(n_h):
                s += w2[k, j] * h[j]
            o[k] = 1.0 / (1.0 + math.exp(-s)) if s > -700.0 else 0.0
            d2[k] = 2.0 * (o[k] - t[r, k]) * o[k] * (1.0 - o[k])
        for j in range(n_h):
            s = 0.0
            for k in range(n_out):
                s += w2[k, j] * d2[k]
            d1[j] = s * h[j] * (1.0 - h[j])
        for k in range(n_out):
            for j in range(n_h):
                w2[k, j] -= lr * d2[k] * h[j]
            b2[k] -= lr * d2[k]
        for j in range(n_h):
            for i in range(n_in):
                w1[j, i] -= lr * d1[j] * x[r, i]
            b1[j] -= lr * d1[j]


def online_step_reference(model: MlpModel, x, target, lr: float) -> MlpModel:
    """One per-sample update written with the batch gradient; used to check
    the compiled training loop."""
    one = LabeledSet.__new__(LabeledSet)
    object.__setattr__(one, "x", np.atleast_2d(x))
    object.__setattr__(one, "y", np.atleast_2d(target))
    return model.with_params(model.params() - lr * gradient(model, one, one.y))


def train(model: MlpModel, data: LabeledSet, cfg: TrainConfig = TrainConfig()
          ) -> tuple[MlpModel, History]:
    """Online backpropagation: after each sample, step against the gradient
    of that sample's squared error.

    Samples are visited in dataset order unless ``cfg.shuffle`` is set, in
    which case each cycle uses a permutation drawn from ``cfg.seed``. Stops
    after ``cfg.max_cycles`` cycles or once the SSE is at or below
    ``cfg.target_sse``.
    """
    if len(data) == 0:
        raise EmptySet("cannot train on an empty set")
    _check_inputs(model, data.x)
    t = _targets(data, cfg.target_low, cfg.target_high)
    x = np.ascontiguousarray(data.x)
    w1, b1 = model.w_hidden.copy(), model.b_hidden.copy()
    w2, b2 = model.w_out.copy(), model.b_out.copy()
    n_terms = len(data) * N_OUTPUTS
    rng = np.random.default_rng(cfg.seed)
    order = np.arange(len(data))

    hist = History()

    def record():
        cur = replace(model, w_hidden=w1, b_hidden=b1, w_out=w2, b_out=b2) \
            if np.all(np.isfinite(w1)) and np.all(np.isfinite(w2)) else None
        value = sse(cur, data, t) if cur is not None else math.nan
        if not math.isfinite(value):
            raise Diverged(f"SSE became non-finite after {len(hist.sse) - 1} cycle(s)")
        hist.sse.append(value)
        hist.mse.append(value / n_terms)
        return value

    current = record()
    for _ in range(cfg.max_cycles):
        if current <= cfg.target_sse:
            break
        if cfg.shuffle:
            order = rng.permutation(len(data))
        _online_cycle(w1, b1, w2, b2, x, t, order, cfg.learning_rate)
        current = record()
    trained = replace(model, w_hidden=w1.copy(), b_hidden=b1.copy(),
                      w_out=w2.copy(), b_out=b2.copy())
    return trained, hist


def classify(model: MlpModel, x) -> tuple[str, np.ndarray]:
    """Winning label and the three output activations. Ties go to the lowest index."""
    out = forward(model, np.asarray(x, dtype=float))
    if out.ndim != 1:
        raise DimensionMismatch("classify takes a single input vector")
    return model.labels[int(np.argmax(out))], out


def predict_classes(model: MlpModel, x) -> np.ndarray:
    return np.argmax(forward(model, np.atleast_2d(x)), axis=1)


def accuracy(model: MlpModel, data: LabeledSet) -> float:
    if len(data) == 0:
        raise EmptySet("accuracy of an empty set")
    return float(np.mean(predict_classes(model, data.x) == data.classes))


def confusion(model: MlpModel, data: LabeledSet) -> np.ndarray:
    """Rows are true classes, columns predicted."""
    m = np.zeros((N_OUTPUTS, N_OUTPUTS), dtype=int)
    for true, pred in zip(data.classes, predict_classes(model, data.x)):
        m[true, pred] += 1
    return m


# -- weights file ---------------------------------------------------------------

def dumps(model: MlpModel) -> str:
    doc = {
        "format": FORMAT_NAME,
        "version": FORMAT_VERSION,
        "activation": model.activation,
        "layer_sizes": list(model.layer_sizes),
        "labels": list(model.labels),
        "layers": [
            {"weights": model.w_hidden.tolist(), "biases": model.b_hidden.tolist()},
            {"weights": model.w_out.tolist(), "biases": model.b_out.tolist()},
        ],
    }
    # json writes floats with repr(), which round-trips exactly.
    return json.dumps(doc, indent=1) + "\n"


def loads(text: str) -> MlpModel:
    try:
        doc = json.loads(text)
    except ValueError as exc:
        raise CorruptFile(f"weights file is not valid JSON: {exc}") from None
    if not isinstance(doc, dict) or doc.get("format") != FORMAT_NAME:
        raise CorruptFile("not an ecodrive weights file")
    if doc.get("version") != FORMAT_VERSION:
        raise VersionMismatch(
            f"weights file version {doc.get('version')!r}, expected {FORMAT_VERSION}")
    try:
        sizes = tuple(doc["layer_sizes"])
        check_topology(sizes)
        hid, out = doc["layers"]
        arrays = [np.array(a, dtype=float) for a in
                  (hid["weights"], hid["biases"], out["weights"], out["biases"])]
        return MlpModel(sizes, *arrays, labels=tuple(doc["labels"]),
                        activation=doc.get("activation", "logistic"))
    except BadTopology:
        raise
    except (KeyError, TypeError, ValueError) as exc:
        raise CorruptFile(f"malformed weights file: {exc}") from None


def save(model: MlpModel, path) -> None:
    Path(path).write_text(dumps(model), encoding="utf-8")


def load(path) -> MlpModel:
    return loads(Path(path).read_text(encoding="utf-8"))
