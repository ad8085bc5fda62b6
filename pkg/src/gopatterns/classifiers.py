"""Output-vector approximators: k-NN, a feed-forward network trained with
RPROP, Gaussian Naive Bayes over discretized outputs, PCA-axis calibration,
and the random and joint baselines.

All models follow the same small protocol: ``fit(X, Y)`` returns the model,
``predict(X)`` maps rows of inputs to rows of outputs, and ``to_dict()`` /
``model_from_dict()`` give an exact JSON round trip.
"""

from __future__ import annotations

import json
import logging
import math
import warnings
from dataclasses import dataclass
from pathlib import Path
from typing import Optional, Sequence

import numpy as np

from .stats import PcaModel, pca_fit, pca_project

log = logging.getLogger(__name__)

STRENGTH_DOMAIN = (-3.0, 30.0)
STYLE_DOMAIN = (1.0, 10.0)
MODEL_FORMAT_VERSION = 1


def _as_rows(x) -> np.ndarray:
    x = np.asarray(x, dtype=float)
    return x[None, :] if x.ndim == 1 else x


def _domain_arrays(domain, dims: int) -> tuple[np.ndarray, np.ndarray]:
    lo, hi = domain
    return (np.broadcast_to(np.asarray(lo, dtype=float), (dims,)).copy(),
            np.broadcast_to(np.asarray(hi, dtype=float), (dims,)).copy())


# --- k-NN ---------------------------------------------------------------------


@dataclass(frozen=True)
class KnnConfig:
    k: int = 4
    base: float = 0.9
    scale: float = 10.0

    def __post_init__(self):
        if self.k < 1 or not 0 < self.base < 1 or self.scale <= 0:
            raise ValueError(f"invalid k-NN configuration {self}")

    def weight(self, distance):
        return self.base ** (self.scale * np.asarray(distance, dtype=float))


def strength_scale(games: float) -> float:
    """Weight scale M for a sample of ``games`` games: 30 at G=2 down to 6 at G=85,
    log-linear in G in between and clamped outside."""
    g = min(max(games, 2.0), 85.0)
    t = (math.log(g) - math.log(2.0)) / (math.log(85.0) - math.log(2.0))
    return math.exp(math.log(30.0) + t * (math.log(6.0) - math.log(30.0)))


def knn(query, ref_inputs, ref_outputs, config: KnnConfig) -> np.ndarray:
    """Weighted average of the outputs of the ``k`` nearest references.

    Distance ties keep reference order.  Weights are taken relative to the
    nearest selected distance, which cancels in the normalization and keeps
    far-away queries from underflowing to 0/0.
    """
    refs = _as_rows(ref_inputs)
    outs = np.asarray(ref_outputs, dtype=float).reshape(len(refs), -1)
    if len(refs) == 0:
        raise ValueError("k-NN needs at least one reference")
    if config.k > len(refs):
        raise ValueError(f"k={config.k} exceeds {len(refs)} references")
    d = np.sqrt(((refs - np.asarray(query, dtype=float)) ** 2).sum(axis=1))
    nearest = np.argsort(d, kind="stable")[:config.k]
    w = config.weight(d[nearest] - d[nearest[0]])
    return (w[:, None] * outs[nearest]).sum(axis=0) / w.sum()


class KnnModel:
    kind = "knn"

    def __init__(self, config: KnnConfig = KnnConfig()):
        self.config = config
        self.inputs: Optional[np.ndarray] = None
        self.outputs: Optional[np.ndarray] = None

    def fit(self, x, y):
        self.inputs = _as_rows(x).copy()
        self.outputs = np.asarray(y, dtype=float).reshape(len(self.inputs), -1).copy()
        return self

    def predict(self, x) -> np.ndarray:
        return np.array([knn(q, self.inputs, self.outputs, self.config) for q in _as_rows(x)])

    def to_dict(self) -> dict:
        return {"kind": self.kind, "k": self.config.k, "base": self.config.base,
                "scale": self.config.scale, "inputs": self.inputs.tolist(),
                "outputs": self.outputs.tolist()}

    @classmethod
    def from_dict(cls, d):
        m = cls(KnnConfig(d["k"], d["base"], d["scale"]))
        m.inputs = np.array(d["inputs"], dtype=float)
        m.outputs = np.array(d["outputs"], dtype=float)
        return m


# --- neural network -------------------------------------------------------------


def activation(x):
    """Symmetric logistic, range (-1, 1)."""
    return 2.0 / (1.0 + np.exp(-x)) - 1.0


RPROP_ETA_PLUS = 1.2
RPROP_ETA_MINUS = 0.5
RPROP_DELTA0 = 0.1
RPROP_DELTA_MIN = 1e-6
RPROP_DELTA_MAX = 50.0
INIT_WEIGHT_RANGE = 0.3


class Network:
    """Fully connected feed-forward network.

    Each weight matrix has shape ``(fan_out, fan_in + 1)``; the last column
    is the bias neuron's weight.  Outputs live in (-1, 1) internally and are
    mapped affinely onto ``domain`` by :meth:`predict`.
    """

    kind = "nn"

    def __init__(self, layers: Sequence[int], weights: Sequence[np.ndarray],
                 domain=(-1.0, 1.0)):
        if len(layers) < 2:
            raise ValueError("a network needs at least an input and an output layer")
        self.layers = tuple(int(n) for n in layers)
        self.weights = [np.asarray(w, dtype=float) for w in weights]
        self.lo, self.hi = _domain_arrays(domain, self.layers[-1])
        self.converged = False
        self.iterations = 0
        self.error = float("nan")

    @classmethod
    def random(cls, layers: Sequence[int], seed: int, domain=(-1.0, 1.0)) -> "Network":
        rng = np.random.default_rng(seed)
        weights = [rng.uniform(-INIT_WEIGHT_RANGE, INIT_WEIGHT_RANGE, size=(b, a + 1))
                   for a, b in zip(layers[:-1], layers[1:])]
        return cls(layers, weights, domain)

    def scale_outputs(self, y) -> np.ndarray:
        return 2.0 * (np.asarray(y, dtype=float) - self.lo) / (self.hi - self.lo) - 1.0

    def unscale_outputs(self, y) -> np.ndarray:
        return self.lo + (np.asarray(y, dtype=float) + 1.0) * (self.hi - self.lo) / 2.0

    def forward(self, x) -> list[np.ndarray]:
        x = _as_rows(x)
        if x.shape[1] != self.layers[0]:
            raise ValueError(f"expected {self.layers[0]} inputs, got {x.shape[1]}")
        acts = [x]
        for w in self.weights:
            a = acts[-1]
            acts.append(activation(a @ w[:, :-1].T + w[:, -1]))
        return acts

    def raw_output(self, x) -> np.ndarray:
        return self.forward(x)[-1]

    def predict(self, x) -> np.ndarray:
        return self.unscale_outputs(self.raw_output(x))

    def loss_and_gradient(self, x, t) -> tuple[float, list[np.ndarray]]:
        """Mean squared error over all samples and outputs, and its gradient."""
        acts = self.forward(x)
        y = acts[-1]
        t = np.asarray(t, dtype=float).reshape(y.shape)
        diff = y - t
        loss = float((diff ** 2).mean())
        delta = 2.0 * diff / diff.size * (1.0 - y ** 2) / 2.0
        grads = [None] * len(self.weights)
        for li in range(len(self.weights) - 1, -1, -1):
            a = acts[li]
            grads[li] = np.hstack([delta.T @ a, delta.sum(axis=0)[:, None]])
            if li:
                w = self.weights[li]
                delta = (delta @ w[:, :-1]) * (1.0 - a ** 2) / 2.0
        return loss, grads

    def to_dict(self) -> dict:
        return {"kind": self.kind, "layers": list(self.layers),
                "weights": [w.tolist() for w in self.weights],
                "domain": [self.lo.tolist(), self.hi.tolist()],
                "converged": self.converged, "iterations": self.iterations,
                "error": self.error}

    @classmethod
    def from_dict(cls, d):
        net = cls(d["layers"], [np.array(w) for w in d["weights"]],
                  (np.array(d["domain"][0]), np.array(d["domain"][1])))
        net.converged = d["converged"]
        net.iterations = d["iterations"]
        net.error = d["error"]
        return net


def nn_train(inputs, outputs, layers: Sequence[int], target_error: float,
             max_iters: int, seed: int, domain=(-1.0, 1.0)) -> Network:
    """Full-batch RPROP training (the iRPROP- variant).

    Targets are mapped from ``domain`` to (-1, 1) before training.  Stops
    once the training MSE drops below ``target_error`` or after ``max_iters``
    weight updates; ``converged`` records which happened.
    """
    net = Network.random(layers, seed, domain)
    x = _as_rows(inputs)
    t = net.scale_outputs(np.asarray(outputs, dtype=float).reshape(len(x), -1))
    steps = [np.full_like(w, RPROP_DELTA0) for w in net.weights]
    prev = [np.zeros_like(w) for w in net.weights]
    it = 0
    while True:
        loss, grads = net.loss_and_gradient(x, t)
        net.error = loss
        if loss < target_error:
            net.converged = True
            break
        if it >= max_iters:
            break
        it += 1
        for w, g, gp, step in zip(net.weights, grads, prev, steps):
            s = g * gp
            step[s > 0] = np.minimum(step[s > 0] * RPROP_ETA_PLUS, RPROP_DELTA_MAX)
            step[s < 0] = np.maximum(step[s < 0] * RPROP_ETA_MINUS, RPROP_DELTA_MIN)
            g[s < 0] = 0.0
            w -= np.sign(g) * step
            gp[...] = g
    net.iterations = it
    return net


def nn_infer(net: Network, x) -> np.ndarray:
    out = net.predict(x)
    return out[0] if np.asarray(x).ndim == 1 else out


class NetworkModel:
    """Adapter giving :func:`nn_train` the ``fit``/``predict`` protocol."""

    kind = "nn"

    def __init__(self, hidden: int = 30, target_error: float = 0.0003,
                 max_iters: int = 1000, seed: int = 0, domain=STYLE_DOMAIN):
        self.hidden = hidden
        self.target_error = target_error
        self.max_iters = max_iters
        self.seed = seed
        self.domain = domain
        self.net: Optional[Network] = None

    def fit(self, x, y):
        x = _as_rows(x)
        y = np.asarray(y, dtype=float).reshape(len(x), -1)
        self.net = nn_train(x, y, (x.shape[1], self.hidden, y.shape[1]),
                            self.target_error, self.max_iters, self.seed, self.domain)
        return self

    def predict(self, x):
        return self.net.predict(x)

    def to_dict(self):
        return self.net.to_dict()


# --- Naive Bayes ------------------------------------------------------------------


VARIANCE_FLOOR = 1e-6


@dataclass
class BayesModel:
    """Gaussian Naive Bayes for one scalar output discretized into width-``width`` classes."""
    width: float
    classes: np.ndarray   # class labels c (value o belongs to floor(o / width))
    priors: np.ndarray
    means: np.ndarray     # (classes, dims)
    variances: np.ndarray

    def log_scores(self, x) -> np.ndarray:
        x = np.asarray(x, dtype=float)
        ll = -0.5 * (np.log(2 * np.pi * self.variances)
                     + (x - self.means) ** 2 / self.variances).sum(axis=1)
        return np.log(self.priors) + ll

    def likelihoods(self, x) -> np.ndarray:
        """Linear-domain prior times product of per-dimension normal densities."""
        x = np.asarray(x, dtype=float)
        dens = np.exp(-(x - self.means) ** 2 / (2 * self.variances)) / np.sqrt(
            2 * np.pi * self.variances)
        return self.priors * dens.prod(axis=1)

    def classify(self, x) -> int:
        return int(self.classes[int(np.argmax(self.log_scores(x)))])

    def estimate(self, x) -> float:
        return (self.classify(x) + 0.5) * self.width


def bayes_train(inputs, values, width: float = 10 / 7) -> BayesModel:
    if width <= 0:
        raise ValueError("class width must be positive")
    x = _as_rows(inputs)
    values = np.asarray(values, dtype=float).ravel()
    labels = np.floor(values / width).astype(int)
    classes = np.unique(labels)
    means, variances, priors = [], [], []
    for c in classes:
        members = x[labels == c]
        means.append(members.mean(axis=0))
        variances.append(members.var(axis=0))
        priors.append(len(members) / len(x))
    variances = np.array(variances)
    floored = variances < VARIANCE_FLOOR
    if floored.any():
        warnings.warn(f"zero class variances floored to {VARIANCE_FLOOR:g}", RuntimeWarning,
                      stacklevel=2)
        variances[floored] = VARIANCE_FLOOR
    return BayesModel(width, classes, np.array(priors), np.array(means), variances)


def bayes_classify(model: BayesModel, r) -> float:
    return model.estimate(r)


class BayesClassifier:
    """One :class:`BayesModel` per output dimension."""

    kind = "bayes"

    def __init__(self, width: float = 10 / 7, domain=STYLE_DOMAIN):
        self.width = width
        self.domain = domain
        self.models: list[BayesModel] = []

    def fit(self, x, y):
        x = _as_rows(x)
        y = np.asarray(y, dtype=float).reshape(len(x), -1)
        self.models = [bayes_train(x, y[:, d], self.width) for d in range(y.shape[1])]
        return self

    def predict(self, x):
        lo, hi = _domain_arrays(self.domain, len(self.models))
        out = np.array([[m.estimate(row) for m in self.models] for row in _as_rows(x)])
        return np.clip(out, lo, hi)

    def to_dict(self):
        return {"kind": self.kind, "width": self.width, "domain": list(self.domain),
                "models": [{"width": m.width, "classes": m.classes.tolist(),
                            "priors": m.priors.tolist(), "means": m.means.tolist(),
                            "variances": m.variances.tolist()} for m in self.models]}

    @classmethod
    def from_dict(cls, d):
        c = cls(d["width"], tuple(d["domain"]))
        c.models = [BayesModel(m["width"], np.array(m["classes"], dtype=int),
                               np.array(m["priors"]), np.array(m["means"]),
                               np.array(m["variances"])) for m in d["models"]]
        return c


# --- PCA-direct, random, joint, PCA-reduced ------------------------------------------


def least_squares_line(t, y) -> tuple[float, float]:
    t = np.asarray(t, dtype=float)
    y = np.asarray(y, dtype=float)
    tm, ym = t.mean(), y.mean()
    var = ((t - tm) ** 2).sum()
    slope = 0.0 if var == 0 else float(((t - tm) * (y - ym)).sum() / var)
    return slope, float(ym - slope * tm)


class PcaDirect:
    """First-PCA-axis coordinate, mapped affinely onto the output scale."""

    kind = "pca"

    def __init__(self, domain=None):
        self.domain = domain
        self.pca: Optional[PcaModel] = None
        self.slopes: Optional[np.ndarray] = None
        self.intercepts: Optional[np.ndarray] = None

    def fit(self, x, y):
        x = _as_rows(x)
        y = np.asarray(y, dtype=float).reshape(len(x), -1)
        self.pca = pca_fit(x, 1)
        t = pca_project(self.pca, x)[:, 0]
        lines = [least_squares_line(t, y[:, d]) for d in range(y.shape[1])]
        self.slopes = np.array([s for s, _ in lines])
        self.intercepts = np.array([b for _, b in lines])
        return self

    def predict(self, x):
        t = pca_project(self.pca, _as_rows(x))[:, :1]
        out = t * self.slopes + self.intercepts
        if self.domain is not None:
            lo, hi = _domain_arrays(self.domain, out.shape[1])
            out = np.clip(out, lo, hi)
        return out

    def to_dict(self):
        return {"kind": self.kind, "domain": None if self.domain is None else list(self.domain),
                "pca": pca_to_dict(self.pca), "slopes": self.slopes.tolist(),
                "intercepts": self.intercepts.tolist()}

    @classmethod
    def from_dict(cls, d):
        m = cls(None if d["domain"] is None else tuple(d["domain"]))
        m.pca = pca_from_dict(d["pca"])
        m.slopes = np.array(d["slopes"])
        m.intercepts = np.array(d["intercepts"])
        return m


def pca_direct(p, model: PcaDirect) -> np.ndarray:
    return model.predict(p)[0]


class RandomClassifier:
    """Uniform draws over the output domain, independent of the input."""

    kind = "random"

    def __init__(self, domain, seed: int = 0, dims: Optional[int] = None):
        self.domain = domain
        self.seed = seed
        self.dims = dims
        self.rng = np.random.default_rng(seed)

    def fit(self, x, y):
        self.dims = np.asarray(y, dtype=float).reshape(len(_as_rows(x)), -1).shape[1]
        return self

    def predict(self, x):
        lo, hi = _domain_arrays(self.domain, self.dims)
        return self.rng.uniform(lo, hi, size=(len(_as_rows(x)), self.dims))

    def to_dict(self):
        return {"kind": self.kind, "domain": list(self.domain), "seed": self.seed,
                "dims": self.dims}

    @classmethod
    def from_dict(cls, d):
        return cls(tuple(d["domain"]), d["seed"], d["dims"])


def random_baseline(domain, seed: int, dims: int = 1) -> np.ndarray:
    return RandomClassifier(domain, seed, dims).predict(np.zeros((1, 1)))[0]


class JointClassifier:
    """Delegates each output dimension to its own trained model."""

    kind = "joint"

    def __init__(self, models: Sequence):
        self.models = list(models)

    def fit(self, x, y):
        y = np.asarray(y, dtype=float).reshape(len(_as_rows(x)), -1)
        for m in self.models:
            m.fit(x, y)
        return self

    def predict(self, x):
        return np.column_stack([m.predict(x)[:, d] for d, m in enumerate(self.models)])

    def to_dict(self):
        return {"kind": self.kind, "models": [m.to_dict() for m in self.models]}

    @classmethod
    def from_dict(cls, d):
        return cls([model_from_dict(m) for m in d["models"]])


class PcaReduced:
    """Fits PCA on the training inputs and feeds the reduced coordinates to ``inner``.

    ``m`` is capped at the number of non-degenerate directions of the
    training set (training size minus one).
    """

    kind = "pca_reduced"

    def __init__(self, inner, m: int):
        self.inner = inner
        self.m = m
        self.pca: Optional[PcaModel] = None

    def fit(self, x, y):
        x = _as_rows(x)
        m = max(1, min(self.m, x.shape[0] - 1, x.shape[1]))
        self.pca = pca_fit(x, m)
        self.inner.fit(pca_project(self.pca, x), y)
        return self

    def predict(self, x):
        return self.inner.predict(pca_project(self.pca, _as_rows(x)))

    def to_dict(self):
        return {"kind": self.kind, "m": self.m, "pca": pca_to_dict(self.pca),
                "inner": self.inner.to_dict()}

    @classmethod
    def from_dict(cls, d):
        m = cls(model_from_dict(d["inner"]), d["m"])
        m.pca = pca_from_dict(d["pca"])
        return m


# --- serialization ---------------------------------------------------------------------


def pca_to_dict(model: PcaModel) -> dict:
    return {"mean": model.mean.tolist(), "projection": model.projection.tolist(),
            "eigenvalues": model.eigenvalues.tolist(), "total_variance": model.total_variance}


def pca_from_dict(d) -> PcaModel:
    return PcaModel(np.array(d["mean"]), np.array(d["projection"]).reshape(-1, len(d["mean"])),
                    np.array(d["eigenvalues"]), d["total_variance"])


_KINDS = {"knn": KnnModel, "nn": Network, "bayes": BayesClassifier, "pca": PcaDirect,
          "random": RandomClassifier, "joint": JointClassifier, "pca_reduced": PcaReduced}


def model_from_dict(d):
    return _KINDS[d["kind"]].from_dict(d)


def save_model(path, model, meta: Optional[dict] = None):
    doc = {"format": MODEL_FORMAT_VERSION, "meta": meta or {}, "model": model.to_dict()}
    Path(path).write_text(json.dumps(doc, indent=1, sort_keys=True) + "\n")


def load_model(path):
    doc = json.loads(Path(path).read_text())
    if doc.get("format") != MODEL_FORMAT_VERSION:
        raise ValueError(f"unsupported model format {doc.get('format')!r}")
    return model_from_dict(doc["model"]), doc["meta"]
