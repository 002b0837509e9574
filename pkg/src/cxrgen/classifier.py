"""Per-abnormality binary classifiers: build, train, tune, evaluate, predict.

Routing is fixed: cardiomegaly and effusion read segment II (lower lung),
consolidation reads segment III (middle lung).
"""

from __future__ import annotations

import csv
import io
from dataclasses import dataclass, field

import numpy as np

from . import neuralnet as nn
from .errors import EmptyDataset, ShapeMismatch
from .imaging import SEGMENT_II, SEGMENT_III, Segment
from .optimizer import AdamState, OptimizerConfig, adam_step, sgd_step

ABNORMALITY_TAGS = ("cardiomegaly", "effusion", "consolidation")

SEGMENT_ROUTING: dict[str, Segment] = {
    "cardiomegaly": SEGMENT_II,
    "effusion": SEGMENT_II,
    "consolidation": SEGMENT_III,
}

ARCH_WIDTHS = {"small": 8, "large": 16}


@dataclass(frozen=True)
class Abnormality:
    tag: str

    def __post_init__(self):
        if self.tag not in ABNORMALITY_TAGS:
            raise ValueError(f"unknown abnormality {self.tag!r}")

    @property
    def segment(self) -> Segment:
        return SEGMENT_ROUTING[self.tag]


@dataclass
class TrainConfig:
    epochs: int = 20
    batch_size: int = 16
    seed: int = 0
    optimizer: OptimizerConfig = field(default_factory=OptimizerConfig)
    arch_width: str = "small"

    def __post_init__(self):
        if self.epochs < 1 or self.batch_size < 1:
            raise ValueError("epochs and batch_size must be >= 1")
        if self.arch_width not in ARCH_WIDTHS:
            raise ValueError(f"arch_width must be one of {sorted(ARCH_WIDTHS)}")


@dataclass
class TrainedModel:
    abnormality: Abnormality
    network: nn.Network
    threshold: float = 0.5
    train_accuracy: float = 0.0
    test_accuracy: float = 0.0
    config: TrainConfig | None = None


@dataclass
class EpochStats:
    epoch: int
    mean_loss: float
    train_accuracy: float
    test_accuracy: float


def build_model(abnormality: Abnormality, arch_width: str = "small", seed: int = 0) -> nn.Network:
    return nn.build_network(width=ARCH_WIDTHS[arch_width], seed=seed)


def predict(model: TrainedModel, segment_image: np.ndarray) -> tuple[float, int, str]:
    """Returns (probability, label, abnormality tag); label = 1 iff p >= threshold."""
    x = np.asarray(segment_image, dtype=np.float64)
    if x.ndim == 2:
        x = x[np.newaxis]
    if tuple(x.shape) != tuple(model.network.input_shape):
        raise ShapeMismatch(
            f"segment image {x.shape} does not match model input {model.network.input_shape}"
        )
    p, _ = nn.forward(model.network, x)
    return p, int(p >= model.threshold), model.abnormality.tag


def _as_input(img: np.ndarray) -> np.ndarray:
    x = np.asarray(img, dtype=np.float64)
    return x[np.newaxis] if x.ndim == 2 else x


def _accuracy(net: nn.Network, dataset, threshold: float) -> float:
    if not dataset:
        raise EmptyDataset("cannot compute accuracy on an empty dataset")
    correct = 0
    for img, label in dataset:
        p, _ = nn.forward(net, _as_input(img))
        correct += int(p >= threshold) == int(label)
    return correct / len(dataset)


def evaluate_accuracy(model: TrainedModel, dataset) -> float:
    return _accuracy(model.network, dataset, model.threshold)


def train(
    net: nn.Network,
    train_set,
    test_set,
    config: TrainConfig,
    abnormality: Abnormality | None = None,
) -> tuple[TrainedModel, list[EpochStats]]:
    """Mini-batch training; order reshuffled per epoch by the seeded generator.

    Gradients are averaged over each batch. Returns the trained model plus
    per-epoch (mean loss, train accuracy, test accuracy) history.
    """
    if not train_set or not test_set:
        raise EmptyDataset("train and test sets must be non-empty")
    threshold = 0.5
    rng = np.random.default_rng(config.seed)
    params = net.params()
    adam = AdamState.for_params(params) if config.optimizer.kind == "adam" else None

    inputs = [_as_input(img) for img, _ in train_set]
    labels = [int(label) for _, label in train_set]
    for x in inputs:
        if tuple(x.shape) != tuple(net.input_shape):
            raise ShapeMismatch(f"training image {x.shape} vs network input {net.input_shape}")

    history: list[EpochStats] = []
    n = len(inputs)
    for epoch in range(1, config.epochs + 1):
        order = rng.permutation(n)
        losses = []
        for start in range(0, n, config.batch_size):
            batch = order[start : start + config.batch_size]
            batch_grads = None
            for idx in batch:
                p, cache = nn.forward(net, inputs[idx])
                losses.append(nn.bce_loss(p, labels[idx]))
                grads = [g for layer in nn.backward(net, cache, labels[idx]) for g in layer]
                if batch_grads is None:
                    batch_grads = grads
                else:
                    for acc, g in zip(batch_grads, grads):
                        acc += g
            scale = 1.0 / len(batch)
            for g in batch_grads:
                g *= scale
            if adam is not None:
                adam_step(params, batch_grads, adam, config.optimizer)
            else:
                sgd_step(params, batch_grads, config.optimizer.learning_rate)
        history.append(
            EpochStats(
                epoch=epoch,
                mean_loss=float(np.mean(losses)),
                train_accuracy=_accuracy(net, train_set, threshold),
                test_accuracy=_accuracy(net, test_set, threshold),
            )
        )

    model = TrainedModel(
        abnormality=abnormality or Abnormality("cardiomegaly"),
        network=net,
        threshold=threshold,
        train_accuracy=history[-1].train_accuracy,
        test_accuracy=history[-1].test_accuracy,
        config=config,
    )
    return model, history


# ------------------------------------------------------------- OFAT tuning


@dataclass
class TuneStep:
    factor: str
    candidates: list
    results: list[tuple[float, float]]  # (train_acc, test_acc) per candidate
    winner: object


@dataclass
class TuneReport:
    steps: list[TuneStep]

    @property
    def final_config(self) -> dict:
        return {s.factor: s.winner for s in self.steps}

    def to_csv(self) -> str:
        buf = io.StringIO()
        writer = csv.writer(buf, lineterminator="\n")
        writer.writerow(["factor", "candidate", "train_acc", "test_acc", "winner"])
        for step in self.steps:
            for cand, (tr, te) in zip(step.candidates, step.results):
                writer.writerow([step.factor, cand, tr, te, int(cand == step.winner)])
        return buf.getvalue()


def tune_ofat(factors, eval_fn) -> TuneReport:
    """One-factor-at-a-time sweep.

    factors: ordered list of (name, candidates, default); step k evaluates
    every candidate of factor k with earlier factors pinned to their winners
    and later factors at defaults. Winner = argmax test accuracy; ties break
    by higher train accuracy, then earlier candidate order.
    """
    pinned = {name: default for name, _, default in factors}
    steps: list[TuneStep] = []
    for name, candidates, _default in factors:
        if not candidates:
            raise ValueError(f"factor {name!r} has no candidates")
        results = []
        for cand in candidates:
            cfg = dict(pinned)
            cfg[name] = cand
            results.append(tuple(eval_fn(cfg)))
        best = max(range(len(candidates)), key=lambda i: (results[i][1], results[i][0], -i))
        pinned[name] = candidates[best]
        steps.append(TuneStep(name, list(candidates), results, candidates[best]))
    return TuneReport(steps=steps)
