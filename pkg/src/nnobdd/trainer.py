"""Single-neuron training and the precision sweep.

Training is plain mini-batch gradient descent on the sigmoid cross-entropy
loss, with the bias carried as an always-on feature and split back out at
the end.  Everything is deterministic given the seed.  The step-activated
unit returned agrees with thresholding the sigmoid at 1/2, since the
sigmoid is at least 1/2 exactly when its argument is nonnegative.
"""

from __future__ import annotations

import csv
from dataclasses import dataclass
from fractions import Fraction
from typing import IO, Iterable, Sequence, Union

import numpy as np

from .neuron import (
    LinearThresholdUnit,
    QuantizationError,
    compile_pseudo,
    quantize,
)
from .obdd import BudgetExceededError, Manager, NodeRef


@dataclass(frozen=True)
class TrainConfig:
    learning_rate: float = 0.5
    epochs: int = 200
    batch_size: int = 32
    seed: int = 0
    l2: float = 0.0

    def __post_init__(self):
        if self.learning_rate <= 0:
            raise ValueError("learning rate must be positive")
        if self.epochs <= 0:
            raise ValueError("epoch count must be positive")
        if self.batch_size <= 0:
            raise ValueError("batch size must be positive")
        if self.l2 < 0:
            raise ValueError("l2 penalty must be nonnegative")


class LabeledDataset:
    """Rows of binary feature vectors with 0/1 labels."""

    def __init__(self, features, labels):
        self.features = np.asarray(features, dtype=np.uint8)
        self.labels = np.asarray(labels, dtype=np.uint8)
        if self.features.ndim != 2:
            raise ValueError("features must be a 2-d array")
        if self.labels.shape != (self.features.shape[0],):
            raise ValueError("one label per row required")
        if self.features.size and not np.isin(self.features, (0, 1)).all():
            raise ValueError("features must be 0 or 1")
        if self.labels.size and not np.isin(self.labels, (0, 1)).all():
            raise ValueError("labels must be 0 or 1")

    @classmethod
    def from_rows(cls, rows: Iterable[tuple[Sequence[int], int]]) -> "LabeledDataset":
        feats, labels = [], []
        for bits, label in rows:
            feats.append(list(bits))
            labels.append(label)
        return cls(feats, labels)

    @property
    def n_features(self) -> int:
        return self.features.shape[1]

    def __len__(self) -> int:
        return self.features.shape[0]

    def rows(self):
        for bits, label in zip(self.features, self.labels):
            yield tuple(int(b) for b in bits), int(label)


PathOrFile = Union[str, "IO[str]"]


def read_dataset_csv(src: PathOrFile) -> LabeledDataset:
    """Read `bit,...,bit,label` rows (no header)."""
    if hasattr(src, "read"):
        reader = csv.reader(src)  # type: ignore[arg-type]
        rows = [row for row in reader if row]
    else:
        with open(src, newline="") as fp:
            rows = [row for row in csv.reader(fp) if row]
    if not rows:
        raise ValueError("empty dataset file")
    feats, labels = [], []
    for i, row in enumerate(rows, start=1):
        try:
            values = [int(tok) for tok in row]
        except ValueError:
            raise ValueError("dataset line %d is not all integers" % i)
        if len(values) < 2:
            raise ValueError("dataset line %d needs features and a label" % i)
        feats.append(values[:-1])
        labels.append(values[-1])
    widths = {len(f) for f in feats}
    if len(widths) != 1:
        raise ValueError("dataset rows have differing widths")
    return LabeledDataset(feats, labels)


def write_dataset_csv(dataset: LabeledDataset, dest: PathOrFile) -> None:
    def emit(fp):
        writer = csv.writer(fp)
        for bits, label in dataset.rows():
            writer.writerow(list(bits) + [label])

    if hasattr(dest, "write"):
        emit(dest)
    else:
        with open(dest, "w", newline="") as fp:
            emit(fp)


def _sigmoid(z):
    return 1.0 / (1.0 + np.exp(-np.clip(z, -60.0, 60.0)))


def train_neuron(data: LabeledDataset, config: TrainConfig | None = None) -> LinearThresholdUnit:
    """Fit one threshold unit by logistic-loss gradient descent."""
    if config is None:
        config = TrainConfig()
    if len(data) == 0:
        raise ValueError("cannot train on an empty dataset")
    x = np.hstack(
        [data.features.astype(np.float64), np.ones((len(data), 1))]
    )  # bias as an always-on feature
    y = data.labels.astype(np.float64)
    w = np.zeros(x.shape[1])
    rng = np.random.default_rng(config.seed)
    for _ in range(config.epochs):
        perm = rng.permutation(len(data))
        for start in range(0, len(data), config.batch_size):
            batch = perm[start : start + config.batch_size]
            xb, yb = x[batch], y[batch]
            grad = xb.T @ (_sigmoid(xb @ w) - yb) / len(batch)
            if config.l2:
                grad[:-1] += config.l2 * w[:-1]  # bias not penalized
            w -= config.learning_rate * grad
    return LinearThresholdUnit(tuple(float(v) for v in w[:-1]), float(w[-1]))


def accuracy(predictor, data: LabeledDataset) -> Fraction:
    """Fraction of rows whose prediction matches the label, exactly."""
    if isinstance(predictor, NodeRef):
        if predictor.manager.num_vars != data.n_features:
            raise ValueError("diagram width does not match the dataset")
        predict = lambda bits: predictor.manager.evaluate(predictor, bits)
    elif hasattr(predictor, "fires"):
        if predictor.arity != data.n_features:
            raise ValueError("unit arity does not match the dataset")
        predict = predictor.fires
    else:
        raise TypeError("predictor must be a threshold unit or a NodeRef")
    if len(data) == 0:
        raise ValueError("empty dataset")
    hits = sum(1 for bits, label in data.rows() if predict(bits) == label)
    return Fraction(hits, len(data))


@dataclass(frozen=True)
class SweepRow:
    digits: int
    accuracy: Fraction | None
    nodes: int | None
    status: str  # "ok", "budget" or "overflow"


def precision_sweep(
    unit: LinearThresholdUnit,
    data: LabeledDataset,
    digits_range: Iterable[int],
    mode: str = "truncate",
    node_budget: int | None = None,
) -> list[SweepRow]:
    """Quantize, compile and measure at each precision; failures become rows.

    Accuracy is that of the quantized unit (the compiled diagram computes
    the same function), so it is available even when compilation runs out
    of budget; the node count is only reported for completed compilations.
    """
    rows = []
    for digits in digits_range:
        try:
            quantized = quantize(unit, digits, mode)
        except QuantizationError:
            rows.append(SweepRow(digits, None, None, "overflow"))
            continue
        acc = accuracy(quantized, data)
        manager = Manager(quantized.arity, node_budget=node_budget)
        try:
            root = compile_pseudo(quantized, manager)
        except BudgetExceededError:
            rows.append(SweepRow(digits, acc, None, "budget"))
            continue
        rows.append(SweepRow(digits, acc, manager.node_count(root), "ok"))
    return rows
