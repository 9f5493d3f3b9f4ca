from enum import Enum
from typing import Dict, Optional, Tuple

import numpy as np
from loguru import logger
from pydantic import BaseModel, Field

from nn.layers import Standardize
from nn.model import Model, TrainReport
from nn.tensors import LabeledDataset


class Optimizer(str, Enum):
    SGD = "sgd"
    ADAM = "adam"


class TrainConfig(BaseModel):
    learning_rate: float = Field(0.01, gt=0, description="Step size.")
    epochs: int = Field(5, ge=1, description="Passes over the training set.")
    batch_size: int = Field(16, ge=1)
    seed: int = Field(0, description="Seeds weight init and shuffling.")
    init_scale: Optional[float] = Field(None, gt=0, description="Uniform init bound s; None uses a per-layer Glorot bound.")
    optimizer: Optimizer = Optimizer.ADAM
    momentum: float = Field(0.9, ge=0, lt=1, description="SGD momentum; Adam's first-moment decay.")
    beta2: float = Field(0.999, ge=0, lt=1, description="Adam second-moment decay.")


class _Step:
    """Per-parameter optimizer state keyed by (layer name, parameter name)."""

    def __init__(self, config: TrainConfig):
        self.config = config
        self.first: Dict[Tuple[str, str], np.ndarray] = {}
        self.second: Dict[Tuple[str, str], np.ndarray] = {}
        self.count = 0

    def update(self, model: Model, param_grads: Dict[str, Dict[str, np.ndarray]]) -> None:
        self.count += 1
        config = self.config
        for layer in model.layers:
            for key, grad in param_grads.get(layer.name, {}).items():
                slot = (layer.name, key)
                m = self.first.setdefault(slot, np.zeros_like(grad))
                if config.optimizer is Optimizer.SGD:
                    m *= config.momentum
                    m -= config.learning_rate * grad
                    delta = m
                else:
                    v = self.second.setdefault(slot, np.zeros_like(grad))
                    m *= config.momentum
                    m += (1.0 - config.momentum) * grad
                    v *= config.beta2
                    v += (1.0 - config.beta2) * grad * grad
                    m_hat = m / (1.0 - config.momentum ** self.count)
                    v_hat = v / (1.0 - config.beta2 ** self.count)
                    delta = -config.learning_rate * m_hat / (np.sqrt(v_hat) + 1e-8)
                setattr(layer, key, getattr(layer, key) + delta)


def cross_entropy(probabilities: np.ndarray, labels: np.ndarray) -> float:
    picked = probabilities[np.arange(len(labels)), labels]
    return float(-np.mean(np.log(np.clip(picked, 1e-12, None))))


def accuracy(model: Model, dataset: LabeledDataset) -> float:
    if len(dataset) == 0:
        return float("nan")
    x, y = dataset.as_arrays()
    return float(np.mean(model.predict(x).argmax(axis=1) == y))


def train(model: Model, dataset: LabeledDataset, config: TrainConfig, test_dataset: Optional[LabeledDataset] = None) -> Model:
    """Trains a fresh copy of `model` with mini-batch Adam (or momentum SGD) on cross-entropy.

    The returned model is re-initialized from config.seed and its standardize layers
    are fit to the training images, so identical inputs give bit-identical parameters.
    Final accuracies are attached as `model.report`.
    """
    if len(dataset) == 0:
        raise ValueError("cannot train on an empty dataset")
    if not model.has_softmax:
        raise ValueError(f"model '{model.name}' needs a softmax head for training")
    if max(dataset.labels) >= model.num_classes:
        raise ValueError(f"label {max(dataset.labels)} out of range for {model.num_classes} outputs")

    trained = model.copy()
    trained.initialize(config.seed, config.init_scale)
    rng = np.random.default_rng(config.seed + 1)
    x, y = dataset.as_arrays()
    for layer in trained.layers:
        if isinstance(layer, Standardize):
            layer.fit(x)
    step = _Step(config)
    logger.info(f"Training '{trained.name}' on {len(dataset)} images for {config.epochs} epochs ({config.optimizer.value})")

    epoch_loss = float("nan")
    for epoch in range(config.epochs):
        order = rng.permutation(len(x))
        losses = []
        for start in range(0, len(order), config.batch_size):
            batch = order[start:start + config.batch_size]
            trace = trained.forward_trace(x[batch])
            probs = trace.result
            losses.append(cross_entropy(probs, y[batch]) * len(batch))
            onehot = np.zeros_like(probs)
            onehot[np.arange(len(batch)), y[batch]] = 1.0
            _, _, param_grads = trained.backward(trace, (probs - onehot) / len(batch), skip_last=True)
            step.update(trained, param_grads)
        epoch_loss = float(np.sum(losses) / len(x))
        logger.debug(f"'{trained.name}' epoch {epoch + 1}/{config.epochs}: loss {epoch_loss:.4f}")

    train_acc = accuracy(trained, dataset)
    test_acc = accuracy(trained, test_dataset) if test_dataset is not None and len(test_dataset) else None
    trained.report = TrainReport(epochs=config.epochs, final_loss=epoch_loss, train_accuracy=train_acc, test_accuracy=test_acc)
    logger.success(f"Trained '{trained.name}': train acc {train_acc:.3f}, test acc {test_acc if test_acc is not None else 'n/a'}")
    return trained
