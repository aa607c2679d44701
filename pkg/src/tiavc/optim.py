"""Adam optimizer, early stopping, and the epoch-level training driver."""

import csv
import math
from dataclasses import dataclass, field

import numpy as np

from .errors import NumericError, ValidationError
from .nn.params import is_finite


@dataclass
class TrainConfig:
    lr: float = 1e-4
    batch_size: int = 8
    max_epochs: int = 200
    patience: int = 5
    seed: int = 0
    match_loss_weight: float = 1.0   # joint mode only

    def __post_init__(self):
        if self.lr <= 0 or self.batch_size <= 0 or self.max_epochs <= 0:
            raise ValidationError("lr, batch_size and max_epochs must be positive")
        if self.patience < 1:
            raise ValidationError("patience must be >= 1")


class Adam:
    """Standard Adam with bias correction; zeroes gradients after each step."""

    def __init__(self, parameters, lr, beta1=0.9, beta2=0.999, eps=1e-8):
        self.parameters = list(parameters)
        self.lr = lr
        self.beta1 = beta1
        self.beta2 = beta2
        self.eps = eps
        self.step_count = 0
        self.m = {p.name: np.zeros_like(p.value) for p in self.parameters}
        self.v = {p.name: np.zeros_like(p.value) for p in self.parameters}

    def step(self):
        self.step_count += 1
        bc1 = 1.0 - self.beta1 ** self.step_count
        bc2 = 1.0 - self.beta2 ** self.step_count
        for p in self.parameters:
            if not is_finite(p.grad):
                raise NumericError(f"non-finite gradient for parameter '{p.name}'")
            m = self.m[p.name]
            v = self.v[p.name]
            m *= self.beta1
            m += (1.0 - self.beta1) * p.grad
            v *= self.beta2
            v += (1.0 - self.beta2) * p.grad * p.grad
            p.value -= self.lr * (m / bc1) / (np.sqrt(v / bc2) + self.eps)
            p.zero_grad()


class EarlyStopper:
    """Stop when validation loss has not strictly improved for `patience` epochs."""

    def __init__(self, patience=5):
        self.patience = patience
        self.best = math.inf
        self.since_improvement = 0

    def update(self, val_loss):
        """Record one validation loss; returns True when training should stop."""
        if not math.isfinite(val_loss):
            raise NumericError("non-finite validation loss")
        if val_loss < self.best:
            self.best = val_loss
            self.since_improvement = 0
        else:
            self.since_improvement += 1
        return self.since_improvement >= self.patience


@dataclass
class TrainingLog:
    train_losses: list = field(default_factory=list)
    val_losses: list = field(default_factory=list)
    stopped_early: bool = False
    best_epoch: int = 0

    @property
    def epochs(self):
        return len(self.train_losses)

    def write_csv(self, path):
        """Columns: epoch, train_loss, val_loss, stopped_early.

        stopped_early is true only on the row of the epoch that triggered
        the stop.
        """
        with open(path, "w", newline="") as fh:
            writer = csv.writer(fh)
            writer.writerow(["epoch", "train_loss", "val_loss", "stopped_early"])
            last = self.epochs - 1
            for i, (tr, va) in enumerate(zip(self.train_losses, self.val_losses)):
                stopped = self.stopped_early and i == last
                writer.writerow([i, f"{tr:.8f}", f"{va:.8f}", str(stopped).lower()])


def _batches(n, batch_size, rng):
    order = rng.permutation(n)
    for start in range(0, n, batch_size):
        yield order[start:start + batch_size]


def fit(task, train_items, val_items, config: TrainConfig):
    """Train `task` with Adam + early stopping; restores best-epoch weights.

    The task provides parameters(), loss_and_grads(items) -> loss and
    evaluate(items) -> loss. Batch order is a deterministic function of
    (config.seed, epoch).
    """
    if not train_items or not val_items:
        raise ValidationError("fit: train and validation sets must be non-empty")
    params = task.parameters()
    adam = Adam(params, lr=config.lr)
    stopper = EarlyStopper(patience=config.patience)
    log = TrainingLog()
    best = None
    n = len(train_items)
    for epoch in range(config.max_epochs):
        rng = np.random.default_rng([config.seed, epoch])
        total = 0.0
        for idx in _batches(n, config.batch_size, rng):
            batch = [train_items[i] for i in idx]
            loss = task.loss_and_grads(batch)
            if not math.isfinite(loss):
                raise NumericError(f"non-finite training loss at epoch {epoch}")
            adam.step()
            total += loss * len(batch)
        log.train_losses.append(total / n)
        val_loss = task.evaluate(val_items)
        log.val_losses.append(val_loss)
        if val_loss < stopper.best:
            best = {p.name: p.value.copy() for p in params}
            log.best_epoch = epoch
        if stopper.update(val_loss):
            log.stopped_early = True
            break
    if best is not None:
        for p in params:
            p.value = best[p.name]
            p.zero_grad()
    return log
