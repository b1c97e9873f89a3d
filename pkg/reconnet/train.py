"""Mini-batch momentum SGD on the mean squared block reconstruction error."""
import csv
import logging
import math
import os
from dataclasses import dataclass, replace

import numpy as np
import torch
import torch.optim as optim

from numerics.tape import GradientTape, backward
from reconnet.model import INIT_MODES, build_model, forward, save_model
from utils.errors import ConfigurationError, DivergenceError, SearchError
from utils.util import Averager

logger = logging.getLogger(__name__)

LOG_HEADER = ["epoch", "train_loss", "val_loss", "lr", "init_mode"]
DEFAULT_LR_CANDIDATES = (1e-5, 1e-4, 1e-3, 1e-2, 1e-1)


@dataclass
class TrainConfig:
    batch_size: int = 128
    learning_rate: float = 1e-3
    momentum: float = 0.9
    epochs: int = 200
    seed: int = 0
    checkpoint_every: int = 0
    reproducible: bool = True
    conv_method: str = "im2col"
    conv_init_std: float = 0.01
    fc_init_std: float = 0.01
    init_mode: str = "random"
    lr_search: bool = False
    lr_candidates: tuple = DEFAULT_LR_CANDIDATES
    probe_epochs: int = 20

    def validate(self):
        if self.batch_size < 1:
            raise ValueError("batch size must be >= 1, got {}".format(self.batch_size))
        if not self.learning_rate > 0:
            raise ValueError("learning rate must be > 0, got {}".format(self.learning_rate))
        if not 0 <= self.momentum < 1:
            raise ValueError("momentum must lie in [0, 1), got {}".format(self.momentum))
        if self.epochs < 0:
            raise ValueError("epochs must be >= 0, got {}".format(self.epochs))
        if self.init_mode not in INIT_MODES:
            raise ValueError("init mode must be one of {}, got '{}'".format(INIT_MODES, self.init_mode))
        return self


@dataclass
class TrainState:
    model: object
    optimizer: optim.SGD
    generator: torch.Generator
    epoch: int = 0
    best_val_loss: float = math.inf
    last_loss: float = math.nan

    def velocities(self):
        """Momentum buffers, congruent with ``model.parameters()``; None before the first step."""
        return [self.optimizer.state[p].get("momentum_buffer") for p in self.model.parameters()]


class TrainingLog(object):
    """Epoch-level loss history, written as CSV."""

    def __init__(self):
        self.rows = []

    def add(self, epoch, train_loss, val_loss, lr, init_mode):
        self.rows.append([epoch, train_loss, val_loss, lr, init_mode])

    def for_mode(self, init_mode):
        return [row for row in self.rows if row[4] == init_mode]

    def write_csv(self, path):
        with open(path, "w", newline="") as f:
            writer = csv.writer(f)
            writer.writerow(LOG_HEADER)
            for epoch, train_loss, val_loss, lr, init_mode in self.rows:
                writer.writerow([epoch, "{:.9g}".format(train_loss), "{:.9g}".format(val_loss),
                                 "{:.9g}".format(lr), init_mode])


def configure_reproducibility(enabled):
    if enabled:
        torch.use_deterministic_algorithms(True)
        torch.set_num_threads(1)


def init_state(model, config):
    # lr and momentum are re-read from the config at every step
    optimizer = optim.SGD(model.parameters(), lr=config.learning_rate, momentum=config.momentum)
    generator = torch.Generator().manual_seed(int(config.seed))
    return TrainState(model, optimizer, generator)


def _as_batch(batch, model):
    measurements, labels = batch
    y = torch.as_tensor(np.asarray(measurements), dtype=model.dtype).reshape(-1, model.m)
    x = torch.as_tensor(np.asarray(labels), dtype=model.dtype).reshape(-1, 1, model.block_size, model.block_size)
    if len(y) == 0:
        raise ValueError("loss needs a non-empty batch")
    return y, x


def loss(batch, model, method="im2col"):
    """Mean over samples of the squared distance summed over all block pixels."""
    y, x = _as_batch(batch, model)
    with torch.no_grad():
        out = forward(model, y, method=method)
    return float(((out - x) ** 2).sum() / len(y))


def loss_and_gradients(batch, model, method="im2col"):
    y, x = _as_batch(batch, model)
    tape = GradientTape(method)
    with torch.no_grad():
        out = forward(model, y, tape=tape, method=method)
        residual = out - x
        value = float((residual ** 2).sum() / len(y))
        grads = backward(2.0 * residual / len(y), tape)
    return value, grads


def sgd_step(state, batch, config):
    """v <- momentum v - lr g;  w <- w + v, with g the batch-mean gradient.

    torch's SGD keeps buf = momentum buf + g and steps w -= lr buf, which is the
    same recursion with v = -lr buf for a constant learning rate.
    """
    if len(batch[0]) > config.batch_size:
        raise ValueError("batch of {} exceeds configured batch size {}".format(len(batch[0]), config.batch_size))
    model = state.model
    value, grads = loss_and_gradients(batch, model, config.conv_method)
    if not math.isfinite(value):
        raise DivergenceError("non-finite loss {}".format(value), layer="output")
    params = []
    for (name, layer), grad in zip(model.named_layers(), grads):
        for tensor, g in ((layer.weights, grad.weights), (layer.biases, grad.biases)):
            if not torch.isfinite(g).all():
                raise DivergenceError("non-finite gradient", layer=name)
            tensor.grad = g
            params.append(tensor)
    for group in state.optimizer.param_groups:
        group["lr"] = config.learning_rate
        group["momentum"] = config.momentum
    state.optimizer.step()
    for tensor in params:
        tensor.grad = None
    model.steps += 1
    state.last_loss = value
    return state


def evaluate(model, dataset, batch_size=256, method="im2col"):
    """Mean loss over a whole dataset; nan when it is empty."""
    if len(dataset) == 0:
        return math.nan
    total = 0.0
    for start in range(0, len(dataset), batch_size):
        stop = start + batch_size
        batch = (dataset.inputs[start:stop], dataset.labels[start:stop])
        total += loss(batch, model, method) * len(batch[0])
    return total / len(dataset)


def run_epochs(state, train_set, val_set, config, epochs, log=None, label=None, checkpoint_dir=None):
    """Train ``epochs`` seeded-shuffle passes; returns the final (train, validation) losses."""
    label = label or state.model.init_mode
    train_loss = evaluate(state.model, train_set, method=config.conv_method)
    val_loss = evaluate(state.model, val_set, method=config.conv_method) if len(val_set) else train_loss
    averager = Averager()
    for _ in range(epochs):
        averager.reset()
        order = torch.randperm(len(train_set), generator=state.generator).numpy()
        for start in range(0, len(order), config.batch_size):
            indices = order[start:start + config.batch_size]
            batch = (train_set.inputs[indices], train_set.labels[indices])
            sgd_step(state, batch, config)
            averager.add(state.last_loss, len(indices))
        state.epoch += 1
        train_loss = averager.val()
        val_loss = evaluate(state.model, val_set, method=config.conv_method) if len(val_set) else train_loss
        if not (math.isfinite(train_loss) and math.isfinite(val_loss)):
            raise DivergenceError("non-finite loss at epoch {}".format(state.epoch), layer="output")
        state.best_val_loss = min(state.best_val_loss, val_loss)
        if log is not None:
            log.add(state.epoch, train_loss, val_loss, config.learning_rate, label)
        logger.info("[%s] epoch %d | train loss %.6f | val loss %.6f", label, state.epoch, train_loss, val_loss)
        if checkpoint_dir and config.checkpoint_every and state.epoch % config.checkpoint_every == 0:
            path = os.path.join(checkpoint_dir, "{}_epoch{:04d}.rnet".format(label, state.epoch))
            save_model(state.model, path)
            logger.debug("checkpoint written to %s", path)
    return train_loss, val_loss


def _fresh_model(train_set, phi, config, init_mode):
    return build_model(train_set.m, init_mode, phi, seed=config.seed, conv_std=config.conv_init_std,
                       fc_std=config.fc_init_std)


def lr_search(train_set, val_set, candidates, probe_epochs, config, phi=None, log=None):
    """Linear search: probe every candidate on a fresh seeded model, keep the lowest validation loss."""
    candidates = list(candidates)
    if len(candidates) < 2:
        raise ValueError("learning-rate search needs at least 2 candidates, got {}".format(len(candidates)))
    if any(not lr > 0 for lr in candidates):
        raise ValueError("learning-rate candidates must be positive: {}".format(candidates))
    results = []
    for lr in candidates:
        probe_config = replace(config, learning_rate=lr, checkpoint_every=0)
        state = init_state(_fresh_model(train_set, phi, probe_config, config.init_mode), probe_config)
        try:
            _, val_loss = run_epochs(state, train_set, val_set, probe_config, probe_epochs, log, label="search")
        except DivergenceError as err:
            logger.warning("learning rate %g diverged: %s", lr, err)
            val_loss = math.inf
        results.append((val_loss, lr))
        logger.info("learning rate %g: probe validation loss %.6f", lr, val_loss)
    finite = [result for result in results if math.isfinite(result[0])]
    if not finite:
        raise SearchError("all {} learning-rate candidates diverged".format(len(candidates)))
    best_loss, best_lr = min(finite)
    logger.info("selected learning rate %g (validation loss %.6f)", best_lr, best_loss)
    return best_lr


def train(train_set, val_set, phi, config, checkpoint_dir=None, log=None):
    """Train random- and Phi^T-initialized networks under one schedule; keep the lower validation loss."""
    config.validate()
    if len(train_set) == 0:
        raise ValueError("training set is empty")
    if train_set.matrix_seed != phi.seed or train_set.m != phi.m:
        raise ConfigurationError("dataset was built with matrix seed {} (m={}), got matrix seed {} (m={})".format(
            train_set.matrix_seed, train_set.m, phi.seed, phi.m))
    configure_reproducibility(config.reproducible)
    if log is None:
        log = TrainingLog()
    if config.lr_search:
        lr = lr_search(train_set, val_set, config.lr_candidates, config.probe_epochs, config, phi, log)
        config = replace(config, learning_rate=lr)

    finalists = []
    for init_mode in INIT_MODES:
        model = _fresh_model(train_set, phi, config, init_mode)
        state = init_state(model, config)
        train_loss, val_loss = run_epochs(state, train_set, val_set, config, config.epochs, log,
                                          checkpoint_dir=checkpoint_dir)
        logger.info("[%s] final train loss %.6f, validation loss %.6f", init_mode, train_loss, val_loss)
        finalists.append((val_loss, INIT_MODES.index(init_mode), model))
    best_loss, _, best = min(finalists, key=lambda item: item[:2])
    logger.info("keeping the %s-initialized network (validation loss %.6f)", best.init_mode, best_loss)
    return best
