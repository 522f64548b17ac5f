"""
Adaptive-moment gradient descent over a ParameterSet
"""

from __future__ import annotations

import logging
from dataclasses import dataclass, field
from typing import Callable, Dict, List, Mapping, Optional, Protocol, Sequence

import numpy as np
from pydantic import BaseModel, ConfigDict, Field

from .errors import InvalidInputError, TrainingDivergedError
from .network import ArrayOrDict, ParameterSet, forward_trace

_log = logging.getLogger(__name__)

Batch = Dict[str, np.ndarray]


class TrainConfig(BaseModel):
    """Optimizer settings; `trainable` None means every layer with tensors."""

    model_config = ConfigDict(extra="forbid")

    iterations: int = Field(1000, ge=1)
    learning_rate: float = Field(1e-3, gt=0)
    l2_weight: float = Field(0.0, ge=0)
    batch_size: int = Field(64, ge=1)
    seed: int = 0
    trainable: Optional[List[str]] = None
    beta1: float = Field(0.9, ge=0, lt=1)
    beta2: float = Field(0.999, ge=0, lt=1)
    epsilon: float = Field(1e-8, gt=0)
    log_every: int = Field(0, ge=0)


@dataclass
class Evaluation:
    """Loss value, its gradient and a per-term breakdown."""

    value: float
    gradient: ParameterSet
    terms: Dict[str, float] = field(default_factory=dict)


@dataclass
class TrainResult:
    params: ParameterSet
    trace: List[float]
    terms: Dict[str, List[float]] = field(default_factory=dict)


class Objective(Protocol):
    def __call__(self, params: ParameterSet, batch: Batch, rng: np.random.Generator,
                 trainable: Sequence[str]) -> Evaluation:
        ...


class OutputLoss:
    """Objective built from a loss on graph outputs.

    `loss_fn(outputs, batch)` returns (value, d value / d outputs), optionally
    followed by a dict of named loss terms.
    """

    def __init__(self, loss_fn: Callable):
        self.loss_fn = loss_fn

    def __call__(self, params: ParameterSet, batch: Batch, rng: np.random.Generator,
                 trainable: Sequence[str]) -> Evaluation:
        trace = forward_trace(params, {k: batch[k] for k in params.topology.inputs})
        result = self.loss_fn(trace.outputs, batch)
        value, grad = result[0], result[1]
        terms = result[2] if len(result) > 2 else {}
        return Evaluation(float(value), trace.backward(grad, trainable), dict(terms))


def _check_dataset(dataset: Mapping[str, np.ndarray]) -> int:
    sizes = {k: len(v) for k, v in dataset.items()}
    if not sizes:
        raise InvalidInputError("empty dataset")
    if len(set(sizes.values())) != 1:
        raise InvalidInputError(f"dataset arrays disagree on sample count: {sizes}")
    n = next(iter(sizes.values()))
    if n < 1:
        raise InvalidInputError("dataset has no samples")
    return n


def optimize(params: ParameterSet, dataset: Mapping[str, np.ndarray], loss_fn: Objective,
             cfg: TrainConfig) -> TrainResult:
    """Run exactly cfg.iterations Adam steps on the trainable layers.

    The trace holds the (regularized) loss before every step plus one final
    evaluation after the last step.
    """
    trainable = params.param_layers() if cfg.trainable is None else list(cfg.trainable)
    unknown = [name for name in trainable if name not in params.topology.layer_names]
    if unknown:
        raise InvalidInputError(f"trainable layers not present in the parameter set: {unknown}")
    trainable = [name for name in trainable if params.topology.layer(name).has_params]

    n = _check_dataset(dataset)
    rng = np.random.default_rng(cfg.seed)
    full_batch = cfg.batch_size >= n

    current = {name: {t: a.copy() for t, a in params.layer_tensors(name).items()} for name in trainable}
    m = {name: {t: np.zeros_like(a) for t, a in ts.items()} for name, ts in current.items()}
    v = {name: {t: np.zeros_like(a) for t, a in ts.items()} for name, ts in current.items()}

    trace: List[float] = []
    terms: Dict[str, List[float]] = {}

    def evaluate(pset: ParameterSet, batch: Batch, step: int) -> Evaluation:
        ev = loss_fn(pset, batch, rng, trainable)
        reg = cfg.l2_weight * pset.squared_norm(trainable) if cfg.l2_weight > 0 else 0.0
        value = ev.value + reg
        ev.terms.setdefault("reg", reg)
        for key, val in ev.terms.items():
            terms.setdefault(key, []).append(float(val))
        trace.append(float(value))
        if not np.isfinite(value):
            raise TrainingDivergedError(step, trace)
        ev.value = value
        return ev

    batch: Batch = dict(dataset)
    pset = params
    for step in range(cfg.iterations):
        if not full_batch:
            idx = rng.choice(n, size=cfg.batch_size, replace=False)
            batch = {k: a[idx] for k, a in dataset.items()}
        ev = evaluate(pset, batch, step)
        t = step + 1
        for name in trainable:
            for tname, theta in current[name].items():
                g = ev.gradient.layer_tensors(name)[tname]
                if cfg.l2_weight > 0:
                    g = g + 2.0 * cfg.l2_weight * theta
                m[name][tname] = cfg.beta1 * m[name][tname] + (1.0 - cfg.beta1) * g
                v[name][tname] = cfg.beta2 * v[name][tname] + (1.0 - cfg.beta2) * g * g
                m_hat = m[name][tname] / (1.0 - cfg.beta1 ** t)
                v_hat = v[name][tname] / (1.0 - cfg.beta2 ** t)
                theta -= cfg.learning_rate * m_hat / (np.sqrt(v_hat) + cfg.epsilon)
        pset = params.replace(current)
        if cfg.log_every and t % cfg.log_every == 0:
            _log.debug("iteration %d/%d loss %.6g", t, cfg.iterations, ev.value)
    evaluate(pset, batch, cfg.iterations)
    return TrainResult(params=pset, trace=trace, terms=terms)
