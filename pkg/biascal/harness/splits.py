"""
Train/validation split plans over the experiment set
"""

import logging
from enum import Enum
from math import comb
from typing import List

import numpy as np
from pydantic import BaseModel, ConfigDict, Field
from sklearn.model_selection import LeavePOut

from core.state_manager import SeedManager
from diffcore import InvalidInputError

_log = logging.getLogger(__name__)


class Protocol(str, Enum):
    RANDOM_WITH_REPLACEMENT = "RANDOM_WITH_REPLACEMENT"
    EXHAUSTIVE = "EXHAUSTIVE"
    HOLDOUT_X15 = "HOLDOUT_X15"


class Split(BaseModel):
    split_id: int
    train: List[int]
    validation: List[int]


class SplitPlan(BaseModel):
    """Cross-validation plan; `splits` is filled in by make_splits."""

    model_config = ConfigDict(extra="forbid")

    protocol: Protocol = Protocol.RANDOM_WITH_REPLACEMENT
    n_samples: int = Field(10, ge=2)
    train_k: int = Field(7, ge=1)
    n_splits: int = Field(500, ge=1)
    seed: int = Field(0, ge=0)
    allow_duplicates: bool = True
    holdout_repeats: int = Field(15, ge=1)
    splits: List[Split] = Field(default_factory=list)


def _check_explicit(plan: SplitPlan) -> SplitPlan:
    ids = [s.split_id for s in plan.splits]
    if len(set(ids)) != len(ids):
        raise InvalidInputError("split ids must be unique")
    for split in plan.splits:
        used = split.train + split.validation
        if not split.train or not split.validation:
            raise InvalidInputError(f"split {split.split_id} has an empty train or validation set")
        if min(used) < 0 or max(used) >= plan.n_samples:
            raise InvalidInputError(f"split {split.split_id} indexes outside 0..{plan.n_samples - 1}")
        if set(split.train) & set(split.validation):
            _log.warning("split %d is degenerate: train and validation samples overlap", split.split_id)
    return plan


def _random_splits(plan: SplitPlan, rng: np.random.Generator) -> List[Split]:
    n, k = plan.n_samples, plan.train_k
    if not plan.allow_duplicates and plan.n_splits > comb(n, k):
        raise InvalidInputError(f"only {comb(n, k)} distinct splits exist for {k} of {n}; asked for {plan.n_splits}")
    seen, splits = set(), []
    while len(splits) < plan.n_splits:
        train = tuple(sorted(int(i) for i in rng.choice(n, size=k, replace=False)))
        if train in seen and not plan.allow_duplicates:
            continue
        seen.add(train)
        validation = [i for i in range(n) if i not in train]
        splits.append(Split(split_id=len(splits), train=list(train), validation=validation))
    duplicates = len(splits) - len(seen)
    if duplicates:
        _log.info("[INFO] %d of %d random splits repeat an earlier training set", duplicates, len(splits))
    return splits


def _exhaustive_splits(plan: SplitPlan) -> List[Split]:
    splitter = LeavePOut(p=plan.n_samples - plan.train_k)
    return [Split(split_id=i, train=[int(t) for t in train], validation=[int(v) for v in validation])
            for i, (train, validation) in enumerate(splitter.split(np.zeros((plan.n_samples, 1))))]


def _holdout_splits(plan: SplitPlan, rng: np.random.Generator) -> List[Split]:
    splits = []
    for held in range(plan.n_samples):
        rest = np.array([i for i in range(plan.n_samples) if i != held])
        if plan.train_k > len(rest):
            raise InvalidInputError(f"cannot draw {plan.train_k} training samples from {len(rest)}")
        for _ in range(plan.holdout_repeats):
            train = sorted(int(i) for i in rng.choice(rest, size=plan.train_k, replace=False))
            splits.append(Split(split_id=len(splits), train=train, validation=[held]))
    return splits


def make_splits(plan: SplitPlan) -> SplitPlan:
    """Fill in the explicit split list; deterministic for a given seed.

    A plan that already carries splits is only validated.
    """
    if plan.splits:
        return _check_explicit(plan)
    if plan.train_k >= plan.n_samples:
        raise InvalidInputError(f"train_k ({plan.train_k}) must be below n_samples ({plan.n_samples})")
    rng = SeedManager(plan.seed).rng("splits", list(Protocol).index(plan.protocol))
    if plan.protocol == Protocol.EXHAUSTIVE:
        splits = _exhaustive_splits(plan)
    elif plan.protocol == Protocol.HOLDOUT_X15:
        splits = _holdout_splits(plan, rng)
    else:
        splits = _random_splits(plan, rng)
    _log.info("[OK] %s plan: %d splits of %d/%d samples", plan.protocol.value, len(splits),
              plan.train_k, plan.n_samples)
    return plan.model_copy(update={"splits": splits})
