"""
Transfer learning of a trained surrogate against a handful of experiments
"""

import logging
import time
from dataclasses import dataclass, field
from typing import Dict, List

import numpy as np

from core import BaseCalibrator
from diffcore import InvalidInputError, ParameterSet, optimize
from surrogate import SurrogateModel, observed, predict, select_inputs
from toydata import Dataset, MultiModalOutput

from .config import TLConfig, retrain_plan
from .objective import TLObjective

_log = logging.getLogger(__name__)

COMPONENTS = ("encoder", "decoder", "forward", "inverse")


@dataclass(frozen=True)
class CalibratedModel:
    """S^TL: the base surrogate with some components retrained."""

    base: SurrogateModel
    retrained: Dict[str, ParameterSet]
    config: TLConfig
    trace: List[float] = field(default_factory=list)
    stage_traces: List[List[float]] = field(default_factory=list)

    @property
    def model(self) -> SurrogateModel:
        return self.base.with_components(**self.retrained)

    @property
    def base_hash(self) -> str:
        return self.base.content_hash()


def experiment_batch(model: SurrogateModel, experiments: Dataset) -> Dict[str, np.ndarray]:
    """Normalized training arrays of a raw or model-normalized experiment set."""
    scalars, images = observed(model, experiments)
    stats = model.stats
    if experiments.normalized:
        x_unit, sigmas = experiments.inputs, experiments.sigmas
    else:
        x_unit, sigmas = stats.inputs_to_unit(experiments.inputs), stats.sigmas_to_unit(experiments.sigmas)
    return {
        "x": select_inputs(x_unit, model.input_names),
        "scalars": stats.scalars_to_unit(scalars),
        "images": images,
        "sigmas": sigmas,
    }


def _stage_graph(kind: str, model: SurrogateModel, batch: Dict[str, np.ndarray]):
    """(ParameterSet to optimize, dataset dict) for one stage graph."""
    arch = model.arch
    outputs = [arch.decoder_outputs["scalars"], arch.decoder_outputs["image"]]
    targets = {"scalars": batch["scalars"], "images": batch["images"], "sigmas": batch["sigmas"]}
    if kind == "decoder":
        return model.decoder, dict(targets, latent=model.latent(batch["x"]))
    if kind == "forward_decoder":
        graph = ParameterSet.merge(model.forward, model.decoder, links={"latent": arch.forward_last},
                                   outputs=outputs)
        return graph, dict(targets, x=batch["x"])
    graph = ParameterSet.merge(model.encoder, model.decoder, links={"latent": arch.encoder_innermost},
                               outputs=outputs)
    return graph, dict(targets, image=batch["images"][:, None], scalars=batch["scalars"])


def _split_back(kind: str, model: SurrogateModel, graph: ParameterSet) -> Dict[str, ParameterSet]:
    arch = model.arch
    parts = {"decoder": graph.extract(model.decoder.topology.layer_names, model.decoder.topology.outputs,
                                      rename={arch.forward_last: "latent", arch.encoder_innermost: "latent"})}
    if kind == "forward_decoder":
        parts["forward"] = graph.extract(model.forward.topology.layer_names, model.forward.topology.outputs)
    elif kind == "autoencoder":
        parts["encoder"] = graph.extract(model.encoder.topology.layer_names, model.encoder.topology.outputs)
    return parts


def transfer_learn(base: SurrogateModel, exp_train: Dataset, cfg: TLConfig) -> CalibratedModel:
    """Retrain the strategy's layers on the training experiments; every other tensor stays frozen."""
    if len(exp_train) < 1:
        raise InvalidInputError("transfer learning needs at least one training experiment")
    plan = retrain_plan(cfg.strategy, base.arch)
    components = {"encoder": base.encoder, "decoder": base.decoder, "forward": base.forward}
    for _, layers in plan:
        for component, names in layers.items():
            missing = [n for n in names if n not in components[component].topology.layer_names]
            if missing:
                raise InvalidInputError(f"strategy {cfg.strategy.value} names unknown {component} layers {missing}")
    if cfg.iterations == 0:
        return CalibratedModel(base=base, retrained={}, config=cfg)

    batch = experiment_batch(base, exp_train)
    arch = base.arch
    objective = TLObjective(cfg, arch.decoder_outputs["scalars"], arch.decoder_outputs["image"])
    current = base
    retrained: Dict[str, ParameterSet] = {}
    stage_traces: List[List[float]] = []
    start = time.time()
    for kind, layers in plan:
        graph, data = _stage_graph(kind, current, batch)
        trainable = [n for names in layers.values() for n in names]
        result = optimize(graph, data, objective, cfg.train_config(trainable))
        updated = {k: v for k, v in _split_back(kind, current, result.params).items() if k in layers}
        retrained.update(updated)
        current = current.with_components(**updated)
        stage_traces.append(result.trace)
    _log.info("[OK] Transfer learning (%s) finished in %.2fs: loss %.4g -> %.4g",
              cfg.strategy.value, time.time() - start, stage_traces[0][0], stage_traces[-1][-1])
    trace = [v for t in stage_traces for v in t]
    return CalibratedModel(base=base, retrained=retrained, config=cfg, trace=trace, stage_traces=stage_traces)


def predict_calibrated(calibrated: CalibratedModel, x) -> MultiModalOutput:
    """S^TL(x) = D^TL(F(x)) with whatever components the strategy retrained."""
    return predict(calibrated.model, x)


class TransferCalibrator(BaseCalibrator):
    """Cross-validation adapter around transfer_learn."""

    def __init__(self, surrogate: SurrogateModel, cfg: TLConfig):
        super().__init__(surrogate)
        self.cfg = cfg

    def fit(self, experiments: Dataset, seed: int) -> CalibratedModel:
        return transfer_learn(self.surrogate, experiments, self.cfg.model_copy(update={"seed": seed}))

    def predict(self, fitted: CalibratedModel, x) -> MultiModalOutput:
        return predict_calibrated(fitted, x)

    def describe(self):
        return {"name": self.name, **self.cfg.model_dump(mode="json")}
