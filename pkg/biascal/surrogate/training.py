"""
Training of the initial surrogate: autoencoder, then forward/inverse models with cycle consistency
"""

import logging
import time
from typing import Dict, List, NamedTuple, Optional, Sequence, Tuple

import numpy as np
from pydantic import BaseModel, ConfigDict, Field

from core.state_manager import SeedManager
from diffcore import Evaluation, InvalidInputError, ParameterSet, TrainConfig, TrainResult, forward_trace, optimize
from toydata import INPUT_NAMES, Dataset, NormStats, normalize

from .architecture import (
    ArchConfig,
    ArchManifest,
    decoder_topology,
    encoder_topology,
    forward_topology,
    inverse_topology,
)
from .model import SurrogateModel, evaluate_r2, evaluate_reconstruction, select_inputs, split_holdout

_log = logging.getLogger(__name__)


def _default_stage() -> TrainConfig:
    return TrainConfig(iterations=3000, learning_rate=1e-3, batch_size=64)


class SurrogateTrainConfig(BaseModel):
    """Settings of both training stages and the loss weights."""

    model_config = ConfigDict(extra="forbid")

    arch: ArchConfig = Field(default_factory=ArchConfig)
    autoencoder: TrainConfig = Field(default_factory=_default_stage)
    forward_inverse: TrainConfig = Field(default_factory=_default_stage)
    prior_weight: float = Field(0.01, ge=0)
    prior_kernel_scale: Optional[float] = Field(None, gt=0)
    scalar_weight: float = Field(1.0, ge=0)
    inverse_weight: float = Field(1.0, ge=0)
    cycle_x_weight: float = Field(0.1, ge=0)
    cycle_z_weight: float = Field(0.1, ge=0)
    holdout_fraction: float = Field(0.1, ge=0, lt=1)
    seed: int = Field(0, ge=0)


class StageFit(NamedTuple):
    first: ParameterSet
    second: ParameterSet
    result: TrainResult


class SurrogateFitReport(BaseModel):
    """Held-out scores of a trained surrogate."""

    n_train: int
    n_holdout: int
    reconstruction_r2: Dict[str, float] = Field(default_factory=dict)
    forward_r2: Dict[str, float] = Field(default_factory=dict)
    x_cycle_rms: Optional[float] = None
    autoencoder_trace: List[float] = Field(default_factory=list)
    forward_inverse_trace: List[float] = Field(default_factory=list)
    forward_inverse_terms: Dict[str, List[float]] = Field(default_factory=dict)
    runtime_seconds: float = 0.0


# ---------------------------------------------------------------------------
# latent prior penalty
# ---------------------------------------------------------------------------

def imq_mmd(z: np.ndarray, prior: np.ndarray, scale: float) -> Tuple[float, np.ndarray]:
    """Maximum mean discrepancy with an inverse multiquadric kernel, and d/dz.

    k(a, b) = C / (C + |a - b|²). Within-sample sums skip the diagonal.
    """
    n = len(z)
    if n < 2:
        return 0.0, np.zeros_like(z)
    dzz = z[:, None, :] - z[None, :, :]
    dzp = z[:, None, :] - prior[None, :, :]
    dpp = prior[:, None, :] - prior[None, :, :]
    kzz = scale / (scale + np.sum(dzz * dzz, axis=-1))
    kzp = scale / (scale + np.sum(dzp * dzp, axis=-1))
    kpp = scale / (scale + np.sum(dpp * dpp, axis=-1))
    off = ~np.eye(n, dtype=bool)
    pairs = n * (n - 1)
    value = kzz[off].sum() / pairs + kpp[off].sum() / pairs - 2.0 * kzp.sum() / (n * n)
    # dk/da = -2 (a - b) k² / C
    gzz = ((-2.0 / scale) * kzz ** 2)[:, :, None] * dzz
    gzp = ((-2.0 / scale) * kzp ** 2)[:, :, None] * dzp
    grad = 2.0 * gzz.sum(axis=1) / pairs - 2.0 * gzp.sum(axis=1) / (n * n)
    return float(value), grad


# ---------------------------------------------------------------------------
# objectives
# ---------------------------------------------------------------------------

class AutoencoderLoss:
    """image L2 + weighted scalar L2 + latent-prior penalty (per-element means)."""

    def __init__(self, arch: ArchManifest, cfg: SurrogateTrainConfig):
        self.arch = arch
        self.cfg = cfg
        self.scale = cfg.prior_kernel_scale or 2.0 * arch.latent_dim

    def __call__(self, params: ParameterSet, batch, rng: np.random.Generator, trainable: Sequence[str]):
        trace = forward_trace(params, {"image": batch["image"], "scalars": batch["scalars"]})
        sca_name, img_name = self.arch.decoder_outputs["scalars"], self.arch.decoder_outputs["image"]
        r_img = trace.output(img_name) - batch["image"]
        r_sca = trace.output(sca_name) - batch["scalars"]
        terms = {
            "image": float(np.mean(r_img * r_img)),
            "scalar": self.cfg.scalar_weight * float(np.mean(r_sca * r_sca)),
        }
        grads = {
            img_name: 2.0 * r_img / r_img.size,
            sca_name: 2.0 * self.cfg.scalar_weight * r_sca / r_sca.size,
        }
        if self.cfg.prior_weight > 0:
            z = trace.output(self.arch.encoder_innermost)
            mmd, g = imq_mmd(z, rng.standard_normal(z.shape), self.scale)
            terms["prior"] = self.cfg.prior_weight * mmd
            grads[self.arch.encoder_innermost] = self.cfg.prior_weight * g
        return Evaluation(sum(terms.values()), trace.backward(grads, trainable), terms)


class ForwardInverseLoss:
    """forward + inverse terms plus the two cycle-consistency terms.

    Cycle terms with zero weight are neither computed nor recorded.
    """

    def __init__(self, arch: ArchManifest, cfg: SurrogateTrainConfig, forward_layers: Sequence[str],
                 inverse_layers: Sequence[str]):
        self.arch = arch
        self.cfg = cfg
        self.forward_layers = list(forward_layers)
        self.inverse_layers = list(inverse_layers)

    def split(self, params: ParameterSet) -> Tuple[ParameterSet, ParameterSet]:
        fwd = params.extract(self.forward_layers, [self.arch.forward_last])
        inv = params.extract(self.inverse_layers, [self.arch.inverse_output])
        return fwd, inv

    @staticmethod
    def _grads(pset: ParameterSet, trace, dy, trainable, input_grads=False):
        names = [n for n in trainable if n in pset.topology.layer_names]
        return trace.backward(dy, names, return_input_grads=input_grads)

    def __call__(self, params: ParameterSet, batch, rng: np.random.Generator, trainable: Sequence[str]):
        cfg = self.cfg
        fwd, inv = self.split(params)
        x, z = batch["x"], batch["z"]
        t_fwd = forward_trace(fwd, x)
        t_inv = forward_trace(inv, z)
        r_z = t_fwd.outputs - z
        r_x = t_inv.outputs - x
        terms = {"forward": float(np.mean(r_z * r_z)), "inverse": cfg.inverse_weight * float(np.mean(r_x * r_x))}
        d_zf = 2.0 * r_z / r_z.size
        d_xi = 2.0 * cfg.inverse_weight * r_x / r_x.size
        collected: List[ParameterSet] = []

        if cfg.cycle_x_weight > 0:
            t_cx = forward_trace(inv, t_fwd.outputs)
            r_cx = t_cx.outputs - x
            terms["cycle_x"] = cfg.cycle_x_weight * float(np.mean(r_cx * r_cx))
            g_inv, g_in = self._grads(inv, t_cx, 2.0 * cfg.cycle_x_weight * r_cx / r_cx.size, trainable, True)
            collected.append(g_inv)
            d_zf = d_zf + g_in["z"]
        if cfg.cycle_z_weight > 0:
            t_cz = forward_trace(fwd, t_inv.outputs)
            r_cz = t_cz.outputs - z
            terms["cycle_z"] = cfg.cycle_z_weight * float(np.mean(r_cz * r_cz))
            g_fwd, g_in = self._grads(fwd, t_cz, 2.0 * cfg.cycle_z_weight * r_cz / r_cz.size, trainable, True)
            collected.append(g_fwd)
            d_xi = d_xi + g_in["x"]
        collected.append(self._grads(fwd, t_fwd, d_zf, trainable))
        collected.append(self._grads(inv, t_inv, d_xi, trainable))

        total = {name: {t: np.zeros_like(a) for t, a in params.layer_tensors(name).items()}
                 for name in params.topology.layer_names}
        for grad in collected:
            for key, arr in grad.items():
                layer, tname = key.split(".", 1)
                total[layer][tname] = total[layer][tname] + arr
        return Evaluation(sum(terms.values()), ParameterSet(params.topology, total, check_finite=False), terms)


# ---------------------------------------------------------------------------
# stages
# ---------------------------------------------------------------------------

def _require_normalized(dataset: Dataset) -> None:
    if not dataset.normalized:
        raise InvalidInputError("training needs a normalized dataset; call toydata.normalize first")


def make_manifest(side: int, n_inputs: int, cfg: SurrogateTrainConfig) -> ArchManifest:
    return ArchManifest(image_side=side, n_inputs=n_inputs, config=cfg.arch)


def train_autoencoder(sim: Dataset, cfg: SurrogateTrainConfig, arch: Optional[ArchManifest] = None) -> StageFit:
    """Fit E and D jointly on normalized simulations; returns (E, D, TrainResult)."""
    _require_normalized(sim)
    arch = arch or make_manifest(sim.side, len(INPUT_NAMES), cfg)
    seeds = SeedManager(cfg.seed)
    enc = ParameterSet.initialize(encoder_topology(arch), seeds.seed("init_encoder"))
    dec = ParameterSet.initialize(decoder_topology(arch), seeds.seed("init_decoder"))
    outputs = [arch.encoder_innermost, arch.decoder_outputs["scalars"], arch.decoder_outputs["image"]]
    joint = ParameterSet.merge(enc, dec, links={"latent": arch.encoder_innermost}, outputs=outputs)
    data = {"image": sim.images[:, None, :, :], "scalars": sim.scalars}

    start = time.time()
    result = optimize(joint, data, AutoencoderLoss(arch, cfg), cfg.autoencoder)
    _log.info("[OK] Autoencoder trained in %.1fs (loss %.4g -> %.4g)",
              time.time() - start, result.trace[0], result.trace[-1])

    encoder = result.params.extract(enc.topology.layer_names, enc.topology.outputs)
    decoder = result.params.extract(dec.topology.layer_names, dec.topology.outputs,
                                    rename={arch.encoder_innermost: "latent"})
    return StageFit(encoder, decoder, result)


def train_forward_inverse(sim: Dataset, encoder: ParameterSet, cfg: SurrogateTrainConfig,
                          input_names: Optional[Sequence[str]] = None,
                          arch: Optional[ArchManifest] = None) -> StageFit:
    """Fit F and I against the frozen encoder's latents; returns (F, I, TrainResult)."""
    _require_normalized(sim)
    input_names = list(input_names or INPUT_NAMES)
    arch = arch or make_manifest(sim.side, len(input_names), cfg)
    seeds = SeedManager(cfg.seed)
    z = encoder_latents(encoder, sim)
    x = select_inputs(sim.inputs, input_names)

    fwd = ParameterSet.initialize(forward_topology(arch), seeds.seed("init_forward"))
    inv = ParameterSet.initialize(inverse_topology(arch), seeds.seed("init_inverse"))
    joint = ParameterSet.merge(fwd, inv)
    loss = ForwardInverseLoss(arch, cfg, fwd.topology.layer_names, inv.topology.layer_names)

    start = time.time()
    result = optimize(joint, {"x": x, "z": z}, loss, cfg.forward_inverse)
    _log.info("[OK] Forward/inverse models trained in %.1fs (loss %.4g -> %.4g)",
              time.time() - start, result.trace[0], result.trace[-1])
    forward_net, inverse_net = loss.split(result.params)
    return StageFit(forward_net, inverse_net, result)


def encoder_latents(encoder: ParameterSet, dataset: Dataset, chunk: int = 1024) -> np.ndarray:
    parts = []
    for lo in range(0, len(dataset), chunk):
        part = dataset.subset(range(lo, min(lo + chunk, len(dataset))))
        trace = forward_trace(encoder, {"image": part.images[:, None, :, :], "scalars": part.scalars})
        parts.append(trace.outputs)
    return np.concatenate(parts)


def train_surrogate(sim_raw: Dataset, cfg: SurrogateTrainConfig,
                    input_names: Optional[Sequence[str]] = None,
                    stats: Optional[NormStats] = None) -> Tuple[SurrogateModel, SurrogateFitReport]:
    """Normalize, hold out a seeded fraction, train both stages and score the held-out part."""
    start = time.time()
    input_names = list(input_names or INPUT_NAMES)
    sim, stats = normalize(sim_raw, stats)
    train_idx, hold_idx = split_holdout(len(sim), cfg.holdout_fraction, cfg.seed)
    train = sim.subset(train_idx)
    arch = make_manifest(sim.side, len(input_names), cfg)

    enc, dec, ae = train_autoencoder(train, cfg, arch)
    fwd, inv, fi = train_forward_inverse(train, enc, cfg, input_names, arch)
    model = SurrogateModel(enc, dec, fwd, inv, arch, stats, input_names)

    report = SurrogateFitReport(
        n_train=len(train_idx), n_holdout=len(hold_idx),
        autoencoder_trace=ae.trace, forward_inverse_trace=fi.trace, forward_inverse_terms=fi.terms,
    )
    if len(hold_idx) >= 2:
        held = sim.subset(hold_idx)
        report.reconstruction_r2 = evaluate_reconstruction(model, held)
        report.forward_r2 = evaluate_r2(model, held)
        report.x_cycle_rms = x_cycle_rms(model, held)
        worst = min(report.forward_r2, key=report.forward_r2.get)
        _log.info("[OK] Held-out D(F(x)) R² min %.3f (%s)", report.forward_r2[worst], worst)
    report.runtime_seconds = time.time() - start
    return model, report


def x_cycle_rms(model: SurrogateModel, dataset: Dataset) -> float:
    """RMS of I(F(x)) - x in normalized input units."""
    _require_normalized(dataset)
    x = select_inputs(dataset.inputs, model.input_names)
    x_back = forward_trace(model.inverse, model.latent(x)).outputs
    return float(np.sqrt(np.mean((x_back - x) ** 2)))
