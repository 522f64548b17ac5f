"""
Transfer-learning objective: image residual + γ_sca · scalar residual (+ λ_reg ‖θ‖²)
"""

from typing import Dict, Optional, Sequence, Tuple

import numpy as np

from diffcore import Evaluation, InvalidInputError, ParameterSet, forward_trace
from toydata import MultiModalOutput, NormStats

from .config import LossMode, TLConfig


def residual_terms(r_sca: np.ndarray, r_img: np.ndarray, sigma: Optional[np.ndarray], cfg: TLConfig
                   ) -> Tuple[Dict[str, float], np.ndarray, np.ndarray]:
    """Per-sample averaged terms and their gradients w.r.t. the predictions.

    Residual arrays are batched: r_sca (n, 10), r_img (n, H, W). In χ² mode
    `sigma` must share the units of r_sca.
    """
    n = len(r_sca)
    pixels = r_img.shape[-1] * r_img.shape[-2]
    gamma = cfg.scalar_weight(pixels)
    if cfg.loss == LossMode.CHI2:
        if sigma is None:
            raise InvalidInputError("χ² loss needs measurement errors")
        sigma = np.broadcast_to(sigma, r_sca.shape)
        if np.any(sigma <= 0):
            raise InvalidInputError("χ² loss needs strictly positive measurement errors")
        weight = 1.0 / (sigma * sigma)
    else:
        weight = np.ones_like(r_sca)
    terms = {
        "image": float(np.sum(r_img * r_img)) / n,
        "scalar": gamma * float(np.sum(weight * r_sca * r_sca)) / n,
    }
    return terms, 2.0 * gamma * weight * r_sca / n, 2.0 * r_img / n


def tl_loss(pred: MultiModalOutput, obs: MultiModalOutput, theta_sq_norm: float, cfg: TLConfig,
            stats: Optional[NormStats] = None) -> float:
    """Objective value for physical-unit predictions against observations.

    In L2 mode scalar residuals are min-max scaled with `stats` when given;
    in χ² mode they are divided by obs.sigma, which makes the scaling moot.
    """
    if pred.scalars.shape != obs.scalars.shape or pred.image.shape != obs.image.shape:
        raise InvalidInputError(
            f"prediction shapes {pred.scalars.shape}/{pred.image.shape} differ from "
            f"observation shapes {obs.scalars.shape}/{obs.image.shape}")
    r_sca = np.atleast_2d(pred.scalars - obs.scalars)
    r_img = pred.image - obs.image
    if r_img.ndim == 2:
        r_img = r_img[None]
    sigma = obs.sigma
    if cfg.loss == LossMode.L2 and stats is not None:
        r_sca = r_sca / stats.scalar_range
    terms, _, _ = residual_terms(r_sca, r_img, sigma, cfg)
    return terms["image"] + terms["scalar"] + cfg.l2_weight * float(theta_sq_norm)


class TLObjective:
    """Objective over a graph whose outputs are the decoder's scalar and image heads.

    The batch carries normalized targets: "scalars", "images" and "sigmas".
    """

    def __init__(self, cfg: TLConfig, scalar_output: str, image_output: str):
        self.cfg = cfg
        self.scalar_output = scalar_output
        self.image_output = image_output

    def __call__(self, params: ParameterSet, batch, rng: np.random.Generator, trainable: Sequence[str]):
        trace = forward_trace(params, {k: batch[k] for k in params.topology.inputs})
        r_sca = trace.output(self.scalar_output) - batch["scalars"]
        r_img = trace.output(self.image_output)[:, 0] - batch["images"]
        terms, g_sca, g_img = residual_terms(r_sca, r_img, batch["sigmas"], self.cfg)
        grads = {self.scalar_output: g_sca, self.image_output: g_img[:, None]}
        return Evaluation(terms["image"] + terms["scalar"], trace.backward(grads, trainable), terms)
