"""
Central finite-difference verification of analytic gradients
"""

from typing import Callable, Optional, Sequence, Tuple

import numpy as np

from .network import ArrayOrDict, ParameterSet, forward, forward_trace

LossOnOutputs = Callable[[ArrayOrDict], Tuple[float, ArrayOrDict]]


def squared_loss(target: ArrayOrDict) -> LossOnOutputs:
    """0.5 * ||outputs - target||^2 summed over every output node."""

    def loss(outputs: ArrayOrDict):
        if isinstance(outputs, dict):
            diffs = {k: outputs[k] - np.asarray(target[k]) for k in outputs}
            return 0.5 * sum(float(np.sum(d * d)) for d in diffs.values()), diffs
        diff = outputs - np.asarray(target)
        return 0.5 * float(np.sum(diff * diff)), diff

    return loss


def relative_error(analytic: np.ndarray, numeric: np.ndarray, floor: float = 1e-6) -> np.ndarray:
    scale = np.maximum(np.maximum(np.abs(analytic), np.abs(numeric)), floor)
    return np.abs(analytic - numeric) / scale


def numeric_gradient(params: ParameterSet, inputs: ArrayOrDict, loss_fn: LossOnOutputs,
                     step: float = 1e-5, layers: Optional[Sequence[str]] = None) -> ParameterSet:
    layers = params.param_layers() if layers is None else list(layers)
    grads = {name: {t: np.zeros_like(a) for t, a in params.layer_tensors(name).items()}
             for name in params.topology.layer_names}
    for name in layers:
        for tname, base in params.layer_tensors(name).items():
            work = base.copy()
            for i in range(work.size):
                orig = work.flat[i]
                work.flat[i] = orig + step
                f_plus = loss_fn(forward(params.replace({name: {tname: work}}), inputs))[0]
                work.flat[i] = orig - step
                f_minus = loss_fn(forward(params.replace({name: {tname: work}}), inputs))[0]
                work.flat[i] = orig
                grads[name][tname].flat[i] = (f_plus - f_minus) / (2.0 * step)
    return ParameterSet(params.topology, grads, check_finite=False)


def gradient_check(params: ParameterSet, inputs: ArrayOrDict, loss_fn: LossOnOutputs,
                   analytic: Optional[ParameterSet] = None, step: float = 1e-5) -> float:
    """Worst per-component relative error between analytic and numeric gradients.

    `analytic` defaults to the backward pass; pass a tampered gradient to
    exercise the checker itself.
    """
    if analytic is None:
        outputs = forward_trace(params, inputs)
        _, out_grad = loss_fn(outputs.outputs)
        analytic = outputs.backward(out_grad)
    numeric = numeric_gradient(params, inputs, loss_fn, step)
    worst = 0.0
    for key, num in numeric.items():
        err = relative_error(analytic.tensor(key), num)
        if err.size:
            worst = max(worst, float(err.max()))
    return worst
