"""
ParameterSet and the forward/backward passes over a small layer graph.

A topology lists named graph inputs (per-sample shapes), layers in evaluation
order (each naming its inputs: graph inputs or earlier layers) and the layer
names exposed as outputs. Tensors are keyed "<layer>.<tensor>".
"""

from __future__ import annotations

import hashlib
import json
from typing import Dict, Iterable, List, Mapping, Optional, Sequence, Set, Tuple, Union

import numpy as np
from pydantic import BaseModel, ConfigDict, model_validator

from .errors import InvalidInputError, NonFiniteGradientError, ShapeMismatchError
from .layers import LayerSpec, Shape, init_params, layer_backward, layer_forward, output_shape, param_shapes

ArrayOrDict = Union[np.ndarray, Dict[str, np.ndarray]]


class Topology(BaseModel):
    """Layer graph descriptor; fully determines every tensor shape."""

    model_config = ConfigDict(frozen=True, extra="forbid")

    inputs: Dict[str, List[int]]
    layers: List[LayerSpec]
    outputs: List[str]

    @model_validator(mode="after")
    def _check_graph(self):
        seen: Set[str] = set(self.inputs)
        for spec in self.layers:
            if spec.name in seen:
                raise ValueError(f"duplicate name '{spec.name}' in topology")
            for src in spec.inputs:
                if src not in seen:
                    raise ValueError(f"layer '{spec.name}' reads unknown or later node '{src}'")
            seen.add(spec.name)
        if not self.outputs:
            raise ValueError("topology declares no outputs")
        for name in self.outputs:
            if name not in seen:
                raise ValueError(f"output '{name}' is not a node of the topology")
        self.shapes()
        return self

    def shapes(self) -> Dict[str, Shape]:
        """Per-sample shape of every node (graph inputs and layers)."""
        shapes: Dict[str, Shape] = {k: tuple(v) for k, v in self.inputs.items()}
        for spec in self.layers:
            shapes[spec.name] = output_shape(spec, [shapes[s] for s in spec.inputs])
        return shapes

    def layer(self, name: str) -> LayerSpec:
        for spec in self.layers:
            if spec.name == name:
                return spec
        raise InvalidInputError(f"unknown layer '{name}'")

    @property
    def layer_names(self) -> List[str]:
        return [spec.name for spec in self.layers]


class ParameterSet:
    """Immutable set of layer tensors plus the topology that shapes them."""

    def __init__(self, topology: Topology, tensors: Mapping[str, Mapping[str, np.ndarray]],
                 check_finite: bool = True):
        self.topology = topology
        frozen: Dict[str, Dict[str, np.ndarray]] = {}
        for spec in topology.layers:
            expected = param_shapes(spec)
            given = tensors.get(spec.name, {})
            if set(given) != set(expected):
                raise InvalidInputError(
                    f"layer '{spec.name}' expects tensors {sorted(expected)}, got {sorted(given)}"
                )
            frozen[spec.name] = {}
            for tname, shape in expected.items():
                arr = np.array(given[tname], dtype=np.float64, copy=True)
                if arr.shape != tuple(shape):
                    raise ShapeMismatchError(spec.name, shape, arr.shape)
                if check_finite and not np.all(np.isfinite(arr)):
                    raise InvalidInputError(f"tensor '{spec.name}.{tname}' is not finite")
                arr.setflags(write=False)
                frozen[spec.name][tname] = arr
        self._tensors = frozen

    @classmethod
    def initialize(cls, topology: Topology, seed: int) -> "ParameterSet":
        rng = np.random.default_rng(seed)
        return cls(topology, {spec.name: init_params(spec, rng) for spec in topology.layers})

    # -- access ---------------------------------------------------------------

    def layer_tensors(self, name: str) -> Dict[str, np.ndarray]:
        if name not in self._tensors:
            raise InvalidInputError(f"unknown layer '{name}'")
        return self._tensors[name]

    def tensor(self, key: str) -> np.ndarray:
        layer, tname = key.split(".", 1)
        return self.layer_tensors(layer)[tname]

    def tensor_names(self) -> List[str]:
        return [f"{layer}.{t}" for layer, ts in self._tensors.items() for t in ts]

    def param_layers(self) -> List[str]:
        return [spec.name for spec in self.topology.layers if spec.has_params]

    def items(self) -> Iterable[Tuple[str, np.ndarray]]:
        for key in self.tensor_names():
            yield key, self.tensor(key)

    def parameter_count(self) -> int:
        return int(sum(arr.size for _, arr in self.items()))

    # -- derived sets ---------------------------------------------------------

    def replace(self, updates: Mapping[str, Mapping[str, np.ndarray]]) -> "ParameterSet":
        """New ParameterSet with the given layer tensors swapped in."""
        merged = {name: dict(ts) for name, ts in self._tensors.items()}
        for name, ts in updates.items():
            if name not in merged:
                raise InvalidInputError(f"unknown layer '{name}'")
            merged[name].update(ts)
        return ParameterSet(self.topology, merged)

    def zeros_like(self) -> "ParameterSet":
        return ParameterSet(self.topology, {
            name: {t: np.zeros_like(arr) for t, arr in ts.items()} for name, ts in self._tensors.items()
        })

    def squared_norm(self, layers: Optional[Sequence[str]] = None) -> float:
        names = self.param_layers() if layers is None else list(layers)
        return float(sum(np.sum(arr * arr) for name in names for arr in self.layer_tensors(name).values()))

    def equals(self, other: "ParameterSet", layers: Optional[Sequence[str]] = None) -> bool:
        """Bit-identical comparison of topology and tensors."""
        if layers is None:
            if self.topology != other.topology:
                return False
            layers = list(self._tensors)
        for name in layers:
            mine, theirs = self.layer_tensors(name), other.layer_tensors(name)
            if set(mine) != set(theirs):
                return False
            for t in mine:
                if mine[t].shape != theirs[t].shape or mine[t].tobytes() != theirs[t].tobytes():
                    return False
        return True

    def content_hash(self) -> str:
        digest = hashlib.sha256(json.dumps(self.topology.model_dump(), sort_keys=True).encode())
        for key, arr in self.items():
            digest.update(key.encode())
            digest.update(np.ascontiguousarray(arr, dtype="<f8").tobytes())
        return digest.hexdigest()

    # -- graph surgery --------------------------------------------------------

    @staticmethod
    def merge(*sets: "ParameterSet", links: Optional[Mapping[str, str]] = None,
              outputs: Optional[Sequence[str]] = None) -> "ParameterSet":
        """Join several sets into one graph.

        A graph input whose name matches a layer of an earlier set is wired to
        that layer; `links` maps further graph-input names onto layer names.
        """
        links = dict(links or {})
        layer_names: Set[str] = set()
        layers: List[LayerSpec] = []
        inputs: Dict[str, List[int]] = {}
        merged_outputs: List[str] = []
        tensors: Dict[str, Dict[str, np.ndarray]] = {}
        for pset in sets:
            for name, shape in pset.topology.inputs.items():
                target = links.get(name, name)
                if target in layer_names:
                    links.setdefault(name, target)
                elif name in inputs and inputs[name] != shape:
                    raise ShapeMismatchError(name, inputs[name], shape)
                else:
                    inputs[name] = list(shape)
            for spec in pset.topology.layers:
                rewired = [links.get(src, src) if src in pset.topology.inputs else src for src in spec.inputs]
                layers.append(spec.model_copy(update={"inputs": rewired}))
                layer_names.add(spec.name)
                tensors[spec.name] = dict(pset.layer_tensors(spec.name))
            merged_outputs.extend(o for o in pset.topology.outputs if o not in merged_outputs)
        used = {src for spec in layers for src in spec.inputs}
        inputs = {k: v for k, v in inputs.items() if k in used or k in (outputs or merged_outputs)}
        topology = Topology(inputs=inputs, layers=layers, outputs=list(outputs or merged_outputs))
        return ParameterSet(topology, tensors)

    def extract(self, layer_names: Sequence[str], outputs: Sequence[str],
                rename: Optional[Mapping[str, str]] = None) -> "ParameterSet":
        """Sub-graph of the named layers; dangling sources become graph inputs.

        `rename` gives those new graph inputs other names (e.g. a decoder cut
        from an autoencoder reads "latent" rather than the encoder's last layer).
        """
        keep = set(layer_names)
        rename = dict(rename or {})
        shapes = self.topology.shapes()
        layers: List[LayerSpec] = []
        inputs: Dict[str, List[int]] = {}
        for spec in self.topology.layers:
            if spec.name not in keep:
                continue
            for src in spec.inputs:
                if src not in keep:
                    inputs[rename.get(src, src)] = list(shapes[src])
            rewired = [src if src in keep else rename.get(src, src) for src in spec.inputs]
            layers.append(spec if rewired == spec.inputs else spec.model_copy(update={"inputs": rewired}))
        topology = Topology(inputs=inputs, layers=layers, outputs=list(outputs))
        return ParameterSet(topology, {spec.name: self.layer_tensors(spec.name) for spec in layers})


# ---------------------------------------------------------------------------
# passes
# ---------------------------------------------------------------------------

class ForwardTrace:
    """Activations and caches of one forward evaluation, ready for backward."""

    def __init__(self, params: ParameterSet, values: Dict[str, np.ndarray], caches: Dict[str, object],
                 unbatched: bool):
        self.params = params
        self.values = values
        self.caches = caches
        self.unbatched = unbatched

    def output(self, name: str) -> np.ndarray:
        return self.values[name]

    @property
    def outputs(self) -> ArrayOrDict:
        outs = {name: self.values[name] for name in self.params.topology.outputs}
        if self.unbatched:
            outs = {k: v[0] for k, v in outs.items()}
        if len(outs) == 1:
            return next(iter(outs.values()))
        return outs

    def backward(self, loss_grad: ArrayOrDict, trainable: Optional[Sequence[str]] = None,
                 return_input_grads: bool = False):
        """Gradient ParameterSet (zero outside `trainable`); optionally input gradients too."""
        topology = self.params.topology
        if not isinstance(loss_grad, dict):
            if len(topology.outputs) != 1:
                raise InvalidInputError("loss gradient must be a dict for multi-output graphs")
            loss_grad = {topology.outputs[0]: loss_grad}
        train_set = set(self.params.param_layers() if trainable is None else trainable)
        unknown = train_set - set(topology.layer_names)
        if unknown:
            raise InvalidInputError(f"trainable layers not in topology: {sorted(unknown)}")

        grads: Dict[str, np.ndarray] = {}
        for name, g in loss_grad.items():
            if name not in self.values:
                raise InvalidInputError(f"gradient given for unknown node '{name}'")
            g = np.asarray(g, dtype=np.float64)
            if self.unbatched:
                g = g[None, ...]
            if g.shape != self.values[name].shape:
                raise ShapeMismatchError(name, self.values[name].shape, g.shape)
            if not np.all(np.isfinite(g)):
                raise NonFiniteGradientError(f"non-finite upstream gradient for node '{name}'")
            grads[name] = grads.get(name, 0.0) + g

        # a layer passes gradient back only if something trainable (or a
        # requested input gradient) sits upstream of it
        upstream: Dict[str, bool] = {k: return_input_grads for k in topology.inputs}
        for spec in topology.layers:
            upstream[spec.name] = spec.name in train_set or any(upstream[s] for s in spec.inputs)

        param_grads: Dict[str, Dict[str, np.ndarray]] = {}
        for spec in reversed(topology.layers):
            dy = grads.pop(spec.name, None)
            if dy is None or not upstream[spec.name]:
                continue
            want = spec.name in train_set and spec.has_params
            dxs, pgrads = layer_backward(spec, self.params.layer_tensors(spec.name), self.caches[spec.name], dy, want)
            if want:
                param_grads[spec.name] = pgrads
            for src, dx in zip(spec.inputs, dxs):
                if upstream[src]:
                    grads[src] = grads[src] + dx if src in grads else dx

        zero = {name: {t: np.zeros_like(a) for t, a in ts.items()}
                for name, ts in ((n, self.params.layer_tensors(n)) for n in topology.layer_names)}
        for name, pg in param_grads.items():
            zero[name].update(pg)
        gradient = ParameterSet(topology, zero, check_finite=False)
        if not return_input_grads:
            return gradient
        input_grads = {}
        for name in topology.inputs:
            g = grads.get(name, np.zeros_like(self.values[name]))
            input_grads[name] = g[0] if self.unbatched else g
        return gradient, input_grads


def _as_input_dict(params: ParameterSet, inputs: ArrayOrDict) -> Tuple[Dict[str, np.ndarray], bool]:
    topology = params.topology
    if not isinstance(inputs, dict):
        if len(topology.inputs) != 1:
            raise InvalidInputError(f"graph takes inputs {sorted(topology.inputs)}; pass a dict")
        inputs = {next(iter(topology.inputs)): inputs}
    missing = set(topology.inputs) - set(inputs)
    if missing:
        raise InvalidInputError(f"missing graph inputs {sorted(missing)}")
    arrays: Dict[str, np.ndarray] = {}
    unbatched = None
    for name, shape in topology.inputs.items():
        arr = np.asarray(inputs[name], dtype=np.float64)
        per_sample = tuple(shape)
        is_single = arr.shape == per_sample
        if not is_single and arr.shape[1:] != per_sample:
            consumer = next((s.name for s in topology.layers if name in s.inputs), name)
            raise ShapeMismatchError(consumer, per_sample, arr.shape[1:] if arr.ndim else arr.shape)
        if unbatched is None:
            unbatched = is_single
        elif unbatched != is_single:
            raise InvalidInputError("mixing batched and unbatched graph inputs")
        arrays[name] = arr[None, ...] if is_single else arr
    return arrays, bool(unbatched)


def forward_trace(params: ParameterSet, inputs: ArrayOrDict) -> ForwardTrace:
    arrays, unbatched = _as_input_dict(params, inputs)
    values: Dict[str, np.ndarray] = dict(arrays)
    caches: Dict[str, object] = {}
    for spec in params.topology.layers:
        out, cache = layer_forward(spec, params.layer_tensors(spec.name), [values[s] for s in spec.inputs])
        values[spec.name] = out
        caches[spec.name] = cache
    return ForwardTrace(params, values, caches, unbatched)


def forward(params: ParameterSet, inputs: ArrayOrDict) -> ArrayOrDict:
    """Evaluate the graph; a single output comes back as an array."""
    return forward_trace(params, inputs).outputs


def backward(params: ParameterSet, inputs: ArrayOrDict, loss_grad: ArrayOrDict,
             trainable: Optional[Sequence[str]] = None) -> ParameterSet:
    """Gradient of the loss w.r.t. every tensor; non-trainable layers get zeros."""
    return forward_trace(params, inputs).backward(loss_grad, trainable)
