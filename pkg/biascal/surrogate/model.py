"""
SurrogateModel: the trained E, D, F, I networks plus normalization statistics
"""

import hashlib
import logging
from dataclasses import dataclass, field, replace
from typing import Dict, List, Sequence, Tuple

import numpy as np

from diffcore import InvalidInputError, ParameterSet, forward
from metrics import r2
from toydata import INPUT_NAMES, N_INPUTS, SCALAR_NAMES, Dataset, DesignPoint, MultiModalOutput, NormStats, image_means
from toydata.schema import out_of_range

from .architecture import ArchManifest

_log = logging.getLogger(__name__)


@dataclass(frozen=True)
class SurrogateModel:
    """Initial simulation-trained model S(x) = D(F(x)).

    Images are handled mean-normalized throughout; scalars leave `predict` in
    physical units. `input_names` lists the design inputs the model consumes.
    """

    encoder: ParameterSet
    decoder: ParameterSet
    forward: ParameterSet
    inverse: ParameterSet
    arch: ArchManifest
    stats: NormStats
    input_names: List[str] = field(default_factory=lambda: list(INPUT_NAMES))

    def __post_init__(self):
        for role, pset, name in (("encoder", self.encoder, self.arch.encoder_innermost),
                                 ("decoder", self.decoder, self.arch.decoder_innermost),
                                 ("forward", self.forward, self.arch.forward_last)):
            if name not in pset.topology.layer_names:
                raise InvalidInputError(f"manifest names {role} layer '{name}' which does not exist")
        latent = self.arch.latent_dim
        enc_shapes = self.encoder.topology.shapes()
        dims = {
            "encoder output": enc_shapes[self.encoder.topology.outputs[0]],
            "decoder input": tuple(self.decoder.topology.inputs["latent"]),
            "forward output": self.forward.topology.shapes()[self.arch.forward_last],
            "inverse input": tuple(self.inverse.topology.inputs["z"]),
        }
        wrong = {k: v for k, v in dims.items() if v != (latent,)}
        if wrong:
            raise InvalidInputError(f"latent dimension {latent} not matched by {wrong}")
        unknown = [n for n in self.input_names if n not in INPUT_NAMES]
        if unknown or len(self.input_names) != self.arch.n_inputs:
            raise InvalidInputError(
                f"input names {self.input_names} do not match the forward model's {self.arch.n_inputs} inputs")

    @property
    def latent_dim(self) -> int:
        return self.arch.latent_dim

    @property
    def image_side(self) -> int:
        return self.arch.image_side

    def with_components(self, **components: ParameterSet) -> "SurrogateModel":
        """Copy with some of encoder/decoder/forward/inverse swapped."""
        return replace(self, **components)

    def content_hash(self) -> str:
        digest = hashlib.sha256()
        for pset in (self.encoder, self.decoder, self.forward, self.inverse):
            digest.update(pset.content_hash().encode())
        digest.update(self.arch.model_dump_json().encode())
        digest.update(self.stats.model_dump_json().encode())
        digest.update(",".join(self.input_names).encode())
        return digest.hexdigest()

    # -- normalized-space passes ------------------------------------------

    def encode(self, scalars: np.ndarray, images: np.ndarray) -> np.ndarray:
        return forward(self.encoder, {"image": images[:, None, :, :], "scalars": scalars})

    def decode(self, z: np.ndarray) -> Tuple[np.ndarray, np.ndarray]:
        out = forward(self.decoder, z)
        names = self.arch.decoder_outputs
        return out[names["scalars"]], out[names["image"]][:, 0]

    def latent(self, x_unit: np.ndarray) -> np.ndarray:
        return forward(self.forward, x_unit)

    def predict_unit(self, x_unit: np.ndarray) -> Tuple[np.ndarray, np.ndarray]:
        return self.decode(self.latent(x_unit))

    def model_inputs(self, x) -> np.ndarray:
        """Physical inputs (nine columns or the model's own columns) -> unit model inputs."""
        if isinstance(x, DesignPoint):
            x = x.as_array()
        x = np.atleast_2d(np.asarray(x, dtype=np.float64))
        if x.shape[1] == N_INPUTS:
            bad = out_of_range(x)
            x = x[:, [INPUT_NAMES.index(n) for n in self.input_names]]
        elif x.shape[1] == len(self.input_names):
            bad = out_of_range(x, self.input_names)
        else:
            raise InvalidInputError(
                f"expected {N_INPUTS} or {len(self.input_names)} input columns, got {x.shape[1]}")
        if bad:
            _log.warning("extrapolating: inputs outside the design ranges for %s", bad)
        return self.stats.inputs_to_unit(x, self.input_names)


def _to_output(model: SurrogateModel, scalars_unit: np.ndarray, images: np.ndarray, single: bool) -> MultiModalOutput:
    scalars = model.stats.scalars_to_physical(scalars_unit)
    images = np.clip(images, 0.0, None)
    if single:
        return MultiModalOutput(scalars[0], images[0])
    return MultiModalOutput(scalars, images)


def predict(model: SurrogateModel, x) -> MultiModalOutput:
    """S(x) = D(F(x)): physical scalars and mean-normalized images (negative pixels clipped)."""
    single = isinstance(x, DesignPoint) or np.ndim(x) == 1
    scalars, images = model.predict_unit(model.model_inputs(x))
    return _to_output(model, scalars, images, single)


def reconstruct(model: SurrogateModel, dataset: Dataset) -> MultiModalOutput:
    """D(E(y)) for every sample of the dataset."""
    scalars, images = observed(model, dataset)
    rec_scalars, rec_images = model.decode(model.encode(model.stats.scalars_to_unit(scalars), images))
    return _to_output(model, rec_scalars, rec_images, single=False)


def observed(model: SurrogateModel, dataset: Dataset) -> Tuple[np.ndarray, np.ndarray]:
    """Physical scalars and mean-normalized images of a raw or model-normalized dataset."""
    if dataset.normalized:
        if dataset.meta.get("norm_stats") != model.stats.model_dump():
            raise InvalidInputError("dataset was normalized with statistics other than the model's")
        return model.stats.scalars_to_physical(dataset.scalars), dataset.images
    return dataset.scalars, dataset.images / image_means(dataset.images)[:, None, None]


def physical_inputs(model: SurrogateModel, dataset: Dataset) -> np.ndarray:
    return model.stats.inputs_to_physical(dataset.inputs) if dataset.normalized else dataset.inputs


def r2_table(obs_scalars: np.ndarray, obs_images: np.ndarray, pred: MultiModalOutput) -> Dict[str, float]:
    table = {name: r2(obs_scalars[:, j], pred.scalars[:, j]) for j, name in enumerate(SCALAR_NAMES)}
    table["pixels"] = r2(obs_images, pred.image)
    return table


def _check_count(dataset: Dataset) -> None:
    if len(dataset) < 2:
        raise InvalidInputError(f"R² evaluation needs at least 2 samples, got {len(dataset)}")


def evaluate_r2(model: SurrogateModel, dataset: Dataset) -> Dict[str, float]:
    """R² of D(F(x)) per scalar plus one pooled pixel-wise R²."""
    _check_count(dataset)
    scalars, images = observed(model, dataset)
    return r2_table(scalars, images, predict(model, physical_inputs(model, dataset)))


def evaluate_reconstruction(model: SurrogateModel, dataset: Dataset) -> Dict[str, float]:
    """R² of the autoencoder round trip D(E(y)), same layout as evaluate_r2."""
    _check_count(dataset)
    scalars, images = observed(model, dataset)
    return r2_table(scalars, images, reconstruct(model, dataset))


def split_holdout(n: int, fraction: float, seed: int) -> Tuple[np.ndarray, np.ndarray]:
    """(train, held-out) index arrays from a seeded shuffle; nothing is held out at fraction 0."""
    order = np.random.default_rng(seed).permutation(n)
    n_hold = max(1, int(round(n * fraction))) if n > 1 and fraction > 0 else 0
    return np.sort(order[n_hold:]), np.sort(order[:n_hold])


def select_inputs(x_unit: np.ndarray, names: Sequence[str]) -> np.ndarray:
    """Pick model input columns from nine-column unit inputs."""
    return x_unit[:, [INPUT_NAMES.index(n) for n in names]]
