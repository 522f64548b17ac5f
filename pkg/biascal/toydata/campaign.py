"""
Input sampling and the nominal/perturbed synthetic campaign
"""

import logging
from typing import Dict, List, Optional, Tuple, Union

import numpy as np
from pydantic import BaseModel, ConfigDict, Field, model_validator

from core.state_manager import SeedManager
from diffcore import InvalidInputError

from .generator import GeneratorPhysics, load_physics, simulate_batch
from .schema import INPUT_NAMES, N_INPUTS, Dataset, check_fixed, input_bounds

_log = logging.getLogger(__name__)

NOMINAL_FIXED = {"asym_mode20_t1": 0.0, "preheat": 5.0, "scale": 1.0, "dopant_fraction": 0.0028}
PERTURBED_FIXED = {"asym_mode20_t1": -0.05, "preheat": 20.0, "scale": 1.0, "dopant_fraction": 0.0028}


class CampaignSpec(BaseModel):
    """Nominal simulations plus perturbed "experiments" for the synthetic protocol."""

    model_config = ConfigDict(extra="forbid")

    nominal_fixed: Dict[str, float] = Field(default_factory=lambda: dict(NOMINAL_FIXED))
    perturbed_fixed: Dict[str, float] = Field(default_factory=lambda: dict(PERTURBED_FIXED))
    n_sim: int = Field(8000, ge=1)
    n_train: int = Field(7, ge=1)
    n_validation: int = Field(1000, ge=1)
    seed: int = Field(0, ge=0)
    image_side: int = Field(32, ge=4, le=60)
    sigma_fraction: float = Field(0.05, gt=0)
    measurement_noise: bool = False

    @model_validator(mode="after")
    def _check_fixed(self):
        if set(self.nominal_fixed) != set(self.perturbed_fixed):
            raise ValueError(
                f"nominal fixes {sorted(self.nominal_fixed)} but perturbed fixes {sorted(self.perturbed_fixed)}")
        check_fixed(self.nominal_fixed)
        check_fixed(self.perturbed_fixed)
        return self

    @property
    def free_inputs(self) -> List[str]:
        return [n for n in INPUT_NAMES if n not in self.nominal_fixed]

    def null_bias(self) -> "CampaignSpec":
        """Control campaign whose "experiments" share the nominal settings."""
        return self.model_copy(update={"perturbed_fixed": dict(self.nominal_fixed)})


def sample_inputs(n: int, fixed: Optional[Dict[str, float]] = None,
                  seed: Union[int, np.random.Generator] = 0) -> np.ndarray:
    """(n, 9) inputs: free columns uniform over their ranges, fixed columns constant.

    Rows are design points in INPUT_NAMES order, kept as one array for the vectorized
    generator; `DesignPoint.from_array(row)` gives the validated per-point view.
    """
    if n < 1:
        raise InvalidInputError(f"sample count must be >= 1, got {n}")
    fixed = dict(fixed or {})
    check_fixed(fixed)
    rng = seed if isinstance(seed, np.random.Generator) else np.random.default_rng(seed)
    lo, hi = input_bounds()
    x = lo + (hi - lo) * rng.random((n, N_INPUTS))
    for name, value in fixed.items():
        x[:, INPUT_NAMES.index(name)] = value
    return x


def generate_dataset(n: int, fixed: Dict[str, float], seed: int, physics: GeneratorPhysics, side: int,
                     noise_rng: Optional[np.random.Generator] = None, role: str = "sim") -> Dataset:
    x = sample_inputs(n, fixed, seed)
    scalars, images, sigmas = simulate_batch(x, physics, side, noise_rng)
    meta = {
        "role": role,
        "count": n,
        "image_side": side,
        "seed": seed,
        "fixed": dict(fixed),
        "generator_version": physics.version,
        "sigma_fraction": physics.sigma_fraction,
        "measurement_noise": noise_rng is not None,
    }
    return Dataset(x, scalars, sigmas, images, meta=meta)


def make_campaign(spec: CampaignSpec, physics: Optional[GeneratorPhysics] = None
                  ) -> Tuple[Dataset, Dataset, Dataset]:
    """(simulations, training experiments, validation experiments)."""
    physics = (physics or load_physics()).with_sigma_fraction(spec.sigma_fraction)
    seeds = SeedManager(spec.seed)

    def noise(role: str) -> Optional[np.random.Generator]:
        return seeds.rng(f"noise_{role}") if spec.measurement_noise else None

    sim = generate_dataset(spec.n_sim, spec.nominal_fixed, seeds.seed("sim"), physics, spec.image_side,
                           role="sim")
    train = generate_dataset(spec.n_train, spec.perturbed_fixed, seeds.seed("exp_train"), physics,
                             spec.image_side, noise("exp_train"), role="exp_train")
    validation = generate_dataset(spec.n_validation, spec.perturbed_fixed, seeds.seed("exp_validation"), physics,
                                  spec.image_side, noise("exp_validation"), role="exp_validation")
    _log.info("[OK] Campaign generated: %d sims, %d train, %d validation (side %d)",
              len(sim), len(train), len(validation), spec.image_side)
    return sim, train, validation
