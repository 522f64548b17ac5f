import numpy as np
import pytest

from diffcore import TrainConfig
from surrogate import ArchConfig, SurrogateTrainConfig, train_surrogate
from toydata import CampaignSpec, Dataset, make_campaign

TINY_SIDE = 8


def tiny_train_config(seed=0, iterations=40):
    arch = ArchConfig(latent_dim=4, conv_channels=[2, 3], image_dense=8, scalar_branch=6, shared_width=8,
                      fi_width=8, fi_depth=2)
    stage = TrainConfig(iterations=iterations, learning_rate=1e-2, batch_size=32)
    return SurrogateTrainConfig(arch=arch, autoencoder=stage, forward_inverse=stage, holdout_fraction=0.2, seed=seed)


@pytest.fixture(scope="session")
def tiny_spec():
    return CampaignSpec(n_sim=120, n_train=7, n_validation=20, image_side=TINY_SIDE, seed=3)


@pytest.fixture(scope="session")
def campaign(tiny_spec):
    return make_campaign(tiny_spec)


@pytest.fixture(scope="session")
def tiny_fit(campaign, tiny_spec):
    sim, _, _ = campaign
    return train_surrogate(sim, tiny_train_config(), input_names=tiny_spec.free_inputs)


@pytest.fixture(scope="session")
def tiny_model(tiny_fit):
    return tiny_fit[0]


@pytest.fixture(scope="session")
def experiments(campaign):
    """Ten perturbed shots: the seven training ones plus three validation ones."""
    _, train, validation = campaign
    return Dataset.concat([train, validation]).subset(np.arange(10))
