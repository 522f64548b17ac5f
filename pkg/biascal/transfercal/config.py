"""
Transfer-learning settings and the strategy -> layer mapping
"""

from enum import Enum
from typing import List, Optional, Sequence, Tuple

from pydantic import BaseModel, ConfigDict, Field

from diffcore import TrainConfig
from surrogate import ArchManifest


class Strategy(str, Enum):
    FORWARD_TAIL = "FORWARD_TAIL"
    AE_CORES_THEN_FORWARD_TAIL = "AE_CORES_THEN_FORWARD_TAIL"
    DECODER_INNERMOST = "DECODER_INNERMOST"


class LossMode(str, Enum):
    L2 = "l2"
    CHI2 = "chi2"


class TLConfig(BaseModel):
    """Retraining recipe: 100 Adam steps at lr 3e-5 with 5% L2 unless overridden."""

    model_config = ConfigDict(extra="forbid")

    strategy: Strategy = Strategy.DECODER_INNERMOST
    iterations: int = Field(100, ge=0)
    learning_rate: float = Field(3e-5, gt=0)
    l2_weight: float = Field(0.05, ge=0)
    gamma_sca: Optional[float] = Field(None, ge=0)
    loss: LossMode = LossMode.CHI2
    batch_size: int = Field(64, ge=1)
    seed: int = Field(0, ge=0)

    def scalar_weight(self, pixels: int) -> float:
        """γ_sca, defaulting to 1 in L2 mode and 0.01·pixels/10 in χ² mode."""
        if self.gamma_sca is not None:
            return self.gamma_sca
        return 0.01 * pixels / 10.0 if self.loss == LossMode.CHI2 else 1.0

    def train_config(self, trainable: Sequence[str], seed: Optional[int] = None) -> TrainConfig:
        return TrainConfig(
            iterations=self.iterations,
            learning_rate=self.learning_rate,
            l2_weight=self.l2_weight,
            batch_size=self.batch_size,
            seed=self.seed if seed is None else seed,
            trainable=list(trainable),
        )


# (stage graph, {component: layers retrained in that component})
Stage = Tuple[str, dict]


def retrain_plan(strategy: Strategy, arch: ArchManifest) -> List[Stage]:
    """Ordered optimize stages of a strategy.

    Stage graphs: "decoder" runs D on precomputed F(x); "forward_decoder"
    runs D(F(x)); "autoencoder" runs D(E(y)).
    """
    if strategy == Strategy.FORWARD_TAIL:
        return [("forward_decoder", {"forward": [arch.forward_last]})]
    if strategy == Strategy.AE_CORES_THEN_FORWARD_TAIL:
        return [
            ("autoencoder", {"encoder": [arch.encoder_innermost], "decoder": [arch.decoder_innermost]}),
            ("forward_decoder", {"forward": [arch.forward_last]}),
        ]
    return [("decoder", {"decoder": [arch.decoder_innermost]})]
