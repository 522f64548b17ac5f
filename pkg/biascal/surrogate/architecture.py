"""
Layer plans for the encoder E, decoder D, forward model F and inverse model I
"""

from typing import Dict, List

from pydantic import BaseModel, ConfigDict, Field, model_validator

from diffcore import LayerSpec, Topology
from toydata import N_SCALARS


class ArchConfig(BaseModel):
    """Sizes of the four networks; `hidden_activation` applies to every hidden layer."""

    model_config = ConfigDict(frozen=True, extra="forbid")

    latent_dim: int = Field(32, ge=1)
    conv_channels: List[int] = Field(default_factory=lambda: [16, 32], min_length=2, max_length=2)
    image_dense: int = Field(64, ge=1)
    scalar_branch: int = Field(32, ge=1)
    shared_width: int = Field(64, ge=1)
    fi_width: int = Field(64, ge=1)
    fi_depth: int = Field(3, ge=2)
    hidden_activation: str = Field("leaky_relu", pattern="^(leaky_relu|tanh|linear)$")


class ArchManifest(BaseModel):
    """Which layers the transfer-learning strategies address, plus the sizes used."""

    model_config = ConfigDict(frozen=True, extra="forbid")

    image_side: int
    n_inputs: int
    config: ArchConfig
    encoder_innermost: str = "enc_latent"
    decoder_innermost: str = "dec_shared"
    forward_last: str = "fwd_out"
    decoder_outputs: Dict[str, str] = Field(
        default_factory=lambda: {"scalars": "dec_sca_out", "image": "dec_up2"})
    inverse_output: str = "inv_out"

    @model_validator(mode="after")
    def _check_side(self):
        if self.image_side % 4:
            raise ValueError(f"image side must be divisible by 4 for two stride-2 stages, got {self.image_side}")
        return self

    @property
    def latent_dim(self) -> int:
        return self.config.latent_dim


def _dense(name: str, fan_in: int, fan_out: int, src: str, act: str) -> LayerSpec:
    return LayerSpec(name=name, kind="dense", inputs=[src], fan_in=fan_in, fan_out=fan_out, activation=act)


def encoder_topology(arch: ArchManifest) -> Topology:
    cfg, side = arch.config, arch.image_side
    c1, c2 = cfg.conv_channels
    act = cfg.hidden_activation
    flat = c2 * (side // 4) ** 2
    layers = [
        LayerSpec(name="enc_conv1", kind="conv", inputs=["image"], in_channels=1, out_channels=c1, stride=2,
                  activation=act),
        LayerSpec(name="enc_conv2", kind="conv", inputs=["enc_conv1"], in_channels=c1, out_channels=c2, stride=2,
                  activation=act),
        LayerSpec(name="enc_flat", kind="reshape", inputs=["enc_conv2"], shape=[flat]),
        _dense("enc_img_dense", flat, cfg.image_dense, "enc_flat", act),
        _dense("enc_sca", N_SCALARS, cfg.scalar_branch, "scalars", act),
        LayerSpec(name="enc_concat", kind="concat", inputs=["enc_img_dense", "enc_sca"]),
        _dense(arch.encoder_innermost, cfg.image_dense + cfg.scalar_branch, cfg.latent_dim, "enc_concat", "linear"),
    ]
    return Topology(inputs={"image": [1, side, side], "scalars": [N_SCALARS]}, layers=layers,
                    outputs=[arch.encoder_innermost])


def decoder_topology(arch: ArchManifest) -> Topology:
    """Shared innermost dense layer feeding a dense scalar head and a convolutional image head."""
    cfg, side = arch.config, arch.image_side
    c1, c2 = cfg.conv_channels
    act = cfg.hidden_activation
    quarter = side // 4
    layers = [
        _dense(arch.decoder_innermost, cfg.latent_dim, cfg.shared_width, "latent", act),
        _dense("dec_sca_hidden", cfg.shared_width, cfg.scalar_branch, arch.decoder_innermost, act),
        _dense("dec_sca_out", cfg.scalar_branch, N_SCALARS, "dec_sca_hidden", "linear"),
        _dense("dec_img_dense", cfg.shared_width, c2 * quarter * quarter, arch.decoder_innermost, act),
        LayerSpec(name="dec_img_grid", kind="reshape", inputs=["dec_img_dense"], shape=[c2, quarter, quarter]),
        LayerSpec(name="dec_up1", kind="upconv", inputs=["dec_img_grid"], in_channels=c2, out_channels=c1,
                  stride=2, activation=act),
        LayerSpec(name="dec_up2", kind="upconv", inputs=["dec_up1"], in_channels=c1, out_channels=1, stride=2,
                  activation="linear"),
    ]
    return Topology(inputs={"latent": [cfg.latent_dim]}, layers=layers,
                    outputs=[arch.decoder_outputs["scalars"], arch.decoder_outputs["image"]])


def _mlp(prefix: str, src: str, n_in: int, n_out: int, out_name: str, cfg: ArchConfig) -> List[LayerSpec]:
    layers, width_in, prev = [], n_in, src
    for i in range(1, cfg.fi_depth):
        name = f"{prefix}_h{i}"
        layers.append(_dense(name, width_in, cfg.fi_width, prev, cfg.hidden_activation))
        width_in, prev = cfg.fi_width, name
    layers.append(_dense(out_name, width_in, n_out, prev, "linear"))
    return layers


def forward_topology(arch: ArchManifest) -> Topology:
    layers = _mlp("fwd", "x", arch.n_inputs, arch.latent_dim, arch.forward_last, arch.config)
    return Topology(inputs={"x": [arch.n_inputs]}, layers=layers, outputs=[arch.forward_last])


def inverse_topology(arch: ArchManifest) -> Topology:
    layers = _mlp("inv", "z", arch.latent_dim, arch.n_inputs, arch.inverse_output, arch.config)
    return Topology(inputs={"z": [arch.latent_dim]}, layers=layers, outputs=[arch.inverse_output])
