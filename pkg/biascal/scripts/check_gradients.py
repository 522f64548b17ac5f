"""
Script to finite-difference check the backward pass of every surrogate network
"""

import sys
import os
import time

import numpy as np

# Add parent directory to path
sys.path.append(os.path.dirname(os.path.dirname(os.path.abspath(__file__))))

from diffcore import ParameterSet, forward, gradient_check, squared_loss
from surrogate import ArchConfig, ArchManifest, decoder_topology, encoder_topology, forward_topology, inverse_topology
from toydata import N_SCALARS

TOLERANCE = 1e-4


def small_manifest() -> ArchManifest:
    arch = ArchConfig(latent_dim=3, conv_channels=[2, 2], image_dense=4, scalar_branch=3, shared_width=4,
                      fi_width=4, fi_depth=2)
    return ArchManifest(image_side=8, n_inputs=5, config=arch)


def zeros_like(outputs):
    if isinstance(outputs, dict):
        return {k: np.zeros_like(v) for k, v in outputs.items()}
    return np.zeros_like(outputs)


def check_gradients():
    """Check E, D, F and I; together they cover every layer kind."""

    print("Checking analytic gradients against central differences")
    print("=" * 60)

    arch = small_manifest()
    rng = np.random.default_rng(0)
    side, latent = arch.image_side, arch.latent_dim
    cases = {
        "encoder": (encoder_topology(arch), {"image": rng.random((2, 1, side, side)),
                                             "scalars": rng.random((2, N_SCALARS))}),
        "decoder": (decoder_topology(arch), rng.standard_normal((2, latent))),
        "forward": (forward_topology(arch), rng.random((2, arch.n_inputs))),
        "inverse": (inverse_topology(arch), rng.standard_normal((2, latent))),
    }

    failed = []
    for i, (name, (topology, inputs)) in enumerate(cases.items()):
        params = ParameterSet.initialize(topology, seed=i)
        target = zeros_like(forward(params, inputs))
        start = time.time()
        worst = gradient_check(params, inputs, squared_loss(target))
        status = "[OK]" if worst < TOLERANCE else "[ERROR]"
        print(f"{status} {name:<8} {params.parameter_count():>5} params  "
              f"max rel. error {worst:.2e}  ({time.time() - start:.1f}s)")
        if worst >= TOLERANCE:
            failed.append(name)

    print("=" * 60)
    if failed:
        print(f"[ERROR] Gradient check failed for: {', '.join(failed)}")
        return 1
    print("[OK] All networks pass")
    return 0


if __name__ == "__main__":
    sys.exit(check_gradients())
