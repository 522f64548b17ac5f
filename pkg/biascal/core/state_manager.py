"""
Seed manager: independent random streams per role and per split
"""

import zlib
from typing import Dict, Tuple

import numpy as np


class SeedManager:
    """Derives random streams from one master seed.

    Every stream is keyed by a role name (and optionally integers such as a
    split id) and built from a SeedSequence spawn key, so two different keys
    never share a stream and a key always maps to the same stream.
    """

    def __init__(self, master_seed: int):
        if master_seed < 0:
            raise ValueError(f"master seed must be non-negative, got {master_seed}")
        self.master_seed = int(master_seed)
        self._issued: Dict[Tuple[int, ...], str] = {}

    @staticmethod
    def _role_key(role: str) -> int:
        return zlib.crc32(role.encode("utf-8"))

    def sequence(self, role: str, *extra: int) -> np.random.SeedSequence:
        key = (self._role_key(role),) + tuple(int(e) for e in extra)
        self._issued.setdefault(key, f"{role}{list(extra) if extra else ''}")
        return np.random.SeedSequence(self.master_seed, spawn_key=key)

    def rng(self, role: str, *extra: int) -> np.random.Generator:
        return np.random.default_rng(self.sequence(role, *extra))

    def seed(self, role: str, *extra: int) -> int:
        """Plain integer seed for APIs that take one (recorded in manifests)."""
        return int(self.sequence(role, *extra).generate_state(1, dtype=np.uint32)[0])

    def split_rng(self, split_id: int) -> np.random.Generator:
        return self.rng("split", split_id)

    def split_seed(self, split_id: int) -> int:
        return self.seed("split", split_id)

    def issued(self) -> Dict[str, str]:
        """Streams handed out so far, for provenance records."""
        return {":".join(map(str, k)): v for k, v in sorted(self._issued.items())}
