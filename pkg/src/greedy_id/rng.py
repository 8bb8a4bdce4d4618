"""Counter-based random streams.

Every stream is a Philox generator keyed by ``(seed, *keys)`` through
``SeedSequence.spawn_key``; e.g. the basin study uses ``(seed, radius_index,
run_index)``. Streams therefore do not depend on execution order, which keeps
parallel and sequential runs identical.
"""
from __future__ import annotations

import numpy as np


def stream(seed: int, *keys: int) -> np.random.Generator:
    ss = np.random.SeedSequence(int(seed), spawn_key=tuple(int(k) for k in keys))
    return np.random.Generator(np.random.Philox(ss))
