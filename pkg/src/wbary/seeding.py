"""Deterministic seed derivation for independent tasks."""

import numpy as np


def derive_seed(master: int, *keys: int) -> int:
    """63-bit seed for the task identified by ``keys`` under ``master``.

    Seeds are derived before any work is dispatched, so results never depend
    on scheduling or thread count.
    """
    ss = np.random.SeedSequence(int(master), spawn_key=tuple(int(k) for k in keys))
    return int(ss.generate_state(1, np.uint64)[0] >> np.uint64(1))
