"""Seed derivation. Every random draw in a campaign flows from one master seed."""

import numpy as np

MASK64 = (1 << 64) - 1


def derive_seed(master: int, *path: int) -> int:
    """64-bit seed for the run at ``path`` under ``master`` (order-sensitive)."""
    ss = np.random.SeedSequence([master & MASK64, *path])
    lo, hi = ss.generate_state(2, dtype=np.uint32)
    return int(lo) | (int(hi) << 32)


def generator(seed: int) -> np.random.Generator:
    # Philox is counter based, so streams are stable across numpy versions
    return np.random.Generator(np.random.Philox(seed & MASK64))


def gen_seed(master: int) -> int:
    """Seed for abstract test generation."""
    return derive_seed(master, 0)


def run_seed(master: int, index: int) -> int:
    """Seed for concretizing run ``index`` of a campaign."""
    return derive_seed(master, 1, index)
