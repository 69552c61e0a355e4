"""Poisson node deployments inside a fractal domain.

Random streams: every realization uses numpy's ``PCG64`` bit generator.  A
trial's 64-bit seed is the first word of
``SeedSequence(master_seed, spawn_key=key).generate_state(1, uint64)``
(see :func:`derive_seed`), so trial ``k`` of a run does not depend on how
many workers execute the run or in which order.
"""
import struct
from dataclasses import dataclass

import numpy as np

from .geometry import DEFAULT_MAX_DEPTH

DEFAULT_SEED = 20150601


@dataclass(frozen=True, eq=False)
class NodeSet:
    points: np.ndarray
    rho: float
    seed: int
    family: int
    theta: float

    def __len__(self):
        return len(self.points)


def float_key(value):
    """Bit pattern of a float as an unsigned integer (for seed derivation)."""
    return struct.unpack("<Q", struct.pack("<d", float(value)))[0]


def derive_seed(master_seed, *key):
    """Pure function of ``(master_seed, key...)`` giving an independent 64-bit seed."""
    ss = np.random.SeedSequence(int(master_seed), spawn_key=tuple(int(k) for k in key))
    return int(ss.generate_state(1, np.uint64)[0])


def trial_seed(master_seed, family, theta, rho, trial):
    return derive_seed(master_seed, family, float_key(theta), float_key(rho), trial)


def sample_poisson_nodes(domain, rho, seed, max_depth=DEFAULT_MAX_DEPTH):
    """Poisson process of intensity ``rho`` on the domain, by thinning.

    A Poisson number of points is drawn uniformly on the bounding square
    ``[-y_max, y_max]^2`` and only those inside the domain are kept.
    """
    if rho < 0:
        raise ValueError(f"rho must be non-negative, got {rho}")
    rng = np.random.Generator(np.random.PCG64(seed))
    half = domain.y_max
    count = rng.poisson(rho * (2.0 * half) ** 2)
    pts = rng.uniform(-half, half, size=(count, 2))
    if count:
        keep = domain.kernel.contains_many(pts[:, 0], pts[:, 1], int(max_depth))
        pts = pts[keep.astype(bool)]
    return NodeSet(np.ascontiguousarray(pts), float(rho), int(seed), domain.n, domain.theta)
