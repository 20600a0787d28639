"""Paintbox sampling: exchangeable typed partitions from a typed mass-partition.

Each of n labels lands on component j with probability x_j and in the dust
with the leftover probability.  Labels sharing a component form a block of
that component's type; dust labels become singletons of type 0 (as does a
component that caught a single label, by the singleton convention).
"""

import numpy as np

from .partitions import TypedBlockPartition, TypedMassPartition, typed_block_partition


def _cumulative_masses(x: TypedMassPartition) -> np.ndarray:
    return np.cumsum([m for m, _ in x.parts])


def sample_paintbox(x: TypedMassPartition, n: int,
                    rng: np.random.Generator) -> TypedBlockPartition:
    """Sample the paintbox based on x, restricted to {1..n}."""
    if n < 1:
        raise ValueError("need n >= 1")
    cum = _cumulative_masses(x)
    # label == len(parts) means the dust
    labels = np.searchsorted(cum, rng.random(n), side="right")
    blocks = []
    groups: dict[int, list[int]] = {}
    for elem, lab in enumerate(labels, start=1):
        if lab == len(x.parts):
            blocks.append(((elem,), 0))
        else:
            groups.setdefault(int(lab), []).append(elem)
    for lab, elems in groups.items():
        typ = x.parts[lab][1] if len(elems) >= 2 else 0
        blocks.append((tuple(elems), typ))
    return typed_block_partition(n, blocks)


def size_biased_tag(x: TypedMassPartition,
                    rng: np.random.Generator) -> tuple[float, int]:
    """One size-biased pick: (x_n, i_n) with probability x_n, (0, 0) on dust."""
    cum = _cumulative_masses(x)
    lab = int(np.searchsorted(cum, rng.random(), side="right"))
    if lab == len(x.parts):
        return 0.0, 0
    return x.parts[lab]
