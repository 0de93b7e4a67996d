"""Deterministic RNG substreams keyed by purpose.

Every stochastic component derives its generator from the global seed plus a
structural key (tag, iteration, candidate, row), so identical configurations
reproduce identical draws regardless of evaluation order or parallelism.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

TAG_PROJECTIONS = 1
TAG_EMBEDDING = 2
TAG_EMBEDDING_ANCHOR = 3
TAG_ROW = 4
TAG_CANDIDATE = 5


def stream(seed: int, *key: int) -> np.random.Generator:
    """Generator for the substream identified by ``key`` under ``seed``."""
    return np.random.default_rng(np.random.SeedSequence(seed, spawn_key=tuple(key)))


@dataclass(frozen=True)
class ProposalStreams:
    """Per-(candidate, row) generator factory for one solver iteration."""

    seed: int
    iteration: int

    def row(self, candidate: int, row: int) -> np.random.Generator:
        return stream(self.seed, TAG_ROW, self.iteration, candidate, row)

    def candidate(self, candidate: int) -> np.random.Generator:
        return stream(self.seed, TAG_CANDIDATE, self.iteration, candidate)
