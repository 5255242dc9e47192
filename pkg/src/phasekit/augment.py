"""Seeded on-the-fly phase-rotation augmentation for training pipelines.

Each call draws a fresh angle from Uniform[-pi, pi) and rotates the signal;
the magnitude spectrum is untouched, so only models consuming time-domain
samples or complex spectra see any difference.  Streams use the Philox
counter-based generator (``philox4x64``, keyed by (seed, worker_id)), so any
number of workers get disjoint, platform-stable sequences.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .dsp import PhaseAngle, Signal, phase_shift
from .errors import InvalidArgumentError

RNG_SCHEME = "philox4x64"


@dataclass(frozen=True)
class AugmentConfig:
    seed: int
    apply_probability: float = 1.0

    def __post_init__(self):
        if not 0 <= int(self.seed) < 2**64:
            raise InvalidArgumentError("seed must fit in an unsigned 64-bit integer")
        if not 0.0 <= self.apply_probability <= 1.0:
            raise InvalidArgumentError("apply_probability must lie in [0, 1]")

    def stream(self, worker_id: int = 0) -> np.random.Generator:
        """Independent draw stream for one worker."""
        if worker_id < 0:
            raise InvalidArgumentError("worker_id must be non-negative")
        return np.random.Generator(np.random.Philox(key=[int(self.seed), int(worker_id)]))


def draw_theta(rng: np.random.Generator) -> PhaseAngle:
    return PhaseAngle(rng.uniform(-math.pi, math.pi))


def augment(
    x: Signal, rng: np.random.Generator, apply_probability: float = 1.0
) -> tuple[Signal, PhaseAngle]:
    """Rotate by a random angle (or pass through), reporting the angle used.

    With apply_probability < 1 a gate draw is consumed first; a skipped
    signal is returned untouched with theta = 0.
    """
    if apply_probability >= 1.0:
        apply = True
    elif apply_probability <= 0.0:
        apply = False
    else:
        apply = rng.random() < apply_probability
    if not apply:
        return x, PhaseAngle(0.0)
    theta = draw_theta(rng)
    return phase_shift(x, theta), theta


def ipa(x: Signal) -> Signal:
    """Polarity inversion: the theta = pi rotation done exactly, in O(n)."""
    return Signal(-x.samples, x.sample_rate)


def augment_batch(
    signals: list[Signal], config: AugmentConfig, worker_id: int = 0
) -> list[tuple[Signal, PhaseAngle]]:
    """Augment a batch on this worker's stream; item errors name the index."""
    rng = config.stream(worker_id)
    out = []
    for i, x in enumerate(signals):
        try:
            out.append(augment(x, rng, config.apply_probability))
        except InvalidArgumentError as exc:
            raise InvalidArgumentError(f"batch item {i}: {exc}") from exc
    return out
