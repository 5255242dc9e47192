"""Stimulus preparation for A/B listening comparisons.

A stimulus pair is built from a source recording in four steps: draw a
non-silent excerpt, phase-shift a copy by theta, apply identical trapezoidal
fades to both versions, then scale both by one shared gain so the louder of
the two peaks at the normalization target.
"""

from __future__ import annotations

import json
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

from .dsp import PhaseAngle, Signal, magnitude_spectrum, phase_shift
from .errors import DegeneratePairError, InvalidArgumentError, NoContentError
from .wavio import Recording

NORMALIZATION_TARGET_PEAK = 0.99

# Default silence gate: -40 dBFS RMS expressed as an l2-norm threshold,
# scale-free in excerpt length.
DEFAULT_RMS_FLOOR = 0.01

# Pre-fade pair spectra must be a pure rotation of one another.
_PAIR_SPECTRUM_RTOL = 1e-6


@dataclass(frozen=True)
class ExcerptPolicy:
    """How excerpts are drawn: length, silence gate, fade taper."""

    duration_s: float = 3.0
    l2_threshold: float | None = None  # None -> RMS-floor default for the length drawn
    max_attempts: int = 100
    taper_s: float = 0.1

    def __post_init__(self):
        if self.duration_s <= 2 * self.taper_s:
            raise InvalidArgumentError(
                f"duration_s ({self.duration_s}) must exceed twice taper_s ({self.taper_s})"
            )
        if self.max_attempts < 1:
            raise InvalidArgumentError("max_attempts must be at least 1")
        if self.l2_threshold is not None and self.l2_threshold < 0:
            raise InvalidArgumentError("l2_threshold must be non-negative")
        if self.taper_s < 0:
            raise InvalidArgumentError("taper_s must be non-negative")

    def threshold_for(self, n_samples: int) -> float:
        if self.l2_threshold is not None:
            return self.l2_threshold
        return DEFAULT_RMS_FLOOR * np.sqrt(n_samples)


@dataclass(frozen=True)
class StimulusPair:
    """Matched original/distorted pair ready to be played back to back."""

    original: Signal
    distorted: Signal
    theta: PhaseAngle
    gain_applied: float
    stimulus_id: str
    category: str = "other"
    source_path: str = "<memory>"
    start_offset: int = 0
    extras: dict = field(default_factory=dict)

    def __post_init__(self):
        if len(self.original) != len(self.distorted):
            raise InvalidArgumentError("pair signals must have identical length")
        if self.original.sample_rate != self.distorted.sample_rate:
            raise InvalidArgumentError("pair signals must share a sample rate")

    def manifest_entry(self) -> dict:
        return {
            "stimulus_id": self.stimulus_id,
            "category": self.category,
            "source": self.source_path,
            "start_offset": self.start_offset,
            "theta": self.theta.theta,
            "gain": self.gain_applied,
            "sample_rate": self.original.sample_rate,
            "duration_s": self.original.duration_s,
            **self.extras,
        }


def sample_excerpt(
    recording: Recording, policy: ExcerptPolicy, rng: np.random.Generator
) -> tuple[Signal, int]:
    """Draw a contiguous excerpt whose l2-norm clears the silence gate.

    Start offsets are uniform over every valid window; redraws up to
    policy.max_attempts times before giving up.  Multichannel recordings are
    mixed to mono first.  Returns the excerpt and its start offset in samples.
    """
    mono = recording.mono()
    n_excerpt = int(round(policy.duration_s * mono.sample_rate))
    if n_excerpt < 1:
        raise InvalidArgumentError("excerpt duration rounds to zero samples")
    if n_excerpt > len(mono):
        raise InvalidArgumentError(
            f"{recording.source_path}: recording ({len(mono)} samples) shorter "
            f"than requested excerpt ({n_excerpt} samples)"
        )
    threshold = policy.threshold_for(n_excerpt)
    last_start = len(mono) - n_excerpt
    for _ in range(policy.max_attempts):
        start = int(rng.integers(0, last_start + 1))
        window = mono.samples[start:start + n_excerpt]
        if np.linalg.norm(window) > threshold:
            return Signal(window.copy(), mono.sample_rate), start
    raise NoContentError(
        f"{recording.source_path}: no excerpt above l2 threshold {threshold:.4g} "
        f"after {policy.max_attempts} attempts"
    )


def trapezoid_fade(x: Signal, taper_s: float) -> Signal:
    """Linear fade-in/out over taper_s seconds at each end.

    Ramp gain is n / taper_samples, so the first and last samples are
    exactly zero.  taper_s = 0 is the identity.
    """
    if taper_s < 0:
        raise InvalidArgumentError("taper_s must be non-negative")
    taper = int(round(taper_s * x.sample_rate))
    if taper == 0:
        return x
    if 2 * taper > len(x):
        raise InvalidArgumentError(
            f"taper of {taper} samples overlaps itself on a {len(x)}-sample signal"
        )
    gain = np.ones(len(x))
    ramp = np.arange(taper) / taper
    gain[:taper] = ramp
    gain[len(x) - taper:] = ramp[::-1]
    return Signal(x.samples * gain, x.sample_rate)


def normalize_pair(a: Signal, b: Signal) -> tuple[Signal, Signal, float]:
    """Scale both signals by one gain so the louder one peaks at the target.

    A shared gain keeps the relative level between the two intact.
    """
    if len(a) != len(b) or a.sample_rate != b.sample_rate:
        raise InvalidArgumentError("pair must share length and sample rate")
    peak = max(a.peak(), b.peak())
    if peak == 0.0:
        raise DegeneratePairError("both signals are all-zero; no gain can normalize them")
    gain = NORMALIZATION_TARGET_PEAK / peak
    return a.scaled(gain), b.scaled(gain), gain


def prepare_stimulus(
    recording: Recording,
    policy: ExcerptPolicy,
    theta: PhaseAngle,
    rng: np.random.Generator,
    stimulus_id: str = "stimulus",
    category: str = "other",
) -> StimulusPair:
    """Excerpt -> phase shift -> identical fades -> shared normalization."""
    excerpt, start = sample_excerpt(recording, policy, rng)
    shifted = phase_shift(excerpt, theta)

    # The un-faded pair must be a pure rotation: identical magnitude spectra.
    ref = magnitude_spectrum(excerpt)
    got = magnitude_spectrum(shifted)
    scale = float(np.max(ref)) or 1.0
    worst = float(np.max(np.abs(ref - got))) / scale
    if worst > _PAIR_SPECTRUM_RTOL:
        raise InvalidArgumentError(
            f"pair magnitude spectra diverge by {worst:.3e} before fading"
        )

    faded_original = trapezoid_fade(excerpt, policy.taper_s)
    faded_distorted = trapezoid_fade(shifted, policy.taper_s)
    original, distorted, gain = normalize_pair(faded_original, faded_distorted)
    return StimulusPair(
        original=original,
        distorted=distorted,
        theta=theta,
        gain_applied=gain,
        stimulus_id=stimulus_id,
        category=category,
        source_path=recording.source_path,
        start_offset=start,
    )


def wood_effect_stimulus(
    freq_hz: float, clip_level: float, duration_s: float, sample_rate: int
) -> tuple[Signal, Signal]:
    """Half-cycle-clipped sine and its polarity inversion.

    The positive half-cycles are flattened at clip_level while the negative
    halves stay intact, so inverting the result moves the flattened part
    from compression to rarefaction.
    """
    if not 0 < clip_level < 1:
        raise InvalidArgumentError(f"clip_level must lie in (0, 1), got {clip_level}")
    if not 0 < freq_hz < sample_rate / 2:
        raise InvalidArgumentError(
            f"freq_hz must lie in (0, sample_rate/2), got {freq_hz} at fs={sample_rate}"
        )
    if duration_s <= 0:
        raise InvalidArgumentError("duration_s must be positive")
    n = np.arange(int(round(duration_s * sample_rate)))
    if n.size == 0:
        raise InvalidArgumentError("duration_s rounds to zero samples")
    sine = np.sin(2 * np.pi * freq_hz * n / sample_rate)
    clipped = Signal(np.minimum(sine, clip_level), sample_rate)
    inverted = Signal(-clipped.samples, sample_rate)
    return clipped, inverted


def write_manifest(path: str | Path, entries: list[dict]) -> None:
    """Serialize a stimulus manifest deterministically (stable key order)."""
    doc = {"version": 1, "stimuli": entries}
    Path(path).write_text(json.dumps(doc, indent=2, sort_keys=True) + "\n")


def read_manifest(path: str | Path) -> list[dict]:
    doc = json.loads(Path(path).read_text())
    if not isinstance(doc, dict) or "stimuli" not in doc:
        raise InvalidArgumentError(f"{path}: not a stimulus manifest")
    return doc["stimuli"]
