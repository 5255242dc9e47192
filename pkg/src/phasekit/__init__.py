"""phasekit: frequency-independent phase shifting for audio.

Library layout:

  dsp       signum / Hilbert transform / analytic signal / phase rotation
  wavio     RIFF/WAVE reading and writing (PCM16, PCM24, float32)
  stimuli   excerpt sampling, fades, pair normalization, demo generators
  augment   seeded on-the-fly rotation augmentation for training loops
  analysis  Beta-Bernoulli posterior, t-tests, per-question trend
  report    figures and summary tables for analysis runs
  service   A/B forced-choice HTTP service with an append-only event log
  cli       the `phasekit` command
"""

__version__ = "0.1.0"

from .dsp import (  # noqa: F401
    AnalyticSignal,
    PhaseAngle,
    Signal,
    Spectrum,
    analytic,
    hilbert,
    magnitude_spectrum,
    naive_dft,
    phase_shift,
    signum,
    wrap_angle,
)
