"""Frequency-independent phase shifting via the analytic signal.

All operations act on mono buffers in 64-bit floats; callers handle
multichannel audio by applying them per channel.  The discrete frequency
convention used throughout:

* bin 0 is DC,
* bins 1 .. ceil(N/2)-1 are positive frequencies,
* the Nyquist bin (k = N/2, even N only) is treated as neither positive
  nor negative,
* the remaining bins are negative frequencies.

DC and Nyquist therefore carry a zero sign and are left untouched by both
the Hilbert transform and the phase rotation; rotating the Nyquist
coefficient of a real signal would destroy the realness of the output.
"""

from __future__ import annotations

import cmath
import math
from dataclasses import dataclass, field

import numpy as np

from .errors import InvalidArgumentError

# Residual imaginary energy after an inverse FFT of a rotated real-signal
# spectrum; anything above this indicates a bug or a wildly scaled input.
_IMAG_RESIDUE_LIMIT = 1e-9

_NAIVE_DFT_MAX = 4096

_TWO_PI = 2.0 * math.pi


def _as_samples(values) -> np.ndarray:
    x = np.asarray(values, dtype=np.float64)
    if x.ndim != 1:
        raise InvalidArgumentError(f"expected a 1-D sample buffer, got shape {x.shape}")
    if x.size == 0:
        raise InvalidArgumentError("sample buffer is empty")
    if not np.all(np.isfinite(x)):
        raise InvalidArgumentError("sample buffer contains NaN or Inf")
    return x


@dataclass(frozen=True)
class Signal:
    """A real-valued sampled waveform.

    samples: 1-D float64 array, finite, non-empty.
    sample_rate: sampling frequency in Hz, > 0.
    """

    samples: np.ndarray
    sample_rate: int

    def __post_init__(self):
        object.__setattr__(self, "samples", _as_samples(self.samples))
        if int(self.sample_rate) <= 0:
            raise InvalidArgumentError(f"sample_rate must be positive, got {self.sample_rate}")
        object.__setattr__(self, "sample_rate", int(self.sample_rate))

    def __len__(self) -> int:
        return self.samples.size

    @property
    def duration_s(self) -> float:
        return self.samples.size / self.sample_rate

    def peak(self) -> float:
        return float(np.max(np.abs(self.samples)))

    def scaled(self, gain: float) -> "Signal":
        return Signal(self.samples * gain, self.sample_rate)


@dataclass(frozen=True)
class AnalyticSignal:
    """Complex signal whose real part is the source and whose imaginary part
    is the source's Hilbert transform."""

    values: np.ndarray
    sample_rate: int

    def real_signal(self) -> Signal:
        return Signal(self.values.real, self.sample_rate)


@dataclass(frozen=True)
class PhaseAngle:
    """Rotation angle in radians, canonicalized to [-pi, pi)."""

    theta: float

    def __post_init__(self):
        t = float(self.theta)
        if not math.isfinite(t):
            raise InvalidArgumentError(f"phase angle must be finite, got {self.theta}")
        object.__setattr__(self, "theta", wrap_angle(t))

    @classmethod
    def from_degrees(cls, degrees: float) -> "PhaseAngle":
        if not math.isfinite(degrees):
            raise InvalidArgumentError(f"phase angle must be finite, got {degrees}")
        return cls(math.radians(degrees))

    @property
    def degrees(self) -> float:
        return math.degrees(self.theta)


@dataclass(frozen=True)
class Spectrum:
    """DFT coefficients of a buffer, bin k holding frequency k * fs / N
    (negative above the fold)."""

    bins: np.ndarray = field(repr=False)
    sample_rate: int


def wrap_angle(theta: float) -> float:
    """Wrap a finite angle into [-pi, pi)."""
    if not math.isfinite(theta):
        raise InvalidArgumentError(f"angle must be finite, got {theta}")
    wrapped = (theta + math.pi) % _TWO_PI - math.pi
    if wrapped >= math.pi:
        # float % rounds (theta + pi) % 2pi up to exactly 2pi for inputs a
        # hair below the fold point; keep the interval half-open
        wrapped = -math.pi
    return wrapped


def signum(omega: float) -> int:
    """Sign of a frequency: 1 for positive, 0 for zero, -1 for negative."""
    if not math.isfinite(omega):
        raise InvalidArgumentError(f"signum expects a finite value, got {omega}")
    if omega > 0:
        return 1
    if omega < 0:
        return -1
    return 0


def bin_signs(n: int) -> np.ndarray:
    """Per-bin frequency sign for a length-n DFT (0 at DC and Nyquist)."""
    if n < 1:
        raise InvalidArgumentError("DFT length must be at least 1")
    signs = np.zeros(n)
    half = (n + 1) // 2
    signs[1:half] = 1.0
    if n % 2 == 0:
        signs[half + 1:] = -1.0
    else:
        signs[half:] = -1.0
    return signs


def _check_transform_input(x: Signal) -> np.ndarray:
    if len(x) < 2:
        raise InvalidArgumentError("transform needs at least 2 samples")
    return x.samples


def _real_part(values: np.ndarray, what: str) -> np.ndarray:
    residue = float(np.max(np.abs(values.imag)))
    if residue > _IMAG_RESIDUE_LIMIT:
        raise InvalidArgumentError(
            f"{what} produced imaginary residue {residue:.3e}; "
            "input is not a sane real signal"
        )
    return np.ascontiguousarray(values.real)


def spectrum(x: Signal) -> Spectrum:
    """DFT of the whole buffer (no windowing, no padding)."""
    samples = _check_transform_input(x)
    return Spectrum(np.fft.fft(samples), x.sample_rate)


def magnitude_spectrum(x: Signal) -> np.ndarray:
    """|DFT(x)[k]| for k = 0 .. N-1."""
    samples = _check_transform_input(x)
    return np.abs(np.fft.fft(samples))


def hilbert(x: Signal) -> Signal:
    """Hilbert transform: -90 degrees to positive frequencies, +90 to negative.

    Each DFT bin is multiplied by -i * sign(freq); DC and Nyquist carry sign 0
    and are zeroed.  Magnitude spectrum is preserved on all other bins.
    """
    samples = _check_transform_input(x)
    n = samples.size
    transformed = np.fft.ifft(np.fft.fft(samples) * (-1j * bin_signs(n)))
    return Signal(_real_part(transformed, "hilbert"), x.sample_rate)


def analytic(x: Signal) -> AnalyticSignal:
    """Analytic representation x + i * hilbert(x).

    The real part of the result is the input buffer, bit for bit.
    """
    h = hilbert(x)
    return AnalyticSignal(x.samples + 1j * h.samples, x.sample_rate)


def phase_shift(x: Signal, theta: PhaseAngle | float) -> Signal:
    """Rotate every frequency component by a constant angle.

    Positive-frequency bins are multiplied by e^{i*theta}, negative ones by
    e^{-i*theta}; DC and Nyquist stay untouched so the output is real.  The
    magnitude spectrum is unchanged.  Equivalent, for zero-mean signals, to
    Re(analytic(x) * e^{i*theta}).
    """
    if not isinstance(theta, PhaseAngle):
        theta = PhaseAngle(theta)
    samples = _check_transform_input(x)
    n = samples.size
    rotation = np.exp(1j * theta.theta * bin_signs(n))
    rotated = np.fft.ifft(np.fft.fft(samples) * rotation)
    return Signal(_real_part(rotated, "phase_shift"), x.sample_rate)


def naive_dft(values) -> list[complex]:
    """Direct O(N^2) DFT, kept deliberately free of any FFT code path.

    Testing oracle for small buffers; bounded to N <= 4096.
    """
    data = [complex(v) for v in values]
    n = len(data)
    if n == 0:
        raise InvalidArgumentError("naive_dft needs at least one sample")
    if n > _NAIVE_DFT_MAX:
        raise InvalidArgumentError(f"naive_dft is limited to N <= {_NAIVE_DFT_MAX}, got {n}")
    for v in data:
        if not (math.isfinite(v.real) and math.isfinite(v.imag)):
            raise InvalidArgumentError("naive_dft input contains NaN or Inf")
    out = []
    for k in range(n):
        acc = 0j
        for m, v in enumerate(data):
            acc += v * cmath.exp(-2j * math.pi * k * m / n)
        out.append(acc)
    return out
