import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from phasekit.dsp import (
    AnalyticSignal,
    PhaseAngle,
    Signal,
    analytic,
    bin_signs,
    hilbert,
    magnitude_spectrum,
    naive_dft,
    phase_shift,
    signum,
    spectrum,
    wrap_angle,
)
from phasekit.errors import InvalidArgumentError


# ---------------------------------------------------------------------------
# Brute-force oracle: direct evaluation of the spectral rules bin by bin,
# built only on naive_dft (no FFT anywhere on this path).
# ---------------------------------------------------------------------------

def naive_idft(bins):
    """Inverse DFT via the conjugation identity, still O(N^2)."""
    n = len(bins)
    forward = naive_dft([b.conjugate() for b in bins])
    return [v.conjugate() / n for v in forward]


def oracle_hilbert(samples):
    n = len(samples)
    signs = bin_signs(n)
    bins = naive_dft(samples)
    rotated = [-1j * s * b for s, b in zip(signs, bins)]
    return np.array([v.real for v in naive_idft(rotated)])


def oracle_phase_shift(samples, theta):
    n = len(samples)
    signs = bin_signs(n)
    bins = naive_dft(samples)
    rotated = [b * np.exp(1j * theta * s) for s, b in zip(signs, bins)]
    return np.array([v.real for v in naive_idft(rotated)])


class TestNaiveDft:
    def test_impulse(self):
        assert naive_dft([1, 0, 0, 0]) == pytest.approx([1, 1, 1, 1])

    def test_constant(self):
        out = naive_dft([1, 1, 1, 1])
        assert out[0] == pytest.approx(4)
        assert np.allclose(out[1:], 0, atol=1e-12)

    def test_hand_evaluated_sine_period_4(self):
        out = naive_dft([0, 1, 0, -1])
        expected = [0, -2j, 0, 2j]
        assert np.allclose(out, expected, atol=1e-12)

    def test_oracle_inverse_round_trip(self):
        data = [0.3, -1.2, 0.5, 2.0, -0.7]
        assert np.allclose(naive_idft(naive_dft(data)), data, atol=1e-12)

    def test_oracle_hilbert_of_period_4_sine_is_minus_cos(self):
        # H(sin) = -cos at the quarter-period grid: [0,1,0,-1] -> [-1,0,1,0]
        assert np.allclose(oracle_hilbert([0, 1, 0, -1]), [-1, 0, 1, 0], atol=1e-12)

    def test_empty_rejected(self):
        with pytest.raises(InvalidArgumentError):
            naive_dft([])

    def test_oversize_rejected(self):
        with pytest.raises(InvalidArgumentError):
            naive_dft(np.zeros(4097))

    def test_non_finite_rejected(self):
        with pytest.raises(InvalidArgumentError):
            naive_dft([1.0, float("nan")])


class TestSignum:
    @pytest.mark.parametrize("value,expected", [(440.0, 1), (0.0, 0), (-3.2, -1),
                                                (1e-300, 1), (-0.0, 0)])
    def test_values(self, value, expected):
        assert signum(value) == expected

    @pytest.mark.parametrize("bad", [float("nan"), float("inf"), float("-inf")])
    def test_non_finite_rejected(self, bad):
        with pytest.raises(InvalidArgumentError):
            signum(bad)


class TestPhaseAngle:
    @pytest.mark.parametrize("raw,expected", [
        (0.0, 0.0),
        (math.pi, -math.pi),          # pi folds onto -pi
        (-math.pi, -math.pi),
        (3 * math.pi, -math.pi),
        (2 * math.pi, 0.0),
        (0.6, 0.6),
        (-4.0, -4.0 + 2 * math.pi),
    ])
    def test_wrapping(self, raw, expected):
        assert PhaseAngle(raw).theta == pytest.approx(expected, abs=1e-12)

    def test_range_always_half_open(self):
        rng = np.random.default_rng(7)
        for value in rng.uniform(-50, 50, size=500):
            theta = wrap_angle(float(value))
            assert -math.pi <= theta < math.pi

    def test_range_holds_at_fold_boundary(self):
        # inputs a few ulps below -pi round through the % fold onto 2*pi
        for k in range(1, 64):
            value = -math.pi - k * 2**-52
            theta = wrap_angle(value)
            assert -math.pi <= theta < math.pi, (value, theta)
        assert wrap_angle(math.nextafter(-math.pi, -math.inf)) == -math.pi

    def test_from_degrees(self):
        assert PhaseAngle.from_degrees(400).degrees == pytest.approx(40.0)
        assert PhaseAngle.from_degrees(90).theta == pytest.approx(math.pi / 2)

    def test_non_finite_rejected(self):
        with pytest.raises(InvalidArgumentError):
            PhaseAngle(float("inf"))


class TestSignalValidation:
    def test_empty_rejected(self):
        with pytest.raises(InvalidArgumentError):
            Signal(np.array([]), 8000)

    def test_nan_rejected(self):
        with pytest.raises(InvalidArgumentError):
            Signal(np.array([0.0, np.nan]), 8000)

    def test_bad_rate_rejected(self):
        with pytest.raises(InvalidArgumentError):
            Signal(np.zeros(4), 0)

    def test_single_sample_rejected_by_transforms(self):
        x = Signal(np.array([1.0]), 8000)
        for op in (hilbert, magnitude_spectrum):
            with pytest.raises(InvalidArgumentError):
                op(x)
        with pytest.raises(InvalidArgumentError):
            phase_shift(x, 0.3)

    def test_float64_coercion(self):
        x = Signal(np.array([1, 2, 3], dtype=np.int16), 8000)
        assert x.samples.dtype == np.float64


def _tone(n, cycles, fs=8000, phase=0.0, amplitude=1.0):
    k = np.arange(n)
    return Signal(amplitude * np.cos(2 * np.pi * cycles * k / n + phase), fs)


class TestHilbert:
    def test_cosine_becomes_sine(self):
        n, cycles = 1024, 32
        x = _tone(n, cycles)
        expected = np.sin(2 * np.pi * cycles * np.arange(n) / n)
        assert np.max(np.abs(hilbert(x).samples - expected)) <= 1e-9

    def test_zero_stays_zero(self):
        out = hilbert(Signal(np.zeros(64), 8000))
        assert np.array_equal(out.samples, np.zeros(64))

    def test_matches_oracle_length_16(self, rng):
        x = Signal(rng.standard_normal(16), 8000)
        assert np.max(np.abs(hilbert(x).samples - oracle_hilbert(x.samples))) <= 1e-10

    def test_matches_oracle_odd_length(self, rng):
        x = Signal(rng.standard_normal(15), 8000)
        assert np.max(np.abs(hilbert(x).samples - oracle_hilbert(x.samples))) <= 1e-10

    def test_preserves_rate_and_length(self, rng):
        x = Signal(rng.standard_normal(100), 44100)
        out = hilbert(x)
        assert len(out) == 100 and out.sample_rate == 44100


class TestAnalytic:
    def test_cosine_gives_complex_exponential(self):
        n, cycles = 256, 8
        x = _tone(n, cycles)
        expected = np.exp(1j * 2 * np.pi * cycles * np.arange(n) / n)
        assert np.max(np.abs(analytic(x).values - expected)) <= 1e-9

    def test_zero_signal(self):
        out = analytic(Signal(np.zeros(32), 8000))
        assert np.array_equal(out.values, np.zeros(32, dtype=complex))

    def test_real_part_is_bitwise_passthrough(self, rng):
        x = Signal(rng.standard_normal(64), 8000)
        out = analytic(x)
        assert isinstance(out, AnalyticSignal)
        assert np.array_equal(out.values.real, x.samples)

    def test_imag_part_is_hilbert(self, rng):
        x = Signal(rng.standard_normal(64), 8000)
        assert np.array_equal(analytic(x).values.imag, hilbert(x).samples)


class TestPhaseShift:
    def test_sine_ground_truth(self):
        fs, freq, phi = 8000, 250, 1.1  # 250 cycles in one second: bin-aligned
        k = np.arange(fs)
        x = Signal(np.sin(2 * np.pi * freq * k / fs), fs)
        shifted = phase_shift(x, phi)
        expected = np.sin(2 * np.pi * freq * k / fs + phi)
        assert np.max(np.abs(shifted.samples - expected)[2:-2]) <= 1e-9

    def test_zero_angle_is_identity(self, rng):
        x = Signal(rng.standard_normal(200), 8000)
        assert np.max(np.abs(phase_shift(x, 0.0).samples - x.samples)) <= 1e-12

    def test_pi_is_polarity_reversal_for_zero_mean(self, rng):
        samples = rng.standard_normal(201)  # odd length: no Nyquist bin
        samples -= samples.mean()
        x = Signal(samples, 8000)
        assert np.max(np.abs(phase_shift(x, math.pi).samples + x.samples)) <= 1e-9

    def test_matches_oracle(self, rng):
        x = Signal(rng.standard_normal(16), 8000)
        got = phase_shift(x, 0.7).samples
        assert np.max(np.abs(got - oracle_phase_shift(x.samples, 0.7))) <= 1e-10

    def test_dc_and_nyquist_untouched(self):
        # constant + alternating signal lives entirely in DC and Nyquist
        samples = 0.5 + 0.25 * np.array([1.0, -1.0] * 8)
        x = Signal(samples, 8000)
        out = phase_shift(x, 2.0)
        assert np.max(np.abs(out.samples - samples)) <= 1e-12

    def test_accepts_raw_float_theta(self, rng):
        x = Signal(rng.standard_normal(32), 8000)
        a = phase_shift(x, PhaseAngle(1.0)).samples
        b = phase_shift(x, 1.0).samples
        assert np.array_equal(a, b)


class TestMagnitudeSpectrum:
    def test_impulse_is_flat(self):
        x = Signal(np.array([1.0] + [0.0] * 7), 8000)
        assert np.allclose(magnitude_spectrum(x), np.ones(8), atol=1e-12)

    def test_sine_concentrates_at_two_bins(self):
        n, k0 = 64, 5
        x = Signal(np.sin(2 * np.pi * k0 * np.arange(n) / n), 8000)
        mags = magnitude_spectrum(x)
        assert mags[k0] == pytest.approx(n / 2, abs=1e-9)
        assert mags[n - k0] == pytest.approx(n / 2, abs=1e-9)
        rest = np.delete(mags, [k0, n - k0])
        assert np.max(rest) <= 1e-9

    def test_invariant_under_rotation(self, rng):
        x = Signal(rng.standard_normal(128), 8000)
        for theta in (-2.5, 0.3, 3.0):
            before = magnitude_spectrum(x)
            after = magnitude_spectrum(phase_shift(x, theta))
            assert np.max(np.abs(before - after)) <= 1e-9


class TestSpectrum:
    def test_conjugate_symmetry_for_real_input(self, rng):
        for n in (16, 17):
            x = Signal(rng.standard_normal(n), 8000)
            bins = spectrum(x).bins
            for k in range(n):
                assert bins[k] == pytest.approx(np.conj(bins[(n - k) % n]), abs=1e-9)


# ---------------------------------------------------------------------------
# Property-based invariants
# ---------------------------------------------------------------------------

finite_samples = st.lists(
    st.floats(min_value=-1.0, max_value=1.0, allow_nan=False, allow_infinity=False),
    min_size=2, max_size=256,
)
angles = st.floats(min_value=-math.pi, max_value=math.pi - 1e-9)


def _zero_mean_zero_nyquist(samples: np.ndarray) -> np.ndarray:
    out = samples - samples.mean()
    if out.size % 2 == 0:
        bins = np.fft.fft(out)
        bins[out.size // 2] = 0.0
        out = np.fft.ifft(bins).real
    return out


class TestProperties:
    @given(finite_samples, angles)
    @settings(max_examples=100, deadline=None)
    def test_round_trip(self, samples, theta):
        x = Signal(np.asarray(samples), 8000)
        back = phase_shift(phase_shift(x, theta), -theta)
        scale = np.linalg.norm(x.samples) or 1.0
        assert np.linalg.norm(back.samples - x.samples) / scale <= 1e-9

    @given(finite_samples, angles, angles)
    @settings(max_examples=100, deadline=None)
    def test_composition(self, samples, t1, t2):
        x = Signal(np.asarray(samples), 8000)
        two = phase_shift(phase_shift(x, t1), t2)
        one = phase_shift(x, wrap_angle(t1 + t2))
        scale = np.linalg.norm(x.samples) or 1.0
        assert np.linalg.norm(two.samples - one.samples) / scale <= 1e-9

    @given(finite_samples, angles)
    @settings(max_examples=100, deadline=None)
    def test_magnitude_invariance(self, samples, theta):
        x = Signal(np.asarray(samples), 8000)
        diff = magnitude_spectrum(phase_shift(x, theta)) - magnitude_spectrum(x)
        assert np.max(np.abs(diff)) <= 1e-9

    @given(finite_samples)
    @settings(max_examples=100, deadline=None)
    def test_orthogonality(self, samples):
        x = Signal(np.asarray(samples), 8000)
        h = hilbert(x).samples
        denom = np.linalg.norm(x.samples) * np.linalg.norm(h)
        if denom == 0.0:
            return
        inner = np.dot(x.samples - x.samples.mean(), h)
        assert abs(inner) / denom <= 1e-9

    @given(finite_samples)
    @settings(max_examples=100, deadline=None)
    def test_involution(self, samples):
        projected = _zero_mean_zero_nyquist(np.asarray(samples))
        if not np.any(projected):
            return
        x = Signal(projected, 8000)
        twice = hilbert(hilbert(x)).samples
        assert np.max(np.abs(twice + x.samples)) <= 1e-9

    @given(finite_samples,
           st.floats(min_value=-3, max_value=3, allow_nan=False),
           st.floats(min_value=-3, max_value=3, allow_nan=False))
    @settings(max_examples=100, deadline=None)
    def test_linearity(self, samples, a, b):
        x = np.asarray(samples)
        y = np.roll(x, max(1, len(x) // 3))
        combined = hilbert(Signal(a * x + b * y, 8000)).samples
        separate = a * hilbert(Signal(x, 8000)).samples + b * hilbert(Signal(y, 8000)).samples
        assert np.max(np.abs(combined - separate)) <= 1e-9

    @given(st.integers(min_value=2, max_value=48), angles)
    @settings(max_examples=60, deadline=None)
    def test_oracle_equivalence_small_n(self, n, theta):
        rng = np.random.default_rng(n * 1000 + 17)
        x = Signal(rng.standard_normal(n), 8000)
        assert np.max(np.abs(hilbert(x).samples - oracle_hilbert(x.samples))) <= 1e-10
        got = phase_shift(x, theta).samples
        assert np.max(np.abs(got - oracle_phase_shift(x.samples, theta))) <= 1e-10
