"""Built-in invariant battery behind the `selftest` subcommand.

Runs a fixed, seeded sweep of the transform invariants and prints one
PASS/FAIL line per check.  Meant as a fast field diagnostic; the full
property suite lives in the test tree.
"""

from __future__ import annotations

import numpy as np

from . import dsp
from .augment import ipa

_SEED = 20250810
_LENGTHS = (2, 3, 16, 17, 64, 255, 256, 1024)


def _random_signals(rng: np.random.Generator):
    for n in _LENGTHS:
        yield dsp.Signal(rng.standard_normal(n), 8000)


def _relative_l2(a: np.ndarray, b: np.ndarray) -> float:
    scale = np.linalg.norm(a) or 1.0
    return float(np.linalg.norm(a - b) / scale)


def check_round_trip(rng) -> float:
    worst = 0.0
    for x in _random_signals(rng):
        theta = dsp.PhaseAngle(rng.uniform(-np.pi, np.pi))
        back = dsp.phase_shift(dsp.phase_shift(x, theta), dsp.PhaseAngle(-theta.theta))
        worst = max(worst, _relative_l2(x.samples, back.samples))
    return worst


def check_composition(rng) -> float:
    worst = 0.0
    for x in _random_signals(rng):
        t1, t2 = rng.uniform(-np.pi, np.pi, size=2)
        two_step = dsp.phase_shift(dsp.phase_shift(x, t1), t2)
        one_step = dsp.phase_shift(x, dsp.PhaseAngle(t1 + t2))
        worst = max(worst, _relative_l2(one_step.samples, two_step.samples))
    return worst


def check_magnitude_invariance(rng) -> float:
    worst = 0.0
    for x in _random_signals(rng):
        theta = rng.uniform(-np.pi, np.pi)
        before = dsp.magnitude_spectrum(x)
        after = dsp.magnitude_spectrum(dsp.phase_shift(x, theta))
        worst = max(worst, float(np.max(np.abs(before - after))))
    return worst


def check_orthogonality(rng) -> float:
    worst = 0.0
    for x in _random_signals(rng):
        h = dsp.hilbert(x)
        denom = np.linalg.norm(x.samples) * np.linalg.norm(h.samples)
        if denom == 0.0:
            continue  # length-2 buffers have an all-zero transform
        inner = np.dot(x.samples - x.samples.mean(), h.samples)
        worst = max(worst, abs(float(inner)) / denom)
    return worst


def check_involution(rng) -> float:
    worst = 0.0
    for x in _random_signals(rng):
        n = len(x)
        samples = x.samples - x.samples.mean()
        if n % 2 == 0:  # drop the Nyquist component the transform cannot carry
            spec = np.fft.fft(samples)
            spec[n // 2] = 0.0
            samples = np.fft.ifft(spec).real
        if not np.any(samples):
            continue
        y = dsp.Signal(samples, x.sample_rate)
        twice = dsp.hilbert(dsp.hilbert(y))
        worst = max(worst, float(np.max(np.abs(twice.samples + y.samples))))
    return worst


def check_polarity(rng) -> float:
    worst = 0.0
    for x in _random_signals(rng):
        n = len(x)
        samples = x.samples - x.samples.mean()
        if n % 2 == 0:
            spec = np.fft.fft(samples)
            spec[n // 2] = 0.0
            samples = np.fft.ifft(spec).real
        y = dsp.Signal(samples, x.sample_rate) if np.any(samples) else None
        if y is None:
            continue
        rotated = dsp.phase_shift(y, np.pi)
        worst = max(worst, float(np.max(np.abs(rotated.samples - ipa(y).samples))))
    return worst


def check_oracle_equivalence(rng) -> float:
    worst = 0.0
    for n in (4, 8, 9, 16):
        x = dsp.Signal(rng.standard_normal(n), 8000)
        theta = float(rng.uniform(-np.pi, np.pi))
        bins = dsp.naive_dft(x.samples)
        signs = dsp.bin_signs(n)
        rotated = [b * np.exp(1j * theta * s) for b, s in zip(bins, signs)]
        back = dsp.naive_dft(np.conj(rotated))
        expected = np.conj(back) / n
        got = dsp.phase_shift(x, theta).samples
        worst = max(worst, float(np.max(np.abs(expected.real - got))))
    return worst


CHECKS = [
    ("round trip theta/-theta", check_round_trip, 1e-9),
    ("rotation composition", check_composition, 1e-9),
    ("magnitude spectrum invariance", check_magnitude_invariance, 1e-9),
    ("hilbert orthogonality", check_orthogonality, 1e-9),
    ("hilbert involution", check_involution, 1e-9),
    ("polarity reversal equals negation", check_polarity, 1e-9),
    ("agreement with direct DFT oracle", check_oracle_equivalence, 1e-10),
]


def run_selftest(out=None, json_path=None) -> int:
    """Run all checks; returns 0 when every invariant holds."""
    import json
    import sys
    from pathlib import Path

    out = out or sys.stdout
    results = []
    for name, check, limit in CHECKS:
        worst = check(np.random.default_rng(_SEED))
        ok = bool(worst <= limit)
        results.append({"check": name, "worst": worst, "limit": limit, "pass": ok})
        out.write(f"{'PASS' if ok else 'FAIL'}  {name}: worst {worst:.3e} (limit {limit:.0e})\n")
    n_ok = sum(r["pass"] for r in results)
    out.write(f"{n_ok}/{len(CHECKS)} invariants hold\n")
    if json_path:
        Path(json_path).write_text(
            json.dumps({"checks": results, "pass": n_ok == len(CHECKS)},
                       indent=2, sort_keys=True) + "\n")
    return 0 if n_ok == len(CHECKS) else 1
