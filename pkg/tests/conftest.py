from pathlib import Path

import numpy as np
import pytest

from phasekit.dsp import Signal
from phasekit.wavio import FLOAT32, Recording, write_wav

FIXTURES = Path(__file__).parent / "fixtures"


@pytest.fixture
def rng():
    return np.random.default_rng(1234)


def sine(freq: float, duration_s: float, fs: int, amplitude: float = 0.5) -> Signal:
    n = np.arange(int(round(duration_s * fs)))
    return Signal(amplitude * np.sin(2 * np.pi * freq * n / fs), fs)


@pytest.fixture(scope="session")
def responses_csv() -> Path:
    return FIXTURES / "responses_demo.csv"


def synthesize_source(kind: str, seed: int, fs: int = 8000, duration_s: float = 5.0) -> Signal:
    """Deterministic pseudo-music/speech/noise source material."""
    rng = np.random.default_rng(seed)
    n = np.arange(int(duration_s * fs))
    t = n / fs
    if kind == "music":
        freqs = rng.uniform(100, 900, size=4)
        x = sum(np.sin(2 * np.pi * f * t + rng.uniform(0, 2 * np.pi)) / 4 for f in freqs)
        x *= 0.5 + 0.5 * np.sin(2 * np.pi * 0.7 * t) ** 2
    elif kind == "speech":
        carrier = np.sin(2 * np.pi * rng.uniform(120, 240) * t)
        envelope = np.clip(np.sin(2 * np.pi * 3.1 * t + rng.uniform(0, 6)), 0, None)
        x = carrier * envelope
    else:
        x = rng.standard_normal(n.size)
        x = np.convolve(x, np.ones(8) / 8, mode="same")
    x = 0.6 * x / np.max(np.abs(x))
    return Signal(x, fs)


@pytest.fixture(scope="session")
def recordings_dir(tmp_path_factory) -> Path:
    """A small tree of source WAVs: category subdirs with two files each."""
    root = tmp_path_factory.mktemp("recordings")
    for k, kind in enumerate(("music", "speech", "other")):
        sub = root / kind
        sub.mkdir()
        for i in range(2):
            x = synthesize_source(kind, seed=1000 * (k + 1) + i)
            write_wav(sub / f"{kind}{i}.wav", Recording((x,), x.sample_rate, "synth", FLOAT32))
    return root
