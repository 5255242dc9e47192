"""RIFF/WAVE reading and writing.

Reads PCM16, PCM24 and IEEE float32/float64 (plain or
WAVE_FORMAT_EXTENSIBLE), writes PCM16, float32 and float64.  Integer
samples are scaled by 1 / 2^(bits-1), so PCM16 full scale maps to
[-1.0, 32767/32768].  All samples are float64 in memory regardless of the
on-disk format; float64 files exist so multi-stage file pipelines can stay
lossless.
"""

from __future__ import annotations

import io
import struct
from dataclasses import dataclass
from pathlib import Path

import numpy as np

from .dsp import Signal
from .errors import ClippingError, InvalidArgumentError, UnsupportedCodecError, WavFormatError

PCM16 = "PCM16"
PCM24 = "PCM24"
FLOAT32 = "FLOAT32"
FLOAT64 = "FLOAT64"

_FMT_PCM = 0x0001
_FMT_IEEE_FLOAT = 0x0003
_FMT_EXTENSIBLE = 0xFFFE

# First two bytes of the SubFormat GUID carry the effective format tag.
_KSDATAFORMAT_SUFFIX = bytes.fromhex("000000001000800000aa00389b71")


@dataclass(frozen=True)
class Recording:
    """Decoded WAV file: per-channel Signals plus source metadata."""

    channels: tuple[Signal, ...]
    sample_rate: int
    source_path: str
    bit_depth_in: str

    def __post_init__(self):
        if not self.channels:
            raise InvalidArgumentError("a recording needs at least one channel")
        lengths = {len(c) for c in self.channels}
        rates = {c.sample_rate for c in self.channels}
        if len(lengths) != 1 or len(rates) != 1:
            raise InvalidArgumentError("all channels must share length and sample rate")

    def __len__(self) -> int:
        return len(self.channels[0])

    @property
    def n_channels(self) -> int:
        return len(self.channels)

    @property
    def duration_s(self) -> float:
        return len(self) / self.sample_rate

    def mono(self) -> Signal:
        """Mix down by channel mean (identity for mono input)."""
        if len(self.channels) == 1:
            return self.channels[0]
        stacked = np.stack([c.samples for c in self.channels])
        return Signal(stacked.mean(axis=0), self.sample_rate)


def _read_exact(fh, n: int, what: str, offset_hint: int = 0) -> bytes:
    data = fh.read(n)
    if len(data) != n:
        raise WavFormatError(f"truncated file while reading {what} (at byte ~{offset_hint})")
    return data


def _parse_fmt(chunk: bytes) -> tuple[int, int, int, int]:
    if len(chunk) < 16:
        raise WavFormatError("fmt chunk shorter than 16 bytes")
    tag, n_channels, sample_rate, _byte_rate, _block_align, bits = struct.unpack(
        "<HHIIHH", chunk[:16]
    )
    if tag == _FMT_EXTENSIBLE:
        if len(chunk) < 40:
            raise WavFormatError("extensible fmt chunk shorter than 40 bytes")
        sub_format = chunk[24:40]
        if sub_format[2:] != _KSDATAFORMAT_SUFFIX:
            raise UnsupportedCodecError("unrecognized extensible sub-format GUID")
        tag = struct.unpack("<H", sub_format[:2])[0]
    return tag, n_channels, sample_rate, bits


def _decode_frames(raw: bytes, tag: int, bits: int, n_channels: int) -> tuple[np.ndarray, str]:
    if tag == _FMT_PCM and bits == 16:
        flat = np.frombuffer(raw[: len(raw) - len(raw) % 2], dtype="<i2").astype(np.float64)
        flat /= 2.0**15
        depth = PCM16
    elif tag == _FMT_PCM and bits == 24:
        usable = len(raw) - len(raw) % 3
        b = np.frombuffer(raw[:usable], dtype=np.uint8).reshape(-1, 3).astype(np.int32)
        ints = b[:, 0] | (b[:, 1] << 8) | (b[:, 2] << 16)
        ints -= (ints & 0x800000) << 1  # sign-extend 24 -> 32 bits
        flat = ints.astype(np.float64) / 2.0**23
        depth = PCM24
    elif tag == _FMT_IEEE_FLOAT and bits == 32:
        flat = np.frombuffer(raw[: len(raw) - len(raw) % 4], dtype="<f4").astype(np.float64)
        depth = FLOAT32
    elif tag == _FMT_IEEE_FLOAT and bits == 64:
        flat = np.frombuffer(raw[: len(raw) - len(raw) % 8], dtype="<f8").copy()
        depth = FLOAT64
    elif tag in (_FMT_PCM, _FMT_IEEE_FLOAT):
        raise UnsupportedCodecError(f"unsupported sample width: {bits}-bit (format tag {tag})")
    else:
        raise UnsupportedCodecError(f"unsupported WAV format tag 0x{tag:04x}")
    n_frames = flat.size // n_channels
    return flat[: n_frames * n_channels].reshape(n_frames, n_channels), depth


def read_wav_stream(fh, source_path: str = "<stream>") -> Recording:
    """Decode a WAV file from a binary file-like object."""
    header = fh.read(12)
    if len(header) < 12 or header[:4] != b"RIFF" or header[8:12] != b"WAVE":
        raise WavFormatError(f"{source_path}: not a RIFF/WAVE file")

    fmt_fields = None
    data = None
    pos = 12
    while True:
        chunk_header = fh.read(8)
        if len(chunk_header) == 0:
            break
        if len(chunk_header) < 8:
            raise WavFormatError(f"{source_path}: truncated chunk header at byte {pos}")
        chunk_id, size = struct.unpack("<4sI", chunk_header)
        pos += 8
        if chunk_id == b"fmt ":
            fmt_fields = _parse_fmt(_read_exact(fh, size, "fmt chunk", pos))
        elif chunk_id == b"data":
            data = _read_exact(fh, size, "data chunk", pos)
        else:
            _read_exact(fh, size, f"chunk {chunk_id!r}", pos)
        pos += size
        if size % 2:  # chunks are word-aligned
            fh.read(1)
            pos += 1
        if fmt_fields is not None and data is not None:
            break

    if fmt_fields is None:
        raise WavFormatError(f"{source_path}: missing fmt chunk")
    if data is None:
        raise WavFormatError(f"{source_path}: missing data chunk")

    tag, n_channels, sample_rate, bits = fmt_fields
    if n_channels < 1:
        raise WavFormatError(f"{source_path}: fmt chunk declares zero channels")
    if sample_rate < 1:
        raise WavFormatError(f"{source_path}: fmt chunk declares zero sample rate")
    frames, depth = _decode_frames(data, tag, bits, n_channels)
    if frames.shape[0] == 0:
        raise WavFormatError(f"{source_path}: data chunk holds no complete frame")
    channels = tuple(Signal(frames[:, c], sample_rate) for c in range(n_channels))
    return Recording(channels, sample_rate, source_path, depth)


def read_wav(path: str | Path) -> Recording:
    path = Path(path)
    if not path.exists():
        raise FileNotFoundError(f"no such file: {path}")
    with path.open("rb") as fh:
        return read_wav_stream(fh, str(path))


def _encode_frames(frames: np.ndarray, fmt: str) -> tuple[bytes, int, int]:
    """Returns (payload, format_tag, bits_per_sample)."""
    if fmt == PCM16:
        peak = float(np.max(np.abs(frames))) if frames.size else 0.0
        if peak > 1.0:
            raise ClippingError(
                f"peak amplitude {peak:.6f} exceeds 1.0; rescale before writing PCM16"
            )
        ints = np.clip(np.round(frames * 2.0**15), -(2**15), 2**15 - 1).astype("<i2")
        return ints.tobytes(), _FMT_PCM, 16
    if fmt == FLOAT32:
        return frames.astype("<f4").tobytes(), _FMT_IEEE_FLOAT, 32
    if fmt == FLOAT64:
        return frames.astype("<f8").tobytes(), _FMT_IEEE_FLOAT, 64
    raise InvalidArgumentError(
        f"unsupported output format {fmt!r} (use PCM16, FLOAT32 or FLOAT64)"
    )


def write_wav_stream(fh, recording: Recording, fmt: str = FLOAT32) -> None:
    frames = np.stack([c.samples for c in recording.channels], axis=1)
    payload, tag, bits = _encode_frames(frames, fmt)
    n_channels = recording.n_channels
    block_align = n_channels * bits // 8
    byte_rate = recording.sample_rate * block_align

    body = io.BytesIO()
    body.write(b"WAVE")
    body.write(struct.pack("<4sIHHIIHH", b"fmt ", 16, tag, n_channels,
                           recording.sample_rate, byte_rate, block_align, bits))
    if tag != _FMT_PCM:
        body.write(struct.pack("<4sII", b"fact", 4, frames.shape[0]))
    body.write(struct.pack("<4sI", b"data", len(payload)))
    body.write(payload)
    if len(payload) % 2:
        body.write(b"\x00")

    blob = body.getvalue()
    fh.write(struct.pack("<4sI", b"RIFF", len(blob)))
    fh.write(blob)


def write_wav(path: str | Path, recording: Recording, fmt: str = FLOAT32) -> None:
    with Path(path).open("wb") as fh:
        write_wav_stream(fh, recording, fmt)


def recording_from_signal(x: Signal, source_path: str = "<memory>") -> Recording:
    return Recording((x,), x.sample_rate, source_path, FLOAT32)
