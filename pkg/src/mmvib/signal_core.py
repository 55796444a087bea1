"""Shared time-frequency primitives: framing, STFT, mel filterbanks, normalization, unwrapping."""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

# HTK mel scale constants.
MEL_SCALE = 2595.0
MEL_BREAK_HZ = 700.0

# Multi-resolution log-mel family used by the spectral loss: one filterbank
# per (band count, window) pair, hop fixed at window / 4.
MEL_LOSS_BANDS = (5, 10, 20, 40, 80, 160, 320)
MEL_LOSS_WINDOWS = (32, 64, 128, 256, 512, 1024, 2048)


def hz_to_mel(freq_hz):
    """Convert frequency in Hz to mels."""
    return MEL_SCALE * np.log10(1.0 + np.asarray(freq_hz, dtype=float) / MEL_BREAK_HZ)


def mel_to_hz(mels):
    """Convert mels back to frequency in Hz."""
    return MEL_BREAK_HZ * (10.0 ** (np.asarray(mels, dtype=float) / MEL_SCALE) - 1.0)


@dataclass
class AudioBuffer:
    """Mono audio: 1-D float64 samples plus a sampling rate in Hz."""

    samples: np.ndarray
    sample_rate: float

    def __post_init__(self) -> None:
        self.samples = np.asarray(self.samples, dtype=np.float64)
        if self.samples.ndim != 1:
            raise ValueError(f"samples must be 1-D, got shape {self.samples.shape}")
        if not np.isfinite(self.sample_rate) or self.sample_rate <= 0:
            raise ValueError(f"sample_rate must be positive, got {self.sample_rate}")
        if self.samples.size and not np.all(np.isfinite(self.samples)):
            raise ValueError("samples contain non-finite values")

    def __len__(self) -> int:
        return self.samples.size

    @property
    def duration(self) -> float:
        return self.samples.size / self.sample_rate


@dataclass
class Spectrogram:
    """STFT output: values laid out [freq_bins, time_frames]."""

    values: np.ndarray
    window_len: int
    hop: int
    sample_rate: float

    def __post_init__(self) -> None:
        self.values = np.asarray(self.values)
        if self.values.ndim != 2:
            raise ValueError(f"values must be 2-D, got shape {self.values.shape}")
        expected = self.window_len // 2 + 1
        if self.values.shape[0] != expected:
            raise ValueError(
                f"freq_bins {self.values.shape[0]} inconsistent with window_len "
                f"{self.window_len} (expected {expected})"
            )
        if self.hop < 1:
            raise ValueError(f"hop must be >= 1, got {self.hop}")
        if not np.isrealobj(self.values):
            return
        if self.values.size and (np.any(self.values < 0) or not np.all(np.isfinite(self.values))):
            raise ValueError("magnitude spectrogram must be finite and non-negative")

    @property
    def freq_bins(self) -> int:
        return self.values.shape[0]

    @property
    def time_frames(self) -> int:
        return self.values.shape[1]

    def magnitude(self) -> "Spectrogram":
        """Return the magnitude form of this spectrogram."""
        return Spectrogram(np.abs(self.values), self.window_len, self.hop, self.sample_rate)


@dataclass
class MelConfig:
    """Mel filterbank analysis settings."""

    n_mels: int
    window_len: int
    hop: int
    fmin: float = 0.0
    fmax: float | None = None

    def __post_init__(self) -> None:
        if self.n_mels < 1:
            raise ValueError(f"n_mels must be >= 1, got {self.n_mels}")
        if self.window_len < 2:
            raise ValueError(f"window_len must be >= 2, got {self.window_len}")
        if self.hop < 1:
            raise ValueError(f"hop must be >= 1, got {self.hop}")
        if self.fmin < 0:
            raise ValueError(f"fmin must be >= 0, got {self.fmin}")
        if self.fmax is not None and self.fmax <= self.fmin:
            raise ValueError(f"fmax {self.fmax} must exceed fmin {self.fmin}")

    @classmethod
    def default(cls, n_mels: int, window_len: int) -> "MelConfig":
        """Build a config with the standard hop of a quarter window."""
        return cls(n_mels=n_mels, window_len=window_len, hop=max(1, window_len // 4))


def mel_loss_configs() -> tuple[MelConfig, ...]:
    """The fixed multi-resolution family used by the spectral loss."""
    return tuple(
        MelConfig.default(n, w) for n, w in zip(MEL_LOSS_BANDS, MEL_LOSS_WINDOWS)
    )


def hann_window(window_len: int) -> np.ndarray:
    """Periodic Hann window."""
    n = np.arange(window_len)
    return 0.5 - 0.5 * np.cos(2.0 * np.pi * n / window_len)


def frame_signal(x: np.ndarray, window_len: int, hop: int) -> np.ndarray:
    """Slice x into [n_frames, window_len] rows; trailing partial samples are dropped."""
    x = np.asarray(x, dtype=np.float64)
    if x.ndim != 1:
        raise ValueError(f"expected 1-D signal, got shape {x.shape}")
    if window_len < 1 or hop < 1:
        raise ValueError("window_len and hop must be >= 1")
    if x.size < window_len:
        raise ValueError("input too short")
    n_frames = (x.size - window_len) // hop + 1
    idx = np.arange(window_len)[None, :] + hop * np.arange(n_frames)[:, None]
    return x[idx]


def stft(audio: AudioBuffer, window_len: int, hop: int) -> Spectrogram:
    """Short-time Fourier transform with a periodic Hann window.

    Frames are laid at multiples of hop with no padding, so
    time_frames = floor((len - window_len) / hop) + 1.
    """
    frames = frame_signal(audio.samples, window_len, hop)
    windowed = frames * hann_window(window_len)[None, :]
    spec = np.fft.rfft(windowed, axis=1).T
    return Spectrogram(spec, window_len, hop, audio.sample_rate)


def mel_filterbank(
    n_mels: int,
    window_len: int,
    sample_rate: float,
    fmin: float = 0.0,
    fmax: float | None = None,
) -> np.ndarray:
    """Triangular mel filterbank, [n_mels, window_len // 2 + 1], peak weight 1."""
    if fmax is None:
        fmax = sample_rate / 2.0
    n_bins = window_len // 2 + 1
    if n_mels > n_bins:
        raise ValueError("over-resolved filterbank")
    if not 0 <= fmin < fmax <= sample_rate / 2.0 + 1e-9:
        raise ValueError(
            f"band edges must satisfy 0 <= fmin < fmax <= nyquist, got [{fmin}, {fmax}]"
        )
    mel_pts = np.linspace(hz_to_mel(fmin), hz_to_mel(fmax), n_mels + 2)
    hz_pts = mel_to_hz(mel_pts)
    freqs = np.arange(n_bins) * (sample_rate / window_len)
    lo = hz_pts[:-2, None]
    ctr = hz_pts[1:-1, None]
    hi = hz_pts[2:, None]
    rise = (freqs[None, :] - lo) / np.maximum(ctr - lo, 1e-12)
    fall = (hi - freqs[None, :]) / np.maximum(hi - ctr, 1e-12)
    return np.clip(np.minimum(rise, fall), 0.0, None)


def mel_spectrogram(audio: AudioBuffer, cfg: MelConfig) -> np.ndarray:
    """Mel-band magnitude spectrogram, [n_mels, time_frames]."""
    spec = stft(audio, cfg.window_len, cfg.hop)
    bank = mel_filterbank(cfg.n_mels, cfg.window_len, audio.sample_rate, cfg.fmin, cfg.fmax)
    return bank @ np.abs(spec.values)


def zscore_normalize(audio: AudioBuffer) -> AudioBuffer:
    """Shift and scale to zero mean and unit population standard deviation."""
    x = audio.samples
    if x.size < 2:
        raise ValueError("degenerate normalization")
    std = float(x.std())
    if std == 0.0 or not np.isfinite(std):
        raise ValueError("degenerate normalization")
    return AudioBuffer((x - x.mean()) / std, audio.sample_rate)


def unwrap_phase(phases: np.ndarray) -> np.ndarray:
    """Unwrap a phase sequence so successive differences fall in (-pi, pi].

    Each output sample differs from its input by an integer multiple of 2*pi.
    """
    p = np.asarray(phases, dtype=np.float64)
    if p.ndim != 1:
        raise ValueError(f"expected 1-D phase sequence, got shape {p.shape}")
    if p.size <= 1:
        return p.copy()
    d = np.diff(p)
    two_pi = 2.0 * np.pi
    wrapped = d - two_pi * np.ceil((d - np.pi) / two_pi)
    out = np.empty_like(p)
    out[0] = p[0]
    out[1:] = p[0] + np.cumsum(wrapped)
    return out
