"""Reference/degraded speech scoring: FWSegSNR, STOI, MCD, multi-resolution mel loss,
magnitude L1, and word/character error rates.

Absolute values of the spectral metrics depend on framing and filterbank
conventions, which are pinned here as documented constants; identity,
ordering, and gain-invariance properties are the stable contract.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np
from numpy.lib.stride_tricks import sliding_window_view
from scipy.fft import dct

from .audio_io import resample
from .signal_core import (
    AudioBuffer,
    Spectrogram,
    frame_signal,
    hann_window,
    mel_filterbank,
    mel_loss_configs,
    mel_spectrogram,
    stft,
)

FRAME_SECONDS = 0.025
HOP_SECONDS = 0.010

FWSEG_BANDS = 25
FWSEG_FMIN_HZ = 50.0
FWSEG_WEIGHT_EXPONENT = 0.2
FWSEG_FLOOR_DB = -10.0
FWSEG_CEIL_DB = 35.0

MCD_BANDS = 26
MCD_COEFFS = 13
# Floor on mel energies before the log. Kept tiny so that pure gain changes
# never cross it and break the c0-only scaling property.
MCD_LOG_FLOOR = 1e-30

MEL_LOG_FLOOR = 1e-5

STOI_RATE_HZ = 10000.0
STOI_FRAME = 256
STOI_HOP = 128
STOI_NFFT = 512
STOI_BANDS = 15
STOI_BAND_FMIN_HZ = 150.0
STOI_SEGMENT_FRAMES = 30
STOI_DYNAMIC_RANGE_DB = 40.0
STOI_CLIP_DB = -15.0

_EPS = 1e-20


@dataclass
class MetricsReport:
    """One scored pair; wer/cer present only when transcripts were supplied."""

    fwsegsnr: float
    stoi: float
    mcd: float
    mel_loss: float
    mag_l1: float
    wer: float | None = None
    cer: float | None = None

    def __post_init__(self) -> None:
        for name in ("fwsegsnr", "stoi", "mcd", "mel_loss", "mag_l1"):
            if not np.isfinite(getattr(self, name)):
                raise ValueError(f"{name} is not finite")
        if not 0.0 <= self.stoi <= 1.0:
            raise ValueError(f"reported stoi must lie in [0, 1], got {self.stoi}")

    def to_dict(self) -> dict:
        return {
            "fwsegsnr": self.fwsegsnr,
            "stoi": self.stoi,
            "mcd": self.mcd,
            "mel_loss": self.mel_loss,
            "mag_l1": self.mag_l1,
            "wer": self.wer,
            "cer": self.cer,
        }


def _truncate_pair(ref: AudioBuffer, deg: AudioBuffer) -> tuple[np.ndarray, np.ndarray, float]:
    if abs(ref.sample_rate - deg.sample_rate) > 1e-9:
        raise ValueError(
            f"sample rates differ: {ref.sample_rate} vs {deg.sample_rate}"
        )
    n = min(len(ref), len(deg))
    return ref.samples[:n], deg.samples[:n], ref.sample_rate


def _frame_params(fs: float) -> tuple[int, int]:
    return int(round(FRAME_SECONDS * fs)), int(round(HOP_SECONDS * fs))


def _framed_magnitudes(x: np.ndarray, fs: float) -> tuple[np.ndarray, int]:
    window_len, hop = _frame_params(fs)
    frames = frame_signal(x, window_len, hop)
    windowed = frames * hann_window(window_len)[None, :]
    return np.abs(np.fft.rfft(windowed, axis=1)), window_len


def fwsegsnr(ref: AudioBuffer, deg: AudioBuffer) -> float:
    """Frequency-weighted segmental SNR in dB.

    25 ms / 10 ms Hann frames; 25 triangular mel-spaced bands from 50 Hz;
    per-band weights are reference band magnitudes raised to 0.2; per-frame
    weighted SNR is clamped to [-10, 35] dB and averaged over frames.
    """
    x, y, fs = _truncate_pair(ref, deg)
    ref_mag, window_len = _framed_magnitudes(x, fs)
    deg_mag, _ = _framed_magnitudes(y, fs)
    bank = mel_filterbank(FWSEG_BANDS, window_len, fs, fmin=FWSEG_FMIN_HZ)
    ref_band = ref_mag @ bank.T
    deg_band = deg_mag @ bank.T
    weights = ref_band**FWSEG_WEIGHT_EXPONENT
    band_snr = 10.0 * np.log10((ref_band**2 + _EPS) / ((ref_band - deg_band) ** 2 + _EPS))
    weight_sums = weights.sum(axis=1)
    valid = weight_sums > 0
    if not np.any(valid):
        raise ValueError("reference is silent")
    frame_snr = (weights * band_snr).sum(axis=1)[valid] / weight_sums[valid]
    return float(np.clip(frame_snr, FWSEG_FLOOR_DB, FWSEG_CEIL_DB).mean())


def _third_octave_bands(n_bins: int, fs: float) -> np.ndarray:
    """Membership matrix [STOI_BANDS, n_bins] of one-third-octave bands."""
    freqs = np.arange(n_bins) * (fs / STOI_NFFT)
    centers = STOI_BAND_FMIN_HZ * 2.0 ** (np.arange(STOI_BANDS) / 3.0)
    lo = centers / 2.0 ** (1.0 / 6.0)
    hi = centers * 2.0 ** (1.0 / 6.0)
    return ((freqs[None, :] >= lo[:, None]) & (freqs[None, :] < hi[:, None])).astype(float)


def stoi(ref: AudioBuffer, deg: AudioBuffer) -> float:
    """Short-time objective intelligibility (raw, typically in [0, 1]).

    Both signals are resampled to 10 kHz and framed with 256-sample Hann
    windows at half overlap. Frames more than 40 dB below the loudest
    reference frame are removed from both signals. One-third-octave band
    envelopes (15 bands from 150 Hz) are compared over sliding 30-frame
    segments with normalization, -15 dB clipping, and mean-subtracted
    correlation, averaged across bands and segments.
    """
    x, y, fs = _truncate_pair(ref, deg)
    xb = resample(AudioBuffer(x, fs), STOI_RATE_HZ).samples
    yb = resample(AudioBuffer(y, fs), STOI_RATE_HZ).samples
    n = min(xb.size, yb.size)
    if n < STOI_FRAME:
        raise ValueError("input too short")
    window = np.hanning(STOI_FRAME)
    x_frames = frame_signal(xb[:n], STOI_FRAME, STOI_HOP) * window[None, :]
    y_frames = frame_signal(yb[:n], STOI_FRAME, STOI_HOP) * window[None, :]

    norms = np.linalg.norm(x_frames, axis=1)
    keep = norms > norms.max() * 10.0 ** (-STOI_DYNAMIC_RANGE_DB / 20.0)
    x_frames = x_frames[keep]
    y_frames = y_frames[keep]
    if x_frames.shape[0] < STOI_SEGMENT_FRAMES:
        raise ValueError("input too short")

    x_power = np.abs(np.fft.rfft(x_frames, n=STOI_NFFT, axis=1)) ** 2
    y_power = np.abs(np.fft.rfft(y_frames, n=STOI_NFFT, axis=1)) ** 2
    bands = _third_octave_bands(x_power.shape[1], STOI_RATE_HZ)
    x_env = np.sqrt(x_power @ bands.T).T
    y_env = np.sqrt(y_power @ bands.T).T

    x_seg = sliding_window_view(x_env, STOI_SEGMENT_FRAMES, axis=1)
    y_seg = sliding_window_view(y_env, STOI_SEGMENT_FRAMES, axis=1)
    x_norm = np.linalg.norm(x_seg, axis=2)
    y_norm = np.linalg.norm(y_seg, axis=2)
    y_scaled = y_seg * (x_norm / (y_norm + _EPS))[:, :, None]
    clip = 10.0 ** (STOI_CLIP_DB / 20.0)
    y_clipped = np.minimum(y_scaled, x_seg * (1.0 + clip))

    xc = x_seg - x_seg.mean(axis=2, keepdims=True)
    yc = y_clipped - y_clipped.mean(axis=2, keepdims=True)
    x_std = np.linalg.norm(xc, axis=2)
    y_std = np.linalg.norm(yc, axis=2)
    corr = (xc * yc).sum(axis=2) / (x_std * y_std + _EPS)
    informative = x_std > 0
    if not np.any(informative):
        raise ValueError("reference has no informative segments")
    return float(corr[informative].mean())


def _mfcc(x: np.ndarray, fs: float) -> np.ndarray:
    """MFCC frames [n_frames, MCD_COEFFS], energy coefficient excluded."""
    mag, window_len = _framed_magnitudes(x, fs)
    bank = mel_filterbank(MCD_BANDS, window_len, fs)
    energies = np.maximum((mag**2) @ bank.T, MCD_LOG_FLOOR)
    cepstra = dct(np.log(energies), type=2, norm="ortho", axis=1)
    return cepstra[:, 1 : MCD_COEFFS + 1]


def mcd(ref: AudioBuffer, deg: AudioBuffer) -> float:
    """Mel-cepstral distortion over index-aligned frames, energy term excluded."""
    x, y, fs = _truncate_pair(ref, deg)
    diff = _mfcc(x, fs) - _mfcc(y, fs)
    per_frame = (10.0 / np.log(10.0)) * np.sqrt(2.0 * (diff**2).sum(axis=1))
    return float(per_frame.mean())


def mel_loss(ref: AudioBuffer, deg: AudioBuffer) -> float:
    """Sum over the seven-resolution mel family of mean |log-mel| differences."""
    x, y, fs = _truncate_pair(ref, deg)
    ref_buf = AudioBuffer(x, fs)
    deg_buf = AudioBuffer(y, fs)
    total = 0.0
    for cfg in mel_loss_configs():
        ref_mel = np.log(np.maximum(mel_spectrogram(ref_buf, cfg), MEL_LOG_FLOOR))
        deg_mel = np.log(np.maximum(mel_spectrogram(deg_buf, cfg), MEL_LOG_FLOOR))
        total += float(np.abs(ref_mel - deg_mel).mean())
    return total


def mag_l1(ref_spec: Spectrogram, deg_spec: Spectrogram) -> float:
    """Mean absolute difference between magnitude spectrograms."""
    if ref_spec.values.shape != deg_spec.values.shape:
        raise ValueError(
            f"shape mismatch: {ref_spec.values.shape} vs {deg_spec.values.shape}"
        )
    return float(np.abs(np.abs(ref_spec.values) - np.abs(deg_spec.values)).mean())


def _as_words(text) -> list[str]:
    if isinstance(text, str):
        return text.split()
    return [str(token) for token in text]


def _as_chars(text) -> list[str]:
    if isinstance(text, str):
        return list(text)
    return list(" ".join(str(token) for token in text))


def _edit_distance(a: list[str], b: list[str]) -> int:
    """Levenshtein distance with unit costs, rolling single row."""
    if len(a) < len(b):
        a, b = b, a
    previous = list(range(len(b) + 1))
    for i, sym_a in enumerate(a, start=1):
        current = [i]
        for j, sym_b in enumerate(b, start=1):
            cost = 0 if sym_a == sym_b else 1
            current.append(min(previous[j] + 1, current[j - 1] + 1, previous[j - 1] + cost))
        previous = current
    return previous[len(b)]


def wer_cer(ref_text, hyp_text) -> tuple[float, float]:
    """Word and character error rates from edit distance over the reference length."""
    ref_words = _as_words(ref_text)
    if not ref_words:
        raise ValueError("empty reference")
    hyp_words = _as_words(hyp_text)
    ref_chars = _as_chars(ref_text)
    hyp_chars = _as_chars(hyp_text)
    wer = _edit_distance(ref_words, hyp_words) / len(ref_words)
    cer = _edit_distance(ref_chars, hyp_chars) / len(ref_chars)
    return wer, cer


# Spectrogram settings for the report's magnitude-L1 column.
REPORT_SPEC_WINDOW = 256
REPORT_SPEC_HOP = 64


def score_pair(
    ref: AudioBuffer,
    deg: AudioBuffer,
    ref_text: str | None = None,
    hyp_text: str | None = None,
) -> MetricsReport:
    """Compute the full metric suite for one aligned reference/degraded pair."""
    x, y, fs = _truncate_pair(ref, deg)
    ref_buf = AudioBuffer(x, fs)
    deg_buf = AudioBuffer(y, fs)
    raw_stoi = stoi(ref_buf, deg_buf)
    wer = cer = None
    if ref_text is not None and hyp_text is not None:
        wer, cer = wer_cer(ref_text, hyp_text)
    return MetricsReport(
        fwsegsnr=fwsegsnr(ref_buf, deg_buf),
        stoi=float(np.clip(raw_stoi, 0.0, 1.0)),
        mcd=mcd(ref_buf, deg_buf),
        mel_loss=mel_loss(ref_buf, deg_buf),
        mag_l1=mag_l1(
            stft(ref_buf, REPORT_SPEC_WINDOW, REPORT_SPEC_HOP).magnitude(),
            stft(deg_buf, REPORT_SPEC_WINDOW, REPORT_SPEC_HOP).magnitude(),
        ),
        wer=wer,
        cer=cer,
    )
