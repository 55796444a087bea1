"""Vibration recovery from IF captures: Range-FFT, phase extraction, outlier cleanup."""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .radar_sim import IFCapture, VibrationTrace, range_resolution
from .signal_core import unwrap_phase

# Beginning-outlier guard: one frame at the default chirp count.
DEFAULT_GUARD_WINDOW = 256

# Local-mean window for frame-start spikes: this many samples per side.
# The immediate neighbors track speech-band content far better than a wide
# average, which low-passes the replacement and smears energy across bands.
DEFAULT_NEIGHBOR_HALFWIDTH = 1

OUTLIER_SIGMA_THRESHOLD = 3.0


@dataclass
class RangeProfile:
    """Per-chirp one-sided range spectra: bins laid out [range_bins, total_chirps]."""

    bins: np.ndarray
    bin_size_m: float

    def __post_init__(self) -> None:
        self.bins = np.asarray(self.bins, dtype=np.complex128)
        if self.bins.ndim != 2:
            raise ValueError(f"bins must be 2-D, got shape {self.bins.shape}")
        if not np.isfinite(self.bin_size_m) or self.bin_size_m <= 0:
            raise ValueError(f"bin_size_m must be positive, got {self.bin_size_m}")

    @property
    def range_bins(self) -> int:
        return self.bins.shape[0]

    @property
    def total_chirps(self) -> int:
        return self.bins.shape[1]


def range_fft(capture: IFCapture) -> RangeProfile:
    """FFT each chirp along fast time, keeping the positive-frequency half.

    Chirp order is preserved across frames (frame-major flattening), so column
    c of the result is chirp c of the capture.
    """
    if capture.n_frames == 0:
        raise ValueError("empty capture")
    flat = capture.flat_chirps()
    n = capture.config.adc_samples_per_chirp
    spectrum = np.fft.fft(flat, axis=1)[:, : n // 2 + 1]
    return RangeProfile(spectrum.T, range_resolution(capture.config))


def select_target_bin(profile: RangeProfile) -> int:
    """Index of the strongest range bin by mean magnitude, DC excluded.

    Ties break toward the lower index.
    """
    if profile.bins.size == 0:
        raise ValueError("no target")
    mean_mag = np.abs(profile.bins).mean(axis=1)
    mean_mag[0] = 0.0
    if np.max(mean_mag) <= 0.0:
        raise ValueError("no target")
    return int(np.argmax(mean_mag))


def extract_phase_series(profile: RangeProfile, bin_index: int) -> np.ndarray:
    """Unwrapped per-chirp phase of one range bin, radians at the chirp rate."""
    if not 0 <= bin_index < profile.range_bins:
        raise ValueError(f"bin index {bin_index} outside [0, {profile.range_bins})")
    return unwrap_phase(np.angle(profile.bins[bin_index]))


def phase_to_displacement(
    delta_phi: np.ndarray, wavelength: float, remove_mean: bool = True
) -> np.ndarray:
    """Convert phase variation to displacement: d = wavelength * phi / (4 pi).

    The pipeline removes the series mean first, since the absolute range
    offset carries no vibration; pass remove_mean=False for the raw identity.
    """
    if not np.isfinite(wavelength) or wavelength <= 0:
        raise ValueError(f"wavelength must be positive, got {wavelength}")
    phi = np.asarray(delta_phi, dtype=np.float64)
    if remove_mean and phi.size:
        phi = phi - phi.mean()
    return wavelength * phi / (4.0 * np.pi)


def _replace_beginning_outlier(x: np.ndarray, guard_window: int) -> np.ndarray:
    """3-sigma rule over the first guard_window samples, stats from the rest."""
    if x.size < 3:
        raise ValueError(f"trace too short for outlier statistics, got {x.size} samples")
    guard = int(min(max(guard_window, 0), x.size - 2))
    out = x.copy()
    if guard == 0:
        return out
    tail = x[guard:]
    mean = tail.mean()
    sigma = tail.std()
    head = out[:guard]
    head[np.abs(head - mean) > OUTLIER_SIGMA_THRESHOLD * sigma] = mean
    return out


def _replace_periodic_outliers(
    x: np.ndarray, chirps_per_frame: int, neighbor_halfwidth: int
) -> np.ndarray:
    """Replace outlying frame-start samples with the mean of non-start neighbors.

    A frame-start sample is an outlier when it sits more than 3 sigma from its
    local neighbor mean, where sigma comes from the same residual measured at
    every non-start position. Spikes stamped on frame boundaries tower over
    that residual; smooth signal at a boundary never trips it.
    """
    if chirps_per_frame < 2:
        raise ValueError(f"chirps_per_frame must be >= 2, got {chirps_per_frame}")
    if neighbor_halfwidth < 1:
        raise ValueError(f"neighbor_halfwidth must be >= 1, got {neighbor_halfwidth}")
    n = x.size
    hw = neighbor_halfwidth
    is_start = np.zeros(n, dtype=bool)
    is_start[::chirps_per_frame] = True
    valid = (~is_start).astype(np.float64)
    kernel = np.ones(2 * hw + 1)
    # windowed sums over non-start neighbors, center sample excluded
    win_count = np.convolve(valid, kernel, mode="same") - valid
    win_sum = np.convolve(x * valid, kernel, mode="same") - x * valid
    local_mean = np.divide(
        win_sum, win_count, out=np.zeros(n), where=win_count > 0
    )
    # residual spread: interior non-start samples with symmetric windows
    reference = (win_count > 0) & ~is_start
    reference[:hw] = False
    reference[n - hw :] = False
    residual = x - local_mean
    sigma = float(residual[reference].std()) if np.any(reference) else 0.0
    threshold = OUTLIER_SIGMA_THRESHOLD * sigma

    def next_non_start(after: int, step: int) -> int | None:
        i = after + step
        while 0 <= i < n:
            if not is_start[i]:
                return i
            i += step
        return None

    out = x.copy()
    for s in range(0, n, chirps_per_frame):
        left = [i for i in range(s - 1, max(s - hw, 0) - 1, -1) if not is_start[i]]
        right = [i for i in range(s + 1, min(s + hw, n - 1) + 1) if not is_start[i]]
        neighbors = left + right
        if not neighbors:
            continue
        replacement = x[neighbors].mean()
        if left and right:
            predicted = replacement
        else:
            # trace edge: extrapolate a local line so the residual stays
            # comparable to the symmetric-window statistic
            side = left or right
            a = side[0]
            b = next_non_start(a, 1 if a > s else -1)
            if b is None:
                predicted = x[a]
            else:
                predicted = x[a] + (x[b] - x[a]) * (s - a) / (b - a)
        if abs(x[s] - predicted) > threshold:
            out[s] = replacement
    return out


def remove_beginning_outlier(
    trace: VibrationTrace, guard_window: int = DEFAULT_GUARD_WINDOW
) -> VibrationTrace:
    """Replace capture-start spikes breaking the 3-sigma rule with the global mean.

    Statistics exclude the guard window so the spike cannot mask itself.
    """
    cleaned = _replace_beginning_outlier(trace.displacement, guard_window)
    return VibrationTrace(cleaned, trace.sample_rate)


def remove_periodic_outliers(
    trace: VibrationTrace,
    chirps_per_frame: int,
    neighbor_halfwidth: int = DEFAULT_NEIGHBOR_HALFWIDTH,
) -> VibrationTrace:
    """Clean frame-boundary spikes using the 3-sigma rule against local means.

    Frame-start samples breaking the rule are replaced by the mean of a
    symmetric window of non-start neighbors. The window shrinks at trace
    boundaries and never fails; a sample with no usable neighbors, and any
    sample consistent with its neighborhood, is left alone.
    """
    cleaned = _replace_periodic_outliers(trace.displacement, chirps_per_frame, neighbor_halfwidth)
    return VibrationTrace(cleaned, trace.sample_rate)


def extract_vibration(
    capture: IFCapture,
    preprocess: bool = True,
    guard_window: int | None = None,
    neighbor_halfwidth: int = DEFAULT_NEIGHBOR_HALFWIDTH,
) -> VibrationTrace:
    """Full recovery pipeline from capture to zero-mean displacement trace.

    Range-FFT, strongest-bin selection, phase unwrapping, optional two-stage
    outlier cleanup, then phase-to-displacement conversion. Output sample rate
    is the chirp rate (chirps_per_frame / frame_period).
    """
    profile = range_fft(capture)
    target = select_target_bin(profile)
    phase = extract_phase_series(profile, target)
    if preprocess:
        guard = capture.config.chirps_per_frame if guard_window is None else guard_window
        phase = _replace_beginning_outlier(phase, guard)
        phase = _replace_periodic_outliers(
            phase, capture.config.chirps_per_frame, neighbor_halfwidth
        )
    displacement = phase_to_displacement(phase, capture.config.wavelength)
    return VibrationTrace(displacement, capture.config.effective_sampling_rate)
