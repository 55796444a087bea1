"""Shared fixtures: chirp configs, tone captures, and clip factories."""

from __future__ import annotations

import numpy as np
import pytest

from mmvib import ChirpConfig, VibrationTrace, simulate_if_frames


@pytest.fixture
def chirp_cfg() -> ChirpConfig:
    return ChirpConfig()


def make_tone_trace(
    cfg: ChirpConfig,
    freq_hz: float,
    amplitude_m: float = 1e-6,
    duration_s: float = 0.96,
) -> VibrationTrace:
    """Sinusoidal displacement sampled at the chirp rate."""
    rate = cfg.effective_sampling_rate
    t = np.arange(int(round(duration_s * rate))) / rate
    return VibrationTrace(amplitude_m * np.sin(2.0 * np.pi * freq_hz * t), rate)


def make_tone_capture(
    cfg: ChirpConfig,
    freq_hz: float,
    amplitude_m: float = 1e-6,
    duration_s: float = 0.96,
    range_m: float = 1.5,
    noise_floor_db: float = -60.0,
    seed: int = 0,
):
    vib = make_tone_trace(cfg, freq_hz, amplitude_m, duration_s)
    return simulate_if_frames(
        cfg, vib, range_m, noise_floor_db=noise_floor_db, seed=seed
    )
