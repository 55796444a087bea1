"""Millimeter-wave vibration sensing: simulation, extraction, synthesis, metrics."""

from .audio_io import low_pass, read_wav, resample, write_wav
from .metrics import (
    MetricsReport,
    fwsegsnr,
    mag_l1,
    mcd,
    mel_loss,
    score_pair,
    stoi,
    wer_cer,
)
from .radar_sim import (
    ArtifactEvent,
    ChirpConfig,
    IFCapture,
    SurfaceMaterial,
    VibrationTrace,
    displacement_from_audio,
    forced_response_amplitude,
    inject_artifacts,
    load_capture,
    max_unambiguous_range,
    range_resolution,
    save_capture,
    simulate_if_frames,
)
from .signal_core import (
    AudioBuffer,
    MelConfig,
    Spectrogram,
    hz_to_mel,
    mel_filterbank,
    mel_spectrogram,
    mel_to_hz,
    stft,
    unwrap_phase,
    zscore_normalize,
)
from .synth import (
    SynthesisConfig,
    build_dataset,
    gen_gaussian_noise,
    gen_purple_noise,
    item_seed,
    synthesize_mmvib,
)
from .vib_extract import (
    RangeProfile,
    extract_phase_series,
    extract_vibration,
    phase_to_displacement,
    range_fft,
    remove_beginning_outlier,
    remove_periodic_outliers,
    select_target_bin,
)

__version__ = "0.1.0"

__all__ = [
    "ArtifactEvent",
    "AudioBuffer",
    "ChirpConfig",
    "IFCapture",
    "MelConfig",
    "MetricsReport",
    "RangeProfile",
    "Spectrogram",
    "SurfaceMaterial",
    "SynthesisConfig",
    "VibrationTrace",
    "build_dataset",
    "displacement_from_audio",
    "extract_phase_series",
    "extract_vibration",
    "forced_response_amplitude",
    "fwsegsnr",
    "gen_gaussian_noise",
    "gen_purple_noise",
    "item_seed",
    "hz_to_mel",
    "inject_artifacts",
    "load_capture",
    "low_pass",
    "mag_l1",
    "max_unambiguous_range",
    "mcd",
    "mel_filterbank",
    "mel_loss",
    "mel_spectrogram",
    "mel_to_hz",
    "phase_to_displacement",
    "range_fft",
    "range_resolution",
    "read_wav",
    "remove_beginning_outlier",
    "remove_periodic_outliers",
    "resample",
    "save_capture",
    "score_pair",
    "select_target_bin",
    "simulate_if_frames",
    "stft",
    "stoi",
    "synthesize_mmvib",
    "unwrap_phase",
    "wer_cer",
    "write_wav",
    "zscore_normalize",
]
