"""FMCW capture synthesis for a surface vibrating under acoustic forcing.

The scene is a single static reflector whose micron-scale displacement
modulates the phase of the intermediate-frequency beat signal chirp by chirp.
"""

from __future__ import annotations

import json
import struct
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

from .signal_core import AudioBuffer, unwrap_phase

SPEED_OF_LIGHT = 299792458.0

# Widest sweep the simulated front end supports.
MAX_BANDWIDTH_HZ = 4.0e9

# Default timing: 32 ms frames of 256 chirps (8000 chirps per second) with a
# 10 percent idle gap at the end of each frame, swept over the full 4 GHz.
DEFAULT_FRAME_PERIOD_S = 0.032
DEFAULT_CHIRPS_PER_FRAME = 256
DEFAULT_CHIRP_DURATION_S = 0.9 * DEFAULT_FRAME_PERIOD_S / DEFAULT_CHIRPS_PER_FRAME
DEFAULT_SLOPE_HZ_PER_S = MAX_BANDWIDTH_HZ / DEFAULT_CHIRP_DURATION_S

_CAPTURE_MAGIC = b"MMVIBCP1"
_CAPTURE_HEADER = struct.Struct("<8sddddIIII")


@dataclass
class ChirpConfig:
    """FMCW waveform timing and sampling parameters."""

    carrier_freq: float = 60.0e9
    slope: float = DEFAULT_SLOPE_HZ_PER_S
    chirp_duration: float = DEFAULT_CHIRP_DURATION_S
    adc_samples_per_chirp: int = 256
    chirps_per_frame: int = DEFAULT_CHIRPS_PER_FRAME
    frame_period: float = DEFAULT_FRAME_PERIOD_S

    def __post_init__(self) -> None:
        for name in ("carrier_freq", "slope", "chirp_duration", "frame_period"):
            value = getattr(self, name)
            if not np.isfinite(value) or value <= 0:
                raise ValueError(f"{name} must be positive, got {value}")
        for name in ("adc_samples_per_chirp", "chirps_per_frame"):
            value = getattr(self, name)
            if int(value) != value or value < 1:
                raise ValueError(f"{name} must be a positive integer, got {value}")
        if self.chirps_per_frame * self.chirp_duration > self.frame_period * (1 + 1e-12):
            raise ValueError(
                f"chirps_per_frame * chirp_duration = "
                f"{self.chirps_per_frame * self.chirp_duration:.6e} s exceeds "
                f"frame_period {self.frame_period:.6e} s"
            )
        if self.bandwidth > MAX_BANDWIDTH_HZ * (1 + 1e-12):
            raise ValueError(
                f"swept bandwidth {self.bandwidth:.3e} Hz exceeds {MAX_BANDWIDTH_HZ:.1e} Hz"
            )

    @property
    def bandwidth(self) -> float:
        """Swept bandwidth in Hz."""
        return self.slope * self.chirp_duration

    @property
    def wavelength(self) -> float:
        """Carrier wavelength in meters at the sweep start frequency."""
        return SPEED_OF_LIGHT / self.carrier_freq

    @property
    def effective_sampling_rate(self) -> float:
        """Vibration sampling rate in Hz: one phase sample per chirp."""
        return self.chirps_per_frame / self.frame_period

    @property
    def adc_sample_rate(self) -> float:
        """Fast-time ADC rate in Hz."""
        return self.adc_samples_per_chirp / self.chirp_duration


@dataclass
class SurfaceMaterial:
    """Lumped spring-mass-damper model of the sounding surface."""

    mass: float
    stiffness: float
    damping: float
    reflectivity: float = 1.0

    def __post_init__(self) -> None:
        if not np.isfinite(self.mass) or self.mass <= 0:
            raise ValueError(f"mass must be positive, got {self.mass}")
        if not np.isfinite(self.stiffness) or self.stiffness <= 0:
            raise ValueError(f"stiffness must be positive, got {self.stiffness}")
        if not np.isfinite(self.damping) or self.damping < 0:
            raise ValueError(f"damping must be >= 0, got {self.damping}")
        if not 0.0 <= self.reflectivity <= 1.0:
            raise ValueError(f"reflectivity must lie in [0, 1], got {self.reflectivity}")

    @property
    def natural_frequency(self) -> float:
        """Undamped natural frequency in rad/s."""
        return float(np.sqrt(self.stiffness / self.mass))


@dataclass
class VibrationTrace:
    """Surface displacement in meters sampled at a uniform rate."""

    displacement: np.ndarray
    sample_rate: float

    def __post_init__(self) -> None:
        self.displacement = np.asarray(self.displacement, dtype=np.float64)
        if self.displacement.ndim != 1:
            raise ValueError(f"displacement must be 1-D, got shape {self.displacement.shape}")
        if not np.isfinite(self.sample_rate) or self.sample_rate <= 0:
            raise ValueError(f"sample_rate must be positive, got {self.sample_rate}")
        if self.displacement.size and not np.all(np.isfinite(self.displacement)):
            raise ValueError("displacement contains non-finite values")

    def __len__(self) -> int:
        return self.displacement.size


@dataclass
class ArtifactEvent:
    """One injected phase spike, identified by its capture position."""

    kind: str
    frame: int
    chirp: int
    magnitude_rad: float

    def to_dict(self) -> dict:
        return {
            "kind": self.kind,
            "frame": self.frame,
            "chirp": self.chirp,
            "magnitude_rad": self.magnitude_rad,
        }

    @classmethod
    def from_dict(cls, d: dict) -> "ArtifactEvent":
        return cls(
            kind=str(d["kind"]),
            frame=int(d["frame"]),
            chirp=int(d["chirp"]),
            magnitude_rad=float(d["magnitude_rad"]),
        )


@dataclass
class IFCapture:
    """Complex IF samples laid out [n_frames, chirps_per_frame, adc_samples]."""

    frames: np.ndarray
    config: ChirpConfig
    artifact_log: list[ArtifactEvent] = field(default_factory=list)

    def __post_init__(self) -> None:
        self.frames = np.asarray(self.frames, dtype=np.complex64)
        if self.frames.ndim != 3:
            raise ValueError(f"frames must be 3-D, got shape {self.frames.shape}")
        _, chirps, samples = self.frames.shape
        if chirps != self.config.chirps_per_frame:
            raise ValueError(
                f"frame axis 1 is {chirps}, config says {self.config.chirps_per_frame}"
            )
        if samples != self.config.adc_samples_per_chirp:
            raise ValueError(
                f"frame axis 2 is {samples}, config says {self.config.adc_samples_per_chirp}"
            )

    @property
    def n_frames(self) -> int:
        return self.frames.shape[0]

    @property
    def total_chirps(self) -> int:
        return self.frames.shape[0] * self.frames.shape[1]

    def flat_chirps(self) -> np.ndarray:
        """All chirps in capture order, [total_chirps, adc_samples]."""
        return self.frames.reshape(self.total_chirps, self.config.adc_samples_per_chirp)


def range_resolution(cfg: ChirpConfig) -> float:
    """Range bin size in meters: c / (2 * swept bandwidth)."""
    return SPEED_OF_LIGHT / (2.0 * cfg.slope * cfg.chirp_duration)


def max_unambiguous_range(cfg: ChirpConfig) -> float:
    """Largest target range whose beat frequency stays below half the ADC rate."""
    return range_resolution(cfg) * (cfg.adc_samples_per_chirp / 2.0)


def forced_response_amplitude(material: SurfaceMaterial, force: float, omega) -> np.ndarray | float:
    """Steady-state displacement amplitude of the driven surface.

    X(w) = F / sqrt((k - m w^2)^2 + (c w)^2) for drive frequency w in rad/s.
    """
    w = np.asarray(omega, dtype=np.float64)
    denom = _response_denominator(material, w)
    if np.any(denom == 0.0):
        raise ValueError("unbounded resonance")
    out = force / denom
    return float(out) if np.isscalar(omega) else out


def _response_denominator(material: SurfaceMaterial, w: np.ndarray) -> np.ndarray:
    k = material.stiffness
    m = material.mass
    c = material.damping
    return np.sqrt((k - m * w * w) ** 2 + (c * w) ** 2)


def displacement_from_audio(
    audio: AudioBuffer, material: SurfaceMaterial, force_scale: float
) -> VibrationTrace:
    """Drive the surface model with audio and return its displacement response.

    The audio is treated as a force waveform scaled by force_scale (newtons per
    unit sample amplitude); each frequency component is scaled by the
    steady-state response magnitude with zero phase shift.
    """
    if len(audio) == 0:
        raise ValueError("empty audio")
    if not np.isfinite(force_scale):
        raise ValueError(f"force_scale must be finite, got {force_scale}")
    n = len(audio)
    spectrum = np.fft.rfft(audio.samples)
    omega = 2.0 * np.pi * np.fft.rfftfreq(n, d=1.0 / audio.sample_rate)
    denom = _response_denominator(material, omega)
    if np.any(denom == 0.0):
        raise ValueError("unbounded resonance")
    displacement = np.fft.irfft(spectrum * (force_scale / denom), n=n)
    return VibrationTrace(displacement, audio.sample_rate)


def simulate_if_frames(
    cfg: ChirpConfig,
    vibration: VibrationTrace,
    range_m: float,
    reflectivity: float = 1.0,
    noise_floor_db: float = -60.0,
    seed=0,
) -> IFCapture:
    """Synthesize the IF capture of a reflector at range_m with the given vibration.

    Parameters
    ----------
    cfg : chirp timing; the vibration must be sampled at cfg.effective_sampling_rate.
    vibration : surface displacement in meters, one sample per chirp.
    range_m : nominal radar-to-surface distance in meters.
    reflectivity : echo amplitude per unit transmit amplitude, in [0, 1].
    noise_floor_db : complex Gaussian noise power relative to unit echo amplitude.
    seed : anything accepted by numpy.random.default_rng.

    The per-chirp beat tone sits at f = 2 * slope * range / c and carries phase
    4 * pi * (range + displacement) / wavelength. Trailing samples that do not
    fill a whole frame are dropped.
    """
    if len(vibration) == 0:
        raise ValueError("empty vibration trace")
    rate = cfg.effective_sampling_rate
    if abs(vibration.sample_rate - rate) > 1e-6 * rate:
        raise ValueError(
            f"vibration sampled at {vibration.sample_rate} Hz, config needs {rate} Hz"
        )
    if not np.isfinite(range_m) or range_m <= 0:
        raise ValueError(f"range_m must be positive, got {range_m}")
    if range_m >= max_unambiguous_range(cfg):
        raise ValueError("range aliasing")
    if not 0.0 <= reflectivity <= 1.0:
        raise ValueError(f"reflectivity must lie in [0, 1], got {reflectivity}")
    quarter_wave = cfg.wavelength / 4.0
    peak = float(np.max(np.abs(vibration.displacement)))
    if peak >= quarter_wave:
        raise ValueError(
            f"peak displacement {peak:.3e} m leaves the small-vibration regime "
            f"(quarter wavelength {quarter_wave:.3e} m)"
        )
    n_frames = len(vibration) // cfg.chirps_per_frame
    if n_frames == 0:
        raise ValueError("vibration shorter than one frame")

    rng = np.random.default_rng(seed)
    beat_freq = 2.0 * cfg.slope * range_m / SPEED_OF_LIGHT
    fast_time = np.arange(cfg.adc_samples_per_chirp) / cfg.adc_sample_rate
    beat = np.exp(2j * np.pi * beat_freq * fast_time)
    noise_sigma = 10.0 ** (noise_floor_db / 20.0)

    cpf = cfg.chirps_per_frame
    adc = cfg.adc_samples_per_chirp
    frames = np.empty((n_frames, cpf, adc), dtype=np.complex64)
    for f in range(n_frames):
        d = vibration.displacement[f * cpf : (f + 1) * cpf]
        phase = 4.0 * np.pi * (range_m + d) / cfg.wavelength
        chirps = reflectivity * np.exp(1j * phase)[:, None] * beat[None, :]
        noise = rng.standard_normal((cpf, adc)) + 1j * rng.standard_normal((cpf, adc))
        frames[f] = chirps + (noise_sigma / np.sqrt(2.0)) * noise
    return IFCapture(frames, cfg, [])


def _clean_phase_std(capture: IFCapture) -> float:
    """Population std of the unwrapped target-bin phase before any injection."""
    flat = capture.flat_chirps()
    spectrum = np.fft.fft(flat, axis=1)[:, : capture.config.adc_samples_per_chirp // 2 + 1]
    mean_mag = np.abs(spectrum).mean(axis=0)
    mean_mag[0] = 0.0
    if np.max(mean_mag) <= 0.0:
        raise ValueError("no target")
    target = int(np.argmax(mean_mag))
    phase = unwrap_phase(np.angle(spectrum[:, target]))
    return float(phase.std())


def inject_artifacts(
    capture: IFCapture,
    beginning_magnitude_sigma: float,
    periodic_magnitude_sigma: float,
    seed=0,
) -> IFCapture:
    """Stamp capture-start and frame-start phase spikes onto a copy of the capture.

    Magnitudes are multiples of the clean extracted-phase standard deviation,
    measured by a dry extraction pass. A spike rotates every sample of the
    affected chirp, so it lands directly on the extracted phase series. Each
    spike gets a small seeded magnitude jitter and is recorded in the artifact
    log. With both magnitudes zero the capture is returned untouched.
    """
    if beginning_magnitude_sigma < 0 or periodic_magnitude_sigma < 0:
        raise ValueError("artifact magnitudes must be >= 0")
    frames = capture.frames.copy()
    log: list[ArtifactEvent] = []
    if beginning_magnitude_sigma == 0 and periodic_magnitude_sigma == 0:
        return IFCapture(frames, capture.config, log)

    sigma = _clean_phase_std(capture)
    rng = np.random.default_rng(seed)

    def stamp(kind: str, frame: int, sigma_multiple: float) -> None:
        jitter = rng.uniform(0.75, 1.25)
        theta = sigma_multiple * sigma * jitter
        frames[frame, 0, :] *= np.exp(1j * theta).astype(np.complex64)
        log.append(ArtifactEvent(kind, frame, 0, float(theta)))

    if beginning_magnitude_sigma > 0:
        stamp("beginning", 0, beginning_magnitude_sigma)
    if periodic_magnitude_sigma > 0:
        for f in range(capture.n_frames):
            stamp("periodic", f, periodic_magnitude_sigma)
    return IFCapture(frames, capture.config, log)


def save_capture(capture: IFCapture, path, seed: int | None = None) -> None:
    """Write the binary capture container and its artifact-log JSON sidecar."""
    path = Path(path)
    header = _CAPTURE_HEADER.pack(
        _CAPTURE_MAGIC,
        capture.config.carrier_freq,
        capture.config.slope,
        capture.config.chirp_duration,
        capture.config.frame_period,
        capture.config.adc_samples_per_chirp,
        capture.config.chirps_per_frame,
        capture.n_frames,
        0,
    )
    with open(path, "wb") as fh:
        fh.write(header)
        fh.write(np.ascontiguousarray(capture.frames, dtype=np.complex64).tobytes())
    sidecar = {
        "seed": seed,
        "artifact_log": [event.to_dict() for event in capture.artifact_log],
    }
    with open(_sidecar_path(path), "w", encoding="utf-8") as fh:
        json.dump(sidecar, fh, indent=2)
        fh.write("\n")


def load_capture(path) -> IFCapture:
    """Read a capture container written by save_capture."""
    path = Path(path)
    raw = path.read_bytes()
    if len(raw) < _CAPTURE_HEADER.size:
        raise ValueError("truncated capture file")
    magic, carrier, slope, duration, period, adc, cpf, n_frames, _ = _CAPTURE_HEADER.unpack_from(raw)
    if magic != _CAPTURE_MAGIC:
        raise ValueError("not a capture file: bad magic")
    cfg = ChirpConfig(
        carrier_freq=carrier,
        slope=slope,
        chirp_duration=duration,
        adc_samples_per_chirp=int(adc),
        chirps_per_frame=int(cpf),
        frame_period=period,
    )
    count = int(n_frames) * cfg.chirps_per_frame * cfg.adc_samples_per_chirp
    body = raw[_CAPTURE_HEADER.size :]
    if len(body) != count * 8:
        raise ValueError("truncated capture file")
    frames = np.frombuffer(body, dtype=np.complex64).reshape(
        int(n_frames), cfg.chirps_per_frame, cfg.adc_samples_per_chirp
    )
    log: list[ArtifactEvent] = []
    sidecar = _sidecar_path(path)
    if sidecar.exists():
        with open(sidecar, "r", encoding="utf-8") as fh:
            data = json.load(fh)
        log = [ArtifactEvent.from_dict(d) for d in data.get("artifact_log", [])]
    return IFCapture(frames.copy(), cfg, log)


def _sidecar_path(path: Path) -> Path:
    return path.with_name(path.name + ".artifacts.json")
