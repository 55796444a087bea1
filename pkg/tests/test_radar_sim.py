"""Chirp geometry, the forced-vibration surface model, IF simulation, and artifacts."""

import numpy as np
import pytest

from conftest import make_tone_capture, make_tone_trace
from mmvib import (
    AudioBuffer,
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
    unwrap_phase,
)

SPEED_OF_LIGHT = 299792458.0


class TestChirpConfig:
    def test_defaults(self, chirp_cfg):
        assert chirp_cfg.chirps_per_frame == 256
        assert chirp_cfg.frame_period == pytest.approx(0.032)
        assert chirp_cfg.effective_sampling_rate == pytest.approx(8000.0)
        assert chirp_cfg.bandwidth <= 4e9 * (1 + 1e-9)

    def test_duty_cycle_enforced(self):
        with pytest.raises(ValueError):
            ChirpConfig(chirp_duration=0.032 / 256 * 1.5)

    def test_bandwidth_cap(self):
        with pytest.raises(ValueError):
            ChirpConfig(slope=8e9 / ChirpConfig().chirp_duration)

    def test_wavelength(self, chirp_cfg):
        assert chirp_cfg.wavelength == pytest.approx(SPEED_OF_LIGHT / 60e9)


class TestRangeGeometry:
    def test_full_bandwidth_resolution(self, chirp_cfg):
        # 4 GHz sweep: c / (2 * 4e9)
        assert range_resolution(chirp_cfg) == pytest.approx(0.0375, rel=1e-3)

    def test_halved_duration_doubles_resolution(self, chirp_cfg):
        from dataclasses import replace

        shorter = replace(chirp_cfg, chirp_duration=chirp_cfg.chirp_duration / 2)
        assert range_resolution(shorter) == pytest.approx(2 * range_resolution(chirp_cfg))

    def test_doubled_chirp_rate_coarsens_resolution(self, chirp_cfg):
        from dataclasses import replace

        fast = replace(
            chirp_cfg,
            chirps_per_frame=512,
            chirp_duration=chirp_cfg.chirp_duration / 2,
        )
        assert fast.effective_sampling_rate == pytest.approx(16000.0)
        assert range_resolution(fast) == pytest.approx(2 * range_resolution(chirp_cfg))

    def test_max_unambiguous_range(self, chirp_cfg):
        expected = range_resolution(chirp_cfg) * chirp_cfg.adc_samples_per_chirp / 2
        assert max_unambiguous_range(chirp_cfg) == pytest.approx(expected)


class TestForcedResponse:
    def test_static_deflection(self):
        mat = SurfaceMaterial(mass=1.0, stiffness=1.0, damping=0.1, reflectivity=1.0)
        assert forced_response_amplitude(mat, 1.0, 0.0) == pytest.approx(1.0)

    def test_resonant_amplitude(self):
        mat = SurfaceMaterial(mass=1.0, stiffness=1.0, damping=0.1, reflectivity=1.0)
        assert forced_response_amplitude(mat, 1.0, 1.0) == pytest.approx(10.0)

    def test_high_frequency_rolloff(self):
        mat = SurfaceMaterial(mass=1.0, stiffness=1.0, damping=0.1, reflectivity=1.0)
        assert forced_response_amplitude(mat, 1.0, 10.0) == pytest.approx(0.0101005, rel=1e-5)

    def test_undamped_resonance_rejected(self):
        mat = SurfaceMaterial(mass=1.0, stiffness=4.0, damping=0.0, reflectivity=1.0)
        with pytest.raises(ValueError, match="unbounded resonance"):
            forced_response_amplitude(mat, 1.0, 2.0)

    def test_natural_frequency(self):
        mat = SurfaceMaterial(mass=0.25, stiffness=9.0, damping=0.1, reflectivity=1.0)
        assert mat.natural_frequency == pytest.approx(6.0)

    def test_material_validation(self):
        with pytest.raises(ValueError):
            SurfaceMaterial(mass=0.0, stiffness=1.0, damping=0.1, reflectivity=1.0)
        with pytest.raises(ValueError):
            SurfaceMaterial(mass=1.0, stiffness=1.0, damping=-0.1, reflectivity=1.0)
        with pytest.raises(ValueError):
            SurfaceMaterial(mass=1.0, stiffness=1.0, damping=0.1, reflectivity=1.5)


class TestDisplacementFromAudio:
    def test_resonant_tone_dominates(self):
        mat = SurfaceMaterial(mass=1e-4, stiffness=1e-4 * (2 * np.pi * 500.0) ** 2,
                              damping=0.01, reflectivity=1.0)
        rate = 8000.0
        t = np.arange(8000) / rate
        # equal-amplitude tones at w_n and far below it
        audio = AudioBuffer(np.sin(2 * np.pi * 500.0 * t) + np.sin(2 * np.pi * 100.0 * t), rate)
        out = displacement_from_audio(audio, mat, 1.0)
        spectrum = np.abs(np.fft.rfft(out.displacement))
        assert spectrum[500] > 5 * spectrum[100]

    def test_mass_increases_high_frequency_attenuation(self):
        rate = 8000.0
        t = np.arange(8000) / rate
        audio = AudioBuffer(np.sin(2 * np.pi * 100.0 * t) + np.sin(2 * np.pi * 3000.0 * t), rate)

        def ratio(mass):
            mat = SurfaceMaterial(mass=mass, stiffness=100.0, damping=0.05, reflectivity=1.0)
            spec = np.abs(np.fft.rfft(displacement_from_audio(audio, mat, 1.0).displacement))
            return spec[3000] / spec[100]

        assert ratio(1e-3) < ratio(1e-4) < 1.0

    def test_zero_audio_zero_displacement(self):
        mat = SurfaceMaterial(mass=1.0, stiffness=1.0, damping=0.1, reflectivity=1.0)
        out = displacement_from_audio(AudioBuffer(np.zeros(128), 8000.0), mat, 1.0)
        assert np.all(out.displacement == 0)

    def test_empty_audio_rejected(self):
        mat = SurfaceMaterial(mass=1.0, stiffness=1.0, damping=0.1, reflectivity=1.0)
        with pytest.raises(ValueError, match="empty audio"):
            displacement_from_audio(AudioBuffer(np.array([]), 8000.0), mat, 1.0)


class TestSimulate:
    def test_static_target_constant_phase(self, chirp_cfg):
        vib = VibrationTrace(np.zeros(512), chirp_cfg.effective_sampling_rate)
        cap = simulate_if_frames(chirp_cfg, vib, 1.5, noise_floor_db=-120.0, seed=0)
        spectra = np.fft.fft(cap.flat_chirps(), axis=1)
        bins = np.abs(spectra[:, : chirp_cfg.adc_samples_per_chirp // 2 + 1])
        target = int(bins.mean(axis=0).argmax())
        phases = unwrap_phase(np.angle(spectra[:, target]))
        assert phases.std() < 1e-3

    def test_frame_count_and_shape(self, chirp_cfg):
        vib = make_tone_trace(chirp_cfg, 500.0, duration_s=0.96)
        cap = simulate_if_frames(chirp_cfg, vib, 1.5, seed=0)
        assert cap.n_frames == 30
        assert cap.frames.shape == (30, 256, 256)
        assert cap.frames.dtype == np.complex64

    def test_doubling_range_doubles_beat_bin(self, chirp_cfg):
        vib = VibrationTrace(np.zeros(256), chirp_cfg.effective_sampling_rate)

        def peak_bin(range_m):
            cap = simulate_if_frames(chirp_cfg, vib, range_m, noise_floor_db=-120.0, seed=0)
            spec = np.abs(np.fft.fft(cap.flat_chirps(), axis=1))
            half = spec[:, : chirp_cfg.adc_samples_per_chirp // 2 + 1]
            return int(half.mean(axis=0).argmax())

        bin_size = range_resolution(chirp_cfg)
        near, far = peak_bin(30 * bin_size), peak_bin(60 * bin_size)
        assert (near, far) == (30, 60)

    def test_range_aliasing_rejected(self, chirp_cfg):
        vib = VibrationTrace(np.zeros(256), chirp_cfg.effective_sampling_rate)
        with pytest.raises(ValueError, match="range aliasing"):
            simulate_if_frames(chirp_cfg, vib, max_unambiguous_range(chirp_cfg) + 0.1, seed=0)

    def test_rate_mismatch_rejected(self, chirp_cfg):
        vib = VibrationTrace(np.zeros(256), 44100.0)
        with pytest.raises(ValueError, match="sampled at"):
            simulate_if_frames(chirp_cfg, vib, 1.5, seed=0)

    def test_oversized_displacement_rejected(self, chirp_cfg):
        amp = chirp_cfg.wavelength / 3.0
        vib = make_tone_trace(chirp_cfg, 100.0, amplitude_m=amp)
        with pytest.raises(ValueError, match="displacement"):
            simulate_if_frames(chirp_cfg, vib, 1.5, seed=0)

    def test_seed_determinism(self, chirp_cfg):
        vib = make_tone_trace(chirp_cfg, 500.0, duration_s=0.096)
        a = simulate_if_frames(chirp_cfg, vib, 1.5, seed=42)
        b = simulate_if_frames(chirp_cfg, vib, 1.5, seed=42)
        c = simulate_if_frames(chirp_cfg, vib, 1.5, seed=43)
        assert np.array_equal(a.frames, b.frames)
        assert not np.array_equal(a.frames, c.frames)

    def test_reflectivity_scales_echo(self, chirp_cfg):
        vib = VibrationTrace(np.zeros(256), chirp_cfg.effective_sampling_rate)
        full = simulate_if_frames(chirp_cfg, vib, 1.5, reflectivity=1.0,
                                  noise_floor_db=-300.0, seed=0)
        half = simulate_if_frames(chirp_cfg, vib, 1.5, reflectivity=0.5,
                                  noise_floor_db=-300.0, seed=0)
        ratio = np.abs(half.frames).mean() / np.abs(full.frames).mean()
        assert ratio == pytest.approx(0.5, rel=1e-5)


class TestArtifacts:
    def test_zero_magnitudes_noop(self, chirp_cfg):
        cap = make_tone_capture(chirp_cfg, 500.0, duration_s=0.096)
        out = inject_artifacts(cap, 0.0, 0.0, seed=0)
        assert np.array_equal(out.frames, cap.frames)
        assert out.artifact_log == []

    def test_beginning_only_logs_one_event(self, chirp_cfg):
        cap = make_tone_capture(chirp_cfg, 500.0, duration_s=0.096)
        out = inject_artifacts(cap, 10.0, 0.0, seed=0)
        assert len(out.artifact_log) == 1
        event = out.artifact_log[0]
        assert (event.kind, event.frame, event.chirp) == ("beginning", 0, 0)
        assert event.magnitude_rad > 0

    def test_periodic_logs_every_frame(self, chirp_cfg):
        cap = make_tone_capture(chirp_cfg, 500.0, duration_s=0.96)
        out = inject_artifacts(cap, 0.0, 6.0, seed=0)
        periodic = [e for e in out.artifact_log if e.kind == "periodic"]
        assert len(periodic) == cap.n_frames
        assert all(e.chirp == 0 for e in periodic)
        assert sorted(e.frame for e in periodic) == list(range(cap.n_frames))

    def test_periodic_creates_frame_rate_lines(self, chirp_cfg):
        from mmvib import extract_vibration

        cap = make_tone_capture(chirp_cfg, 500.0, duration_s=0.96, noise_floor_db=-80.0)
        spiked = inject_artifacts(cap, 0.0, 6.0, seed=1)
        clean = extract_vibration(cap, preprocess=False)
        dirty = extract_vibration(spiked, preprocess=False)
        # frame rate 31.25 Hz -> bin spacing 30 in a 7680-sample transform
        comb = np.arange(30, 3840, 30)
        comb = comb[np.abs(comb - 480) > 3]  # skip the tone itself
        clean_spec = np.abs(np.fft.rfft(clean.displacement))
        dirty_spec = np.abs(np.fft.rfft(dirty.displacement))
        gain_db = 20 * np.log10(dirty_spec[comb].max() / clean_spec[comb].max())
        assert gain_db > 20.0

    def test_input_capture_unmodified(self, chirp_cfg):
        cap = make_tone_capture(chirp_cfg, 500.0, duration_s=0.096)
        before = cap.frames.copy()
        inject_artifacts(cap, 10.0, 6.0, seed=0)
        assert np.array_equal(cap.frames, before)


class TestCaptureIO:
    def test_round_trip_exact(self, chirp_cfg, tmp_path):
        cap = make_tone_capture(chirp_cfg, 500.0, duration_s=0.096)
        cap = inject_artifacts(cap, 10.0, 6.0, seed=5)
        path = tmp_path / "cap.bin"
        save_capture(cap, path, seed=5)
        loaded = load_capture(path)
        assert np.array_equal(loaded.frames, cap.frames)
        assert loaded.config == cap.config
        assert [e.to_dict() for e in loaded.artifact_log] == [
            e.to_dict() for e in cap.artifact_log
        ]

    def test_corrupt_magic(self, chirp_cfg, tmp_path):
        cap = make_tone_capture(chirp_cfg, 500.0, duration_s=0.096)
        path = tmp_path / "cap.bin"
        save_capture(cap, path)
        data = bytearray(path.read_bytes())
        data[:4] = b"XXXX"
        path.write_bytes(bytes(data))
        with pytest.raises(ValueError, match="bad magic"):
            load_capture(path)

    def test_truncated_body(self, chirp_cfg, tmp_path):
        cap = make_tone_capture(chirp_cfg, 500.0, duration_s=0.096)
        path = tmp_path / "cap.bin"
        save_capture(cap, path)
        path.write_bytes(path.read_bytes()[:-100])
        with pytest.raises(ValueError, match="truncated"):
            load_capture(path)

    def test_capture_shape_validation(self, chirp_cfg):
        with pytest.raises(ValueError):
            IFCapture(np.zeros((2, 16, 16), dtype=np.complex64), chirp_cfg)
