"""Command-line pipeline: simulate, extract, synth, score, sweep."""

from __future__ import annotations

import argparse
import configparser
import csv
import json
import os
import sys
from dataclasses import dataclass, field, replace
from pathlib import Path

import numpy as np

from .audio_io import low_pass, read_wav, resample, write_wav
from .metrics import score_pair
from .radar_sim import (
    ChirpConfig,
    IFCapture,
    SurfaceMaterial,
    inject_artifacts,
    load_capture,
    range_resolution,
    save_capture,
    simulate_if_frames,
    displacement_from_audio,
)
from .signal_core import AudioBuffer, zscore_normalize
from .synth import SynthesisConfig, build_dataset, item_seed, synthesize_mmvib
from .vib_extract import extract_vibration, range_fft, select_target_bin

SEED_ENV_VAR = "MMVIB_SEED"

SWEEP_PARAMETERS = (
    "chirps_per_frame",
    "range_m",
    "noise_floor_db",
    "alpha",
    "beta",
    "material",
)

# Sweep references are low-passed here before scoring; the sensing band ends
# at half the default 8 kHz chirp rate.
REFERENCE_BAND_HZ = 4000.0

MATERIAL_PRESETS = {
    # Thin taut PET film: light and stiff, resonance near 8 kHz (above the
    # speech band, so the in-band response stays nearly flat), well damped.
    "pet": SurfaceMaterial(mass=5.0e-5, stiffness=1.263e5, damping=3.02, reflectivity=0.95),
    # Tinfoil: heavier and floppier, resonance near 1.2 kHz, light damping;
    # colors the recovered speech noticeably.
    "tinfoil": SurfaceMaterial(mass=3.0e-4, stiffness=1.71e4, damping=0.68, reflectivity=0.85),
}


@dataclass
class PipelineConfig:
    """Validated end-to-end settings for the command-line pipeline."""

    chirp: ChirpConfig = field(default_factory=ChirpConfig)
    material: SurfaceMaterial = field(default_factory=lambda: MATERIAL_PRESETS["pet"])
    range_m: float = 1.5
    noise_floor_db: float = -60.0
    force_scale: float = 0.5
    beginning_sigma: float = 10.0
    periodic_sigma: float = 6.0
    alpha: float = 1.0
    beta: float = 0.3
    synth_sample_rate: float = 8000.0
    seed: int = 0

    def __post_init__(self) -> None:
        if not np.isfinite(self.range_m) or self.range_m <= 0:
            raise ValueError(f"range_m must be positive, got {self.range_m}")
        if not np.isfinite(self.noise_floor_db):
            raise ValueError(f"noise_floor_db must be finite, got {self.noise_floor_db}")
        if not np.isfinite(self.force_scale) or self.force_scale <= 0:
            raise ValueError(f"force_scale must be positive, got {self.force_scale}")
        if self.beginning_sigma < 0 or self.periodic_sigma < 0:
            raise ValueError("artifact magnitudes must be >= 0")
        if self.alpha < 0 or self.beta < 0:
            raise ValueError("alpha and beta must be >= 0")
        if self.synth_sample_rate <= 0:
            raise ValueError(f"synth_sample_rate must be positive, got {self.synth_sample_rate}")


_CHIRP_KEYS = (
    "carrier_freq",
    "slope",
    "chirp_duration",
    "adc_samples_per_chirp",
    "chirps_per_frame",
    "frame_period",
)
_MATERIAL_KEYS = ("preset", "mass", "stiffness", "damping", "reflectivity")
_SCENE_KEYS = ("range_m", "noise_floor_db", "force_scale")
_ARTIFACT_KEYS = ("beginning_sigma", "periodic_sigma")
_SYNTH_KEYS = ("alpha", "beta", "sample_rate")
_RUN_KEYS = ("seed",)
_SECTIONS = {
    "chirp": _CHIRP_KEYS,
    "material": _MATERIAL_KEYS,
    "scene": _SCENE_KEYS,
    "artifacts": _ARTIFACT_KEYS,
    "synthesis": _SYNTH_KEYS,
    "run": _RUN_KEYS,
}


def load_config(path=None) -> PipelineConfig:
    """Build a PipelineConfig from an INI-style file, falling back to defaults.

    Every value is validated by the owning dataclass; errors carry the
    section and key of the offending field. MMVIB_SEED in the environment
    overrides the configured seed.
    """
    values: dict[str, dict[str, str]] = {name: {} for name in _SECTIONS}
    if path is not None:
        parser = configparser.ConfigParser()
        with open(path, "r", encoding="utf-8") as fh:
            parser.read_file(fh)
        for section in parser.sections():
            if section not in _SECTIONS:
                raise ValueError(f"config section [{section}] is not recognized")
            for key, raw in parser[section].items():
                if key not in _SECTIONS[section]:
                    raise ValueError(f"config field [{section}] {key} is not recognized")
                values[section][key] = raw

    def parse(section: str, key: str, cast, default):
        raw = values[section].get(key)
        if raw is None:
            return default
        try:
            return cast(raw)
        except ValueError as exc:
            raise ValueError(f"config field [{section}] {key}: {exc}") from None

    chirp_defaults = ChirpConfig()
    chirp_kwargs = {
        "carrier_freq": parse("chirp", "carrier_freq", float, chirp_defaults.carrier_freq),
        "slope": parse("chirp", "slope", float, chirp_defaults.slope),
        "chirp_duration": parse("chirp", "chirp_duration", float, chirp_defaults.chirp_duration),
        "adc_samples_per_chirp": parse(
            "chirp", "adc_samples_per_chirp", lambda s: int(float(s)),
            chirp_defaults.adc_samples_per_chirp,
        ),
        "chirps_per_frame": parse(
            "chirp", "chirps_per_frame", lambda s: int(float(s)),
            chirp_defaults.chirps_per_frame,
        ),
        "frame_period": parse("chirp", "frame_period", float, chirp_defaults.frame_period),
    }
    try:
        chirp = ChirpConfig(**chirp_kwargs)
    except ValueError as exc:
        raise ValueError(f"config section [chirp]: {exc}") from None

    preset = values["material"].get("preset", "pet")
    if preset not in MATERIAL_PRESETS:
        raise ValueError(
            f"config field [material] preset: unknown preset '{preset}', "
            f"valid: {', '.join(sorted(MATERIAL_PRESETS))}"
        )
    base = MATERIAL_PRESETS[preset]
    material_kwargs = {
        "mass": parse("material", "mass", float, base.mass),
        "stiffness": parse("material", "stiffness", float, base.stiffness),
        "damping": parse("material", "damping", float, base.damping),
        "reflectivity": parse("material", "reflectivity", float, base.reflectivity),
    }
    try:
        material = SurfaceMaterial(**material_kwargs)
    except ValueError as exc:
        raise ValueError(f"config section [material]: {exc}") from None

    seed = parse("run", "seed", lambda s: int(float(s)), 0)
    env_seed = os.environ.get(SEED_ENV_VAR)
    if env_seed is not None:
        try:
            seed = int(env_seed)
        except ValueError:
            raise ValueError(f"{SEED_ENV_VAR} must be an integer, got '{env_seed}'") from None

    try:
        return PipelineConfig(
            chirp=chirp,
            material=material,
            range_m=parse("scene", "range_m", float, 1.5),
            noise_floor_db=parse("scene", "noise_floor_db", float, -60.0),
            force_scale=parse("scene", "force_scale", float, 0.5),
            beginning_sigma=parse("artifacts", "beginning_sigma", float, 10.0),
            periodic_sigma=parse("artifacts", "periodic_sigma", float, 6.0),
            alpha=parse("synthesis", "alpha", float, 1.0),
            beta=parse("synthesis", "beta", float, 0.3),
            synth_sample_rate=parse("synthesis", "sample_rate", float, 8000.0),
            seed=seed,
        )
    except ValueError as exc:
        raise ValueError(f"config: {exc}") from None


def _simulate_capture(config: PipelineConfig, audio: AudioBuffer, seed_key) -> IFCapture:
    """Shared simulate path: resample, z-score, force the surface, capture, inject."""
    rate = config.chirp.effective_sampling_rate
    forcing = zscore_normalize(resample(audio, rate))
    vibration = displacement_from_audio(forcing, config.material, config.force_scale)
    sim_seed, artifact_seed = np.random.SeedSequence(seed_key).spawn(2)
    capture = simulate_if_frames(
        config.chirp,
        vibration,
        config.range_m,
        reflectivity=config.material.reflectivity,
        noise_floor_db=config.noise_floor_db,
        seed=sim_seed,
    )
    if config.beginning_sigma > 0 or config.periodic_sigma > 0:
        capture = inject_artifacts(
            capture, config.beginning_sigma, config.periodic_sigma, seed=artifact_seed
        )
    return capture


def cmd_simulate(config: PipelineConfig, audio_in, capture_out) -> int:
    """Simulate an IF capture from a WAV forcing signal and write the container."""
    try:
        audio = read_wav(audio_in)
        if len(audio) == 0:
            raise ValueError("audio is empty")
        capture = _simulate_capture(config, audio, config.seed)
        save_capture(capture, capture_out, seed=config.seed)
    except (OSError, ValueError) as exc:
        print(f"simulate failed: {exc}", file=sys.stderr)
        return 1
    print(f"range resolution: {range_resolution(config.chirp):.6f} m")
    print(f"vibration sampling rate: {config.chirp.effective_sampling_rate:.1f} Hz")
    print(f"wrote {capture.n_frames} frames to {capture_out}")
    return 0


def cmd_extract(capture_in, wav_out, preprocess: bool = True) -> int:
    """Recover the vibration trace from a capture and write it as float32 WAV."""
    try:
        capture = load_capture(capture_in)
        target = select_target_bin(range_fft(capture))
        trace = extract_vibration(capture, preprocess=preprocess)
        write_wav(wav_out, AudioBuffer(trace.displacement, trace.sample_rate))
        sidecar = {
            "capture": str(capture_in),
            "sample_rate": trace.sample_rate,
            "samples": len(trace),
            "target_bin": target,
            "bin_size_m": range_resolution(capture.config),
            "preprocess": preprocess,
        }
        sidecar_path = Path(wav_out).with_name(Path(wav_out).name + ".json")
        with open(sidecar_path, "w", encoding="utf-8") as fh:
            json.dump(sidecar, fh, indent=2)
            fh.write("\n")
    except (OSError, ValueError) as exc:
        print(f"extract failed: {exc}", file=sys.stderr)
        return 1
    print(f"extracted {len(trace)} samples at {trace.sample_rate:.1f} Hz (bin {target})")
    return 0


def cmd_synth(
    manifest_in,
    out_dir,
    alpha: float = 1.0,
    beta: float = 0.3,
    seed: int = 0,
    sample_rate: float = 8000.0,
    jitter: bool = False,
) -> int:
    """Build a clean/degraded dataset from a manifest of WAV paths."""
    try:
        cfg = SynthesisConfig(alpha=alpha, beta=beta, seed=seed)
        manifest_out = build_dataset(manifest_in, out_dir, cfg, sample_rate, jitter)
    except (OSError, ValueError, RuntimeError) as exc:
        print(f"synth failed: {exc}", file=sys.stderr)
        return 1
    print(f"wrote {manifest_out}")
    return 0


def _aggregate(pairs: list[dict]) -> dict:
    metric_keys = ("fwsegsnr", "stoi", "mcd", "mel_loss", "mag_l1", "wer", "cer")
    summary = {}
    for key in metric_keys:
        values = [row[key] for row in pairs if row.get(key) is not None]
        if values:
            arr = np.asarray(values, dtype=float)
            summary[key] = {"mean": float(arr.mean()), "std": float(arr.std())}
    return summary


def cmd_score(manifest_in, report_out) -> int:
    """Score every pair in a JSON-lines manifest and write a JSON report.

    Both signals are z-scored before scoring so that traces on physical
    scales compare against unit-scale audio. A pair whose rates differ has
    the degraded side resampled to the reference rate. Unreadable pairs are
    recorded with an error; the command fails only when every pair fails.
    """
    try:
        with open(manifest_in, "r", encoding="utf-8") as fh:
            rows = [json.loads(line) for line in fh if line.strip()]
    except (OSError, ValueError) as exc:
        print(f"score failed: {exc}", file=sys.stderr)
        return 1
    if not rows:
        print("score failed: manifest lists no pairs", file=sys.stderr)
        return 1

    pairs = []
    succeeded = 0
    for row in rows:
        entry = {"ref_path": row.get("ref_path"), "deg_path": row.get("deg_path")}
        try:
            ref = read_wav(row["ref_path"])
            deg = read_wav(row["deg_path"])
            if abs(ref.sample_rate - deg.sample_rate) > 1e-9:
                deg = resample(deg, ref.sample_rate)
            report = score_pair(
                zscore_normalize(ref),
                zscore_normalize(deg),
                row.get("ref_text"),
                row.get("hyp_text"),
            )
            entry.update(report.to_dict())
            succeeded += 1
        except (OSError, ValueError, KeyError) as exc:
            entry["error"] = str(exc)
        pairs.append(entry)

    report_doc = {"pairs": pairs, "aggregate": _aggregate(pairs)}
    with open(report_out, "w", encoding="utf-8") as fh:
        json.dump(report_doc, fh, indent=2)
        fh.write("\n")
    if succeeded == 0:
        print("score failed: all pairs failed", file=sys.stderr)
        return 1
    print(f"scored {succeeded}/{len(pairs)} pairs -> {report_out}")
    return 0


def _sweep_variant(config: PipelineConfig, parameter: str, value) -> PipelineConfig:
    if parameter == "chirps_per_frame":
        cpf = int(float(value))
        duty = (
            config.chirp.chirps_per_frame
            * config.chirp.chirp_duration
            / config.chirp.frame_period
        )
        chirp = replace(
            config.chirp,
            chirps_per_frame=cpf,
            chirp_duration=duty * config.chirp.frame_period / cpf,
        )
        return replace(config, chirp=chirp)
    if parameter == "range_m":
        return replace(config, range_m=float(value))
    if parameter == "noise_floor_db":
        return replace(config, noise_floor_db=float(value))
    if parameter == "alpha":
        return replace(config, alpha=float(value))
    if parameter == "beta":
        return replace(config, beta=float(value))
    if parameter == "material":
        name = str(value)
        if name not in MATERIAL_PRESETS:
            raise ValueError(
                f"unknown material preset '{name}', valid: {', '.join(sorted(MATERIAL_PRESETS))}"
            )
        return replace(config, material=MATERIAL_PRESETS[name])
    raise ValueError(f"unknown parameter '{parameter}'")


def _sweep_point(config: PipelineConfig, parameter: str, value, audio: AudioBuffer, index: int) -> dict:
    variant = _sweep_variant(config, parameter, value)
    if parameter in ("alpha", "beta"):
        clean = zscore_normalize(resample(audio, variant.synth_sample_rate))
        synth_cfg = SynthesisConfig(
            alpha=variant.alpha, beta=variant.beta, seed=item_seed(variant.seed, index)
        )
        degraded = zscore_normalize(synthesize_mmvib(clean, synth_cfg))
        reference = low_pass(clean, REFERENCE_BAND_HZ)
        report = score_pair(zscore_normalize(reference), degraded)
        rate = variant.synth_sample_rate
    else:
        capture = _simulate_capture(variant, audio, (variant.seed, index))
        trace = extract_vibration(capture)
        rate = variant.chirp.effective_sampling_rate
        forcing = zscore_normalize(resample(audio, rate))
        reference = low_pass(forcing, REFERENCE_BAND_HZ)
        n = min(len(trace), len(reference))
        report = score_pair(
            zscore_normalize(AudioBuffer(reference.samples[:n], rate)),
            zscore_normalize(AudioBuffer(trace.displacement[:n], rate)),
        )
    row = {
        "parameter": parameter,
        "value": value,
        "range_resolution_m": range_resolution(variant.chirp),
        "sampling_rate_hz": rate,
    }
    row.update({k: v for k, v in report.to_dict().items() if v is not None})
    return row


_SWEEP_CSV_COLUMNS = (
    "parameter",
    "value",
    "range_resolution_m",
    "sampling_rate_hz",
    "fwsegsnr",
    "stoi",
    "mcd",
    "mel_loss",
    "mag_l1",
)


def cmd_sweep(config: PipelineConfig, parameter: str, values, audio_in, report_out) -> int:
    """Sweep one pipeline parameter, scoring each value against the source audio.

    Radar axes run simulate -> extract and score the recovered trace against
    the band-limited source; alpha/beta run the synthesis degradation instead.
    Writes a JSON report plus a CSV table next to it.
    """
    if parameter not in SWEEP_PARAMETERS:
        print(
            f"unknown parameter '{parameter}'; valid: {', '.join(SWEEP_PARAMETERS)}",
            file=sys.stderr,
        )
        return 2
    values = list(values)
    if not values:
        print("sweep failed: empty value list", file=sys.stderr)
        return 2
    try:
        audio = read_wav(audio_in)
        rows = [
            _sweep_point(config, parameter, value, audio, index)
            for index, value in enumerate(values)
        ]
    except (OSError, ValueError) as exc:
        print(f"sweep failed: {exc}", file=sys.stderr)
        return 1

    report_path = Path(report_out)
    with open(report_path, "w", encoding="utf-8") as fh:
        json.dump({"parameter": parameter, "rows": rows}, fh, indent=2)
        fh.write("\n")
    csv_path = report_path.with_suffix(".csv")
    with open(csv_path, "w", encoding="utf-8", newline="") as fh:
        writer = csv.DictWriter(fh, fieldnames=_SWEEP_CSV_COLUMNS, extrasaction="ignore")
        writer.writeheader()
        for row in rows:
            writer.writerow(row)
    print(f"swept {parameter} over {len(rows)} values -> {report_path}, {csv_path}")
    return 0


def _resolve_seed(cli_seed: int) -> int:
    env_seed = os.environ.get(SEED_ENV_VAR)
    if env_seed is None:
        return cli_seed
    try:
        return int(env_seed)
    except ValueError:
        raise ValueError(f"{SEED_ENV_VAR} must be an integer, got '{env_seed}'") from None


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="mmvib",
        description="Vibration-sensing simulator, extraction, synthesis, and scoring.",
    )
    sub = parser.add_subparsers(dest="command", required=True)

    sim = sub.add_parser("simulate", help="simulate an IF capture from a WAV file")
    sim.add_argument("--config", help="INI config file; defaults used when omitted")
    sim.add_argument("--audio", required=True, help="input WAV forcing signal")
    sim.add_argument("--out", required=True, help="output capture container path")

    ext = sub.add_parser("extract", help="recover the vibration trace from a capture")
    ext.add_argument("--capture", required=True, help="input capture container")
    ext.add_argument("--out", required=True, help="output WAV path")
    ext.add_argument(
        "--no-preprocess",
        action="store_true",
        help="skip beginning/periodic outlier removal",
    )

    syn = sub.add_parser("synth", help="build a degraded dataset from clean WAVs")
    syn.add_argument("--manifest", required=True, help="input manifest of WAV paths")
    syn.add_argument("--out-dir", required=True, help="output dataset directory")
    syn.add_argument("--alpha", type=float, default=1.0, help="purple-noise gain")
    syn.add_argument("--beta", type=float, default=0.3, help="Gaussian-noise gain")
    syn.add_argument("--seed", type=int, default=0, help="root seed")
    syn.add_argument("--sample-rate", type=float, default=8000.0, help="output rate in Hz")
    syn.add_argument("--jitter", action="store_true", help="randomize per-item gains")

    sco = sub.add_parser("score", help="score reference/degraded pairs")
    sco.add_argument("--manifest", required=True, help="JSON-lines pair manifest")
    sco.add_argument("--report", required=True, help="output JSON report path")

    swe = sub.add_parser("sweep", help="sweep one parameter and score each value")
    swe.add_argument("--config", help="INI config file; defaults used when omitted")
    swe.add_argument("--param", required=True, help="parameter name")
    swe.add_argument("--values", required=True, help="comma-separated values")
    swe.add_argument("--audio", required=True, help="source WAV")
    swe.add_argument("--report", required=True, help="output JSON report path")
    return parser


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    try:
        if args.command == "simulate":
            return cmd_simulate(load_config(args.config), args.audio, args.out)
        if args.command == "extract":
            return cmd_extract(args.capture, args.out, preprocess=not args.no_preprocess)
        if args.command == "synth":
            return cmd_synth(
                args.manifest,
                args.out_dir,
                alpha=args.alpha,
                beta=args.beta,
                seed=_resolve_seed(args.seed),
                sample_rate=args.sample_rate,
                jitter=args.jitter,
            )
        if args.command == "score":
            return cmd_score(args.manifest, args.report)
        if args.command == "sweep":
            values = [v for v in args.values.split(",") if v != ""]
            return cmd_sweep(load_config(args.config), args.param, values, args.audio, args.report)
    except (OSError, ValueError) as exc:
        print(f"{args.command} failed: {exc}", file=sys.stderr)
        return 2
    raise AssertionError(f"unhandled command {args.command}")


def entrypoint() -> None:
    sys.exit(main())


if __name__ == "__main__":
    entrypoint()
