"""Synthetic centrifugal-pump vibration generator.

Produces the two-series experiment layout: a reference training set plus four
within-pump maintenance scenarios (T1-T4) and a second training pump plus four
between-pump transfer sets (T5-T8). Class signatures are documented constants
chosen to keep the six classes separable but not trivially so; they are not a
physical pump model.

All randomness flows from explicit seeds. A frame depends on its mounting
rotation only through the final linear remap, so rotating a pump's mounting
rotates its frames sample for sample.
"""

from __future__ import annotations

import zlib
from dataclasses import dataclass, fields, replace
from pathlib import Path

import numpy as np

from .alignment import Rotation
from .frames import FRAME_LENGTH, SAMPLE_RATE_HZ, Dataset, Frame

N_SHAFT_HARMONICS = 5
N_BLADE_HARMONICS = 2

SCENARIO_KINDS = (
    "cooldown",
    "sensor_reattach",
    "screws_reattach",
    "dismantle_rebuild",
    "different_pump",
)


@dataclass(frozen=True)
class SynthConfig:
    """Generator constants; overridable via a key = value config file."""

    # base pump; the reference shaft speed is an integer number of cycles per
    # 512-sample burst (4 * 6644 / 512 Hz) so per-burst harmonic energy does
    # not depend on the sampling phase
    shaft_hz: float = 51.90625
    blade_count: int = 7
    shaft_amps: tuple = (0.3, 0.55, 0.32, 0.2, 0.12)
    blade_amps: tuple = (0.52, 0.24)
    noise_floor: float = 0.5
    axis_energy: tuple = (1.0, 0.6, 0.3)
    gravity: float = 9.81
    distortion: float = 0.12
    frame_gain_jitter: float = 0.01
    pump_family_spread: float = 0.15

    # dataset layout
    frames_per_class: int = 30
    frame_interval_s: float = 60.0
    class_run_gap_s: float = 3600.0

    # class signatures
    partial_blade_factor: float = 0.6
    partial_am_depth: float = 0.25
    partial_am_freq_hz: tuple = (0.5, 2.0)
    dry_odd_factor: float = 1.5
    dry_noise_factor: float = 2.0
    blockage_blade_factor: float = 2.5
    blockage_shaft_factor: float = 0.5
    cavitation_noise_factor: float = 5.0
    cavitation_bursts: tuple = (2, 4)
    cavitation_burst_ms: tuple = (10.0, 30.0)
    idle_factor: float = 0.1

    # maintenance / transfer perturbations
    cooldown_gain: float = 0.01
    reattach_gain: float = 0.06
    reattach_rotation_deg: float = 15.0
    screws_gain: float = 0.06
    screws_harmonic: float = 0.18
    dismantle_gain: float = 0.10
    dismantle_harmonic: float = 0.25
    dismantle_rotation_deg: float = 15.0
    train2_mounting_deg: float = 10.0
    pump_mounting_deg: float = 25.0


def _parse_value(text: str, default):
    if isinstance(default, tuple):
        parts = [p.strip() for p in text.split(",") if p.strip()]
        elem = default[0] if default else 0.0
        cast = int if isinstance(elem, int) else float
        return tuple(cast(p) for p in parts)
    if isinstance(default, int):
        return int(text)
    return float(text)


def load_config(path) -> SynthConfig:
    """Read `key = value` overrides; unknown keys are an error, named in it."""
    defaults = SynthConfig()
    known = {f.name: getattr(defaults, f.name) for f in fields(SynthConfig)}
    overrides = {}
    unknown = []
    for lineno, raw in enumerate(Path(path).read_text().splitlines(), start=1):
        line = raw.split("#", 1)[0].strip()
        if not line:
            continue
        if "=" not in line:
            raise ValueError(f"line {lineno}: expected 'key = value', got {raw!r}")
        key, _, value = line.partition("=")
        key = key.strip()
        if key not in known:
            unknown.append(key)
            continue
        try:
            overrides[key] = _parse_value(value.strip(), known[key])
        except ValueError as exc:
            raise ValueError(f"line {lineno}: bad value for {key}: {exc}") from exc
    if unknown:
        raise ValueError(f"unknown config keys: {', '.join(sorted(unknown))}")
    return replace(defaults, **overrides)


def save_config(cfg: SynthConfig, path) -> None:
    lines = []
    for f in fields(SynthConfig):
        value = getattr(cfg, f.name)
        if isinstance(value, tuple):
            value = ", ".join(str(v) for v in value)
        lines.append(f"{f.name} = {value}")
    Path(path).write_text("\n".join(lines) + "\n")


@dataclass(frozen=True)
class PumpConfig:
    """One pump-sensor installation: spectral content plus mounting rotation."""

    pump_id: str
    shaft_hz: float
    blade_count: int
    shaft_amps: np.ndarray  # harmonics 1..5 of the shaft frequency
    blade_amps: np.ndarray  # harmonics 1..2 of the blade-pass frequency
    noise_floor: float
    shaft_phases: np.ndarray  # (3 axes, 5) fixed structural phase lags
    blade_phases: np.ndarray  # (3 axes, 2)
    mounting: Rotation

    def __post_init__(self):
        if not 10.0 < self.shaft_hz < 200.0:
            raise ValueError(f"shaft frequency out of range: {self.shaft_hz}")
        for name in ("shaft_amps", "blade_amps", "shaft_phases", "blade_phases"):
            arr = np.asarray(getattr(self, name), dtype=np.float64)
            arr.flags.writeable = False
            object.__setattr__(self, name, arr)
        if np.any(self.shaft_amps < 0.0) or np.any(self.blade_amps < 0.0):
            raise ValueError("amplitudes must be non-negative")


@dataclass(frozen=True)
class ScenarioPerturbation:
    """Maintenance/transfer event; severity_rank orders the five kinds."""

    kind: str
    severity_rank: int
    rotation_deg: float
    gain_jitter: float
    harmonic_jitter: float

    def __post_init__(self):
        if self.kind not in SCENARIO_KINDS:
            raise ValueError(f"unknown scenario kind {self.kind!r}")


def scenarios(cfg: SynthConfig) -> dict:
    """The five perturbation kinds in increasing severity order."""
    return {
        "cooldown": ScenarioPerturbation("cooldown", 1, 0.0, cfg.cooldown_gain, 0.0),
        "sensor_reattach": ScenarioPerturbation(
            "sensor_reattach", 2, cfg.reattach_rotation_deg, cfg.reattach_gain, 0.0
        ),
        "screws_reattach": ScenarioPerturbation(
            "screws_reattach", 3, 0.0, cfg.screws_gain, cfg.screws_harmonic
        ),
        "dismantle_rebuild": ScenarioPerturbation(
            "dismantle_rebuild",
            4,
            cfg.dismantle_rotation_deg,
            cfg.dismantle_gain,
            cfg.dismantle_harmonic,
        ),
        "different_pump": ScenarioPerturbation(
            "different_pump", 5, cfg.pump_mounting_deg, cfg.pump_family_spread, cfg.pump_family_spread
        ),
    }


def _random_rotation(rng, max_deg: float) -> Rotation:
    if max_deg <= 0.0:
        return Rotation.identity()
    axis = rng.standard_normal(3)
    axis /= np.linalg.norm(axis)
    angle = np.deg2rad(rng.uniform(0.0, max_deg))
    return Rotation.from_axis_angle(axis, angle)


def make_pump(
    pump_id: str,
    rng,
    cfg: SynthConfig,
    mounting_deg: float = 0.0,
    family_draw: bool = True,
) -> PumpConfig:
    """Draw one pump of the family; `family_draw=False` yields the base pump."""
    s = cfg.pump_family_spread if family_draw else 0.0

    def factor():
        return rng.uniform(1.0 - s, 1.0 + s)

    shaft_hz = cfg.shaft_hz * factor()
    shaft_amps = np.array([a * factor() for a in cfg.shaft_amps])
    blade_amps = np.array([a * factor() for a in cfg.blade_amps])
    noise = cfg.noise_floor * factor()
    shaft_phases = rng.uniform(0.0, 2.0 * np.pi, size=(3, N_SHAFT_HARMONICS))
    blade_phases = rng.uniform(0.0, 2.0 * np.pi, size=(3, N_BLADE_HARMONICS))
    mounting = _random_rotation(rng, mounting_deg)
    return PumpConfig(
        pump_id, shaft_hz, cfg.blade_count, shaft_amps, blade_amps,
        noise, shaft_phases, blade_phases, mounting,
    )


def perturb_pump(pump: PumpConfig, scenario: ScenarioPerturbation, rng) -> PumpConfig:
    """Re-measured installation of the same pump after a maintenance event.

    Gain and harmonic jitter act on the vibration path only (gravity is
    unaffected); rotation jitter composes onto the mounting.
    """
    gain = 1.0 + rng.uniform(-1.0, 1.0) * scenario.gain_jitter
    h = scenario.harmonic_jitter
    shaft_f = 1.0 + rng.uniform(-1.0, 1.0, size=N_SHAFT_HARMONICS) * h
    blade_f = 1.0 + rng.uniform(-1.0, 1.0, size=N_BLADE_HARMONICS) * h
    extra = _random_rotation(rng, scenario.rotation_deg)
    return replace(
        pump,
        shaft_amps=pump.shaft_amps * gain * shaft_f,
        blade_amps=pump.blade_amps * gain * blade_f,
        noise_floor=pump.noise_floor * gain,
        mounting=extra.compose(pump.mounting),
    )


def _frame_rng(pump_id: str, class_id: int, t_ms: int, seed: int):
    tag = zlib.crc32(pump_id.encode("utf-8"))
    return np.random.default_rng(
        np.random.SeedSequence(entropy=[seed & 0xFFFFFFFFFFFFFFFF, tag, class_id, t_ms])
    )


def simulate_frame(
    pump: PumpConfig, class_id: int, t: float, seed: int, cfg: SynthConfig = SynthConfig()
) -> Frame:
    """One labeled 512-sample burst of the given pump and operating class.

    The harmonic stack is phase-locked to a random shaft angle per burst, a
    quadratic distortion gives the waveform a stable positive skew, vibration
    energy is split x:y:z before the mounting rotation, and gravity sits on
    the pre-rotation z axis. Deterministic in (pump, class, t, seed).
    """
    t_ms = int(round(t * 1000.0))
    rng = _frame_rng(pump.pump_id, class_id, t_ms, seed)
    tau = np.arange(FRAME_LENGTH) / SAMPLE_RATE_HZ

    shaft_mult = np.ones(N_SHAFT_HARMONICS)
    blade_mult = np.ones(N_BLADE_HARMONICS)
    noise_mult = 1.0
    am_gain = None
    burst = None

    theta0 = rng.uniform(0.0, 2.0 * np.pi)
    # slow coupling drift: per-burst vibration gain, gravity unaffected
    frame_gain = 1.0 + rng.uniform(-1.0, 1.0) * cfg.frame_gain_jitter
    if class_id == 2:
        f_am = rng.uniform(*cfg.partial_am_freq_hz)
        phi_am = rng.uniform(0.0, 2.0 * np.pi)
        blade_mult *= cfg.partial_blade_factor
        am_gain = 1.0 + cfg.partial_am_depth * np.sin(2.0 * np.pi * f_am * tau + phi_am)
    elif class_id == 3:
        shaft_mult[0::2] *= cfg.dry_odd_factor  # odd harmonics 1, 3, 5
        noise_mult = cfg.dry_noise_factor
    elif class_id == 4:
        blade_mult *= cfg.blockage_blade_factor
        shaft_mult[0] *= cfg.blockage_shaft_factor
    elif class_id == 5:
        lo, hi = cfg.cavitation_bursts
        n_bursts = int(rng.integers(lo, hi + 1))
        envelope = np.zeros(FRAME_LENGTH)
        for _ in range(n_bursts):
            center = rng.uniform(0.0, 1.0) * FRAME_LENGTH
            width = int(rng.uniform(*cfg.cavitation_burst_ms) * 1e-3 * SAMPLE_RATE_HZ)
            start = int(np.clip(center - width / 2, 0, FRAME_LENGTH - 1))
            stop = min(start + width, FRAME_LENGTH)
            envelope[start:stop] = np.maximum(
                envelope[start:stop], np.hanning(stop - start)
            )
        burst_noise = rng.standard_normal((3, FRAME_LENGTH))
        burst = envelope * burst_noise * (cfg.cavitation_noise_factor * pump.noise_floor)
    elif class_id == 6:
        shaft_mult *= cfg.idle_factor
        blade_mult *= cfg.idle_factor
        noise_mult = cfg.idle_factor
    elif class_id != 1:
        raise ValueError(f"class label must be in 1..6, got {class_id}")

    noise = rng.standard_normal((3, FRAME_LENGTH))

    gains = np.sqrt(np.asarray(cfg.axis_energy))
    f_blade = pump.shaft_hz * pump.blade_count
    samples = np.empty((3, FRAME_LENGTH))
    for axis in range(3):
        h = np.zeros(FRAME_LENGTH)
        for k in range(N_SHAFT_HARMONICS):
            amp = pump.shaft_amps[k] * shaft_mult[k]
            if amp > 0.0:
                omega = 2.0 * np.pi * (k + 1) * pump.shaft_hz
                h += amp * np.sin(
                    omega * tau + (k + 1) * theta0 + pump.shaft_phases[axis, k]
                )
        for m in range(N_BLADE_HARMONICS):
            amp = pump.blade_amps[m] * blade_mult[m]
            if amp > 0.0:
                omega = 2.0 * np.pi * (m + 1) * f_blade
                h += amp * np.sin(
                    omega * tau
                    + (m + 1) * pump.blade_count * theta0
                    + pump.blade_phases[axis, m]
                )
        if am_gain is not None:
            h = h * am_gain
        s = h + cfg.distortion * h * h
        if burst is not None:
            s = s + burst[axis]
        s = s + noise[axis] * (pump.noise_floor * noise_mult)
        samples[axis] = gains[axis] * frame_gain * s

    samples[2] += cfg.gravity
    samples = pump.mounting.m @ samples
    return Frame(
        pump_id=pump.pump_id,
        timestamp=t_ms,
        x=samples[0],
        y=samples[1],
        z=samples[2],
        label=class_id,
    )


def simulate_dataset(
    pump: PumpConfig, name: str, day_index: int, seed: int, cfg: SynthConfig
) -> Dataset:
    """frames_per_class bursts per class; class runs one hour apart, frames at
    one-minute spacing inside a run."""
    frames = []
    day_s = day_index * 86400.0
    for class_id in (1, 2, 3, 4, 5, 6):
        run_start = day_s + (class_id - 1) * cfg.class_run_gap_s
        for i in range(cfg.frames_per_class):
            t = run_start + i * cfg.frame_interval_s
            frames.append(simulate_frame(pump, class_id, t, seed, cfg))
    return Dataset(tuple(frames), name)


SERIES_NAMES = (
    "TrainingSetI", "T1", "T2", "T3", "T4",
    "TrainingSetII", "T5", "T6", "T7", "T8",
)


def generate_series(base_seed: int, cfg: SynthConfig = SynthConfig()) -> dict:
    """The full two-series layout as a name -> Dataset map.

    TrainingSetI is the unperturbed reference pump (identity mounting); T1-T4
    re-measure it after the four maintenance scenarios; TrainingSetII is a
    fresh pump of the family; T5-T8 are four further family pumps with their
    own mountings. Deterministic given base_seed.
    """
    root = np.random.SeedSequence(base_seed)
    children = root.spawn(20)
    scen = scenarios(cfg)

    def rng_of(i):
        return np.random.default_rng(children[i])

    def seed_of(i) -> int:
        return int(children[i].generate_state(1, dtype=np.uint64)[0] & 0x7FFFFFFFFFFFFFFF)

    pump_x0 = make_pump("X0", rng_of(0), cfg, mounting_deg=0.0, family_draw=False)
    pump_x1 = make_pump("X1", rng_of(5), cfg, mounting_deg=cfg.train2_mounting_deg)

    datasets = {}
    datasets["TrainingSetI"] = simulate_dataset(pump_x0, "TrainingSetI", 0, seed_of(10), cfg)
    for i, kind in enumerate(
        ("cooldown", "sensor_reattach", "screws_reattach", "dismantle_rebuild"), start=1
    ):
        perturbed = perturb_pump(pump_x0, scen[kind], rng_of(i))
        datasets[f"T{i}"] = simulate_dataset(perturbed, f"T{i}", i, seed_of(10 + i), cfg)

    datasets["TrainingSetII"] = simulate_dataset(pump_x1, "TrainingSetII", 5, seed_of(15), cfg)
    for j in range(4):
        pump = make_pump(f"P{5 + j}", rng_of(6 + j), cfg, mounting_deg=cfg.pump_mounting_deg)
        datasets[f"T{5 + j}"] = simulate_dataset(pump, f"T{5 + j}", 6 + j, seed_of(16 + j), cfg)
    return datasets
