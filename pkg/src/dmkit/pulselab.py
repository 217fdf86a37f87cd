"""Time-bin pulse-train optics: modulator, interferometer, detector.

Times are in picoseconds. A d-dimensional state is a train of d Gaussian
field pulses at ``t = 0, T, ..., (d-1) T``; basis state |k> is the pulse at
``k T``.
"""
from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np

from .linalg import ket

__all__ = [
    "FWHM_TO_SIGMA",
    "PulseTrainState",
    "DpmDrive",
    "AmziConfig",
    "Waveform",
    "CORPUS",
    "corpus_state",
    "gaussian_pulse",
    "dpm_output",
    "drive_for_field",
    "synth_pulse_train",
    "amzi",
    "detect",
    "write_waveform_csv",
    "read_waveform_csv",
    "state_to_json",
    "state_from_json",
]

FWHM_TO_SIGMA = 1.0 / (2.0 * math.sqrt(2.0 * math.log(2.0)))


@dataclass(frozen=True)
class PulseTrainState:
    amplitudes: np.ndarray
    period: float = 200.0
    width: float = 44.0  # field FWHM

    def __post_init__(self):
        object.__setattr__(self, "amplitudes", ket(self.amplitudes))
        if not self.period > self.width > 0:
            raise ValueError("need period > width > 0")

    @property
    def d(self) -> int:
        return self.amplitudes.size

    @property
    def density(self) -> np.ndarray:
        c = self.amplitudes
        return np.outer(c, c.conj())


@dataclass(frozen=True)
class DpmDrive:
    v1: np.ndarray
    v2: np.ndarray
    vpi1: float = 1.0
    vpi2: float = 1.0
    vpi_ph: float = 1.0
    vph: float = 0.5
    dt: float = 1.0
    t0: float = 0.0

    def __post_init__(self):
        v1 = np.asarray(self.v1, dtype=float)
        v2 = np.asarray(self.v2, dtype=float)
        if v1.shape != v2.shape or v1.ndim != 1:
            raise ValueError("V1 and V2 must be 1-d waveforms of equal length")
        if min(self.vpi1, self.vpi2, self.vpi_ph) <= 0:
            raise ValueError("half-wave voltages must be positive")
        object.__setattr__(self, "v1", v1)
        object.__setattr__(self, "v2", v2)


@dataclass(frozen=True)
class AmziConfig:
    delay: float = 200.0
    phase: float = 0.0  # degrees, applied to the delayed arm
    split: float = 0.5


@dataclass(frozen=True)
class Waveform:
    dt: float
    samples: np.ndarray = field(repr=False)
    t0: float = 0.0

    def __post_init__(self):
        s = np.asarray(self.samples)
        if not self.dt > 0:
            raise ValueError("sample step must be positive")
        if s.ndim != 1 or not np.all(np.isfinite(s)):
            raise ValueError("waveform samples must be a finite 1-d array")
        object.__setattr__(self, "samples", s)

    @property
    def times(self) -> np.ndarray:
        return self.t0 + self.dt * np.arange(self.samples.size)

    @property
    def is_field(self) -> bool:
        return np.iscomplexobj(self.samples)

    def energy(self) -> float:
        return float(np.sum(np.abs(self.samples) ** 2) * self.dt)


# in-repo stand-ins for the five test states; numeric amplitudes, not the
# hardware waveforms
CORPUS = {
    "uniform": np.array([1, 1, 1]) / np.sqrt(3),
    "one_hot": np.array([0, 1, 0], dtype=float),
    "two_pulse_90": np.array([1, 1j, 0]) / np.sqrt(2),
    "amplitude_ramp": np.array([1, 2, 3]) / np.sqrt(14),
    "phase_ramp": np.exp(2j * np.pi * np.arange(3) / 3) / np.sqrt(3),
}


def corpus_state(name, period=200.0, width=44.0) -> PulseTrainState:
    return PulseTrainState(CORPUS[name], period, width)


def _steps(length, dt, what):
    n = length / dt
    m = round(n)
    if abs(n - m) > 1e-9 * max(1.0, abs(n)):
        raise ValueError(f"{what} {length} ps is not a multiple of the sample step {dt} ps")
    return int(m)


def gaussian_pulse(t, width) -> np.ndarray:
    """Unit-peak Gaussian with full width at half maximum ``width``."""
    sigma = width * FWHM_TO_SIGMA
    return np.exp(-0.5 * (np.asarray(t) / sigma) ** 2)


def dpm_output(drive: DpmDrive) -> Waveform:
    """Field from the dual-parallel modulator (proportionality constant 1)."""
    f = (np.sin(np.pi * drive.v1 / drive.vpi1)
         + np.exp(1j * np.pi * drive.vph / drive.vpi_ph) * np.sin(np.pi * drive.v2 / drive.vpi2))
    return Waveform(drive.dt, f.astype(np.complex128), drive.t0)


def drive_for_field(target: Waveform, depth=0.01, vpi1=1.0, vpi2=1.0, vpi_ph=1.0) -> DpmDrive:
    """Small-signal drive: V1, V2 proportional to Re, Im of ``target``.

    ``depth`` is the largest ``|V/V_pi|``; the modulator output is then about
    ``pi * depth / max|target|`` times the target.
    """
    s = np.asarray(target.samples, dtype=np.complex128)
    peak = np.max(np.abs(np.concatenate([s.real, s.imag])))
    if peak == 0:
        peak = 1.0
    return DpmDrive(
        v1=depth * vpi1 * s.real / peak,
        v2=depth * vpi2 * s.imag / peak,
        vpi1=vpi1, vpi2=vpi2, vpi_ph=vpi_ph, vph=vpi_ph / 2.0,
        dt=target.dt, t0=target.t0,
    )


def synth_pulse_train(state: PulseTrainState, dt=1.0, pad=None) -> Waveform:
    """Complex field ``sum_k c_k g(t - k T)`` with at least 3 widths of padding."""
    _steps(state.period, dt, "period")
    pad = 4.0 * state.width if pad is None else pad
    if pad < 3.0 * state.width:
        raise ValueError("padding must be at least three pulse widths")
    npad = math.ceil(pad / dt)
    t0 = -npad * dt
    n = 2 * npad + _steps((state.d - 1) * state.period, dt, "train length") + 1
    t = t0 + dt * np.arange(n)
    f = np.zeros(n, dtype=np.complex128)
    for k, c in enumerate(state.amplitudes):
        f += c * gaussian_pulse(t - k * state.period, state.width)
    return Waveform(dt, f, t0)


def amzi(wave: Waveform, cfg: AmziConfig) -> Waveform:
    """One output port: ``split * [E(t) + exp(i phase) E(t - delay)]``.

    The trace is extended by the delay so the last delayed pulse is kept.
    """
    m = _steps(cfg.delay, wave.dt, "delay")
    s = np.asarray(wave.samples, dtype=np.complex128)
    out = np.zeros(s.size + m, dtype=np.complex128)
    out[:s.size] += s
    out[m:] += np.exp(1j * np.deg2rad(cfg.phase)) * s
    return Waveform(wave.dt, cfg.split * out, wave.t0)


def detect(wave: Waveform, noise_sigma=0.0, rng=None) -> Waveform:
    """Intensity ``|E|^2`` plus white Gaussian noise (no clamping at zero)."""
    if noise_sigma < 0:
        raise ValueError("noise_sigma must be non-negative")
    intensity = np.abs(np.asarray(wave.samples)) ** 2
    if noise_sigma > 0:
        if rng is None:
            raise ValueError("a random generator is required when noise_sigma > 0")
        intensity = intensity + rng.normal(0.0, noise_sigma, size=intensity.size)
    return Waveform(wave.dt, intensity.astype(float), wave.t0)


def write_waveform_csv(wave: Waveform, path):
    samples = np.asarray(wave.samples)
    if np.iscomplexobj(samples):
        samples = np.abs(samples) ** 2
    with open(path, "w") as fh:
        fh.write(f"# dt_ps={wave.dt!r}\n# t0_ps={wave.t0!r}\n")
        for v in samples:
            fh.write(f"{float(v)!r}\n")


def read_waveform_csv(path) -> Waveform:
    meta = {}
    values = []
    with open(path) as fh:
        for line in fh:
            line = line.strip()
            if not line:
                continue
            if line.startswith("#"):
                key, _, val = line[1:].strip().partition("=")
                meta[key.strip()] = float(val)
            else:
                values.append(float(line.split(",")[0]))
    if "dt_ps" not in meta:
        raise ValueError(f"{path}: missing '# dt_ps=' header")
    return Waveform(meta["dt_ps"], np.array(values), meta.get("t0_ps", 0.0))


def state_to_json(state: PulseTrainState) -> dict:
    c = state.amplitudes
    return {"re": c.real.tolist(), "im": c.imag.tolist(),
            "period_ps": state.period, "width_ps": state.width}


def state_from_json(obj, normalize=True) -> PulseTrainState:
    """Read ``{"re": [...], "im": [...]}`` (optional ``period_ps``, ``width_ps``)."""
    try:
        re = np.asarray(obj["re"], dtype=float)
    except (KeyError, TypeError):
        raise ValueError("state JSON needs an 're' amplitude list") from None
    im = np.asarray(obj.get("im", np.zeros_like(re)), dtype=float)
    if re.shape != im.shape or re.ndim != 1:
        raise ValueError("state JSON 're' and 'im' must be equal-length lists")
    amps = ket(re + 1j * im, normalize=normalize)
    return PulseTrainState(amps, float(obj.get("period_ps", 200.0)), float(obj.get("width_ps", 44.0)))
