"""Transient push-response baseline: group speed and phase velocity.

A single push launches an outward pulse tracked at multiple lateral
positions. Propagation is kinematic: the source pulse is delayed and
attenuated per spectral component using the Voigt complex wavenumber,
with cylindrical 1/sqrt(distance) spreading. Group speed comes from
time-to-peak regression, phase velocity from the spectral phase slope
across positions, and E = 3 rho c^2 closes the chain.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from .viscoelastic import complex_wavenumber, young_from_speed

__all__ = [
    "TransientField",
    "ARFIScene",
    "simulate_push_response",
    "estimate_group_sws",
    "estimate_phase_velocity",
    "elasticity_from_sws",
    "repeat_measurements",
    "GroupSpeedEstimate",
    "PhaseVelocityEstimate",
    "RepeatReport",
]


@dataclass
class TransientField:
    """Axial displacement u(x, t) tracked at lateral positions."""

    data: np.ndarray            # (n_times, n_positions)
    timestamps: np.ndarray      # (n_times,)
    lateral_positions: np.ndarray  # (n_positions,) absolute [m]
    push_origin: float          # [m]

    @property
    def distances(self) -> np.ndarray:
        return np.abs(self.lateral_positions - self.push_origin)

    @property
    def sample_rate(self) -> float:
        return 1.0 / float(self.timestamps[1] - self.timestamps[0])


def simulate_push_response(mu: float, rho: float, eta: float,
                           push_origin: float, timestamps, lateral_positions,
                           amplitude: float = 10e-6,
                           pulse_sigma: float = 1e-3) -> TransientField:
    """Outward-propagating pulse in a homogeneous Voigt medium.

    The source time profile is a Gaussian of width pulse_sigma [s]
    centered late enough to start from (near) rest; each spectral
    component travels at its own Voigt phase speed, which makes the pulse
    broaden with distance when eta > 0.
    """
    timestamps = np.asarray(timestamps, dtype=float)
    lateral_positions = np.asarray(lateral_positions, dtype=float)
    if timestamps.size < 4 or lateral_positions.size == 0:
        raise ValueError("need timestamps and at least one lateral position")
    steps = np.diff(timestamps)
    if np.any(steps <= 0) or np.max(steps) - np.min(steps) > 1e-12:
        raise ValueError("timestamps must be a uniform ascending ramp")

    dt = float(steps[0])
    n = timestamps.size
    t0 = timestamps[0] + 4.0 * pulse_sigma
    source = amplitude * np.exp(-0.5 * ((timestamps - t0) / pulse_sigma) ** 2)
    spectrum = np.fft.rfft(source)
    freqs = np.fft.rfftfreq(n, dt)

    distances = np.abs(lateral_positions - push_origin)
    positive = distances[distances > 0]
    ref = max(float(np.min(positive)) if positive.size else 1e-3, 1e-4)
    decay = 1.0 / np.sqrt(np.maximum(distances, ref) / ref)

    k = np.zeros(freqs.size, dtype=complex)
    if freqs.size > 1:
        k[1:] = complex_wavenumber(mu, rho, eta, freqs[1:])

    data = np.empty((n, lateral_positions.size))
    for j, (x, dec) in enumerate(zip(distances, decay)):
        shifted = spectrum * np.exp(-1j * k * x)
        data[:, j] = dec * np.fft.irfft(shifted, n)
    return TransientField(data=data, timestamps=timestamps,
                          lateral_positions=lateral_positions,
                          push_origin=float(push_origin))


@dataclass(frozen=True)
class GroupSpeedEstimate:
    speed: float            # m/s
    residual_rms: float     # s, regression residual of arrival times
    arrival_times: np.ndarray = field(repr=False, default=None)


def _time_to_peak(field: TransientField) -> np.ndarray:
    """Per-position arrival time from argmax with parabolic refinement."""
    t = field.timestamps
    dt = t[1] - t[0]
    idx = np.argmax(field.data, axis=0)
    ttp = np.empty(idx.size)
    for j, i in enumerate(idx):
        if 0 < i < len(t) - 1:
            ym, y0, yp = field.data[i - 1, j], field.data[i, j], field.data[i + 1, j]
            denom = ym - 2 * y0 + yp
            off = 0.5 * (ym - yp) / denom if denom != 0 else 0.0
            off = float(np.clip(off, -0.5, 0.5))
        else:
            off = 0.0
        ttp[j] = t[i] + off * dt
    return ttp


def estimate_group_sws(field: TransientField) -> GroupSpeedEstimate:
    """Group shear-wave speed from time-to-peak versus distance regression."""
    if field.lateral_positions.size < 4:
        raise ValueError("group speed regression needs at least 4 positions")
    x = field.distances
    order = np.argsort(x)
    x = x[order]
    ttp = _time_to_peak(field)[order]
    dt = field.timestamps[1] - field.timestamps[0]
    if np.any(np.diff(ttp) < -1.5 * dt):
        raise ValueError(
            "arrival times are not monotone with distance; the field does "
            "not look like an outward-propagating pulse")
    design = np.stack([np.ones_like(x), x], axis=1)
    coeffs, _, _, _ = np.linalg.lstsq(design, ttp, rcond=None)
    slope = coeffs[1]
    if slope <= 0:
        raise ValueError(f"non-positive arrival slope {slope:.3e}; cannot "
                         f"form a speed")
    resid = ttp - design @ coeffs
    return GroupSpeedEstimate(speed=1.0 / slope,
                              residual_rms=float(np.sqrt(np.mean(resid**2))),
                              arrival_times=ttp)


@dataclass(frozen=True)
class PhaseVelocityEstimate:
    frequency: float
    speed: float | None
    flagged: bool
    reason: str = ""


def estimate_phase_velocity(field: TransientField, frequencies,
                            energy_gate_db: float = -20.0) -> list[PhaseVelocityEstimate]:
    """Phase velocity per frequency from the spectral phase slope over x.

    Frequencies whose spectral magnitude falls below the energy gate
    (relative to the strongest band) are flagged instead of estimated.
    """
    frequencies = np.atleast_1d(np.asarray(frequencies, dtype=float))
    spec = np.fft.rfft(field.data, axis=0)
    bins = np.fft.rfftfreq(field.data.shape[0], 1.0 / field.sample_rate)
    band_mag = np.mean(np.abs(spec), axis=1)
    ref = float(np.max(band_mag[1:])) if band_mag.size > 1 else 0.0
    gate = ref * 10.0 ** (energy_gate_db / 20.0)

    x = field.distances
    order = np.argsort(x)
    results = []
    for f in frequencies:
        b = int(np.argmin(np.abs(bins - f)))
        if b == 0 or band_mag[b] < gate:
            results.append(PhaseVelocityEstimate(
                frequency=float(f), speed=None, flagged=True,
                reason=f"spectral magnitude below {energy_gate_db:g} dB gate"))
            continue
        phase = np.unwrap(np.angle(spec[b, order]))
        design = np.stack([np.ones_like(x[order]), x[order]], axis=1)
        coeffs, _, _, _ = np.linalg.lstsq(design, phase, rcond=None)
        slope = coeffs[1]
        if slope >= 0:
            results.append(PhaseVelocityEstimate(
                frequency=float(f), speed=None, flagged=True,
                reason="non-negative phase slope"))
            continue
        results.append(PhaseVelocityEstimate(
            frequency=float(f), speed=float(-2.0 * np.pi * bins[b] / slope),
            flagged=False))
    return results


def elasticity_from_sws(c: float, rho: float) -> float:
    """E = 3 rho c^2 for an isotropic incompressible medium."""
    return float(young_from_speed(c, rho))


@dataclass(frozen=True)
class ARFIScene:
    """Everything one baseline measurement needs."""

    mu: float
    rho: float = 1000.0
    eta: float = 0.0
    push_origin: float = 0.0
    duration: float = 40e-3
    sample_rate: float = 10000.0
    position_start: float = 8e-3
    position_stop: float = 35e-3
    position_step: float = 0.5e-3
    amplitude: float = 10e-6
    pulse_sigma: float = 1e-3
    single_measurement_time: float = 1.27

    def timestamps(self) -> np.ndarray:
        n = int(round(self.duration * self.sample_rate))
        return np.arange(n) / self.sample_rate

    def positions(self) -> np.ndarray:
        return self.push_origin + np.arange(self.position_start,
                                            self.position_stop,
                                            self.position_step)

    def simulate(self) -> TransientField:
        return simulate_push_response(self.mu, self.rho, self.eta,
                                      self.push_origin, self.timestamps(),
                                      self.positions(), self.amplitude,
                                      self.pulse_sigma)


@dataclass
class RepeatReport:
    """Seeded repeat measurements with their aggregate."""

    young_per_repeat: list[float]
    mean: float
    std: float
    total_acquisition_time: float
    speeds: list[float]


def repeat_measurements(scene: ARFIScene, n_repeats: int = 8,
                        snr_db: float | None = None,
                        master_seed: int = 0) -> RepeatReport:
    """Run the baseline n times with per-repeat noise realizations.

    Speckle-realization variability is emulated by seeded additive noise
    at the requested SNR; snr_db None means noiseless repeats. Total
    acquisition time is n_repeats times the scene's single-measurement
    time.
    """
    if n_repeats < 1:
        raise ValueError(f"n_repeats must be >= 1, got {n_repeats}")
    clean = scene.simulate()
    seeds = np.random.SeedSequence(master_seed).spawn(n_repeats)
    youngs = []
    speeds = []
    for seq in seeds:
        data = clean.data
        if snr_db is not None:
            rng = np.random.default_rng(seq)
            noise_std = float(np.sqrt(np.mean(clean.data**2))) * 10.0 ** (-snr_db / 20.0)
            data = clean.data + rng.normal(0.0, noise_std, clean.data.shape)
        noisy = TransientField(data=data, timestamps=clean.timestamps,
                               lateral_positions=clean.lateral_positions,
                               push_origin=clean.push_origin)
        est = estimate_group_sws(noisy)
        speeds.append(est.speed)
        youngs.append(elasticity_from_sws(est.speed, scene.rho))
    return RepeatReport(
        young_per_repeat=youngs,
        mean=float(np.mean(youngs)),
        std=float(np.std(youngs)),
        total_acquisition_time=n_repeats * scene.single_measurement_time,
        speeds=speeds)
