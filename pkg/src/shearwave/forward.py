"""Analytic steady-state shear-wave fields in voxelized phantoms.

Each excitation tone launches an attenuated plane shear wave from a planar
source. The local complex wavenumber comes from the voxel's Voigt modulus,
so piecewise-homogeneous phantoms get per-region dispersion and decay
(interfaces carry no mode conversion; fields are evaluated independently
per region). Superposition over tones gives a field that is exactly
periodic with the fundamental excitation period.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .phantom import ElasticityPhantom
from .sequence import fundamental_period
from .viscoelastic import complex_wavenumber

__all__ = [
    "PlanarSource",
    "ExcitationSpec",
    "DisplacementFieldSeries",
    "SteadyStateField",
    "simulate_steady_state",
    "QuadraticPotential",
    "SinusoidalPotential",
    "PlaneWavePotential",
    "OscillatingPotential",
    "CompressionalField",
    "add_compressional_component",
    "default_excitation",
]


def _unit(v) -> np.ndarray:
    v = np.asarray(v, dtype=float)
    n = np.linalg.norm(v)
    if n == 0:
        raise ValueError("zero-length direction vector")
    return v / n


@dataclass(frozen=True)
class PlanarSource:
    """Planar piston: a point on the plate plus the propagation direction."""

    origin: tuple[float, float, float]
    direction: tuple[float, float, float]

    def __post_init__(self):
        object.__setattr__(self, "direction", tuple(_unit(self.direction)))


@dataclass(frozen=True)
class ExcitationSpec:
    """Multi-tone vibration applied through a planar source.

    direction_mix weighs the two transverse polarization basis vectors;
    the resulting polarization is normalized and orthogonal to the
    propagation direction.
    """

    frequencies: tuple[float, ...]
    amplitudes: tuple[float, ...]
    phases: tuple[float, ...]
    source: PlanarSource
    direction_mix: tuple[float, float] = (1.0, 0.6)

    def __post_init__(self):
        freqs = tuple(float(f) for f in self.frequencies)
        if len(freqs) == 0:
            raise ValueError("excitation needs at least one frequency")
        if any(f <= 0 for f in freqs):
            raise ValueError(f"excitation frequencies must be positive: {freqs}")
        if len(set(freqs)) != len(freqs):
            raise ValueError(f"excitation frequencies must be distinct: {freqs}")
        amps = tuple(float(a) for a in self.amplitudes)
        if len(amps) != len(freqs):
            raise ValueError("need one amplitude per frequency")
        if any(a < 0 for a in amps):
            raise ValueError(f"amplitudes must be non-negative: {amps}")
        object.__setattr__(self, "frequencies", freqs)
        object.__setattr__(self, "amplitudes", amps)
        object.__setattr__(self, "phases", tuple(float(p) for p in self.phases))
        if len(self.phases) != len(freqs):
            raise ValueError("need one phase per frequency")
        fundamental_period(freqs)  # raises if incommensurable

    @property
    def fundamental_period(self) -> float:
        return fundamental_period(self.frequencies)

    def polarization(self) -> np.ndarray:
        """Unit polarization vector transverse to the propagation direction."""
        d = np.asarray(self.source.direction)
        ref = np.array([0.0, 0.0, 1.0])
        if abs(d @ ref) > 0.9:
            ref = np.array([0.0, 1.0, 0.0])
        e1 = _unit(np.cross(d, ref))
        e2 = np.cross(d, e1)
        return _unit(self.direction_mix[0] * e1 + self.direction_mix[1] * e2)


def default_excitation(phantom: ElasticityPhantom, frequencies,
                       amplitude: float = 50e-6, tilt_deg: float = 20.0,
                       direction_mix=(1.0, 0.6)) -> ExcitationSpec:
    """Bottom-plate source shaking toward the transducer with an oblique tilt.

    The tilt rotates the propagation direction from -x toward +y (in the
    axial-lateral plane) so every curl component of the shear field is
    exercised.
    """
    frequencies = tuple(float(f) for f in frequencies)
    tilt = np.deg2rad(tilt_deg)
    direction = (-np.cos(tilt), np.sin(tilt), 0.0)
    bottom = (float(phantom.extent[0]), float(phantom.extent[1]) / 2.0,
              float(phantom.extent[2]) / 2.0)
    return ExcitationSpec(
        frequencies=frequencies,
        amplitudes=(amplitude,) * len(frequencies),
        phases=(0.0,) * len(frequencies),
        source=PlanarSource(origin=bottom, direction=direction),
        direction_mix=tuple(direction_mix))


@dataclass
class DisplacementFieldSeries:
    """Sampled 3-vector displacement frames [m] with their timestamps."""

    frames: np.ndarray  # (n_times, ..., 3)
    timestamps: np.ndarray  # (n_times,)
    grid: object  # geometry the frames were sampled on

    def __post_init__(self):
        self.frames = np.asarray(self.frames)
        self.timestamps = np.asarray(self.timestamps, dtype=float)
        if self.frames.shape[0] != self.timestamps.shape[0]:
            raise ValueError("one frame per timestamp required")


class SteadyStateField:
    """Analytic superposition of attenuated plane shear waves.

    With the phasor convention u(t) = Re{F exp(iwt)}, the tone at angular
    frequency w contributes F(x) = A exp(i phi) exp(-i k*(x) s) p, where
    s is the propagation distance from the source plane, k* the local
    complex wavenumber and p the unit polarization.
    """

    def __init__(self, phantom: ElasticityPhantom, excitation: ExcitationSpec):
        self.phantom = phantom
        self.excitation = excitation
        self._pol = excitation.polarization()
        self._dir = np.asarray(excitation.source.direction)
        self._origin = np.asarray(excitation.source.origin)

    @property
    def period(self) -> float:
        return self.excitation.fundamental_period

    def phasors(self, points: np.ndarray) -> np.ndarray:
        """Ground-truth complex phasors, shape (n_freqs, ..., 3)."""
        points = np.asarray(points, dtype=float)
        s = (points - self._origin) @ self._dir
        mu, rho, eta = self.phantom.material_at(points)
        out = np.empty((len(self.excitation.frequencies),) + points.shape,
                       dtype=complex)
        for i, (f, a, ph) in enumerate(zip(self.excitation.frequencies,
                                           self.excitation.amplitudes,
                                           self.excitation.phases)):
            if a == 0.0:
                out[i] = 0.0
                continue
            k = complex_wavenumber(mu, rho, eta, f)
            scalar = a * np.exp(1j * ph) * np.exp(-1j * k * s)
            out[i] = scalar[..., None] * self._pol
        return out

    def displacement(self, points: np.ndarray, t: float) -> np.ndarray:
        """Instantaneous displacement [m] at the given points and time."""
        phasors = self.phasors(points)
        out = np.zeros(np.asarray(points).shape, dtype=float)
        for i, f in enumerate(self.excitation.frequencies):
            w = 2.0 * np.pi * f
            out += np.real(phasors[i] * np.exp(1j * w * t))
        return out


def simulate_steady_state(phantom: ElasticityPhantom, excitation: ExcitationSpec,
                          timestamps, grid) -> DisplacementFieldSeries:
    """Sample the analytic steady-state field on a grid over time.

    ``grid`` is either an object exposing points() -> (..., 3) or a raw
    coordinate array; points must lie inside the phantom.
    """
    timestamps = np.atleast_1d(np.asarray(timestamps, dtype=float))
    if timestamps.size == 0:
        raise ValueError("timestamps must be non-empty")
    if np.any(np.diff(timestamps) <= 0):
        raise ValueError("timestamps must be strictly ascending")
    points = grid.points() if hasattr(grid, "points") else np.asarray(grid, dtype=float)
    if not np.all(phantom.contains(points)):
        n_out = int(np.sum(~phantom.contains(points)))
        raise ValueError(f"{n_out} grid points fall outside the phantom bounds")

    src = SteadyStateField(phantom, excitation)
    frames = np.stack([src.displacement(points, t) for t in timestamps], axis=0)
    return DisplacementFieldSeries(frames=frames, timestamps=timestamps, grid=grid)


@dataclass(frozen=True)
class QuadraticPotential:
    """phi = |x - center|^2; gradient is the exact linear field 2(x - c)."""

    center: tuple[float, float, float] = (0.0, 0.0, 0.0)

    def gradient(self, points: np.ndarray) -> np.ndarray:
        return 2.0 * (np.asarray(points, dtype=float) - np.asarray(self.center))

    def gradient_scale(self, points: np.ndarray) -> float:
        return float(np.max(np.linalg.norm(self.gradient(points), axis=-1)))


@dataclass(frozen=True)
class SinusoidalPotential:
    """phi = sin(2 pi (x . n) / wavelength); analytic gradient."""

    wavelength: float
    normal: tuple[float, float, float] = (1.0, 1.0, 1.0)

    def __post_init__(self):
        if self.wavelength <= 0:
            raise ValueError("potential wavelength must be positive")
        object.__setattr__(self, "normal", tuple(_unit(self.normal)))

    def gradient(self, points: np.ndarray) -> np.ndarray:
        k = 2.0 * np.pi / self.wavelength
        n = np.asarray(self.normal)
        phase = k * (np.asarray(points, dtype=float) @ n)
        return (k * np.cos(phase))[..., None] * n

    def gradient_scale(self, points: np.ndarray) -> float:
        return 2.0 * np.pi / self.wavelength


@dataclass(frozen=True)
class PlaneWavePotential:
    """Longitudinal plane wave potential with a long compressional wavelength."""

    wavelength: float
    direction: tuple[float, float, float] = (1.0, 0.0, 0.0)

    def __post_init__(self):
        if self.wavelength <= 0:
            raise ValueError("potential wavelength must be positive")
        object.__setattr__(self, "direction", tuple(_unit(self.direction)))

    def gradient(self, points: np.ndarray) -> np.ndarray:
        k = 2.0 * np.pi / self.wavelength
        d = np.asarray(self.direction)
        phase = k * (np.asarray(points, dtype=float) @ d)
        return (-k * np.sin(phase))[..., None] * d

    def gradient_scale(self, points: np.ndarray) -> float:
        return 2.0 * np.pi / self.wavelength


@dataclass(frozen=True)
class OscillatingPotential:
    """Spatial potential driven sinusoidally at one or more tones.

    phi(x, t) = g(x) * sum_j cos(w_j t + phases_j); the displacement it
    contributes is grad(g) times the same oscillation.
    """

    spatial: object
    frequencies: tuple[float, ...]
    phases: tuple[float, ...] = ()

    def __post_init__(self):
        freqs = tuple(float(f) for f in self.frequencies)
        phases = tuple(float(p) for p in self.phases) or (0.0,) * len(freqs)
        if len(phases) != len(freqs):
            raise ValueError("need one phase per potential frequency")
        object.__setattr__(self, "frequencies", freqs)
        object.__setattr__(self, "phases", phases)

    def gradient_at(self, points: np.ndarray, t: float) -> np.ndarray:
        osc = sum(np.cos(2.0 * np.pi * f * t + ph)
                  for f, ph in zip(self.frequencies, self.phases))
        return osc * self.spatial.gradient(points)

    def phasor_gradients(self, points: np.ndarray) -> np.ndarray:
        """Per-tone complex gradient phasors, shape (n_freqs, ..., 3)."""
        grad = self.spatial.gradient(points)
        return np.stack([np.exp(1j * ph) * grad for ph in self.phases], axis=0)


class CompressionalField:
    """Field source with an added irrotational (gradient) component.

    The contaminant's curl is exactly zero by construction because the
    gradient is analytic, not numerical.
    """

    def __init__(self, base: SteadyStateField, potential, amplitude: float):
        if amplitude < 0:
            raise ValueError(f"contaminant amplitude must be non-negative, got {amplitude}")
        if not hasattr(potential, "gradient_at"):
            potential = OscillatingPotential(potential, base.excitation.frequencies,
                                             base.excitation.phases)
        self.base = base
        self.potential = potential
        self.amplitude = amplitude
        self.excitation = base.excitation
        self.phantom = base.phantom

    @property
    def period(self) -> float:
        return self.base.period

    def phasors(self, points: np.ndarray) -> np.ndarray:
        out = self.base.phasors(points)
        if self.amplitude == 0.0:
            return out
        extra = self.potential.phasor_gradients(points)
        base_freqs = self.base.excitation.frequencies
        for i, f in enumerate(self.potential.frequencies):
            j = base_freqs.index(f) if f in base_freqs else None
            if j is not None:
                out[j] += self.amplitude * extra[i]
        return out

    def displacement(self, points: np.ndarray, t: float) -> np.ndarray:
        out = self.base.displacement(points, t)
        if self.amplitude == 0.0:
            return out
        return out + self.amplitude * self.potential.gradient_at(points, t)


def add_compressional_component(series: DisplacementFieldSeries, potential,
                                amplitude: float) -> DisplacementFieldSeries:
    """Add amplitude * grad(phi) to every sampled frame.

    A potential with gradient_at(points, t) is evaluated per frame time;
    a bare spatial potential contributes its static gradient.
    """
    if amplitude < 0:
        raise ValueError(f"contaminant amplitude must be non-negative, got {amplitude}")
    if amplitude == 0.0:
        return series
    grid = series.grid
    points = grid.points() if hasattr(grid, "points") else np.asarray(grid, dtype=float)
    frames = series.frames.copy()
    if hasattr(potential, "gradient_at"):
        for n, t in enumerate(series.timestamps):
            frames[n] = frames[n] + amplitude * potential.gradient_at(points, t)
    else:
        frames = frames + amplitude * potential.gradient(points)
    return DisplacementFieldSeries(frames=frames, timestamps=series.timestamps,
                                   grid=grid)
