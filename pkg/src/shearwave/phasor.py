"""Least-squares extraction of complex displacement phasors.

Per voxel and component, the time series is fit with a DC term plus a
cosine/sine pair at each requested frequency over the actual timestamps.
The phasor convention is u(t) = Re{F exp(iwt)}, so a fitted a*cos + b*sin
gives F = a - i b. Least squares over explicit timestamps stays exact
where a plain DFT of a non-integer number of tone periods would leak.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .errors import ConditioningError, DegenerateInputError
from .spectrum import interpolated_peaks

__all__ = ["PhasorSet", "fit_phasors", "phasor_spectrum_report", "SpectrumReport"]

_MAX_CONDITION = 1e10


@dataclass
class PhasorSet:
    """Complex 3-vector phasor volumes, one set per excitation frequency."""

    phasors: np.ndarray       # (n_freqs, *spatial, 3) complex
    frequencies: tuple[float, ...]
    grid: object
    residual: np.ndarray      # (*spatial,) RMS fit residual [m]

    @property
    def n_frequencies(self) -> int:
        return len(self.frequencies)

    def amplitude(self, index: int) -> np.ndarray:
        """|F| per voxel per component at one frequency."""
        return np.abs(self.phasors[index])


def _design_matrix(timestamps: np.ndarray, frequencies) -> np.ndarray:
    cols = [np.ones_like(timestamps)]
    for f in frequencies:
        w = 2.0 * np.pi * f
        cols.append(np.cos(w * timestamps))
        cols.append(np.sin(w * timestamps))
    return np.stack(cols, axis=1)


def fit_phasors(disp, frequencies) -> PhasorSet:
    """Fit per-voxel phasors at the given frequencies [Hz].

    ``disp`` needs frames (n_times, ..., 3), timestamps (n_times,) and a
    grid-like attribute (geometry or grid). Raises ConditioningError when
    the design matrix is rank deficient (duplicate tones, too few or
    degenerate sample times).
    """
    frequencies = tuple(float(f) for f in np.atleast_1d(frequencies))
    if len(frequencies) == 0:
        raise ValueError("need at least one frequency to fit")
    frames = np.asarray(disp.frames, dtype=float)
    timestamps = np.asarray(disp.timestamps, dtype=float)
    n_params = 2 * len(frequencies) + 1
    if frames.shape[0] < n_params:
        raise ConditioningError(
            f"{frames.shape[0]} time samples cannot determine {n_params} "
            f"fit parameters")

    design = _design_matrix(timestamps, frequencies)
    cond = float(np.linalg.cond(design))
    if not np.isfinite(cond) or cond > _MAX_CONDITION:
        raise ConditioningError(
            f"phasor design matrix is ill conditioned "
            f"(condition number {cond:.3e}); check for duplicate or "
            f"aliased frequencies", condition_number=cond)

    spatial = frames.shape[1:]
    y = frames.reshape(frames.shape[0], -1)
    coeffs, _, _, _ = np.linalg.lstsq(design, y, rcond=None)
    resid = y - design @ coeffs
    rms = np.sqrt(np.mean(resid**2, axis=0)).reshape(spatial)
    rms = np.sqrt(np.mean(rms**2, axis=-1))  # across vector components

    phasors = np.empty((len(frequencies),) + spatial, dtype=complex)
    for i in range(len(frequencies)):
        a = coeffs[1 + 2 * i].reshape(spatial)
        b = coeffs[2 + 2 * i].reshape(spatial)
        phasors[i] = a - 1j * b

    grid = getattr(disp, "geometry", None) or getattr(disp, "grid", None)
    return PhasorSet(phasors=phasors, frequencies=frequencies, grid=grid,
                     residual=rms)


@dataclass
class SpectrumReport:
    """Dominant spectral peaks of the spatial-mean displacement."""

    component_peaks: list  # per component: list of (freq_hz, magnitude)
    sample_rate: float

    def peaks(self) -> list:
        """Union of per-component peaks, strongest first."""
        merged = [p for comp in self.component_peaks for p in comp]
        merged.sort(key=lambda p: -p[1])
        return merged

    def __str__(self) -> str:
        names = ("axial", "lateral", "elevational")
        lines = []
        for name, peaks in zip(names, self.component_peaks):
            if not peaks:
                lines.append(f"{name}: no dominant peaks")
            else:
                txt = ", ".join(f"{f:.2f} Hz" for f, _ in peaks)
                lines.append(f"{name}: {txt}")
        return "\n".join(lines)


def phasor_spectrum_report(disp, sample_rate: float | None = None,
                           dominance_ratio: float = 0.25) -> SpectrumReport:
    """Interpolated spectral peaks of the volume-mean displacement.

    Diagnostics mirror on real (tracked) data the separability criterion
    the sequence planner evaluates on synthetic tones. The series must be
    uniformly sampled; pass sample_rate when the timestamps are phase
    values rather than a uniform ramp.
    """
    frames = np.asarray(disp.frames, dtype=float)
    if frames.shape[0] < 2:
        raise DegenerateInputError("spectrum report needs at least two frames")
    if sample_rate is None:
        steps = np.diff(np.asarray(disp.timestamps, dtype=float))
        if steps.size == 0 or np.any(steps <= 0) or (
                np.max(steps) - np.min(steps) > 1e-9):
            raise ValueError(
                "timestamps are not a uniform ramp; pass sample_rate explicitly")
        sample_rate = 1.0 / float(steps[0])

    flat = frames.reshape(frames.shape[0], -1, frames.shape[-1])
    mean_sig = flat.mean(axis=1)  # (n_times, 3)
    comp_peaks = [interpolated_peaks(mean_sig[:, c], sample_rate,
                                     dominance_ratio=dominance_ratio)
                  for c in range(mean_sig.shape[1])]
    return SpectrumReport(component_peaks=comp_peaks, sample_rate=sample_rate)
