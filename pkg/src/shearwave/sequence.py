"""Synchronized acquisition planning.

A sweep spends a fixed window on each plane: motor activation pulses,
settling, then imaging. Keeping the whole window an integer multiple of
the excitation fundamental period makes every plane start imaging at the
same excitation phase, which is what lets plane-major frames regroup into
phase-coherent volumes.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np

from .errors import PlanningError
from .spectrum import interpolated_peaks

__all__ = [
    "fundamental_period",
    "SequencePlan",
    "plan_sequence",
    "validate_synchronization",
    "SynchronizationReport",
    "spectral_separability",
    "SeparabilityReport",
]

FREQUENCY_QUANTUM_HZ = 1e-3


def _gcd_quanta(frequencies) -> int:
    """gcd of the frequencies on the 1 mHz lattice, in quanta."""
    freqs = np.atleast_1d(np.asarray(frequencies, dtype=float))
    if freqs.size == 0:
        raise PlanningError("no excitation frequencies given")
    if np.any(freqs <= 0):
        raise PlanningError(f"frequencies must be positive: {freqs.tolist()}")
    quanta = freqs / FREQUENCY_QUANTUM_HZ
    rounded = np.round(quanta)
    off = np.abs(quanta - rounded) > 1e-6 * np.maximum(1.0, np.abs(quanta))
    if np.any(off):
        raise PlanningError(
            f"frequencies {freqs[off].tolist()} do not sit on the "
            f"{FREQUENCY_QUANTUM_HZ * 1e3:.0f} mHz quantum lattice")
    g = 0
    for q in rounded.astype(np.int64):
        g = math.gcd(g, int(q))
    return g


def fundamental_period(frequencies, max_period: float | None = None) -> float:
    """Common period 1/gcd(frequencies) using a 1 mHz rational quantum.

    Frequencies must sit on the quantum lattice; a cap on the resulting
    period (if given) rejects tone sets whose common period is too long
    to be usable, i.e. effectively incommensurable.
    """
    g = _gcd_quanta(frequencies)
    period = 1000.0 / g
    if max_period is not None and period > max_period:
        freqs = np.atleast_1d(np.asarray(frequencies, dtype=float))
        raise PlanningError(
            f"fundamental period {period:.3f} s of tones {freqs.tolist()} exceeds "
            f"{max_period:.3f} s; the set is effectively incommensurable")
    return period


@dataclass(frozen=True)
class SequencePlan:
    """Complete timing description of one synchronized sweep."""

    frequencies: tuple[float, ...]
    frame_rate: float
    n_planes: int
    plane_angle_step_deg: float
    settling_time: float
    pulse_time: float
    per_plane_period: float
    imaging_duration: float
    frames_per_plane: int
    total_time: float
    total_frames: int
    fundamental: float

    def imaging_start(self, plane: int) -> float:
        """Time the imaging window opens on the given plane."""
        return plane * self.per_plane_period + self.pulse_time + self.settling_time

    def frame_time(self, plane: int, frame: int) -> float:
        return self.imaging_start(plane) + frame / self.frame_rate

    def frame_times(self, plane: int) -> np.ndarray:
        return self.imaging_start(plane) + np.arange(self.frames_per_plane) / self.frame_rate

    def to_dict(self) -> dict:
        return {
            "frequencies": list(self.frequencies),
            "frame_rate": self.frame_rate,
            "n_planes": self.n_planes,
            "plane_angle_step_deg": self.plane_angle_step_deg,
            "settling_time": self.settling_time,
            "pulse_time": self.pulse_time,
            "per_plane_period": self.per_plane_period,
            "imaging_duration": self.imaging_duration,
            "frames_per_plane": self.frames_per_plane,
            "total_time": self.total_time,
            "total_frames": self.total_frames,
            "fundamental": self.fundamental,
        }

    @classmethod
    def from_dict(cls, d: dict) -> "SequencePlan":
        d = dict(d)
        d["frequencies"] = tuple(float(f) for f in d["frequencies"])
        return cls(**d)

    def timeline_text(self) -> str:
        """Human-readable per-plane timeline of pulses, settling and imaging."""
        tones = ", ".join(f"{f:g}" for f in self.frequencies)
        lines = [
            f"sweep plan: tones {tones} Hz, fundamental period "
            f"{self.fundamental * 1e3:.1f} ms",
            f"frame rate {self.frame_rate:g} frames/s; "
            f"{self.n_planes} planes x {self.per_plane_period * 1e3:.1f} ms "
            f"= {self.total_time:.3f} s total ({self.total_frames} frames)",
            f"per plane: motor pulses {self.pulse_time * 1e3:.1f} ms | settle "
            f"{self.settling_time * 1e3:.1f} ms | imaging "
            f"{self.imaging_duration * 1e3:.1f} ms ({self.frames_per_plane} frames)",
        ]
        for p in range(self.n_planes):
            t0 = p * self.per_plane_period
            lines.append(
                f"  plane {p:2d}  angle {p * self.plane_angle_step_deg:6.2f} deg  "
                f"pulses {t0:7.3f} s  settle {t0 + self.pulse_time:7.3f} s  "
                f"imaging {self.imaging_start(p):7.3f}-{t0 + self.per_plane_period:7.3f} s")
        return "\n".join(lines)


def plan_sequence(frequencies, frame_rate: float, n_planes: int,
                  settling_time: float = 0.010, pulse_time: float = 0.007,
                  min_imaging: float = 0.180, plane_angle_step_deg: float = 0.45,
                  max_fundamental: float = 1.0,
                  max_period_multiple: int = 10) -> SequencePlan:
    """Smallest synchronized plan meeting the minimum imaging duration.

    The per-plane period is the smallest integer multiple of the
    excitation fundamental period that still fits pulses, settling and
    min_imaging; imaging gets whatever the period leaves over.
    """
    if frame_rate <= 0:
        raise PlanningError(f"frame rate must be positive, got {frame_rate}")
    if n_planes < 1:
        raise PlanningError(f"need at least one plane, got {n_planes}")
    if min_imaging <= 0:
        raise PlanningError(f"min_imaging must be positive, got {min_imaging}")
    if settling_time < 0 or pulse_time < 0:
        raise PlanningError("settling_time and pulse_time must be non-negative")

    t0 = fundamental_period(frequencies, max_period=max_fundamental)
    required = pulse_time + settling_time + min_imaging
    multiple = max(1, math.ceil(required / t0 - 1e-9))
    if multiple > max_period_multiple:
        raise PlanningError(
            f"required per-plane time {required * 1e3:.1f} ms needs "
            f"{multiple} x fundamental period {t0 * 1e3:.1f} ms, beyond the "
            f"{max_period_multiple} x limit; shorten min_imaging or change tones")

    # multiple * (1000/g) in one division keeps round per-plane periods
    # (0.15, 0.2, ...) on their nearest float representations
    period = multiple * 1000.0 / _gcd_quanta(frequencies)
    imaging = period - pulse_time - settling_time
    frames = int(round(imaging * frame_rate))
    if frames < 1:
        raise PlanningError(
            f"imaging window {imaging * 1e3:.2f} ms holds no frame at "
            f"{frame_rate:g} frames/s")

    return SequencePlan(
        frequencies=tuple(float(f) for f in np.atleast_1d(frequencies)),
        frame_rate=float(frame_rate),
        n_planes=int(n_planes),
        plane_angle_step_deg=float(plane_angle_step_deg),
        settling_time=float(settling_time),
        pulse_time=float(pulse_time),
        per_plane_period=period,
        imaging_duration=imaging,
        frames_per_plane=frames,
        total_time=n_planes * period,
        total_frames=n_planes * frames,
        fundamental=t0,
    )


def _circular_residual(value: float, period: float) -> float:
    r = math.fmod(value, period)
    if r < 0:
        r += period
    return min(r, period - r)


@dataclass
class SynchronizationReport:
    """Per-invariant pass/fail listing with residuals."""

    checks: list[tuple[str, bool, float]] = field(default_factory=list)

    @property
    def ok(self) -> bool:
        return all(passed for _, passed, _ in self.checks)

    def failures(self) -> list[str]:
        return [name for name, passed, _ in self.checks if not passed]

    def __str__(self) -> str:
        lines = []
        for name, passed, residual in self.checks:
            lines.append(f"{'PASS' if passed else 'FAIL'}  {name}  "
                         f"residual={residual:.3e}")
        return "\n".join(lines)

    def to_dict(self) -> dict:
        return {"ok": self.ok,
                "checks": [{"name": n, "passed": p, "residual": r}
                           for n, p, r in self.checks]}


def validate_synchronization(plan: SequencePlan) -> SynchronizationReport:
    """Check a plan's timing invariants; failures land in the report."""
    report = SynchronizationReport()

    residual = _circular_residual(plan.per_plane_period, plan.fundamental)
    report.checks.append(("per_plane_period_multiple_of_fundamental",
                          residual <= 1e-6, residual))

    comp = abs(plan.per_plane_period
               - (plan.pulse_time + plan.settling_time + plan.imaging_duration))
    report.checks.append(("period_composition", comp <= 1e-9, comp))

    fb = abs(plan.frames_per_plane - round(plan.imaging_duration * plan.frame_rate))
    report.checks.append(("frame_budget_per_plane", fb == 0, float(fb)))

    tot = abs(plan.total_frames - plan.n_planes * plan.frames_per_plane)
    report.checks.append(("total_frame_budget", tot == 0, float(tot)))

    phase0 = math.fmod(plan.imaging_start(0), plan.fundamental)
    worst = 0.0
    for p in range(plan.n_planes):
        r = _circular_residual(plan.imaging_start(p) - phase0, plan.fundamental)
        worst = max(worst, r)
    report.checks.append(("imaging_start_phase_alignment",
                          worst <= 1e-9 * plan.fundamental, worst))
    return report


@dataclass
class SeparabilityReport:
    """Located spectral peaks versus the excitation tones."""

    frequencies: tuple[float, ...]
    located: list[float]
    deviations: list[float]
    tolerance: float
    n_expected: int

    @property
    def ok(self) -> bool:
        return (len(self.located) >= self.n_expected
                and all(d <= self.tolerance for d in self.deviations))

    def __str__(self) -> str:
        if len(self.located) < self.n_expected:
            return (f"FAIL: located {len(self.located)} of "
                    f"{self.n_expected} dominant peaks")
        lines = []
        for f, est, dev in zip(self.frequencies, self.located, self.deviations):
            mark = "PASS" if dev <= self.tolerance else "FAIL"
            lines.append(f"{mark}  tone {f:7.2f} Hz  located {est:7.2f} Hz  "
                         f"deviation {dev * 100:.2f}%")
        return "\n".join(lines)

    def to_dict(self) -> dict:
        return {"ok": self.ok, "tolerance": self.tolerance,
                "frequencies": list(self.frequencies),
                "located": list(self.located),
                "deviations": list(self.deviations)}


def spectral_separability(plan: SequencePlan,
                          tolerance_fraction: float = 0.05) -> SeparabilityReport:
    """Can one imaging window resolve every excitation tone?

    Synthesizes a unit-amplitude multi-tone signal over the plan's imaging
    window at the plan's frame rate and reports each located peak's
    relative deviation from its tone.
    """
    tones = sorted(plan.frequencies)
    n = plan.frames_per_plane
    t = np.arange(n) / plan.frame_rate
    x = np.zeros(n)
    for f in tones:
        x += np.cos(2.0 * np.pi * f * t)

    peaks = interpolated_peaks(x, plan.frame_rate, n_peaks=len(tones))
    located = sorted(f for f, _ in peaks)
    if len(located) < len(tones):
        return SeparabilityReport(frequencies=tuple(tones), located=located,
                                  deviations=[], tolerance=tolerance_fraction,
                                  n_expected=len(tones))
    deviations = [abs(est - f) / f for est, f in zip(located, tones)]
    return SeparabilityReport(frequencies=tuple(tones), located=located,
                              deviations=deviations, tolerance=tolerance_fraction,
                              n_expected=len(tones))
