"""Virtual swept-transducer acquisition and phase-coherent volume formation.

acquire_sweep walks the sequence schedule plane by plane, sampling a
displacement source (displacement mode) or rendering speckle images warped
by it (speckle mode). form_volumes regroups the plane-major frames into
time-major volumes whose planes all share one excitation phase; it is the
detector for desynchronized sequences.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .errors import DegenerateInputError, GeometryError, SynchronizationError
from .geometry import FrustumGeometry
from .sequence import SequencePlan

__all__ = [
    "SpeckleParams",
    "ScattererCloud",
    "synthesize_speckle",
    "AcquisitionRecord",
    "VolumeSeries",
    "acquire_sweep",
    "form_volumes",
]

PHASE_TOLERANCE_S = 1e-9


@dataclass(frozen=True)
class SpeckleParams:
    """Scatterer density and separable Gaussian point-spread widths [m]."""

    density_per_mm3: float = 2.0
    sigma_axial: float = 0.3e-3
    sigma_lateral: float = 0.8e-3
    sigma_elevational: float = 0.6e-3
    support_sigmas: float = 3.0


class ScattererCloud:
    """Seeded random scatterers filling the frustum's bounding box.

    Scatterers persist across frames (one tissue realization per seed);
    frames differ only through the displacement applied to them.
    """

    def __init__(self, seed: int, geometry: FrustumGeometry,
                 params: SpeckleParams | None = None):
        self.geometry = geometry
        self.params = params or SpeckleParams()
        self.seed = int(seed)
        lo, hi = geometry.bounding_box()
        margin = self.params.support_sigmas * max(self.params.sigma_axial,
                                                  self.params.sigma_lateral,
                                                  self.params.sigma_elevational)
        lo = lo - margin
        hi = hi + margin
        volume_mm3 = float(np.prod((hi - lo) * 1e3))
        n = max(1, int(round(self.params.density_per_mm3 * volume_mm3)))
        rng = np.random.default_rng(self.seed)
        self.positions = rng.uniform(lo, hi, size=(n, 3))
        self.amplitudes = rng.uniform(0.5, 1.5, size=n)

    def render_plane(self, plane: int, displacements=None) -> np.ndarray:
        """Intensity image of one plane with scatterers displaced as given.

        displacements: None, a (n, 3) array, a broadcastable 3-vector, or a
        callable mapping positions (n, 3) -> displacements (n, 3), all in
        global components [m].
        """
        geom = self.geometry
        par = self.params
        pos = self.positions
        if displacements is None:
            moved = pos
        elif callable(displacements):
            moved = pos + np.asarray(displacements(pos), dtype=float)
        else:
            moved = pos + np.asarray(displacements, dtype=float)

        basis = geom.plane_basis(plane)
        rel = moved - np.asarray(geom.origin)
        local = rel @ basis  # columns: axial, lateral, elevational
        r, l, e = local[:, 0], local[:, 1], local[:, 2]

        w_slice = np.exp(-0.5 * (e / par.sigma_elevational) ** 2)
        fi = (r - geom.r0) / geom.axial_pitch
        fj = (l - geom.laterals[0]) / geom.lateral_pitch

        wa = int(math.ceil(par.support_sigmas * par.sigma_axial / geom.axial_pitch))
        wl = int(math.ceil(par.support_sigmas * par.sigma_lateral / geom.lateral_pitch))
        keep = ((np.abs(e) <= par.support_sigmas * par.sigma_elevational)
                & (fi >= -wa) & (fi <= geom.n_axial - 1 + wa)
                & (fj >= -wl) & (fj <= geom.n_lateral - 1 + wl))
        fi, fj = fi[keep], fj[keep]
        amp = self.amplitudes[keep] * w_slice[keep]

        img = np.zeros((geom.n_axial, geom.n_lateral))
        if fi.size == 0:
            return img
        base_i = np.round(fi).astype(int)
        base_j = np.round(fj).astype(int)
        di = np.arange(-wa, wa + 1)
        dj = np.arange(-wl, wl + 1)
        ii = base_i[:, None] + di[None, :]
        jj = base_j[:, None] + dj[None, :]
        ga = np.exp(-0.5 * (((ii - fi[:, None]) * geom.axial_pitch)
                            / par.sigma_axial) ** 2)
        gl = np.exp(-0.5 * (((jj - fj[:, None]) * geom.lateral_pitch)
                            / par.sigma_lateral) ** 2)
        valid_i = (ii >= 0) & (ii < geom.n_axial)
        valid_j = (jj >= 0) & (jj < geom.n_lateral)
        ga = np.where(valid_i, ga, 0.0)
        gl = np.where(valid_j, gl, 0.0)
        contrib = amp[:, None, None] * ga[:, :, None] * gl[:, None, :]
        np.add.at(img,
                  (np.clip(ii, 0, geom.n_axial - 1)[:, :, None],
                   np.clip(jj, 0, geom.n_lateral - 1)[:, None, :]),
                  contrib)
        return img


def synthesize_speckle(scatterer_seed: int, geometry: FrustumGeometry,
                       plane: int = 0, displacements=None,
                       params: SpeckleParams | None = None) -> np.ndarray:
    """One speckle slice from a seeded scatterer cloud (deterministic per seed)."""
    cloud = ScattererCloud(scatterer_seed, geometry, params)
    return cloud.render_plane(plane, displacements)


@dataclass
class AcquisitionRecord:
    """Per-plane frame stacks on the sweep schedule."""

    planes: list  # per plane: (n_frames, n_axial, n_lateral[, 3])
    timestamps: np.ndarray  # (n_planes, n_frames)
    plane_angles_deg: np.ndarray
    geometry: FrustumGeometry
    plan: SequencePlan
    mode: str
    frame_indices: np.ndarray

    @property
    def n_frames(self) -> int:
        return int(self.timestamps.shape[1])


@dataclass
class VolumeSeries:
    """Time-major volumes; volume n holds every plane's n-th kept frame."""

    volumes: np.ndarray  # (n_volumes, n_axial, n_lateral, n_planes[, 3])
    volume_timestamps: np.ndarray  # (n_volumes,), time modulo fundamental
    geometry: FrustumGeometry
    plan: SequencePlan
    mode: str
    frame_indices: np.ndarray

    @property
    def n_volumes(self) -> int:
        return int(self.volumes.shape[0])


def acquire_sweep(field, plan: SequencePlan, geometry: FrustumGeometry,
                  mode: str = "displacement", frame_indices=None,
                  scatterer_seed: int = 0,
                  speckle_params: SpeckleParams | None = None) -> AcquisitionRecord:
    """Sample a displacement source plane by plane on the sweep schedule.

    ``field`` provides displacement(points, t) in global components. In
    displacement mode the stored frames are the plane-local projections of
    exact field samples; in speckle mode they are rendered intensity
    images of a seeded scatterer cloud warped by the field.

    frame_indices selects a subset of each plane's frames (default: all);
    the same subset applies to every plane so volume formation stays
    phase-coherent.
    """
    if mode not in ("displacement", "speckle"):
        raise ValueError(f"mode must be 'displacement' or 'speckle', got {mode!r}")
    if geometry.n_planes != plan.n_planes:
        raise GeometryError(
            f"geometry has {geometry.n_planes} planes but the plan sweeps "
            f"{plan.n_planes}")
    if frame_indices is None:
        frame_indices = np.arange(plan.frames_per_plane)
    else:
        frame_indices = np.asarray(frame_indices, dtype=int)
        if frame_indices.size == 0:
            raise ValueError("frame_indices must be non-empty")
        if np.any(frame_indices < 0) or np.any(frame_indices >= plan.frames_per_plane):
            raise ValueError("frame_indices outside the plan's imaging window")

    phantom = getattr(field, "phantom", None)
    cloud = None
    if mode == "speckle":
        cloud = ScattererCloud(scatterer_seed, geometry, speckle_params)

    planes = []
    timestamps = np.empty((plan.n_planes, frame_indices.size))
    for p in range(plan.n_planes):
        pts = geometry.plane_points(p)
        if phantom is not None and not np.all(phantom.contains(pts)):
            raise GeometryError(
                f"plane {p} extends outside the simulated field bounds")
        times = plan.imaging_start(p) + frame_indices / plan.frame_rate
        timestamps[p] = times
        if mode == "displacement":
            stack = np.empty((frame_indices.size,) + pts.shape)
            for n, t in enumerate(times):
                stack[n] = geometry.global_to_local(field.displacement(pts, t), p)
        else:
            stack = np.empty((frame_indices.size, geometry.n_axial, geometry.n_lateral))
            for n, t in enumerate(times):
                stack[n] = cloud.render_plane(
                    p, lambda pos, t=t: field.displacement(pos, t))
        planes.append(stack)

    return AcquisitionRecord(planes=planes, timestamps=timestamps,
                             plane_angles_deg=geometry.plane_angles_deg,
                             geometry=geometry, plan=plan, mode=mode,
                             frame_indices=frame_indices)


def _circular_residual(value: float, period: float) -> float:
    r = math.fmod(value, period)
    if r < 0:
        r += period
    return min(r, period - r)


def form_volumes(record: AcquisitionRecord) -> VolumeSeries:
    """Regroup plane-major frames into phase-coherent time-major volumes.

    Raises SynchronizationError naming the first offending plane when any
    frame's excitation phase deviates from plane 0's by more than 1 ns.
    """
    plan = record.plan
    t0 = plan.fundamental
    n_frames = record.n_frames
    for p in range(plan.n_planes):
        for n in range(n_frames):
            residual = _circular_residual(
                record.timestamps[p, n] - record.timestamps[0, n], t0)
            if residual > PHASE_TOLERANCE_S:
                raise SynchronizationError(
                    f"plane {p} frame {n} excitation phase deviates by "
                    f"{residual:.3e} s from plane 0 (fundamental {t0:g} s); "
                    f"the sweep is not synchronized")

    stacked = np.stack(record.planes, axis=0)  # (planes, frames, ax, lat[, 3])
    volumes = np.moveaxis(stacked, (0, 1), (3, 0))  # (frames, ax, lat, planes[, 3])
    phases = np.mod(record.timestamps[0], t0)
    return VolumeSeries(volumes=volumes, volume_timestamps=phases,
                        geometry=record.geometry, plan=plan, mode=record.mode,
                        frame_indices=record.frame_indices)
