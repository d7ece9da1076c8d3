"""3D displacement estimation from consecutive speckle volumes.

The tracker is plain normalized cross-correlation block matching with
separable parabolic sub-sample refinement and a component-wise 3x3x3
median filter, accumulated pairwise into absolute motion relative to the
first volume. oracle_displacements bypasses tracking entirely, forwarding
exact simulated samples, which isolates the reconstruction chain from
tracking error.
"""

from __future__ import annotations

import numpy as np
from scipy import ndimage

from .acquisition import VolumeSeries
from .errors import DegenerateInputError, GeometryError
from .forward import DisplacementFieldSeries

__all__ = ["DisplacementSeries", "track_displacements", "oracle_displacements"]

_CORR_STACK_BUDGET_BYTES = 256 * 1024 * 1024


def _shifted(vol: np.ndarray, shift: tuple[int, int, int]) -> np.ndarray:
    """vol evaluated at x + shift with edge replication outside the volume."""
    out = vol
    for ax, s in enumerate(shift):
        if s == 0:
            continue
        out = np.roll(out, -s, axis=ax)
        sl = [slice(None)] * out.ndim
        edge = [slice(None)] * out.ndim
        if s > 0:
            sl[ax] = slice(-s, None)
            edge[ax] = slice(-s - 1, -s)
        else:
            sl[ax] = slice(None, -s)
            edge[ax] = slice(-s, -s + 1)
        out[tuple(sl)] = out[tuple(edge)]
    return out


def _local_stats(vol: np.ndarray, window) -> tuple[np.ndarray, np.ndarray]:
    mean = ndimage.uniform_filter(vol, size=window, mode="nearest")
    sq = ndimage.uniform_filter(vol * vol, size=window, mode="nearest")
    var = np.maximum(sq - mean * mean, 0.0)
    return mean, var


def _ncc_map(ref, ref_mean, ref_var, mov, shift, window, eps) -> np.ndarray:
    shifted = _shifted(mov, shift)
    mov_mean, mov_var = _local_stats(shifted, window)
    cross = ndimage.uniform_filter(ref * shifted, size=window, mode="nearest")
    cov = cross - ref_mean * mov_mean
    return cov / (np.sqrt(ref_var * mov_var) + eps)


def _pair_displacement(ref: np.ndarray, mov: np.ndarray, window, search):
    """Integer NCC argmax plus parabolic refinement, in sample units."""
    shifts = [np.arange(-s, s + 1) for s in search]
    n_shifts = int(np.prod([len(s) for s in shifts]))
    eps = 1e-12 * max(float(np.max(np.abs(ref))) ** 2, 1e-300)

    ref = np.ascontiguousarray(ref, dtype=np.float64)
    mov = np.ascontiguousarray(mov, dtype=np.float64)
    ref_mean, ref_var = _local_stats(ref, window)

    shift_list = [(int(a), int(b), int(c))
                  for a in shifts[0] for b in shifts[1] for c in shifts[2]]
    keep_stack = n_shifts * ref.size * 4 <= _CORR_STACK_BUDGET_BYTES

    best = np.full(ref.shape, -np.inf)
    best_idx = np.zeros(ref.shape, dtype=np.int32)
    stack = np.empty((n_shifts,) + ref.shape, dtype=np.float32) if keep_stack else None
    for si, shift in enumerate(shift_list):
        corr = _ncc_map(ref, ref_mean, ref_var, mov, shift, window, eps)
        if keep_stack:
            stack[si] = corr
        better = corr > best
        best = np.where(better, corr, best)
        best_idx = np.where(better, si, best_idx)

    arr_shift = np.array(shift_list)
    base = arr_shift[best_idx]  # (..., 3) integer shifts

    # correlations at the six stencil neighbors of each voxel's best shift
    neighbor_corr = np.empty(ref.shape + (3, 2))
    if keep_stack:
        for ax in range(3):
            for side, delta in enumerate((-1, 1)):
                want = base.copy()
                want[..., ax] += delta
                np.clip(want[..., ax], -search[ax], search[ax], out=want[..., ax])
                lin = np.zeros(ref.shape, dtype=np.int64)
                stride = 1
                for a in (2, 1, 0):
                    lin += (want[..., a] + search[a]) * stride
                    stride *= len(shifts[a])
                neighbor_corr[..., ax, side] = np.take_along_axis(
                    stack.reshape(n_shifts, -1), lin.reshape(1, -1), axis=0
                ).reshape(ref.shape)
    else:
        neighbor_corr[:] = np.nan
        for si, shift in enumerate(shift_list):
            corr = _ncc_map(ref, ref_mean, ref_var, mov, shift, window, eps)
            for ax in range(3):
                for side, delta in enumerate((-1, 1)):
                    want = base[..., ax] + delta
                    np.clip(want, -search[ax], search[ax], out=want)
                    hits = np.ones(ref.shape, dtype=bool)
                    for a in range(3):
                        target = want if a == ax else base[..., a]
                        hits &= target == shift[a]
                    neighbor_corr[..., ax, side] = np.where(
                        hits, corr, neighbor_corr[..., ax, side])

    disp = base.astype(float)
    for ax in range(3):
        cm = neighbor_corr[..., ax, 0]
        cp = neighbor_corr[..., ax, 1]
        # Gaussian-peak refinement (parabola on log corr) where the triplet
        # is positive; it is near-exact for Gaussian-PSF speckle and avoids
        # the peak-locking bias of a plain parabola. Fall back otherwise.
        gaussian_ok = (cm > 0) & (cp > 0) & (best > 0)
        lm = np.log(np.where(gaussian_ok, cm, 1.0))
        lp = np.log(np.where(gaussian_ok, cp, 1.0))
        l0 = np.log(np.where(gaussian_ok, np.minimum(best, 1.0 - 1e-12), 1.0))
        with np.errstate(divide="ignore", invalid="ignore"):
            off_g = 0.5 * (lm - lp) / (lm - 2.0 * l0 + lp)
            off_p = 0.5 * (cm - cp) / (cm - 2.0 * best + cp)
        off = np.where(gaussian_ok, off_g, off_p)
        off = np.where(np.isfinite(off), off, 0.0)
        off = np.clip(off, -0.5, 0.5)
        at_edge = np.abs(base[..., ax]) >= search[ax]
        disp[..., ax] += np.where(at_edge, 0.0, off)

    quality = np.clip(best, 0.0, 1.0)
    return disp, quality


def _samples_to_meters(disp_samples: np.ndarray, geometry) -> np.ndarray:
    out = np.empty_like(disp_samples)
    out[..., 0] = disp_samples[..., 0] * geometry.axial_pitch
    out[..., 1] = disp_samples[..., 1] * geometry.lateral_pitch
    elev_pitch = geometry.elevational_pitch(geometry.radii)  # per axial sample
    out[..., 2] = disp_samples[..., 2] * elev_pitch[:, None, None]
    return out


class DisplacementSeries:
    """Per-volume 3-vector displacement [m] on the frustum grid.

    Components are plane-local (axial, lateral, elevational); frame 0 is
    the zero reference. quality holds per-voxel correlation scores in
    [0, 1].
    """

    def __init__(self, frames, timestamps, quality, geometry, plan,
                 provenance: str):
        self.frames = np.asarray(frames)
        self.timestamps = np.asarray(timestamps, dtype=float)
        self.quality = np.asarray(quality)
        self.geometry = geometry
        self.plan = plan
        self.provenance = provenance
        if self.frames.shape[0] != self.timestamps.shape[0]:
            raise ValueError("one frame per timestamp required")
        if np.any(self.quality < 0) or np.any(self.quality > 1):
            raise ValueError("quality scores must lie in [0, 1]")

    @property
    def n_frames(self) -> int:
        return int(self.frames.shape[0])


def track_displacements(vols: VolumeSeries, window=(9, 9, 3), search=(4, 4, 4),
                        regularization: int = 1) -> DisplacementSeries:
    """Pairwise NCC block matching cumulative-summed to absolute motion.

    window and search are (axial, lateral, elevational) sample counts;
    regularization is the number of 3x3x3 median-filter passes applied to
    each pairwise estimate.
    """
    if vols.mode != "speckle":
        raise ValueError("tracking expects speckle-mode volumes; use "
                         "oracle_displacements for displacement-mode data")
    if vols.n_volumes < 2:
        raise ValueError("tracking needs at least two volumes")
    vol_shape = vols.volumes.shape[1:4]
    if any(w > n for w, n in zip(window, vol_shape)):
        raise ValueError(f"window {tuple(window)} exceeds volume shape {vol_shape}")
    if not np.any(vols.volumes):
        raise DegenerateInputError("all volumes are zero; nothing to track")

    n = vols.n_volumes
    frames = np.zeros((n,) + vol_shape + (3,))
    quality = np.ones((n,) + vol_shape)
    cumulative = np.zeros(vol_shape + (3,))
    for i in range(1, n):
        disp, q = _pair_displacement(vols.volumes[i - 1], vols.volumes[i],
                                     tuple(window), tuple(search))
        for _ in range(max(0, int(regularization))):
            for ax in range(3):
                disp[..., ax] = ndimage.median_filter(disp[..., ax], size=3,
                                                      mode="nearest")
        cumulative = cumulative + _samples_to_meters(disp, vols.geometry)
        frames[i] = cumulative
        quality[i] = q

    return DisplacementSeries(frames=frames, timestamps=vols.volume_timestamps,
                              quality=quality, geometry=vols.geometry,
                              plan=vols.plan, provenance="tracked")


def oracle_displacements(field: DisplacementFieldSeries,
                         vols: VolumeSeries) -> DisplacementSeries:
    """Exact simulated displacements in place of tracking (quality = 1).

    The field series must be sampled on the same frustum with matching
    timestamps; its global vectors are projected onto each plane's local
    axes so the output matches what a perfect tracker would measure.
    """
    if field.grid is not vols.geometry and field.grid != vols.geometry:
        raise GeometryError("field and volumes use different frustum geometries")
    if field.timestamps.shape != vols.volume_timestamps.shape or np.any(
            np.abs(field.timestamps - vols.volume_timestamps) > 1e-9):
        raise ValueError("field timestamps do not match the volume series")

    geom = vols.geometry
    frames = np.empty_like(field.frames)
    for p in range(geom.n_planes):
        frames[:, :, :, p, :] = geom.global_to_local(field.frames[:, :, :, p, :], p)
    quality = np.ones(frames.shape[:-1])
    return DisplacementSeries(frames=frames, timestamps=vols.volume_timestamps,
                              quality=quality, geometry=geom, plan=vols.plan,
                              provenance="oracle")
