"""Cartesian reconstruction: scan conversion, curl, LFE and fusion.

The curl removes the irrotational (compressional) part of the phasor
field before inversion:
curl_x = dFz/dy - dFy/dz, curl_y = dFx/dz - dFz/dx, curl_z = dFy/dx - dFx/dy,
all by central differences, falling back to one-sided first-order
differences at mask and volume boundaries (flagged at reduced confidence).
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np
from scipy import ndimage

from .errors import DegenerateInputError, GeometryError
from .geometry import CartesianGrid, FrustumGeometry
from .lfe import FilterBankParams, local_frequency
from .phasor import PhasorSet
from .viscoelastic import young_from_speed

__all__ = [
    "CartesianPhasorSet",
    "CurlSet",
    "ElasticityVolume",
    "ROIStats",
    "scan_convert",
    "curl3d",
    "curl2d",
    "lfe",
    "fuse_frequencies",
    "roi_stats",
    "erode_mask",
]


@dataclass
class CartesianPhasorSet:
    """Phasor volumes on a uniform isotropic Cartesian grid, global axes."""

    phasors: np.ndarray  # (n_freqs, nx, ny, nz, 3) complex
    frequencies: tuple[float, ...]
    grid: CartesianGrid
    mask: np.ndarray     # (nx, ny, nz) inside-frustum indicator

    @property
    def spacing(self) -> float:
        return self.grid.spacing


@dataclass
class CurlSet:
    """Curl component volumes per excitation frequency."""

    values: np.ndarray   # (n_freqs, nx, ny, nz, n_components) complex
    mode: str            # 'curl3d' | 'curl2d'
    frequencies: tuple[float, ...]
    grid: CartesianGrid
    mask: np.ndarray
    confidence: np.ndarray  # 1 interior, 0.5 one-sided stencil, 0 undefined


@dataclass
class ElasticityVolume:
    """Young's modulus map [Pa] with per-voxel confidence weights."""

    young: np.ndarray
    confidence: np.ndarray
    mask: np.ndarray
    grid: CartesianGrid
    provenance: dict

    def valid_young(self) -> np.ndarray:
        return self.young[self.mask]


@dataclass(frozen=True)
class ROIStats:
    mean: float
    std: float
    n_voxels: int


def scan_convert(phasors: PhasorSet, spacing: float = 0.5e-3,
                 grid: CartesianGrid | None = None) -> CartesianPhasorSet:
    """Resample frustum phasors onto a uniform Cartesian grid.

    Vector components are rotated from plane-local to global axes using
    each plane's angle before real and imaginary parts are interpolated
    trilinearly; voxels outside the frustum are masked out.
    """
    if spacing <= 0:
        raise ValueError(f"spacing must be positive, got {spacing}")
    geom = phasors.grid
    if not isinstance(geom, FrustumGeometry):
        raise GeometryError("scan_convert needs phasors on a frustum geometry")
    if grid is None:
        lo, hi = geom.bounding_box()
        grid = CartesianGrid.covering(lo, hi, spacing)

    data = np.asarray(phasors.phasors)  # (nF, ax, lat, planes, 3) plane-local
    global_data = np.empty_like(data)
    for p in range(geom.n_planes):
        basis = geom.plane_basis(p)
        global_data[..., p, :] = data[..., p, :] @ basis.T

    idx, inside = geom.fractional_indices(grid.points())
    coords = [np.clip(idx[a], 0, geom.shape[a] - 1) for a in range(3)]
    out = np.zeros((data.shape[0],) + tuple(grid.shape) + (3,), dtype=complex)
    for fi in range(data.shape[0]):
        for c in range(3):
            for part in (np.real, np.imag):
                vol = np.ascontiguousarray(part(global_data[fi, ..., c]))
                interp = ndimage.map_coordinates(vol, coords, order=1,
                                                 mode="nearest")
                out[fi, ..., c] += (interp if part is np.real
                                    else 1j * interp)
    out[:, ~inside, :] = 0.0
    return CartesianPhasorSet(phasors=out, frequencies=phasors.frequencies,
                              grid=grid, mask=inside)


def _masked_derivative(vol: np.ndarray, mask: np.ndarray, axis: int,
                       spacing: float):
    """Central differences where possible, one-sided at boundaries.

    Returns (derivative, order) with order 2 for centered stencils, 1 for
    one-sided and 0 where no valid neighbor exists.
    """
    plus = np.roll(vol, -1, axis=axis)
    minus = np.roll(vol, 1, axis=axis)
    mplus = np.roll(mask, -1, axis=axis)
    mminus = np.roll(mask, 1, axis=axis)
    # roll wraps; kill the wrapped entries
    head = [slice(None)] * vol.ndim
    head[axis] = slice(-1, None)
    mplus[tuple(head)] = False
    tail = [slice(None)] * vol.ndim
    tail[axis] = slice(0, 1)
    mminus[tuple(tail)] = False

    both = mask & mplus & mminus
    only_plus = mask & mplus & ~mminus
    only_minus = mask & mminus & ~mplus

    deriv = np.zeros_like(vol)
    deriv[both] = (plus[both] - minus[both]) / (2.0 * spacing)
    deriv[only_plus] = (plus[only_plus] - vol[only_plus]) / spacing
    deriv[only_minus] = (vol[only_minus] - minus[only_minus]) / spacing

    order = np.zeros(vol.shape, dtype=np.int8)
    order[only_plus | only_minus] = 1
    order[both] = 2
    return deriv, order


def _check_curl_input(cart: CartesianPhasorSet) -> None:
    if any(n < 3 for n in cart.grid.shape):
        raise GeometryError(
            f"curl needs at least 3 samples along every axis, grid is "
            f"{tuple(cart.grid.shape)}")
    for ax in range(3):
        if np.max(np.sum(cart.mask, axis=ax)) < 3:
            raise GeometryError(
                f"curl needs at least 3 valid samples along axis {ax}")


def _derivatives(cart: CartesianPhasorSet, pairs):
    """Derivative volumes for the requested (component, axis) pairs."""
    h = cart.spacing
    out = {}
    orders = {}
    for fi in range(len(cart.frequencies)):
        for comp, axis in pairs:
            d, o = _masked_derivative(cart.phasors[fi, ..., comp], cart.mask,
                                      axis, h)
            out[(fi, comp, axis)] = d
            orders[(fi, comp, axis)] = o
    return out, orders


def curl3d(cart: CartesianPhasorSet) -> CurlSet:
    """All three curl components of the phasor field, per frequency."""
    _check_curl_input(cart)
    pairs = [(2, 1), (1, 2), (0, 2), (2, 0), (1, 0), (0, 1)]
    derivs, orders = _derivatives(cart, pairs)
    n_f = len(cart.frequencies)
    values = np.empty((n_f,) + tuple(cart.grid.shape) + (3,), dtype=complex)
    min_order = np.full(cart.grid.shape, 2, dtype=np.int8)
    for fi in range(n_f):
        values[fi, ..., 0] = derivs[(fi, 2, 1)] - derivs[(fi, 1, 2)]
        values[fi, ..., 1] = derivs[(fi, 0, 2)] - derivs[(fi, 2, 0)]
        values[fi, ..., 2] = derivs[(fi, 1, 0)] - derivs[(fi, 0, 1)]
        for key in [(fi, c, a) for c, a in pairs]:
            min_order = np.minimum(min_order, orders[key])
    confidence = np.where(min_order == 2, 1.0,
                          np.where(min_order == 1, 0.5, 0.0))
    values[:, ~cart.mask, :] = 0.0
    return CurlSet(values=values, mode="curl3d",
                   frequencies=cart.frequencies, grid=cart.grid,
                   mask=cart.mask & (min_order > 0), confidence=confidence)


def curl2d(cart: CartesianPhasorSet) -> CurlSet:
    """Only the elevational curl component dFy/dx - dFx/dy, per frequency."""
    _check_curl_input(cart)
    pairs = [(1, 0), (0, 1)]
    derivs, orders = _derivatives(cart, pairs)
    n_f = len(cart.frequencies)
    values = np.empty((n_f,) + tuple(cart.grid.shape) + (1,), dtype=complex)
    min_order = np.full(cart.grid.shape, 2, dtype=np.int8)
    for fi in range(n_f):
        values[fi, ..., 0] = derivs[(fi, 1, 0)] - derivs[(fi, 0, 1)]
        for key in [(fi, c, a) for c, a in pairs]:
            min_order = np.minimum(min_order, orders[key])
    confidence = np.where(min_order == 2, 1.0,
                          np.where(min_order == 1, 0.5, 0.0))
    values[:, ~cart.mask, :] = 0.0
    return CurlSet(values=values, mode="curl2d",
                   frequencies=cart.frequencies, grid=cart.grid,
                   mask=cart.mask & (min_order > 0), confidence=confidence)


def lfe(volumes, f_exc: float, rho: float = 1000.0,
        bank: FilterBankParams | None = None) -> ElasticityVolume:
    """Elasticity at one excitation frequency via local frequency estimation.

    ``volumes`` is a CurlSet or CartesianPhasorSet; the channel set at
    f_exc is pushed through the filter bank, fused by amplitude, and the
    local frequency converted through c = f/nu, E = 3 rho c^2. Voxels
    whose estimate leaves the admissible band keep a reduced confidence
    instead of failing.
    """
    freqs = tuple(volumes.frequencies)
    if f_exc not in freqs:
        raise ValueError(f"{f_exc} Hz not among the set's frequencies {freqs}")
    fi = freqs.index(f_exc)
    if isinstance(volumes, CurlSet):
        data = volumes.values[fi]
        weights_in = volumes.confidence
        mode = volumes.mode
    else:
        data = volumes.phasors[fi]
        weights_in = None
        mode = "none"
    channels = [data[..., c] for c in range(data.shape[-1])]
    if max(float(np.max(np.abs(c))) for c in channels) == 0.0:
        raise DegenerateInputError(
            f"all channels at {f_exc} Hz are zero; nothing to invert")

    nu, conf, in_band = local_frequency(channels, volumes.grid.spacing,
                                        mask=volumes.mask, params=bank,
                                        weights_in=weights_in)
    speed = f_exc / np.maximum(nu, 1e-12)
    young = young_from_speed(np.maximum(speed, 1e-12), rho)
    confidence = np.where(in_band, conf, 0.1 * conf)
    confidence = np.where(volumes.mask, confidence, 0.0)
    return ElasticityVolume(young=young, confidence=confidence,
                            mask=volumes.mask.copy(), grid=volumes.grid,
                            provenance={"mode": mode, "frequencies": [f_exc],
                                        "rho": rho})


def fuse_frequencies(per_freq: list[ElasticityVolume]) -> ElasticityVolume:
    """Per-voxel confidence-weighted mean across excitation frequencies."""
    if not per_freq:
        raise ValueError("nothing to fuse")
    first = per_freq[0]
    for other in per_freq[1:]:
        if other.grid != first.grid or other.mask.shape != first.mask.shape:
            raise ValueError("elasticity volumes live on different grids")
        if not np.array_equal(other.mask, first.mask):
            raise ValueError("elasticity volumes carry different masks")

    wsum = np.zeros(first.young.shape)
    esum = np.zeros(first.young.shape)
    freqs = []
    for vol in per_freq:
        wsum += vol.confidence
        esum += vol.confidence * vol.young
        freqs.extend(vol.provenance.get("frequencies", []))
    young = np.where(wsum > 0, esum / np.maximum(wsum, 1e-300), 0.0)
    return ElasticityVolume(young=young, confidence=wsum,
                            mask=first.mask.copy(), grid=first.grid,
                            provenance={"mode": first.provenance.get("mode"),
                                        "frequencies": freqs,
                                        "rho": first.provenance.get("rho")})


def erode_mask(mask: np.ndarray, crop_voxels) -> np.ndarray:
    """Shrink the valid mask by a per-axis crop, capped so thin axes survive."""
    crop = np.broadcast_to(np.asarray(crop_voxels, dtype=int), (3,)).copy()
    out = mask
    for ax in range(3):
        thickness = int(np.max(np.sum(mask, axis=ax))) if mask.any() else 0
        allowed = max(0, (thickness - 2) // 3)
        c = min(int(crop[ax]), allowed)
        if c <= 0:
            continue
        size = [1, 1, 1]
        size[ax] = 2 * c + 1
        out = ndimage.binary_erosion(out, structure=np.ones(size), iterations=1,
                                     border_value=0)
    return out


def roi_stats(volume: ElasticityVolume, center, size) -> ROIStats:
    """Mean, standard deviation and voxel count inside an axis-aligned box."""
    box = volume.grid.box_slice(center, size)
    sub = volume.young[box]
    submask = volume.mask[box]
    if not np.any(submask):
        raise ValueError(
            f"ROI centered at {tuple(center)} does not intersect the valid mask")
    vals = sub[submask]
    return ROIStats(mean=float(np.mean(vals)), std=float(np.std(vals)),
                    n_voxels=int(vals.size))
