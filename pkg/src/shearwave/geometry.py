"""Sampling geometries: the swept-plane frustum and uniform Cartesian grids.

Global axes: x = axial depth at zero sweep angle, y = lateral, z =
elevational. The motorized sweep rotates the imaging plane about the
lateral (y) axis through the pivot at ``origin``; plane p sits at angle
p * plane_angle_step. Within a plane, samples form an axial x lateral
raster starting at depth r0.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

__all__ = ["FrustumGeometry", "CartesianGrid"]


@dataclass(frozen=True)
class FrustumGeometry:
    """Fan of rectangular rasters, one per sweep angle."""

    n_axial: int
    n_lateral: int
    n_planes: int
    axial_pitch: float = 0.15e-3
    lateral_pitch: float = 0.48e-3
    plane_angle_step_deg: float = 0.45
    r0: float = 5e-3
    origin: tuple[float, float, float] = (0.0, 0.0, 0.0)

    def __post_init__(self):
        if min(self.n_axial, self.n_lateral, self.n_planes) < 1:
            raise ValueError("frustum needs at least one sample per axis")
        if self.axial_pitch <= 0 or self.lateral_pitch <= 0:
            raise ValueError("sample pitches must be positive")

    @property
    def shape(self) -> tuple[int, int, int]:
        return (self.n_axial, self.n_lateral, self.n_planes)

    @property
    def plane_angles_deg(self) -> np.ndarray:
        return np.arange(self.n_planes) * self.plane_angle_step_deg

    @property
    def radii(self) -> np.ndarray:
        """Depth of each axial sample along the plane [m]."""
        return self.r0 + np.arange(self.n_axial) * self.axial_pitch

    @property
    def laterals(self) -> np.ndarray:
        """Lateral offsets centered on the probe axis [m]."""
        return (np.arange(self.n_lateral) - (self.n_lateral - 1) / 2.0) * self.lateral_pitch

    def plane_basis(self, plane: int) -> np.ndarray:
        """Columns are the plane's axial, lateral, elevational unit vectors."""
        phi = np.deg2rad(self.plane_angles_deg[plane])
        c, s = np.cos(phi), np.sin(phi)
        return np.array([[c, 0.0, -s],
                         [0.0, 1.0, 0.0],
                         [s, 0.0, c]])

    def plane_points(self, plane: int) -> np.ndarray:
        """Global coordinates of one plane's raster, shape (n_axial, n_lateral, 3)."""
        phi = np.deg2rad(self.plane_angles_deg[plane])
        r = self.radii[:, None]
        l = self.laterals[None, :]
        x = r * np.cos(phi) + np.zeros_like(l)
        y = np.broadcast_to(l, x.shape)
        z = r * np.sin(phi) + np.zeros_like(l)
        return np.stack([x, y, z], axis=-1) + np.asarray(self.origin)

    def points(self) -> np.ndarray:
        """All sample coordinates, shape (n_axial, n_lateral, n_planes, 3)."""
        return np.stack([self.plane_points(p) for p in range(self.n_planes)], axis=2)

    def local_to_global(self, u_local: np.ndarray, plane: int) -> np.ndarray:
        """Rotate (axial, lateral, elevational) vectors into global components."""
        return u_local @ self.plane_basis(plane).T

    def global_to_local(self, u_global: np.ndarray, plane: int) -> np.ndarray:
        return u_global @ self.plane_basis(plane)

    def elevational_pitch(self, depth) -> np.ndarray:
        """Arc length between adjacent planes at the given depth [m]."""
        return np.asarray(depth) * np.deg2rad(self.plane_angle_step_deg)

    def fractional_indices(self, points: np.ndarray):
        """Map global points to fractional (axial, lateral, plane) indices.

        Returns (indices, inside) where inside marks points whose indices
        fall within the sampled frustum.
        """
        rel = np.asarray(points, dtype=float) - np.asarray(self.origin)
        r = np.hypot(rel[..., 0], rel[..., 2])
        phi = np.rad2deg(np.arctan2(rel[..., 2], rel[..., 0]))
        i = (r - self.r0) / self.axial_pitch
        j = rel[..., 1] / self.lateral_pitch + (self.n_lateral - 1) / 2.0
        k = phi / self.plane_angle_step_deg
        idx = np.stack([i, j, k], axis=0)
        eps = 1e-9
        inside = ((i >= -eps) & (i <= self.n_axial - 1 + eps)
                  & (j >= -eps) & (j <= self.n_lateral - 1 + eps)
                  & (k >= -eps) & (k <= self.n_planes - 1 + eps))
        return idx, inside

    def bounding_box(self):
        """Axis-aligned (lo, hi) corners enclosing every sample point."""
        pts = self.points().reshape(-1, 3)
        return pts.min(axis=0), pts.max(axis=0)

    def to_dict(self) -> dict:
        return {
            "n_axial": self.n_axial, "n_lateral": self.n_lateral,
            "n_planes": self.n_planes, "axial_pitch": self.axial_pitch,
            "lateral_pitch": self.lateral_pitch,
            "plane_angle_step_deg": self.plane_angle_step_deg,
            "r0": self.r0, "origin": list(self.origin),
        }

    @classmethod
    def from_dict(cls, d: dict) -> "FrustumGeometry":
        d = dict(d)
        d["origin"] = tuple(d.get("origin", (0.0, 0.0, 0.0)))
        return cls(**d)


@dataclass(frozen=True)
class CartesianGrid:
    """Uniform isotropic grid; voxel i sits at origin + i * spacing."""

    origin: tuple[float, float, float]
    shape: tuple[int, int, int]
    spacing: float

    def __post_init__(self):
        if self.spacing <= 0:
            raise ValueError(f"spacing must be positive, got {self.spacing}")
        if any(n < 1 for n in self.shape):
            raise ValueError(f"grid shape must be positive, got {self.shape}")

    def axes(self) -> list[np.ndarray]:
        return [np.asarray(self.origin)[a] + np.arange(self.shape[a]) * self.spacing
                for a in range(3)]

    def points(self) -> np.ndarray:
        ax = self.axes()
        return np.stack(np.meshgrid(*ax, indexing="ij"), axis=-1)

    def box_slice(self, center, size) -> tuple[slice, slice, slice]:
        """Index slices covering an axis-aligned box (center, size in meters)."""
        center = np.asarray(center, dtype=float)
        half = np.asarray(size, dtype=float) / 2.0
        lo = np.ceil((center - half - np.asarray(self.origin)) / self.spacing - 1e-9)
        hi = np.floor((center + half - np.asarray(self.origin)) / self.spacing + 1e-9)
        lo = np.clip(lo.astype(int), 0, np.asarray(self.shape) - 1)
        hi = np.clip(hi.astype(int), 0, np.asarray(self.shape) - 1)
        return tuple(slice(a, b + 1) for a, b in zip(lo, hi))

    @classmethod
    def covering(cls, lo, hi, spacing: float) -> "CartesianGrid":
        lo = np.asarray(lo, dtype=float)
        hi = np.asarray(hi, dtype=float)
        shape = tuple(int(np.floor((h - l) / spacing)) + 1 for l, h in zip(lo, hi))
        return cls(origin=tuple(lo), shape=shape, spacing=spacing)

    def to_dict(self) -> dict:
        return {"origin": list(self.origin), "shape": list(self.shape),
                "spacing": self.spacing}

    @classmethod
    def from_dict(cls, d: dict) -> "CartesianGrid":
        return cls(origin=tuple(d["origin"]), shape=tuple(d["shape"]),
                   spacing=float(d["spacing"]))
