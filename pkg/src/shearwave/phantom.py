"""Voxelized tissue phantoms built from labeled geometric primitives.

Axes follow the acquisition convention: x = axial (depth), y = lateral,
z = elevational, all in meters. Voxel centers sit at (i + 0.5) * spacing.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

__all__ = [
    "Material",
    "Background",
    "Layer",
    "Sphere",
    "RegionSpec",
    "PhantomSpec",
    "ElasticityPhantom",
    "build_phantom",
]

SOFT_TISSUE_DENSITY = 1000.0  # kg/m^3, incompressible soft-tissue convention


@dataclass(frozen=True)
class Material:
    """Voigt material: shear modulus [Pa], density [kg/m^3], viscosity [Pa.s]."""

    mu: float
    rho: float = SOFT_TISSUE_DENSITY
    eta: float = 0.0

    def __post_init__(self):
        if self.mu <= 0:
            raise ValueError(f"shear modulus must be positive, got {self.mu}")
        if self.rho <= 0:
            raise ValueError(f"density must be positive, got {self.rho}")
        if self.eta < 0:
            raise ValueError(f"viscosity must be non-negative, got {self.eta}")

    @classmethod
    def from_young(cls, young: float, rho: float = SOFT_TISSUE_DENSITY,
                   eta: float = 0.0) -> "Material":
        """Material with mu = E/3 (incompressible approximation)."""
        if young <= 0:
            raise ValueError(f"Young's modulus must be positive, got {young}")
        return cls(mu=young / 3.0, rho=rho, eta=eta)

    @property
    def young(self) -> float:
        return 3.0 * self.mu

    @classmethod
    def from_dict(cls, d: dict) -> "Material":
        if "young" in d or "E" in d:
            young = float(d.get("young", d.get("E")))
            return cls.from_young(young, rho=float(d.get("rho", SOFT_TISSUE_DENSITY)),
                                  eta=float(d.get("eta", 0.0)))
        return cls(mu=float(d["mu"]), rho=float(d.get("rho", SOFT_TISSUE_DENSITY)),
                   eta=float(d.get("eta", 0.0)))


class Background:
    """Covers the whole grid; every phantom needs exactly one."""

    def contains(self, points: np.ndarray) -> np.ndarray:
        return np.ones(points.shape[:-1], dtype=bool)

    def within(self, lo, hi) -> bool:
        return True


@dataclass(frozen=True)
class Layer:
    """Axis-aligned slab: lo <= coordinate[axis] < hi, in meters."""

    axis: int
    lo: float
    hi: float

    def __post_init__(self):
        if self.axis not in (0, 1, 2):
            raise ValueError(f"layer axis must be 0, 1 or 2, got {self.axis}")
        if not self.hi > self.lo:
            raise ValueError(f"layer needs hi > lo, got [{self.lo}, {self.hi})")

    def contains(self, points: np.ndarray) -> np.ndarray:
        c = points[..., self.axis]
        return (c >= self.lo) & (c < self.hi)

    def within(self, lo, hi) -> bool:
        return self.lo >= lo[self.axis] - 1e-12 and self.hi <= hi[self.axis] + 1e-12


@dataclass(frozen=True)
class Sphere:
    """Spherical inclusion: center (x, y, z) and radius, in meters."""

    center: tuple[float, float, float]
    radius: float

    def __post_init__(self):
        if self.radius <= 0:
            raise ValueError(f"sphere radius must be positive, got {self.radius}")

    def contains(self, points: np.ndarray) -> np.ndarray:
        d2 = np.sum((points - np.asarray(self.center)) ** 2, axis=-1)
        return d2 <= self.radius**2

    def within(self, lo, hi) -> bool:
        c = np.asarray(self.center)
        return bool(np.all(c - self.radius >= lo - 1e-12)
                    and np.all(c + self.radius <= hi + 1e-12))


def _shape_from_dict(d: dict):
    kind = d.get("kind", "background")
    if kind == "background":
        return Background()
    if kind == "layer":
        return Layer(axis=int(d.get("axis", 0)), lo=float(d["lo"]), hi=float(d["hi"]))
    if kind == "sphere":
        return Sphere(center=tuple(float(v) for v in d["center"]),
                      radius=float(d["radius"]))
    raise ValueError(f"unknown region kind {kind!r}")


@dataclass(frozen=True)
class RegionSpec:
    name: str
    shape: object
    material: Material

    @classmethod
    def from_dict(cls, d: dict) -> "RegionSpec":
        return cls(name=str(d["name"]), shape=_shape_from_dict(d),
                   material=Material.from_dict(d["material"]))


@dataclass(frozen=True)
class PhantomSpec:
    """Declarative phantom description: grid plus ordered region list.

    The first region must be the background; later regions are painted on
    top of it in list order.
    """

    grid_shape: tuple[int, int, int]
    spacing: tuple[float, float, float]
    regions: list[RegionSpec] = field(default_factory=list)

    @classmethod
    def from_dict(cls, d: dict) -> "PhantomSpec":
        spacing = d["spacing"]
        if np.isscalar(spacing):
            spacing = (spacing,) * 3
        return cls(grid_shape=tuple(int(n) for n in d["grid_shape"]),
                   spacing=tuple(float(s) for s in spacing),
                   regions=[RegionSpec.from_dict(r) for r in d["regions"]])


@dataclass
class ElasticityPhantom:
    """Voxel grid of Voigt material properties with a region label map."""

    grid_shape: tuple[int, int, int]
    spacing: tuple[float, float, float]
    mu: np.ndarray
    rho: np.ndarray
    eta: np.ndarray
    labels: np.ndarray
    region_names: list[str]

    @property
    def extent(self) -> np.ndarray:
        """Physical size per axis [m]."""
        return np.asarray(self.grid_shape) * np.asarray(self.spacing)

    @property
    def true_young(self) -> np.ndarray:
        """Ground-truth Young's modulus map, E = 3*mu."""
        return 3.0 * self.mu

    def voxel_centers(self, axis: int) -> np.ndarray:
        return (np.arange(self.grid_shape[axis]) + 0.5) * self.spacing[axis]

    def contains(self, points: np.ndarray) -> np.ndarray:
        """True where points [m] fall inside the phantom box."""
        points = np.asarray(points)
        ok = np.ones(points.shape[:-1], dtype=bool)
        for ax in range(3):
            ok &= (points[..., ax] >= 0) & (points[..., ax] <= self.extent[ax])
        return ok

    def material_at(self, points: np.ndarray):
        """Per-point (mu, rho, eta) by nearest-voxel lookup; points in meters."""
        points = np.asarray(points, dtype=float)
        idx = []
        for ax in range(3):
            i = np.floor(points[..., ax] / self.spacing[ax]).astype(int)
            idx.append(np.clip(i, 0, self.grid_shape[ax] - 1))
        ii = tuple(idx)
        return self.mu[ii], self.rho[ii], self.eta[ii]

    def label_counts(self) -> dict[str, int]:
        return {name: int(np.sum(self.labels == i))
                for i, name in enumerate(self.region_names)}


def build_phantom(spec: PhantomSpec) -> ElasticityPhantom:
    """Voxelize a phantom spec into material maps and a region partition.

    Regions are painted in list order, so later shapes claim the voxels they
    cover. Overlap between two non-background regions with different
    materials is rejected as ambiguous.
    """
    shape = tuple(spec.grid_shape)
    if len(shape) != 3 or any(n < 1 for n in shape):
        raise ValueError(f"grid_shape must be three positive counts, got {shape}")
    if any(s <= 0 for s in spec.spacing):
        raise ValueError(f"spacing must be positive, got {spec.spacing}")
    if not spec.regions:
        raise ValueError("phantom needs at least a background region")
    if not isinstance(spec.regions[0].shape, Background):
        raise ValueError("the first region must be the background")

    extent = np.asarray(shape) * np.asarray(spec.spacing)
    axes = [(np.arange(n) + 0.5) * s for n, s in zip(shape, spec.spacing)]
    grid = np.stack(np.meshgrid(*axes, indexing="ij"), axis=-1)

    masks = []
    for region in spec.regions:
        if not region.shape.within(np.zeros(3), extent):
            raise ValueError(f"region {region.name!r} extends outside the grid")
        masks.append(region.shape.contains(grid))

    for i in range(1, len(spec.regions)):
        for j in range(i + 1, len(spec.regions)):
            overlap = masks[i] & masks[j]
            if np.any(overlap) and spec.regions[i].material != spec.regions[j].material:
                raise ValueError(
                    f"regions {spec.regions[i].name!r} and {spec.regions[j].name!r} "
                    f"overlap on {int(np.sum(overlap))} voxels with conflicting materials")

    labels = np.zeros(shape, dtype=np.int32)
    mu = np.empty(shape, dtype=float)
    rho = np.empty(shape, dtype=float)
    eta = np.empty(shape, dtype=float)
    for i, (region, mask) in enumerate(zip(spec.regions, masks)):
        labels[mask] = i
        mu[mask] = region.material.mu
        rho[mask] = region.material.rho
        eta[mask] = region.material.eta

    return ElasticityPhantom(grid_shape=shape, spacing=tuple(spec.spacing),
                             mu=mu, rho=rho, eta=eta, labels=labels,
                             region_names=[r.name for r in spec.regions])


def homogeneous_phantom(young: float, grid_shape=(50, 50, 50), spacing=2e-3,
                        rho: float = SOFT_TISSUE_DENSITY, eta: float = 0.0
                        ) -> ElasticityPhantom:
    """Convenience builder for a uniform phantom of given Young's modulus."""
    if np.isscalar(spacing):
        spacing = (spacing,) * 3
    spec = PhantomSpec(
        grid_shape=tuple(grid_shape), spacing=tuple(spacing),
        regions=[RegionSpec("background", Background(),
                            Material.from_young(young, rho=rho, eta=eta))])
    return build_phantom(spec)
