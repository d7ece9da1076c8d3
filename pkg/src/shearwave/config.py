"""Declarative run configuration.

One YAML document drives the whole pipeline: phantom regions and
materials, excitation, sequence parameters, acquisition geometry, mode
flags, inversion parameters and ROI definitions. A run is fully
deterministic given an identical configuration (the master seed covers
every random draw).
"""

from __future__ import annotations

import copy
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np
import yaml

from .geometry import FrustumGeometry
from .lfe import FilterBankParams
from .phantom import PhantomSpec

__all__ = ["RunConfig", "example_config_text"]

_DEFAULTS = {
    "name": "run",
    "output_dir": "out",
    "master_seed": 12345,
    "phantom": {
        "grid_shape": [50, 50, 50],
        "spacing": 2.0e-3,
        "regions": [
            {"name": "background", "kind": "background",
             "material": {"young": 6200.0, "rho": 1000.0, "eta": 0.0}},
        ],
    },
    "excitation": {
        "amplitude": 50.0e-6,
        "tilt_deg": 20.0,
        "direction_mix": [1.0, 0.6],
    },
    "sequence": {
        "frequencies": [40.0, 50.0, 60.0],
        "frame_rate": 3000.0,
        "n_planes": 10,
        "settling_time": 0.010,
        "pulse_time": 0.007,
        "min_imaging": 0.180,
        "plane_angle_step_deg": 0.45,
    },
    "geometry": {
        "n_axial": 78,
        "n_lateral": 78,
        "axial_pitch": 1.2e-3,
        "lateral_pitch": 1.2e-3,
        "r0": 3.0e-3,
        "origin": [0.0, 0.05, 0.048],
    },
    "modes": {
        "displacement_source": "oracle",   # oracle | tracked
        "curl": "curl3d",                  # none | curl2d | curl3d
    },
    "acquisition": {
        "frame_stride": 10,
        "speckle": {
            "density_per_mm3": 2.0,
            "sigma_axial": 0.3e-3,
            "sigma_lateral": 0.8e-3,
            "sigma_elevational": 0.6e-3,
        },
    },
    "tracking": {
        "window": [9, 9, 3],
        "search": [4, 4, 4],
        "regularization": 1,
    },
    "inversion": {
        "spacing": 1.0e-3,
        "rho": 1000.0,
        "boundary_crop_voxels": 5,
        "bank": {
            "n_centers": 8,
            "bandwidth_octaves": 1.5,
            "window_alpha": 0.3,
        },
    },
    "contamination": None,
    "roi": {
        "depth": 0.05,
        "size": [0.01, 0.01, 0.01],
        "center": None,  # null -> placed on the mid-sweep ray at `depth`
    },
    "arfi": {
        "n_repeats": 8,
        "snr_db": 20.0,
        "dispersion_frequencies": [80.0, 110.0, 140.0, 170.0, 200.0, 230.0],
        "duration": 0.040,
        "sample_rate": 10000.0,
        "pulse_sigma": 1.0e-3,
        "position_start": 8.0e-3,
        "position_stop": 35.0e-3,
        "position_step": 0.5e-3,
        "amplitude": 10.0e-6,
        "single_measurement_time": 1.27,
    },
}


def _merge(base: dict, override: dict) -> dict:
    out = copy.deepcopy(base)
    for key, value in (override or {}).items():
        if key not in out:
            raise KeyError(f"unknown configuration key {key!r}")
        if isinstance(out.get(key), dict) and isinstance(value, dict):
            out[key] = _merge(out[key], value)
        else:
            out[key] = copy.deepcopy(value)
    return out


@dataclass
class RunConfig:
    """Validated pipeline configuration with object accessors."""

    raw: dict = field(default_factory=lambda: copy.deepcopy(_DEFAULTS))

    @classmethod
    def from_dict(cls, d: dict) -> "RunConfig":
        merged = _merge(_DEFAULTS, d or {})
        cfg = cls(raw=merged)
        cfg.validate()
        return cfg

    @classmethod
    def from_yaml(cls, path) -> "RunConfig":
        with open(path) as fh:
            data = yaml.safe_load(fh) or {}
        return cls.from_dict(data)

    def to_dict(self) -> dict:
        return copy.deepcopy(self.raw)

    def validate(self) -> None:
        modes = self.raw["modes"]
        if modes["displacement_source"] not in ("oracle", "tracked"):
            raise ValueError(
                f"displacement_source must be oracle or tracked, got "
                f"{modes['displacement_source']!r}")
        if modes["curl"] not in ("none", "curl2d", "curl3d"):
            raise ValueError(f"curl must be none, curl2d or curl3d, got "
                             f"{modes['curl']!r}")
        if int(self.raw["acquisition"]["frame_stride"]) < 1:
            raise ValueError("frame_stride must be >= 1")
        if self.raw["inversion"]["spacing"] <= 0:
            raise ValueError("inversion spacing must be positive")
        self.phantom_spec()  # raises on malformed regions

    # -- typed accessors -------------------------------------------------
    @property
    def name(self) -> str:
        return str(self.raw["name"])

    @property
    def output_dir(self) -> Path:
        return Path(self.raw["output_dir"])

    @property
    def master_seed(self) -> int:
        return int(self.raw["master_seed"])

    def phantom_spec(self) -> PhantomSpec:
        return PhantomSpec.from_dict(self.raw["phantom"])

    def frequencies(self) -> tuple[float, ...]:
        return tuple(float(f) for f in self.raw["sequence"]["frequencies"])

    def sequence_kwargs(self) -> dict:
        seq = self.raw["sequence"]
        return {
            "frequencies": self.frequencies(),
            "frame_rate": float(seq["frame_rate"]),
            "n_planes": int(seq["n_planes"]),
            "settling_time": float(seq["settling_time"]),
            "pulse_time": float(seq["pulse_time"]),
            "min_imaging": float(seq["min_imaging"]),
            "plane_angle_step_deg": float(seq["plane_angle_step_deg"]),
        }

    def frustum(self) -> FrustumGeometry:
        g = self.raw["geometry"]
        seq = self.raw["sequence"]
        return FrustumGeometry(
            n_axial=int(g["n_axial"]), n_lateral=int(g["n_lateral"]),
            n_planes=int(seq["n_planes"]),
            axial_pitch=float(g["axial_pitch"]),
            lateral_pitch=float(g["lateral_pitch"]),
            plane_angle_step_deg=float(seq["plane_angle_step_deg"]),
            r0=float(g["r0"]), origin=tuple(float(v) for v in g["origin"]))

    def bank(self) -> FilterBankParams:
        b = self.raw["inversion"]["bank"]
        return FilterBankParams(
            n_centers=int(b.get("n_centers", 8)),
            bandwidth_octaves=float(b.get("bandwidth_octaves", 1.5)),
            nu_min=b.get("nu_min"), nu_max=b.get("nu_max"),
            window_alpha=float(b.get("window_alpha", 0.3)))

    def roi_center(self, geometry: FrustumGeometry) -> tuple[float, float, float]:
        roi = self.raw["roi"]
        if roi.get("center"):
            return tuple(float(v) for v in roi["center"])
        depth = float(roi["depth"])
        mid = np.deg2rad(geometry.plane_angles_deg.mean())
        origin = np.asarray(geometry.origin)
        return (float(origin[0] + depth * np.cos(mid)),
                float(origin[1]),
                float(origin[2] + depth * np.sin(mid)))

    def roi_size(self) -> tuple[float, float, float]:
        return tuple(float(v) for v in self.raw["roi"]["size"])


def example_config_text() -> str:
    """Commented YAML template documenting every default."""
    return """\
# Full-pipeline configuration. Any omitted key keeps the default shown here.
name: run
output_dir: out
master_seed: 12345          # drives every random draw (speckle, noise)

phantom:
  grid_shape: [50, 50, 50]  # voxels per axis (x axial, y lateral, z elevational)
  spacing: 2.0e-3           # meters per voxel -> 10 cm cube
  regions:                  # painted in order; first must be the background
    - name: background
      kind: background
      material: {young: 6200.0, rho: 1000.0, eta: 0.0}   # Pa, kg/m^3, Pa.s
    # - name: lesion
    #   kind: sphere
    #   center: [0.05, 0.05, 0.05]
    #   radius: 0.01
    #   material: {young: 21200.0}
    # - name: deep_layer
    #   kind: layer
    #   axis: 0
    #   lo: 0.05
    #   hi: 0.10
    #   material: {young: 2800.0}

excitation:
  amplitude: 50.0e-6        # per-tone source displacement [m]
  tilt_deg: 20.0            # propagation tilt so all curl components light up
  direction_mix: [1.0, 0.6] # polarization weights over the transverse basis

sequence:
  frequencies: [40.0, 50.0, 60.0]   # must share a rational fundamental
  frame_rate: 3000.0
  n_planes: 10
  settling_time: 0.010
  pulse_time: 0.007
  min_imaging: 0.180
  plane_angle_step_deg: 0.45

geometry:                   # frustum raster (plane count comes from sequence)
  n_axial: 78
  n_lateral: 78
  axial_pitch: 1.2e-3
  lateral_pitch: 1.2e-3
  r0: 3.0e-3                # depth of the first axial sample
  origin: [0.0, 0.05, 0.048]  # sweep pivot inside the phantom [m]

modes:
  displacement_source: oracle  # oracle | tracked
  curl: curl3d                 # none | curl2d | curl3d

acquisition:
  frame_stride: 10          # keep every k-th frame for fitting
  speckle:                  # only used when displacement_source: tracked
    density_per_mm3: 2.0
    sigma_axial: 0.3e-3
    sigma_lateral: 0.8e-3
    sigma_elevational: 0.6e-3

tracking:
  window: [9, 9, 3]         # block size (axial, lateral, elevational)
  search: [4, 4, 4]         # +- samples per axis
  regularization: 1         # median-filter passes on each pairwise estimate

inversion:
  spacing: 1.0e-3           # Cartesian grid step [m]
  rho: 1000.0
  boundary_crop_voxels: 5   # mask erosion before statistics
  bank:
    n_centers: 8
    bandwidth_octaves: 1.5
    window_alpha: 0.3

contamination: null         # or e.g.:
# contamination:
#   kind: sinusoidal        # quadratic | sinusoidal | plane
#   wavelength: 0.12
#   normal: [1.0, 1.0, 1.0]
#   relative_amplitude: 0.2 # relative to the excitation amplitude

roi:
  depth: 0.05               # meters along the mid-sweep ray
  size: [0.01, 0.01, 0.01]  # 1 cm^3 statistics window
  center: null              # or explicit [x, y, z]

arfi:                       # push-track baseline (uses the background material)
  n_repeats: 8
  snr_db: 20.0              # null -> noiseless repeats
  dispersion_frequencies: [80.0, 110.0, 140.0, 170.0, 200.0, 230.0]
  duration: 0.040
  sample_rate: 10000.0
  pulse_sigma: 1.0e-3
  position_start: 8.0e-3
  position_stop: 35.0e-3
  position_step: 0.5e-3
  amplitude: 10.0e-6
  single_measurement_time: 1.27
"""
