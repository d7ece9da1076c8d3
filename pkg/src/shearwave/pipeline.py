"""End-to-end orchestration: simulate, acquire, estimate, invert, report.

Stages run in a fixed order, each wrapped so a failure names the stage and
lists the artifacts already written. All file writes are atomic and the
whole run is deterministic for a fixed configuration, so re-running
reproduces every artifact hash in the manifest.
"""

from __future__ import annotations

import time
from dataclasses import dataclass, field

import numpy as np

from . import io as swio
from .acquisition import SpeckleParams, acquire_sweep, form_volumes
from .config import RunConfig
from .errors import StageError
from .forward import (CompressionalField, PlaneWavePotential,
                      QuadraticPotential, SinusoidalPotential,
                      SteadyStateField, default_excitation)
from .inversion import (curl2d, curl3d, erode_mask, fuse_frequencies, lfe,
                        roi_stats, scan_convert)
from .phantom import build_phantom
from .phasor import fit_phasors
from .sequence import (plan_sequence, spectral_separability,
                       validate_synchronization)
from .tracking import DisplacementSeries, track_displacements

__all__ = [
    "run_pipeline",
    "RunReport",
    "acquisition_time_report",
    "replicate_table",
    "REFERENCE_FOCUSED_SWEEP_S",
    "ARFI_SINGLE_MEASUREMENT_S",
]

# documented reference constants for the acquisition-time comparison
REFERENCE_FOCUSED_SWEEP_S = 12.0   # focused-beam volumetric sweep per exam
ARFI_SINGLE_MEASUREMENT_S = 1.27   # one push-track measurement


@dataclass
class RunReport:
    """Everything a finished run produced."""

    name: str
    stages: list = field(default_factory=list)   # (stage, seconds)
    artifacts: list = field(default_factory=list)
    roi: dict = field(default_factory=dict)
    sync: dict | None = None
    separability: dict | None = None
    manifest_path: str | None = None

    def to_dict(self) -> dict:
        return {
            "name": self.name,
            "stages": [{"stage": s, "seconds": t} for s, t in self.stages],
            "artifacts": [str(p) for p in self.artifacts],
            "roi": self.roi,
            "synchronization": self.sync,
            "separability": self.separability,
        }


class _StageClock:
    def __init__(self, report: RunReport):
        self.report = report

    def run(self, stage: str, fn, *args, **kwargs):
        start = time.perf_counter()
        try:
            result = fn(*args, **kwargs)
        except Exception as exc:
            raise StageError(stage, exc, self.report.artifacts) from exc
        self.report.stages.append((stage, time.perf_counter() - start))
        return result


def _build_potential(spec: dict, phantom):
    kind = spec.get("kind", "sinusoidal")
    if kind == "quadratic":
        center = spec.get("center")
        if center is None:
            center = (phantom.extent / 2.0).tolist()
        return QuadraticPotential(center=tuple(float(v) for v in center))
    if kind == "sinusoidal":
        return SinusoidalPotential(
            wavelength=float(spec.get("wavelength", 0.12)),
            normal=tuple(float(v) for v in spec.get("normal", (1.0, 1.0, 1.0))))
    if kind == "plane":
        return PlaneWavePotential(
            wavelength=float(spec.get("wavelength", 0.12)),
            direction=tuple(float(v) for v in spec.get("direction", (1.0, 0.0, 0.0))))
    raise ValueError(f"unknown contamination kind {kind!r}")


def _field_from_config(config: RunConfig, phantom, geometry):
    exc_cfg = config.raw["excitation"]
    excitation = default_excitation(
        phantom, config.frequencies(),
        amplitude=float(exc_cfg["amplitude"]),
        tilt_deg=float(exc_cfg["tilt_deg"]),
        direction_mix=tuple(float(v) for v in exc_cfg["direction_mix"]))
    field_src = SteadyStateField(phantom, excitation)
    cont = config.raw.get("contamination")
    if cont:
        potential = _build_potential(cont, phantom)
        scale = (float(cont.get("relative_amplitude", 0.2))
                 * float(exc_cfg["amplitude"])
                 / potential.gradient_scale(geometry.points()))
        field_src = CompressionalField(field_src, potential, scale)
    return field_src


def _displacement_stage(config: RunConfig, field_src, plan, geometry, vols):
    """Oracle forwarding or speckle tracking, per the configured mode."""
    mode = config.raw["modes"]["displacement_source"]
    if mode == "oracle":
        quality = np.ones(vols.volumes.shape[:-1])
        return DisplacementSeries(
            frames=vols.volumes, timestamps=vols.volume_timestamps,
            quality=quality, geometry=geometry, plan=plan,
            provenance="oracle")
    tr = config.raw["tracking"]
    return track_displacements(vols, window=tuple(tr["window"]),
                               search=tuple(tr["search"]),
                               regularization=int(tr["regularization"]))


def _curl_stage(cart, curl_mode: str):
    if curl_mode == "curl3d":
        return curl3d(cart)
    if curl_mode == "curl2d":
        return curl2d(cart)
    return cart


def run_pipeline(config: RunConfig) -> RunReport:
    """Execute the full chain and write artifacts under config.output_dir."""
    out = config.output_dir
    out.mkdir(parents=True, exist_ok=True)
    report = RunReport(name=config.name)
    clock = _StageClock(report)
    arts = report.artifacts

    phantom = clock.run("build_phantom", build_phantom, config.phantom_spec())
    plan = clock.run("plan_sequence", plan_sequence, **config.sequence_kwargs())
    sync = validate_synchronization(plan)
    sep = spectral_separability(plan)
    report.sync = sync.to_dict()
    report.separability = sep.to_dict()
    arts.append(swio.write_text(out / "plan.txt", plan.timeline_text() + "\n"))
    arts.append(swio.write_json(out / "plan.json", plan.to_dict()))
    arts.append(swio.write_json(out / "sequence_checks.json",
                                {"synchronization": sync.to_dict(),
                                 "separability": sep.to_dict()}))

    geometry = config.frustum()
    field_src = clock.run("simulate", _field_from_config, config, phantom,
                          geometry)

    stride = int(config.raw["acquisition"]["frame_stride"])
    frame_indices = np.arange(0, plan.frames_per_plane, stride)
    mode = ("displacement"
            if config.raw["modes"]["displacement_source"] == "oracle"
            else "speckle")
    seed = int(np.random.SeedSequence(config.master_seed).generate_state(1)[0])
    sp = config.raw["acquisition"]["speckle"]
    record = clock.run(
        "acquire", acquire_sweep, field_src, plan, geometry, mode,
        frame_indices=frame_indices, scatterer_seed=seed,
        speckle_params=SpeckleParams(
            density_per_mm3=float(sp["density_per_mm3"]),
            sigma_axial=float(sp["sigma_axial"]),
            sigma_lateral=float(sp["sigma_lateral"]),
            sigma_elevational=float(sp["sigma_elevational"])))
    arts.append(swio.write_volume_file(
        out / "record.swvol",
        {f"plane_{p:02d}": record.planes[p] for p in range(plan.n_planes)}
        | {"timestamps": record.timestamps,
           "plane_angles_deg": record.plane_angles_deg,
           "frame_indices": record.frame_indices},
        meta={"kind": "acquisition_record", "mode": record.mode,
              "plan": plan.to_dict(), "geometry": geometry.to_dict()}))

    vols = clock.run("form_volumes", form_volumes, record)
    disp = clock.run("displacements", _displacement_stage, config, field_src,
                     plan, geometry, vols)
    arts.append(swio.write_volume_file(
        out / "displacement.swvol",
        {"frames": disp.frames, "timestamps": disp.timestamps,
         "quality": disp.quality},
        meta={"kind": "displacement_series", "provenance": disp.provenance,
              "plan": plan.to_dict(), "geometry": geometry.to_dict()}))

    pset = clock.run("fit_phasors", fit_phasors, disp, config.frequencies())
    arts.append(swio.write_volume_file(
        out / "phasors.swvol",
        {"phasors": pset.phasors, "residual": pset.residual},
        meta={"kind": "phasor_set", "frequencies": list(pset.frequencies),
              "geometry": geometry.to_dict(),
              "components": ["axial", "lateral", "elevational"]}))

    spacing = float(config.raw["inversion"]["spacing"])
    cart = clock.run("scan_convert", scan_convert, pset, spacing)
    arts.append(swio.write_volume_file(
        out / "cartesian_phasors.swvol",
        {"phasors": cart.phasors, "mask": cart.mask},
        meta={"kind": "cartesian_phasor_set",
              "frequencies": list(cart.frequencies),
              "grid": cart.grid.to_dict()}))

    curl_mode = config.raw["modes"]["curl"]
    source = clock.run("curl", _curl_stage, cart, curl_mode)
    if curl_mode != "none":
        arts.append(swio.write_volume_file(
            out / "curl.swvol",
            {"values": source.values, "mask": source.mask,
             "confidence": source.confidence},
            meta={"kind": "curl_set", "mode": source.mode,
                  "frequencies": list(source.frequencies),
                  "grid": source.grid.to_dict()}))

    rho = float(config.raw["inversion"]["rho"])
    bank = config.bank()
    per_freq = [clock.run(f"lfe_{f:g}Hz", lfe, source, f, rho, bank)
                for f in config.frequencies()]
    fused = clock.run("fuse", fuse_frequencies, per_freq)

    crop = int(config.raw["inversion"]["boundary_crop_voxels"])
    stats_mask = erode_mask(fused.mask, crop)
    roi_center = config.roi_center(geometry)
    roi_size = config.roi_size()

    rows = []
    fset = "/".join(f"{f:g}" for f in config.frequencies())
    for f, vol in zip(config.frequencies(), per_freq):
        stat_vol = type(vol)(young=vol.young, confidence=vol.confidence,
                             mask=stats_mask, grid=vol.grid,
                             provenance=vol.provenance)
        st = roi_stats(stat_vol, roi_center, roi_size)
        rows.append((config.name, curl_mode, f"{f:g}", st.mean, st.std,
                     st.n_voxels))
        report.roi[f"{f:g}"] = {"mean_pa": st.mean, "std_pa": st.std,
                                "n_voxels": st.n_voxels}
    fused_stats_vol = type(fused)(young=fused.young, confidence=fused.confidence,
                                  mask=stats_mask, grid=fused.grid,
                                  provenance=fused.provenance)
    st = clock.run("roi_stats", roi_stats, fused_stats_vol, roi_center, roi_size)
    rows.append((config.name, curl_mode, fset, st.mean, st.std, st.n_voxels))
    report.roi["fused"] = {"mean_pa": st.mean, "std_pa": st.std,
                           "n_voxels": st.n_voxels}

    for f, vol in zip(config.frequencies(), per_freq):
        arts.append(swio.write_volume_file(
            out / f"elasticity_{f:g}Hz.swvol",
            {"young": vol.young, "confidence": vol.confidence, "mask": vol.mask},
            meta={"kind": "elasticity_volume", "grid": vol.grid.to_dict(),
                  "provenance": vol.provenance}))
    arts.append(swio.write_volume_file(
        out / "elasticity_fused.swvol",
        {"young": fused.young, "confidence": fused.confidence,
         "mask": fused.mask},
        meta={"kind": "elasticity_volume", "grid": fused.grid.to_dict(),
              "provenance": fused.provenance}))
    arts.append(swio.write_csv(
        out / "roi_stats.csv",
        ("phantom_id", "mode", "f_set", "mean_Pa", "std_Pa", "n_voxels"),
        rows))

    mid_z = fused.young.shape[2] // 2
    slice_img = np.where(fused.mask[:, :, mid_z], fused.young[:, :, mid_z], 0.0)
    arts.append(swio.write_gray_png(out / "elasticity_mid_slice.png", slice_img))

    report.manifest_path = str(swio.write_manifest(out, arts))
    swio.write_json(out / "run_report.json", report.to_dict())
    return report


def acquisition_time_report(deep_total: float | None = None,
                            shallow_total: float | None = None,
                            arfi_single: float = ARFI_SINGLE_MEASUREMENT_S,
                            arfi_repeats: int = 8,
                            reference: float = REFERENCE_FOCUSED_SWEEP_S) -> dict:
    """Comparison of exam durations with percentage reductions vs reference.

    deep/shallow totals default to the canonical synchronized plans.
    """
    if deep_total is None:
        deep_total = plan_sequence([40, 50, 60], 3000, 10).total_time
    if shallow_total is None:
        shallow_total = plan_sequence([100, 160, 200], 3000, 10,
                                      min_imaging=0.120).total_time

    def reduction(t):
        return (1.0 - t / reference) * 100.0

    rows = [
        {"method": "single push-track measurement", "time_s": arfi_single,
         "reduction_pct": None},
        {"method": f"push-track x{arfi_repeats}",
         "time_s": arfi_repeats * arfi_single, "reduction_pct": None},
        {"method": "focused-beam volumetric sweep (reference)",
         "time_s": reference, "reduction_pct": 0.0},
        {"method": "plane-wave sweep, deep tones", "time_s": deep_total,
         "reduction_pct": reduction(deep_total)},
        {"method": "plane-wave sweep, shallow tones", "time_s": shallow_total,
         "reduction_pct": reduction(shallow_total)},
    ]
    return {"reference_s": reference, "rows": rows}


def format_time_report(report: dict) -> str:
    lines = [f"{'method':42s} {'time':>8s}  {'vs reference':>12s}"]
    for row in report["rows"]:
        red = row["reduction_pct"]
        red_txt = f"{red:.0f}% faster" if red not in (None, 0.0) else ""
        lines.append(f"{row['method']:42s} {row['time_s']:7.2f}s  {red_txt:>12s}")
    return "\n".join(lines)


def replicate_table(base_config: RunConfig, youngs=(2800.0, 6200.0, 11600.0,
                                                    21200.0),
                    modes=("none", "curl2d", "curl3d")) -> list[tuple]:
    """Homogeneous-phantom table: one fused-statistics row per phantom x mode.

    Each phantom's chain runs once up to the Cartesian phasors; the curl
    and inversion stages then branch per mode, so the 12 rows are mutually
    consistent.
    """
    rows = []
    for young in youngs:
        cfg_dict = base_config.to_dict()
        cfg_dict["name"] = f"E{young / 1000:g}kPa"
        cfg_dict["phantom"]["regions"][0]["material"] = {
            "young": young,
            "rho": cfg_dict["phantom"]["regions"][0]["material"].get("rho", 1000.0),
            "eta": cfg_dict["phantom"]["regions"][0]["material"].get("eta", 0.0)}
        cfg = RunConfig.from_dict(cfg_dict)

        phantom = build_phantom(cfg.phantom_spec())
        plan = plan_sequence(**cfg.sequence_kwargs())
        geometry = cfg.frustum()
        field_src = _field_from_config(cfg, phantom, geometry)
        stride = int(cfg.raw["acquisition"]["frame_stride"])
        frame_indices = np.arange(0, plan.frames_per_plane, stride)
        acq_mode = ("displacement"
                    if cfg.raw["modes"]["displacement_source"] == "oracle"
                    else "speckle")
        seed = int(np.random.SeedSequence(cfg.master_seed).generate_state(1)[0])
        record = acquire_sweep(field_src, plan, geometry, acq_mode,
                               frame_indices=frame_indices, scatterer_seed=seed)
        vols = form_volumes(record)
        disp = _displacement_stage(cfg, field_src, plan, geometry, vols)
        pset = fit_phasors(disp, cfg.frequencies())
        cart = scan_convert(pset, float(cfg.raw["inversion"]["spacing"]))

        rho = float(cfg.raw["inversion"]["rho"])
        bank = cfg.bank()
        crop = int(cfg.raw["inversion"]["boundary_crop_voxels"])
        roi_center = cfg.roi_center(geometry)
        roi_size = cfg.roi_size()
        fset = "/".join(f"{f:g}" for f in cfg.frequencies())
        for mode in modes:
            source = _curl_stage(cart, mode)
            per_freq = [lfe(source, f, rho, bank) for f in cfg.frequencies()]
            fused = fuse_frequencies(per_freq)
            fused.mask = erode_mask(fused.mask, crop)
            st = roi_stats(fused, roi_center, roi_size)
            rows.append((cfg.name, mode, fset, st.mean, st.std, st.n_voxels))
    return rows
