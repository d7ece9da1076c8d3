"""Command-line interface mirroring the pipeline stages.

Each stage writes inspectable artifacts and can be re-run in isolation:
simulate, acquire, track, invert, arfi, sequence, report, replicate-table,
plus run for the whole chain. Exit status is nonzero exactly when a stage
reports an error.
"""

from __future__ import annotations

import argparse
import json
import sys

import numpy as np

from . import io as swio
from .acquisition import AcquisitionRecord, acquire_sweep, form_volumes
from .arfi import ARFIScene, estimate_phase_velocity, repeat_measurements
from .config import RunConfig, example_config_text
from .errors import StageError
from .forward import DisplacementFieldSeries
from .geometry import FrustumGeometry
from .inversion import erode_mask, fuse_frequencies, lfe, roi_stats, scan_convert
from .phantom import build_phantom
from .phasor import fit_phasors
from .pipeline import (_curl_stage, _field_from_config,
                       acquisition_time_report, format_time_report,
                       replicate_table, run_pipeline)
from .sequence import (SequencePlan, plan_sequence, spectral_separability,
                       validate_synchronization)
from .tracking import DisplacementSeries, oracle_displacements, track_displacements


def _load_config(args) -> RunConfig:
    cfg = RunConfig.from_yaml(args.config) if args.config else RunConfig.from_dict({})
    raw = cfg.to_dict()
    if getattr(args, "output", None):
        raw["output_dir"] = args.output
    if getattr(args, "seed", None) is not None:
        raw["master_seed"] = args.seed
    if getattr(args, "source", None):
        raw["modes"]["displacement_source"] = args.source
    if getattr(args, "curl", None):
        raw["modes"]["curl"] = args.curl
    return RunConfig.from_dict(raw)


def _frame_indices(cfg: RunConfig, plan: SequencePlan) -> np.ndarray:
    stride = int(cfg.raw["acquisition"]["frame_stride"])
    return np.arange(0, plan.frames_per_plane, stride)


def cmd_sequence(args) -> int:
    plan = plan_sequence(args.frequencies, args.frame_rate, args.planes,
                         args.settling, args.pulse, args.min_imaging)
    sync = validate_synchronization(plan)
    sep = spectral_separability(plan, args.tolerance)
    if args.json:
        print(json.dumps({"plan": plan.to_dict(),
                          "synchronization": sync.to_dict(),
                          "separability": sep.to_dict()}, indent=2))
    else:
        print(plan.timeline_text())
        print()
        print(sync)
        print()
        print(sep)
    return 0 if (sync.ok and sep.ok) else 1


def cmd_simulate(args) -> int:
    cfg = _load_config(args)
    out = cfg.output_dir
    phantom = build_phantom(cfg.phantom_spec())
    plan = plan_sequence(**cfg.sequence_kwargs())
    geometry = cfg.frustum()
    field_src = _field_from_config(cfg, phantom, geometry)
    indices = _frame_indices(cfg, plan)
    phases = np.mod(plan.imaging_start(0) + indices / plan.frame_rate,
                    plan.fundamental)
    pts = geometry.points()
    frames = np.stack([field_src.displacement(pts, t) for t in phases])
    path = swio.write_volume_file(
        out / "field.swvol",
        {"frames": frames, "timestamps": phases, "frame_indices": indices},
        meta={"kind": "field_series", "components": "global",
              "plan": plan.to_dict(), "geometry": geometry.to_dict()})
    print(f"wrote {path}")
    return 0


def cmd_acquire(args) -> int:
    cfg = _load_config(args)
    out = cfg.output_dir
    phantom = build_phantom(cfg.phantom_spec())
    plan = plan_sequence(**cfg.sequence_kwargs())
    geometry = cfg.frustum()
    field_src = _field_from_config(cfg, phantom, geometry)
    indices = _frame_indices(cfg, plan)
    mode = ("displacement"
            if cfg.raw["modes"]["displacement_source"] == "oracle"
            else "speckle")
    seed = int(np.random.SeedSequence(cfg.master_seed).generate_state(1)[0])
    record = acquire_sweep(field_src, plan, geometry, mode,
                           frame_indices=indices, scatterer_seed=seed)
    path = swio.write_volume_file(
        out / "record.swvol",
        {f"plane_{p:02d}": record.planes[p] for p in range(plan.n_planes)}
        | {"timestamps": record.timestamps,
           "plane_angles_deg": record.plane_angles_deg,
           "frame_indices": record.frame_indices},
        meta={"kind": "acquisition_record", "mode": mode,
              "plan": plan.to_dict(), "geometry": geometry.to_dict()})
    print(f"wrote {path}")
    return 0


def load_record(path) -> AcquisitionRecord:
    arrays, meta = swio.read_volume_file(path)
    plan = SequencePlan.from_dict(meta["plan"])
    geometry = FrustumGeometry.from_dict(meta["geometry"])
    planes = [arrays[f"plane_{p:02d}"] for p in range(plan.n_planes)]
    return AcquisitionRecord(planes=planes, timestamps=arrays["timestamps"],
                             plane_angles_deg=arrays["plane_angles_deg"],
                             geometry=geometry, plan=plan, mode=meta["mode"],
                             frame_indices=arrays["frame_indices"])


def load_displacement(path) -> DisplacementSeries:
    arrays, meta = swio.read_volume_file(path)
    return DisplacementSeries(
        frames=arrays["frames"], timestamps=arrays["timestamps"],
        quality=arrays["quality"],
        geometry=FrustumGeometry.from_dict(meta["geometry"]),
        plan=SequencePlan.from_dict(meta["plan"]),
        provenance=meta["provenance"])


def cmd_track(args) -> int:
    cfg = _load_config(args)
    out = cfg.output_dir
    record = load_record(args.record)
    vols = form_volumes(record)
    if record.mode == "displacement":
        if not args.field:
            raise ValueError(
                "displacement-mode records need --field for oracle forwarding")
        arrays, meta = swio.read_volume_file(args.field)
        field = DisplacementFieldSeries(
            frames=arrays["frames"], timestamps=arrays["timestamps"],
            grid=FrustumGeometry.from_dict(meta["geometry"]))
        disp = oracle_displacements(field, vols)
    else:
        tr = cfg.raw["tracking"]
        disp = track_displacements(vols, window=tuple(tr["window"]),
                                   search=tuple(tr["search"]),
                                   regularization=int(tr["regularization"]))
    path = swio.write_volume_file(
        out / "displacement.swvol",
        {"frames": disp.frames, "timestamps": disp.timestamps,
         "quality": disp.quality},
        meta={"kind": "displacement_series", "provenance": disp.provenance,
              "plan": disp.plan.to_dict(),
              "geometry": disp.geometry.to_dict()})
    print(f"wrote {path}")
    return 0


def cmd_invert(args) -> int:
    cfg = _load_config(args)
    out = cfg.output_dir
    disp = load_displacement(args.displacement)
    pset = fit_phasors(disp, cfg.frequencies())
    cart = scan_convert(pset, float(cfg.raw["inversion"]["spacing"]))
    source = _curl_stage(cart, cfg.raw["modes"]["curl"])
    rho = float(cfg.raw["inversion"]["rho"])
    bank = cfg.bank()
    per_freq = [lfe(source, f, rho, bank) for f in cfg.frequencies()]
    fused = fuse_frequencies(per_freq)
    fused.mask = erode_mask(fused.mask,
                            int(cfg.raw["inversion"]["boundary_crop_voxels"]))
    st = roi_stats(fused, cfg.roi_center(disp.geometry), cfg.roi_size())
    fset = "/".join(f"{f:g}" for f in cfg.frequencies())
    rows = [(cfg.name, cfg.raw["modes"]["curl"], fset, st.mean, st.std,
             st.n_voxels)]
    swio.write_csv(out / "roi_stats.csv",
                   ("phantom_id", "mode", "f_set", "mean_Pa", "std_Pa",
                    "n_voxels"), rows)
    path = swio.write_volume_file(
        out / "elasticity_fused.swvol",
        {"young": fused.young, "confidence": fused.confidence,
         "mask": fused.mask},
        meta={"kind": "elasticity_volume", "grid": fused.grid.to_dict(),
              "provenance": fused.provenance})
    print(f"ROI mean {st.mean:.0f} Pa, std {st.std:.0f} Pa over "
          f"{st.n_voxels} voxels")
    print(f"wrote {path}")
    return 0


def cmd_arfi(args) -> int:
    cfg = _load_config(args)
    out = cfg.output_dir
    out.mkdir(parents=True, exist_ok=True)
    a = cfg.raw["arfi"]
    background = cfg.phantom_spec().regions[0].material
    scene = ARFIScene(mu=background.mu, rho=background.rho, eta=background.eta,
                      duration=float(a["duration"]),
                      sample_rate=float(a["sample_rate"]),
                      position_start=float(a["position_start"]),
                      position_stop=float(a["position_stop"]),
                      position_step=float(a["position_step"]),
                      amplitude=float(a["amplitude"]),
                      pulse_sigma=float(a["pulse_sigma"]),
                      single_measurement_time=float(a["single_measurement_time"]))
    rep = repeat_measurements(scene, int(a["n_repeats"]),
                              snr_db=a.get("snr_db"),
                              master_seed=cfg.master_seed)
    disp_freqs = [float(f) for f in a["dispersion_frequencies"]]
    disp = estimate_phase_velocity(scene.simulate(), disp_freqs)
    rows = []
    for i, (c, e) in enumerate(zip(rep.speeds, rep.young_per_repeat), start=1):
        rows.append((i, "", c, e))
    for est in disp:
        if est.flagged:
            continue
        rows.append(("", est.frequency, est.speed,
                     3.0 * background.rho * est.speed**2))
    path = swio.write_csv(out / "arfi_results.csv",
                          ("repeat", "f_Hz", "c_mps", "E_Pa"), rows)
    print(f"group-speed E: {rep.mean:.0f} +- {rep.std:.0f} Pa over "
          f"{len(rep.young_per_repeat)} repeats "
          f"({rep.total_acquisition_time:.2f} s acquisition)")
    print(f"wrote {path}")
    return 0


def cmd_report(args) -> int:
    report = acquisition_time_report()
    if args.json:
        print(json.dumps(report, indent=2))
    else:
        print(format_time_report(report))
    if args.config or args.output:
        cfg = _load_config(args)
        cfg.output_dir.mkdir(parents=True, exist_ok=True)
        swio.write_json(cfg.output_dir / "acquisition_time.json", report)
    return 0


def cmd_replicate_table(args) -> int:
    cfg = _load_config(args)
    out = cfg.output_dir
    out.mkdir(parents=True, exist_ok=True)
    modes = tuple(args.modes.split(",")) if args.modes else ("none", "curl2d",
                                                             "curl3d")
    rows = replicate_table(cfg, modes=modes)
    path = swio.write_csv(out / "replicate_table.csv",
                          ("phantom_id", "mode", "f_set", "mean_Pa", "std_Pa",
                           "n_voxels"), rows)
    for row in rows:
        print(f"{row[0]:10s} {row[1]:7s} {row[2]:12s} "
              f"{row[3] / 1e3:6.2f} +- {row[4] / 1e3:5.2f} kPa  (n={row[5]})")
    print(f"wrote {path}")
    return 0


def cmd_run(args) -> int:
    cfg = _load_config(args)
    report = run_pipeline(cfg)
    fused = report.roi.get("fused", {})
    print(f"run '{report.name}' finished; fused ROI "
          f"{fused.get('mean_pa', float('nan')):.0f} +- "
          f"{fused.get('std_pa', float('nan')):.0f} Pa")
    print(f"manifest: {report.manifest_path}")
    return 0


def cmd_example_config(args) -> int:
    print(example_config_text(), end="")
    return 0


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="shearwave",
        description="Steady-state shear-wave elastography simulation and "
                    "reconstruction at desk scale")
    sub = parser.add_subparsers(dest="command", required=True)

    def add_common(p, needs_config=True):
        p.add_argument("--config", required=False,
                       help="YAML configuration path (defaults apply if omitted)")
        p.add_argument("--output", help="override the output directory")
        p.add_argument("--seed", type=int, help="override the master seed")
        p.add_argument("--source", choices=("oracle", "tracked"),
                       help="override the displacement source")
        p.add_argument("--curl", choices=("none", "curl2d", "curl3d"),
                       help="override the curl mode")

    p = sub.add_parser("sequence", help="plan and validate a synchronized sweep")
    p.add_argument("frequencies", nargs="+", type=float)
    p.add_argument("--frame-rate", dest="frame_rate", type=float, default=3000.0)
    p.add_argument("--planes", type=int, default=10)
    p.add_argument("--settling", type=float, default=0.010)
    p.add_argument("--pulse", type=float, default=0.007)
    p.add_argument("--min-imaging", dest="min_imaging", type=float, default=0.180)
    p.add_argument("--tolerance", type=float, default=0.05)
    p.add_argument("--json", action="store_true")
    p.set_defaults(fn=cmd_sequence)

    p = sub.add_parser("simulate", help="sample the steady-state field")
    add_common(p)
    p.set_defaults(fn=cmd_simulate)

    p = sub.add_parser("acquire", help="virtual swept-transducer acquisition")
    add_common(p)
    p.set_defaults(fn=cmd_acquire)

    p = sub.add_parser("track", help="displacements from a stored record")
    add_common(p)
    p.add_argument("--record", required=True)
    p.add_argument("--field", help="field series for oracle forwarding")
    p.set_defaults(fn=cmd_track)

    p = sub.add_parser("invert", help="phasors, curl, LFE and ROI statistics")
    add_common(p)
    p.add_argument("--displacement", required=True)
    p.set_defaults(fn=cmd_invert)

    p = sub.add_parser("arfi", help="push-track baseline estimates")
    add_common(p)
    p.set_defaults(fn=cmd_arfi)

    p = sub.add_parser("report", help="acquisition-time comparison")
    p.add_argument("--config")
    p.add_argument("--output")
    p.add_argument("--json", action="store_true")
    p.set_defaults(fn=cmd_report)

    p = sub.add_parser("replicate-table",
                       help="homogeneous phantoms x curl modes table")
    add_common(p)
    p.add_argument("--modes", help="comma-separated subset of none,curl2d,curl3d")
    p.set_defaults(fn=cmd_replicate_table)

    p = sub.add_parser("run", help="full pipeline in one go")
    add_common(p)
    p.set_defaults(fn=cmd_run)

    p = sub.add_parser("example-config", help="print a commented template")
    p.set_defaults(fn=cmd_example_config)

    return parser


def main(argv=None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        return args.fn(args)
    except StageError as exc:
        print(f"error in stage '{exc.stage}': {exc.cause}", file=sys.stderr)
        if exc.artifacts:
            print("artifacts written before the failure:", file=sys.stderr)
            for a in exc.artifacts:
                print(f"  {a}", file=sys.stderr)
        return 1
    except (ValueError, OSError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 1


if __name__ == "__main__":
    sys.exit(main())
