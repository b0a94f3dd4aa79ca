"""Batch command-line interface for the models, fitting, simulation, and
tactile pipeline.

All flags use SI units; inch-version gripper presets expand to metric
apertures at the boundary. Every subcommand is deterministic for a fixed
seed, takes no configuration from the environment, and offers a
machine-readable JSON mode next to the human-readable default.

Exit codes: 0 success, 2 input/validation error, 1 internal error.
"""
from __future__ import annotations

import argparse
import json
import sys
from pathlib import Path

from . import expio, grasp, pressure, spring, tactile
from .errors import TwistgripError

EXIT_OK = 0
EXIT_INTERNAL = 1
EXIT_USAGE = 2


def _emit(payload, as_json, human_lines):
    if as_json:
        print(json.dumps(payload, indent=2, sort_keys=True))
    else:
        for line in human_lines:
            print(line)


def _gripper_from_args(args):
    if args.gripper in grasp.APERTURE_BY_NAME:
        return grasp.GripperGeometry.from_name(args.gripper)
    return grasp.GripperGeometry(aperture_diameter=float(args.gripper))


def _scenario_from_json(doc):
    gripper_doc = doc["gripper"]
    if isinstance(gripper_doc, str):
        gripper = grasp.GripperGeometry.from_name(gripper_doc)
    else:
        gripper = grasp.GripperGeometry(**gripper_doc)
    obj_doc = doc["object"]
    obj = grasp.ObjectDescriptor(
        shape_class=grasp.ShapeClass(obj_doc["shape_class"]),
        height=obj_doc["height_m"],
        diameter=obj_doc["diameter_m"],
        mass=obj_doc["mass_kg"],
        label=obj_doc.get("label", ""),
    )
    return grasp.GraspScenario(
        gripper=gripper,
        obj=obj,
        submersion_fraction=doc.get("submersion_fraction", 0.0),
        air_support_kpa=doc.get("air_support_kpa", 0.0),
        lift_height=doc.get("lift_height_m", 0.0),
        hold_height=doc.get("hold_height_m", 0.0),
        inside_petal_region=doc.get("inside_petal_region", True),
        agitated_approach=doc.get("agitated_approach", False),
    )


def cmd_pressure(args):
    obj = pressure.SphericalObject(mass=args.mass, radius=args.radius)
    fric = pressure.FrictionModel(k=args.k)
    closed = pressure.line_pressure_closed_form(obj, fric, g=args.g)
    quad = pressure.line_pressure_quadrature(obj, fric, g=args.g, n_intervals=args.n_intervals)
    rel = abs(quad - closed) / closed if closed else 0.0
    dist = pressure.PressureDistribution(p_bottom=closed)
    residual = pressure.equilibrium_residual(obj, fric, dist, g=args.g)
    payload = {
        "closed_form_n_per_m": closed,
        "quadrature_n_per_m": quad,
        "relative_difference": rel,
        "equilibrium_residual_n": residual,
        "n_intervals": args.n_intervals,
    }
    _emit(payload, args.json, [
        f"line pressure (closed form): {closed:.6g} N/m",
        f"line pressure (quadrature, n={args.n_intervals}): {quad:.6g} N/m",
        f"relative difference: {rel:.3e}",
        f"equilibrium residual: {residual:.3e} N",
    ])
    return EXIT_OK


def cmd_spring_fit(args):
    curve = expio.read_payload_csv(
        args.infile, strain_unit=args.strain_unit, skin_height=args.skin_height
    )
    fit = spring.fit_zones(curve)
    payload = {
        "slope1_n_per_strain": fit.slope1,
        "slope2_n_per_strain": fit.slope2,
        "breakpoint_strain": fit.breakpoint,
        "rms_relative_error": fit.rms_relative_error,
        "degenerate": fit.degenerate,
        "max_fitted_strain": fit.max_fitted_strain,
    }
    human = [
        f"soft-zone slope:  {fit.slope1:.6g} N/strain",
        f"stiff-zone slope: {fit.slope2:.6g} N/strain",
        f"breakpoint:       {fit.breakpoint:.6g} strain",
        f"rms relative error: {fit.rms_relative_error:.3e}",
    ]
    if fit.degenerate:
        human.append("warning: single slope fits the data; breakpoint is unreliable")
    _emit(payload, args.json, human)
    if args.out:
        with open(args.out, "w", encoding="utf-8", newline="\n") as fh:
            json.dump(payload, fh, indent=2, sort_keys=True)
            fh.write("\n")
    return EXIT_OK


def cmd_spring_predict(args):
    spec = spring.SkinSpec.from_slopes(args.slope1, args.slope2, args.breakpoint)
    if args.strain is not None:
        load = spring.predict_load(args.strain, spec)
        mass = spring.estimate_object_mass(args.strain, spec, g=args.g)
        payload = {"strain": args.strain, "load_n": load, "estimated_mass_kg": mass}
        human = [f"load at strain {args.strain:.6g}: {load:.6g} N "
                 f"(object mass {mass:.6g} kg at g={args.g})"]
    else:
        strain = spring.predict_strain(args.load, spec)
        payload = {"load_n": args.load, "strain": strain}
        human = [f"strain at load {args.load:.6g} N: {strain:.6g}"]
    _emit(payload, args.json, human)
    return EXIT_OK


def cmd_grasp_simulate(args):
    with open(args.scenario, "r", encoding="utf-8") as fh:
        doc = json.load(fh)
    scenario = _scenario_from_json(doc)
    outcome = grasp.grasp_feasibility(scenario)
    payload = {
        "verdict": outcome.verdict.value,
        "reason": outcome.reason_code.value,
        "phase_trace": [
            {"phase": phase, "angle_rad": angle, "coverage": cov}
            for phase, angle, cov in outcome.phase_trace
        ],
    }
    human = [f"verdict: {outcome.verdict.value} ({outcome.reason_code.value})"]
    if args.k is not None and outcome.verdict is grasp.Verdict.FEASIBLE:
        p = grasp.holding_pressure(scenario, pressure.FrictionModel(k=args.k))
        payload["holding_pressure_n_per_m"] = p
        human.append(f"holding line pressure: {p:.6g} N/m (k={args.k})")
    _emit(payload, args.json, human)
    return EXIT_OK


def cmd_grasp_validate(args):
    dataset_id = {"table2": "table2_objects", "table3": "table3_submersion"}[args.dataset]
    report = grasp.validate_against_reference(dataset_id)
    payload = {
        "dataset": report.dataset_id,
        "agreement": f"{report.n_agree}/{report.n_total}",
        "rows": [
            {
                "label": row.label,
                "predicted": row.predicted.value,
                "expected": row.expected.value,
                "success_rate": row.success_rate,
                "agrees": row.agrees,
            }
            for row in report.rows
        ],
    }
    human = [f"{report.dataset_id}: {report.n_agree}/{report.n_total} rows agree"]
    for row in report.rows:
        mark = "ok " if row.agrees else "MISMATCH"
        human.append(
            f"  [{mark}] {row.label}: predicted {row.predicted.value}, "
            f"recorded success {row.success_rate:.0%}"
        )
    _emit(payload, args.json, human)
    return EXIT_OK if report.all_agree else EXIT_USAGE


def _load_layout(args):
    if args.layout:
        with open(args.layout, "r", encoding="utf-8") as fh:
            return tactile.MarkerLayout.from_json(json.load(fh))
    cols, rows = (int(v) for v in args.grid.split("x"))
    return tactile.MarkerLayout.grid(cols, rows)


def cmd_tactile_render(args):
    layout = _load_layout(args)
    camera = tactile.CameraModel(width=args.width, height=args.height, view_width=args.view_width)
    displacements = {}
    if args.shift:
        dx, dy = args.shift
        displacements = {mid: (dx, dy) for mid, _ in layout.markers}
    occluded = frozenset(args.occlude or [])
    deformation = tactile.Deformation(displacements=displacements, occluded=occluded)
    frame, sidecar = tactile.render_frame(
        layout, deformation, camera, noise_sigma=args.noise, seed=args.seed
    )
    tactile.write_pgm(frame, args.out)
    if args.sidecar:
        tactile.write_sidecar(sidecar, args.sidecar)
    print(f"wrote {args.out} ({frame.width}x{frame.height}, "
          f"{len(sidecar['visible'])} markers visible)")
    return EXIT_OK


def cmd_tactile_detect(args):
    frame = tactile.read_pgm(args.infile)
    binary = tactile.binarize(frame, threshold=args.threshold)
    markers = tactile.detect_markers(binary, min_area=args.min_area)
    payload = {
        "count": len(markers),
        "detections": [
            {"x": d.centroid[0], "y": d.centroid[1], "area": d.area, "merged": d.merged}
            for d in markers.detections
        ],
    }
    human = [f"{len(markers)} markers detected"]
    for d in markers.detections:
        human.append(f"  ({d.centroid[0]:.2f}, {d.centroid[1]:.2f}) area={d.area}"
                     + (" merged" if d.merged else ""))
    _emit(payload, args.json, human)
    return EXIT_OK


def _track_from_files(args):
    prev = tactile.read_pgm(args.prev)
    curr = tactile.read_pgm(args.curr)
    prev_set = tactile.detect_markers(tactile.binarize(prev, args.threshold), min_area=args.min_area)
    curr_set = tactile.detect_markers(tactile.binarize(curr, args.threshold), min_area=args.min_area)
    return tactile.track(prev_set, curr_set, gate=args.gate)


def cmd_tactile_track(args):
    field = _track_from_files(args)
    payload = {
        "matches": [
            {"prev": i, "curr": j, "dx": v[0], "dy": v[1]} for i, j, v in field.matches
        ],
        "unmatched_previous": list(field.unmatched_previous),
        "unmatched_current": list(field.unmatched_current),
    }
    human = [f"{len(field.matches)} matched, "
             f"{len(field.unmatched_previous)} lost, {len(field.unmatched_current)} new"]
    for i, j, (dx, dy) in field.matches:
        human.append(f"  {i} -> {j}: ({dx:+.2f}, {dy:+.2f}) px")
    _emit(payload, args.json, human)
    return EXIT_OK


def cmd_tactile_summarize(args):
    field = _track_from_files(args)
    summary = tactile.contact_summary(field, air_support_kpa=args.air_support)
    payload = {
        "mean_displacement_px": summary.mean_displacement,
        "displacement_variance_px2": summary.displacement_variance,
        "visible_count": summary.visible_count,
        "air_support_kpa": summary.air_support_kpa,
        "label": summary.label,
    }
    _emit(payload, args.json, [
        f"label: {summary.label}",
        f"mean displacement: {summary.mean_displacement:.3f} px",
        f"displacement variance: {summary.displacement_variance:.3f} px^2",
        f"visible markers: {summary.visible_count}",
    ])
    return EXIT_OK


def cmd_report(args):
    out_dir = Path(args.out_dir)
    out_dir.mkdir(parents=True, exist_ok=True)
    sections = []

    curve = expio.read_payload_csv(args.curve)
    fit = spring.fit_zones(curve)
    strains = list(curve.strains)
    fitted = [fit.predict(s) for s in strains]
    plot_name = "payload_fit.svg"
    expio.emit_plot(
        [(strains, list(curve.loads), "measured"), (strains, fitted, "fitted")],
        out_dir / plot_name,
        title="Payload curve: measured vs fitted",
        x_label="strain", y_label="load [N]",
    )
    sections.append(expio.ReportSection(
        title="Two-zone spring fit",
        metrics={
            "slope1": {"value": fit.slope1, "unit": "N/strain"},
            "slope2": {"value": fit.slope2, "unit": "N/strain"},
            "breakpoint": {"value": fit.breakpoint, "unit": "strain"},
            "rms_relative_error": {"value": fit.rms_relative_error, "unit": "1"},
        },
        plot=plot_name,
    ))

    obj = pressure.SphericalObject(mass=args.mass, radius=args.radius)
    fric = pressure.FrictionModel(k=args.k)
    closed = pressure.line_pressure_closed_form(obj, fric)
    quad = pressure.line_pressure_quadrature(obj, fric)
    sections.append(expio.ReportSection(
        title="Line pressure cross-check",
        metrics={
            "closed_form": {"value": closed, "unit": "N/m"},
            "quadrature": {"value": quad, "unit": "N/m"},
            "relative_difference": {
                "value": abs(quad - closed) / closed if closed else 0.0, "unit": "1",
            },
        },
    ))

    payload_ref = expio.load_reference_dataset("table1_payload").rows[0]
    computed_ratio = expio.payload_to_weight_ratio(
        payload_ref["max_payload_kgf"], payload_ref["weight_kg"]
    )
    sections.append(expio.ReportSection(
        title="Payload-to-weight ratio",
        metrics={
            "computed_ratio": {"value": computed_ratio, "unit": "%"},
            "recorded_ratio": {"value": payload_ref["reported_ratio_percent"], "unit": "%"},
            "note": {
                "value": "computed from recorded payload and weight; differs from the recorded ratio",
                "unit": "",
            },
        },
    ))

    for dataset in ("table2_objects", "table3_submersion"):
        rep = grasp.validate_against_reference(dataset)
        sections.append(expio.ReportSection(
            title=f"Feasibility replay: {dataset}",
            metrics={"agreement": {"value": f"{rep.n_agree}/{rep.n_total}", "unit": "rows"}},
        ))

    report = expio.Report(sections=tuple(sections))
    expio.write_report_json(report, out_dir / "report.json")
    print(f"report written to {out_dir / 'report.json'}")
    return EXIT_OK


def build_parser():
    parser = argparse.ArgumentParser(
        prog="twistgrip",
        description="Soft-gripper models, fitting, grasp simulation, and tactile pipeline.",
    )
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("pressure", help="line pressure on a gripped sphere, with quadrature cross-check")
    p.add_argument("--mass", type=float, required=True, help="object mass [kg]")
    p.add_argument("--radius", type=float, required=True, help="object radius [m]")
    p.add_argument("--k", type=float, required=True, help="friction coefficient (0 <= k < 1)")
    p.add_argument("--g", type=float, default=pressure.G_DEFAULT, help="gravity [m/s^2]")
    p.add_argument("--n-intervals", type=int, default=pressure.N_INTERVALS_DEFAULT)
    p.add_argument("--json", action="store_true")
    p.set_defaults(func=cmd_pressure)

    p = sub.add_parser("spring", help="two-zone skin spring model")
    spring_sub = p.add_subparsers(dest="spring_command", required=True)
    pf = spring_sub.add_parser("fit", help="fit zone slopes and breakpoint from a payload CSV")
    pf.add_argument("--in", dest="infile", required=True, help="payload CSV (strain,force_n)")
    pf.add_argument("--strain-unit", choices=("fraction", "absolute"), default="fraction")
    pf.add_argument("--skin-height", type=float, default=None, help="skin height [m], for absolute strain")
    pf.add_argument("--out", default=None, help="also write the fit as JSON")
    pf.add_argument("--json", action="store_true")
    pf.set_defaults(func=cmd_spring_fit)
    pp = spring_sub.add_parser("predict", help="predict load from strain or strain from load")
    pp.add_argument("--slope1", type=float, required=True, help="soft-zone slope [N/strain]")
    pp.add_argument("--slope2", type=float, required=True, help="stiff-zone slope [N/strain]")
    pp.add_argument("--breakpoint", type=float, required=True, help="transition strain")
    group = pp.add_mutually_exclusive_group(required=True)
    group.add_argument("--strain", type=float, default=None)
    group.add_argument("--load", type=float, default=None, help="load [N]")
    pp.add_argument("--g", type=float, default=pressure.G_DEFAULT)
    pp.add_argument("--json", action="store_true")
    pp.set_defaults(func=cmd_spring_predict)

    p = sub.add_parser("grasp", help="grasp phase simulation and feasibility")
    grasp_sub = p.add_subparsers(dest="grasp_command", required=True)
    gs = grasp_sub.add_parser("simulate", help="evaluate a scenario JSON document")
    gs.add_argument("--scenario", required=True, help="scenario JSON path")
    gs.add_argument("--k", type=float, default=None, help="friction coefficient for holding pressure")
    gs.add_argument("--json", action="store_true")
    gs.set_defaults(func=cmd_grasp_simulate)
    gv = grasp_sub.add_parser("validate", help="replay a bundled reference table")
    gv.add_argument("--dataset", choices=("table2", "table3"), required=True)
    gv.add_argument("--json", action="store_true")
    gv.set_defaults(func=cmd_grasp_validate)

    p = sub.add_parser("tactile", help="synthetic tactile sensing pipeline")
    tac_sub = p.add_subparsers(dest="tactile_command", required=True)
    tr = tac_sub.add_parser("render", help="render a synthetic marker frame to PGM")
    tr.add_argument("--layout", default=None, help="marker layout JSON")
    tr.add_argument("--grid", default="5x5", help="fallback grid layout, e.g. 5x5")
    tr.add_argument("--out", required=True, help="output PGM path")
    tr.add_argument("--sidecar", default=None, help="ground-truth sidecar JSON path")
    tr.add_argument("--width", type=int, default=640)
    tr.add_argument("--height", type=int, default=480)
    tr.add_argument("--view-width", type=float, default=tactile.VIEW_WIDTH_DEFAULT,
                    help="physical width of the imaged wall [m]")
    tr.add_argument("--shift", type=float, nargs=2, default=None, metavar=("DX", "DY"),
                    help="uniform marker displacement [px]")
    tr.add_argument("--occlude", type=int, nargs="*", default=None, help="marker ids to occlude")
    tr.add_argument("--noise", type=float, default=0.0, help="Gaussian pixel noise sigma")
    tr.add_argument("--seed", type=int, default=0)
    tr.set_defaults(func=cmd_tactile_render)
    td = tac_sub.add_parser("detect", help="detect marker centroids in a PGM frame")
    td.add_argument("--in", dest="infile", required=True)
    td.add_argument("--threshold", type=int, default=tactile.BINARIZE_THRESHOLD_DEFAULT)
    td.add_argument("--min-area", type=int, default=5)
    td.add_argument("--json", action="store_true")
    td.set_defaults(func=cmd_tactile_detect)
    tt = tac_sub.add_parser("track", help="track marker displacements between two frames")
    tt.add_argument("--prev", required=True)
    tt.add_argument("--curr", required=True)
    tt.add_argument("--gate", type=float, default=60.0, help="matching gate radius [px]")
    tt.add_argument("--threshold", type=int, default=tactile.BINARIZE_THRESHOLD_DEFAULT)
    tt.add_argument("--min-area", type=int, default=5)
    tt.add_argument("--json", action="store_true")
    tt.set_defaults(func=cmd_tactile_track)
    ts = tac_sub.add_parser("summarize", help="contact summary from a frame pair")
    ts.add_argument("--prev", required=True)
    ts.add_argument("--curr", required=True)
    ts.add_argument("--gate", type=float, default=60.0)
    ts.add_argument("--threshold", type=int, default=tactile.BINARIZE_THRESHOLD_DEFAULT)
    ts.add_argument("--min-area", type=int, default=5)
    ts.add_argument("--air-support", type=float, default=0.0, help="air support [kPa]")
    ts.add_argument("--json", action="store_true")
    ts.set_defaults(func=cmd_tactile_summarize)

    p = sub.add_parser("report", help="end-to-end report with plots from a payload curve")
    p.add_argument("--curve", required=True, help="payload CSV path")
    p.add_argument("--out-dir", required=True)
    p.add_argument("--mass", type=float, default=0.21, help="report sphere mass [kg]")
    p.add_argument("--radius", type=float, default=0.025, help="report sphere radius [m]")
    p.add_argument("--k", type=float, default=0.5, help="friction coefficient")
    p.set_defaults(func=cmd_report)

    return parser


def main(argv=None):
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        return args.func(args)
    except TwistgripError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_USAGE
    except OSError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_USAGE
    except Exception as exc:  # pragma: no cover
        print(f"internal error: {exc}", file=sys.stderr)
        return EXIT_INTERNAL


if __name__ == "__main__":
    sys.exit(main())
