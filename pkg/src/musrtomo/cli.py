"""Command-line front end.

Verbs: evolve (field sweeps of the reduced tomogram and entanglement),
simulate (Monte Carlo histograms plus tomogram estimation), reconstruct
(initial state from a measurement file), bell (Bell-number maximization
along an evolution), report (entanglement report time series).

Outputs are plot-ready long-format CSV plus JSON manifests; no plotting
dependency. Exit codes: 0 ok, 2 configuration error, 3 numeric failure.
"""

import argparse
import csv
import io
import json
import sys
from pathlib import Path

import numpy as np

from .dynamics import (
    PropagatorSpec,
    evolve_density,
    initial_muonium_state,
    muon_polarization_function,
)
from .entanglement import EntanglementReport, entanglement_measure, max_bell, negativity
from .linalg import SubsystemDims, partial_trace, require_density_matrix
from .materials import available_presets, load_material
from .musr import (
    DecayModel,
    DetectorGeometry,
    estimate_tomogram,
    estimates_to_csv,
    simulate_events,
)
from .reconstruction import (
    MeasurementPlan,
    identifiability,
    reconstruct_initial,
)
from .tomography import Direction, X_AXIS, Y_AXIS, Z_AXIS, rotation_matrix

_AXES = {"x": X_AXIS, "y": Y_AXIS, "z": Z_AXIS}

DEFAULT_SWEEPS = {
    "quartz": [0.0, 790.0, 1580.0, 3160.0],
    "si-mustar": [0.0, 10.0, 33.0, 100.0],
    "vacuum": [0.0],
}


class ConfigError(Exception):
    pass


def _axis(name: str) -> Direction:
    if name in _AXES:
        return _AXES[name]
    try:
        parts = [float(x) for x in name.split(",")]
        return Direction.from_vector(parts)
    except Exception as exc:
        raise ConfigError(f"cannot parse axis {name!r}: use x|y|z or 'vx,vy,vz'") from exc


def _load_init(path: str | None, j_e: float) -> np.ndarray:
    if path is None or path == "default":
        return initial_muonium_state(j_e)
    data = json.loads(Path(path).read_text())
    rho = np.array(data["real"], dtype=float) + 1j * np.array(data.get("imag", 0.0))
    return require_density_matrix(rho)


def _propagator_from_args(args, b_field: float) -> tuple[PropagatorSpec, float]:
    material = load_material(args.material)
    spec = material.hamiltonian_spec(
        b_field=b_field,
        b_axis=_axis(args.b_axis) if b_field != 0.0 else None,
        aniso_axis=_axis(args.aniso_axis) if args.aniso_axis else None,
    )
    return PropagatorSpec(spec), material.j_e


def _time_grid(prop: PropagatorSpec, args) -> np.ndarray:
    if args.t_max_ns is not None:
        t_max = args.t_max_ns
    else:
        gaps = prop.eigenfrequency_gaps()
        t_max = 4 * 2 * np.pi / gaps[0]
    return np.linspace(0.0, t_max, args.steps)


def _reduced_value(rho: np.ndarray, j_e: float, axis: Direction) -> float:
    d_e = int(round(2 * j_e + 1))
    rho_mu = partial_trace(rho, SubsystemDims(2, d_e), keep="a")
    r = rotation_matrix(0.5, axis)
    return float((r[:, 0].conj() @ rho_mu @ r[:, 0]).real)


def cmd_evolve(args) -> int:
    out_dir = Path(args.out)
    out_dir.mkdir(parents=True, exist_ok=True)
    fields = args.B if args.B is not None else DEFAULT_SWEEPS.get(args.material, [0.0])
    manifest = {"material": args.material, "fields_gauss": fields, "files": []}
    for b_field in fields:
        prop, j_e = _propagator_from_args(args, b_field)
        rho0 = _load_init(args.init, j_e)
        times = _time_grid(prop, args)
        two_qubit = j_e == 0.5
        buf = io.StringIO()
        buf.write("# schema: musrtomo/evolve-trace/v1\n")
        writer = csv.writer(buf)
        header = ["t_ns", "axis", "w_reduced", "E", "negativity"]
        if args.bell:
            header.append("max_bell")
        writer.writerow(header)
        for t in times:
            rho_t = evolve_density(rho0, prop.unitary(t))
            e_val = float(entanglement_measure(rho_t)) if two_qubit else None
            neg = negativity(rho_t, SubsystemDims(2, int(round(2 * j_e + 1)))) \
                if j_e in (0.5, 1.0) else None
            mb = max_bell(rho_t)[0] if (args.bell and two_qubit) else None
            for name, axis in _AXES.items():
                w = min(max(_reduced_value(rho_t, j_e, axis), 0.0), 1.0)
                row = [repr(float(t)), name, repr(w),
                       "" if e_val is None else repr(e_val),
                       "" if neg is None else repr(neg)]
                if args.bell:
                    row.append("" if mb is None else repr(mb))
                writer.writerow(row)
        fname = out_dir / f"evolve_{args.material}_B{b_field:g}.csv"
        fname.write_text(buf.getvalue())
        manifest["files"].append(fname.name)
    (out_dir / "manifest.json").write_text(json.dumps(manifest, indent=2))
    print(f"wrote {len(manifest['files'])} trace(s) to {out_dir}")
    return 0


def cmd_simulate(args) -> int:
    out_dir = Path(args.out)
    out_dir.mkdir(parents=True, exist_ok=True)
    b_field = args.B[0] if args.B else 0.0
    prop, j_e = _propagator_from_args(args, b_field)
    rho0 = _load_init(args.init, j_e)
    polarization = muon_polarization_function(rho0, prop)
    model = DecayModel(asymmetry=args.asymmetry)
    geometry = DetectorGeometry.opposing_pairs(
        [_axis(a) for a in args.detectors.split("+")],
        half_angle=np.radians(args.half_angle_deg))
    t_max = args.t_max_ns if args.t_max_ns is not None else 3 * model.lifetime_ns
    bin_edges = np.linspace(0.0, t_max, args.steps + 1)
    hist = simulate_events(polarization, geometry, model, args.n_muons, args.seed,
                           bin_edges, background_fraction=args.background)
    (out_dir / "histograms.csv").write_text(hist.to_csv(geometry))
    (out_dir / "histograms.meta.json").write_text(hist.metadata_json(model, args.seed))
    estimates = estimate_tomogram(hist, geometry, model)
    (out_dir / "tomogram_estimate.csv").write_text(estimates_to_csv(estimates))

    # truth comparison: decay-weighted bin averages of the exact tomogram
    report = []
    for est in estimates:
        n_vec = est.axis.vector
        for i, t in enumerate(est.times):
            if est.low_confidence[i]:
                continue
            lo, hi = hist.bin_edges[i], hist.bin_edges[i + 1]
            ts = np.linspace(lo, hi, 33)
            wdecay = np.exp(-ts / model.lifetime_ns)
            pol = polarization(ts)
            w_true = 0.5 + 0.5 * pol @ n_vec
            truth = float(np.sum(w_true * wdecay) / np.sum(wdecay))
            dev = (est.w_plus[i] - truth) / est.sigma[i]
            report.append({"axis": [est.axis.theta, est.axis.phi], "t_ns": float(t),
                           "w_estimate": float(est.w_plus[i]),
                           "w_truth": truth, "sigma": float(est.sigma[i]),
                           "deviation_sigmas": float(dev)})
    (out_dir / "comparison.json").write_text(json.dumps(report, indent=2))
    within = sum(1 for r in report if abs(r["deviation_sigmas"]) <= 3)
    print(f"simulated {args.n_muons} muons; {within}/{len(report)} bins within 3 sigma")
    return 0


def cmd_reconstruct(args) -> int:
    plan_data = json.loads(Path(args.plan).read_text())
    prop, _ = _propagator_from_args(
        argparse.Namespace(material=plan_data["material"],
                           b_axis=plan_data.get("B_axis", "z"),
                           aniso_axis=plan_data.get("aniso_axis")),
        plan_data.get("B", 0.0))
    dirs = [Direction(*d) if isinstance(d, (list, tuple)) else _axis(d)
            for d in plan_data.get("directions", ["x", "y", "z"])]
    plan = MeasurementPlan(prop, directions=tuple(dirs),
                           times=tuple(plan_data["times_ns"]))
    rank, cond = identifiability(plan)
    values, sigmas = _read_measurements(args.measurements, plan)
    if rank < 15 and not args.allow_deficient:
        from .reconstruction import build_design_matrix
        null = build_design_matrix(plan).null_space()
        print(f"error: plan is rank deficient: rank {rank} < 15, "
              f"null-space dimension {null.shape[0]}", file=sys.stderr)
        print(json.dumps({"rank": rank, "condition_number": cond,
                          "null_space": null.tolist()}, indent=2), file=sys.stderr)
        return 2
    result = reconstruct_initial(values, plan, sigmas=sigmas,
                                 allow_deficient=args.allow_deficient)
    Path(args.out).write_text(result.to_json(plan))
    print(f"wrote reconstruction report to {args.out} "
          f"(rank {result.rank}, residual {result.residual_norm:.3e})")
    return 0


def _read_measurements(path: str, plan: MeasurementPlan):
    rows = []
    with open(path, newline="") as fh:
        for line in fh:
            if not line.startswith("#"):
                rows.append(line)
    reader = csv.DictReader(io.StringIO("".join(rows)))
    table = {}
    has_sigma = True
    for rec in reader:
        key = (round(float(rec["t_ns"]), 9),
               round(float(rec["theta"]), 9), round(float(rec["phi"]), 9))
        sigma = rec.get("sigma")
        if sigma in (None, ""):
            has_sigma = False
        table[key] = (float(rec["w_plus"]), float(sigma) if sigma else None)
    values, sigmas = [], []
    for t in plan.times:
        for d in plan.directions:
            key = (round(t, 9), round(d.theta, 9), round(d.phi, 9))
            if key not in table:
                raise ConfigError(f"measurement file misses (t={t}, "
                                  f"theta={d.theta}, phi={d.phi})")
            w, s = table[key]
            values.append(w)
            sigmas.append(s)
    return np.array(values), (np.array(sigmas, dtype=float) if has_sigma else None)


def cmd_bell(args) -> int:
    b_field = args.B[0] if args.B else 0.0
    prop, j_e = _propagator_from_args(args, b_field)
    if j_e != 0.5:
        raise ConfigError("bell maximization requires a two-qubit system")
    rho0 = _load_init(args.init, j_e)
    times = _time_grid(prop, args)
    buf = io.StringIO()
    buf.write("# schema: musrtomo/bell-trace/v1\n")
    writer = csv.writer(buf)
    writer.writerow(["t_ns", "max_bell", "E", "negativity"])
    for t in times:
        rho_t = evolve_density(rho0, prop.unitary(t))
        writer.writerow([repr(float(t)), repr(max_bell(rho_t, seed=args.seed)[0]),
                         repr(entanglement_measure(rho_t)),
                         repr(negativity(rho_t, SubsystemDims(2, 2)))])
    Path(args.out).write_text(buf.getvalue())
    print(f"wrote bell trace to {args.out}")
    return 0


def cmd_report(args) -> int:
    b_field = args.B[0] if args.B else 0.0
    prop, j_e = _propagator_from_args(args, b_field)
    if j_e != 0.5:
        raise ConfigError("entanglement report requires a two-qubit system")
    rho0 = _load_init(args.init, j_e)
    times = _time_grid(prop, args)
    reports = []
    for t in times:
        rho_t = evolve_density(rho0, prop.unitary(t))
        rep = EntanglementReport.from_state(rho_t, t=float(t),
                                            include_max_bell=not args.no_bell,
                                            seed=args.seed)
        reports.append(json.loads(rep.to_json()))
    Path(args.out).write_text(json.dumps(reports, indent=2))
    print(f"wrote {len(reports)} entanglement reports to {args.out}")
    return 0


def _common_physics_flags(p):
    p.add_argument("--material", default="vacuum",
                   help=f"preset name or JSON path (presets: {', '.join(available_presets())})")
    p.add_argument("--B", type=float, nargs="*", default=None,
                   help="field magnitudes in Gauss (sweep for evolve)")
    p.add_argument("--B-axis", dest="b_axis", default="z")
    p.add_argument("--aniso-axis", dest="aniso_axis", default=None)
    p.add_argument("--t-max-ns", dest="t_max_ns", type=float, default=None)
    p.add_argument("--steps", type=int, default=512)
    p.add_argument("--init", default="default",
                   help="'default' or path to a JSON density matrix {real, imag}")
    p.add_argument("--seed", type=int, default=0)


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="musrtomo", description=__doc__)
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("evolve", help="field-sweep time traces of the reduced tomogram")
    _common_physics_flags(p)
    p.add_argument("--bell", action="store_true", help="include max_bell (slow)")
    p.add_argument("--out", default="evolve_out")
    p.set_defaults(fn=cmd_evolve)

    p = sub.add_parser("simulate", help="Monte Carlo histograms and tomogram estimate")
    _common_physics_flags(p)
    p.add_argument("--detectors", default="z",
                   help="'+'-separated pair axes, e.g. 'z+x' (each gets a fwd/bwd pair)")
    p.add_argument("--n-muons", dest="n_muons", type=int, default=1_000_000)
    p.add_argument("--half-angle-deg", dest="half_angle_deg", type=float, default=70.0)
    p.add_argument("--background", type=float, default=0.01)
    p.add_argument("--asymmetry", type=float, default=1.0 / 3.0)
    p.add_argument("--out", default="simulate_out")
    p.set_defaults(fn=cmd_simulate)

    p = sub.add_parser("reconstruct", help="initial state from measured tomogram values")
    p.add_argument("--plan", required=True, help="plan JSON")
    p.add_argument("--measurements", required=True, help="CSV (t_ns,theta,phi,w_plus[,sigma])")
    p.add_argument("--allow-deficient", action="store_true",
                   help="return the minimum-norm solution for rank-deficient plans")
    p.add_argument("--out", default="reconstruction.json")
    p.set_defaults(fn=cmd_reconstruct)

    p = sub.add_parser("bell", help="Bell-number maximization along an evolution")
    _common_physics_flags(p)
    p.add_argument("--out", default="bell_trace.csv")
    p.set_defaults(fn=cmd_bell)

    p = sub.add_parser("report", help="entanglement report time series (JSON)")
    _common_physics_flags(p)
    p.add_argument("--no-bell", action="store_true", help="skip max_bell")
    p.add_argument("--out", default="entanglement_report.json")
    p.set_defaults(fn=cmd_report)
    return parser


def main(argv=None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        return args.fn(args)
    except (ConfigError, FileNotFoundError, KeyError, ValueError) as exc:
        print(f"configuration error: {exc}", file=sys.stderr)
        return 2
    except (np.linalg.LinAlgError, FloatingPointError, ArithmeticError) as exc:
        print(f"numeric failure: {exc}", file=sys.stderr)
        return 3


if __name__ == "__main__":
    sys.exit(main())
