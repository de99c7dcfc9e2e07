"""Command-line front end: binds JSON descriptors to the module operations
and writes JSON reports (plus CSV for plottable tables).

Subcommands: check-kernel, spectrum, sqfn, weights, carleson, paraproduct,
sweep, prop3.  Exit codes: 0 success, 2 configuration error, 1 numerical
flags under --strict.  Identical configs and seeds produce byte-identical
reports when --deterministic suppresses the timestamp.
"""

from __future__ import annotations

import argparse
import json
import math
import sys
from pathlib import Path

import numpy as np

from . import __version__
from ._util import utc_stamp, write_report
from .grid import GridSpec, TimeGrid, default_grid, default_timegrid, lp_norm
from .kernels import Kernel, PoissonWindow, kernel_from_descriptor
from .weights import (
    Cube,
    CubeFamily,
    PowerWeight,
    ap_characteristic,
    ap_refinement_trend,
    weight_from_descriptor,
)
from .conditions import ClassifyParams, classify, seminorm_report
from .fourier_checks import check_14, decay_profile, lemma1_check, prop3_identity
from .operators import DilationBank, LeakageError, square_function
from .carleson import CarlesonExperiment, carleson_ratio, export_cube_table, paraproduct_duality
from .harness import TestFamily, make_function, norm_ratio_sweep


class ConfigError(Exception):
    pass


def _parse_json_arg(text: str, what: str) -> dict:
    try:
        return json.loads(text)
    except json.JSONDecodeError as e:
        raise ConfigError(
            f"malformed JSON for {what} at line {e.lineno}, column {e.colno}: {e.msg}"
        ) from e


def _grid_from_args(args) -> GridSpec:
    if args.grid:
        d = _parse_json_arg(args.grid, "--grid")
        return GridSpec(int(d.get("dim", 1)), float(d.get("R", 16.0)), int(d.get("N", 4096)))
    return default_grid(1)


def _timegrid_from_args(args) -> TimeGrid:
    if args.timegrid:
        d = _parse_json_arg(args.timegrid, "--timegrid")
        return TimeGrid(int(d["k_min"]), int(d["k_max"]), int(d.get("substeps", 8)))
    return default_timegrid()


def _kernel_from_args(args) -> Kernel:
    d = _parse_json_arg(args.kernel, "--kernel")
    if isinstance(d, str):
        d = {"type": d}
    try:
        return kernel_from_descriptor(d)
    except (KeyError, ValueError) as e:
        raise ConfigError(f"bad kernel descriptor: {e}") from e


def _finish(report: dict, args, flags: list) -> int:
    report["version"] = __version__
    if not args.deterministic:
        report["timestamp"] = utc_stamp()
    report["flags"] = sorted(flags)
    out = Path(args.out)
    out.parent.mkdir(parents=True, exist_ok=True)
    write_report(out, report)
    print(f"wrote {out}" + (f" (flags: {', '.join(sorted(flags))})" if flags else ""))
    if flags and args.strict:
        return 1
    return 0


def _cmd_check_kernel(args) -> int:
    kernel = _kernel_from_args(args)
    rep = seminorm_report(
        kernel,
        eps=args.eps,
        u=args.u,
        q=args.q,
        xi_samples=args.xi_samples,
        mc_samples=args.mc_samples,
        seed=args.seed,
        include_pair_seminorms=not args.skip_pair,
    )
    cls = classify(kernel, ClassifyParams())
    flags = []
    for name, v in (("B", rep.B_eps), ("D", rep.D_u), ("J", rep.J_eps), ("L", rep.L)):
        if v.diverged:
            flags.append(f"{name}_diverged")
    report = {
        "command": "check-kernel",
        "settings": rep.settings,
        "results": {"seminorms": rep.to_dict(), "classification": cls.to_dict()},
    }
    return _finish(report, args, flags)


def _cmd_spectrum(args) -> int:
    kernel = _kernel_from_args(args)
    prof = decay_profile(kernel, t_substeps=args.t_substeps)
    c14 = check_14(kernel, args.eps)
    lem = lemma1_check(kernel, min(args.eps, 1.0))
    flags = [] if c14["holds"] else ["condition_14_failed"]
    if args.csv:
        prof.export_csv(args.csv)
    report = {
        "command": "spectrum",
        "settings": {"kernel": kernel.descriptor(), "eps": args.eps,
                     "t_substeps": args.t_substeps},
        "results": {
            "check_14": c14,
            "small_frequency_bound": lem,
            "profile_radii": prof.radii.tolist(),
            "profile": prof.table.tolist(),
        },
    }
    return _finish(report, args, flags)


def _cmd_sqfn(args) -> int:
    kernel = _kernel_from_args(args)
    spec = _grid_from_args(args)
    tg = _timegrid_from_args(args)
    fdesc = _parse_json_arg(args.f, "--f")
    f = make_function(fdesc, spec)
    try:
        res = square_function(kernel, f, tg, leakage_bound=args.leakage_bound)
    except LeakageError as e:
        raise ConfigError(str(e)) from e
    wobj = weight_from_descriptor(_parse_json_arg(args.weight, "--weight"), spec.dim) if args.weight else None
    ratio = lp_norm(res.values, args.p, wobj) / lp_norm(f, args.p, wobj)
    flags = ["tail_unresolved"] if res.tail_flag else []
    if args.csv:
        res.export_csv(args.csv)
    report = {
        "command": "sqfn",
        "settings": {
            "kernel": kernel.descriptor(),
            "f": fdesc,
            "p": args.p,
            "weight": wobj.descriptor() if wobj else None,
            "grid": {"dim": spec.dim, "R": spec.halfwidth, "N": spec.samples_per_axis},
            "timegrid": tg.to_dict(),
        },
        "results": {
            "ratio": ratio,
            "tail_estimate": res.tail_estimate,
            "leakage": res.leakage,
        },
    }
    return _finish(report, args, flags)


def _cmd_weights(args) -> int:
    spec = _grid_from_args(args)
    wdesc = _parse_json_arg(args.weight, "--weight")
    w = weight_from_descriptor(wdesc, spec.dim)
    cubes = CubeFamily.dyadic(spec.dim, spec.halfwidth, args.j_min, args.j_max)
    char = ap_characteristic(w, args.p, cubes)
    trend = None
    if isinstance(w, PowerWeight):
        cube = Cube((0.0,) * spec.dim, 2.0 * spec.halfwidth / 2**args.j_min)
        trend = ap_refinement_trend(w, args.p, cube, args.levels)
    flags = ["characteristic_divergent"] if math.isinf(char) else []
    report = {
        "command": "weights",
        "settings": {"weight": wdesc, "p": args.p,
                     "cubes": {"j_min": args.j_min, "j_max": args.j_max},
                     "levels": args.levels},
        "results": {"ap_characteristic": None if math.isinf(char) else char,
                    "refinement_trend": trend},
    }
    return _finish(report, args, flags)


def _cmd_carleson(args) -> int:
    kernel = _kernel_from_args(args)
    spec = _grid_from_args(args)
    tg = _timegrid_from_args(args)
    b = make_function(_parse_json_arg(args.b, "--b"), spec)
    w = weight_from_descriptor(_parse_json_arg(args.weight, "--weight"), spec.dim) if args.weight else None
    cubes = CubeFamily.dyadic(spec.dim, spec.halfwidth, args.j_min, args.j_max)
    try:
        res = carleson_ratio(CarlesonExperiment(kernel, b, w, cubes, tg))
    except (ValueError, LeakageError) as e:
        raise ConfigError(str(e)) from e
    if args.csv:
        export_cube_table(res["per_cube"], args.csv)
    flags = []
    if res["size_bound_ok"] is False:
        flags.append("kernel_size_bound_violated")
    if not math.isfinite(res["sliver_estimate"]):
        flags.append("sliver_unresolved")
    report = {
        "command": "carleson",
        "settings": res["settings"],
        "results": {k: v for k, v in res.items() if k != "settings"},
    }
    return _finish(report, args, flags)


def _cmd_paraproduct(args) -> int:
    spec = _grid_from_args(args)
    tg = _timegrid_from_args(args)
    eta = kernel_from_descriptor(_parse_json_arg(args.eta, "--eta"))
    psi = kernel_from_descriptor(_parse_json_arg(args.psi, "--psi"))
    phi = PoissonWindow(spec.dim) if args.phi is None else kernel_from_descriptor(
        _parse_json_arg(args.phi, "--phi")
    )
    if not args.u < args.v:
        raise ConfigError(f"need truncation u < v, got u={args.u}, v={args.v}")
    b = make_function(_parse_json_arg(args.b, "--b"), spec)
    f = make_function(_parse_json_arg(args.f, "--f"), spec)
    g = make_function(_parse_json_arg(args.g, "--g"), spec)
    res = paraproduct_duality(eta, psi, phi, b, f, g, tg, args.u, args.v)
    flags = ["duality_gap_large"] if res["rel_gap"] > 1e-8 else []
    report = {
        "command": "paraproduct",
        "settings": {
            "eta": eta.descriptor(), "psi": psi.descriptor(), "phi": phi.descriptor(),
            "u": args.u, "v": args.v, "timegrid": tg.to_dict(),
        },
        "results": {
            "pairing_lhs": [res["lhs"].real, res["lhs"].imag],
            "pairing_rhs": [res["rhs"].real, res["rhs"].imag],
            "abs_gap": res["abs_gap"],
            "rel_gap": res["rel_gap"],
            "nodes_used": res["nodes_used"],
        },
    }
    return _finish(report, args, flags)


def _cmd_sweep(args) -> int:
    spec = _grid_from_args(args)
    tg = _timegrid_from_args(args)
    opdesc = _parse_json_arg(args.op, "--op")
    fam = TestFamily(
        kind=args.family,
        count=args.count,
        seed=args.seed,
        band=tuple(_parse_json_arg(args.band, "--band")) if args.band else (0.5, 2.0),
    )
    w = weight_from_descriptor(_parse_json_arg(args.weight, "--weight"), spec.dim) if args.weight else None

    name = opdesc.get("name")
    if name == "identity":
        op = lambda f: f
        certified = True
    elif name == "square_function":
        kernel = kernel_from_descriptor(opdesc["kernel"])
        bank = DilationBank.build(kernel, tg, spec)
        op = lambda f: square_function(kernel, f, tg, bank=bank).values
        certified = _certify(kernel, args.p, w)
    elif name == "marcinkiewicz":
        from .operators import marcinkiewicz_1d

        op = lambda f: marcinkiewicz_1d(f, tg)
        certified = _certify(None, args.p, w)
    else:
        raise ConfigError(f"unknown operator spec name {name!r}")

    rep = norm_ratio_sweep(
        op, fam, spec, args.p, w,
        refine_steps=args.refine_steps, certified=certified,
        op_name=name,
    )
    if args.csv:
        rep.export_csv(args.csv)
    flags = list(rep.flags)
    if certified is False:
        flags.append("pw_pair_uncertified")
    report = {"command": "sweep", "settings": rep.settings,
              "results": rep.to_dict()}
    return _finish(report, args, flags)


def _certify(kernel, p: float, w) -> bool | None:
    """Admissibility of (p, w): full-range route plus the closed-form power
    weight classification; None when undecidable."""
    from .weights import Constant, power_weight_in_ap

    if w is None or isinstance(w, Constant):
        w_ok = True
    elif isinstance(w, PowerWeight):
        w_ok = power_weight_in_ap(w.a, p, w.dim)
    else:
        return None
    if kernel is None:
        return w_ok and p > 1
    cls = classify(kernel, ClassifyParams())
    route = cls.routes["full_range"]["applicable"] or cls.routes["rough_homogeneous"]["applicable"]
    return bool(route and w_ok and p > 1)


def _cmd_prop3(args) -> int:
    kernel = _kernel_from_args(args)
    xi = np.asarray(_parse_json_arg(args.xi, "--xi"), dtype=float) if args.xi else np.ones(kernel.dim)
    res = prop3_identity(kernel, xi, mc_samples=args.mc_samples, seed=args.seed)
    flags = ["tail_unresolved"] if res["tail_flag"] else []
    report = {"command": "prop3", "settings": res["settings"],
              "results": {k: v for k, v in res.items() if k != "settings"}}
    return _finish(report, args, flags)


def build_parser() -> argparse.ArgumentParser:
    ap = argparse.ArgumentParser(
        prog="lpsquare",
        description="square-function toolkit: kernel certification, spectral "
        "diagnostics, weighted operator sweeps, Carleson experiments",
    )
    ap.add_argument("--version", action="version", version=f"%(prog)s {__version__}")
    sub = ap.add_subparsers(dest="command")

    def common(p):
        p.add_argument("--out", default="report.json", help="output JSON path")
        p.add_argument("--strict", action="store_true",
                       help="exit 1 when numerical flags are raised")
        p.add_argument("--deterministic", action="store_true",
                       help="omit timestamps for byte-identical reports")
        p.add_argument("--seed", type=int, default=0)
        p.add_argument("--grid", default=None, help='JSON {"dim":1,"R":16,"N":4096}')
        p.add_argument("--timegrid", default=None, help='JSON {"k_min":-8,"k_max":3,"substeps":8}')

    p = sub.add_parser("check-kernel", help="seminorms and hypothesis classification")
    common(p)
    p.add_argument("--kernel", required=True, help='JSON, e.g. {"type":"haar"}')
    p.add_argument("--eps", type=float, default=0.5)
    p.add_argument("--u", type=float, default=2.0)
    p.add_argument("--q", type=float, default=2.0)
    p.add_argument("--xi-samples", type=int, default=16)
    p.add_argument("--mc-samples", type=int, default=100_000)
    p.add_argument("--skip-pair", action="store_true", help="skip the MC pair seminorms")
    p.set_defaults(func=_cmd_check_kernel)

    p = sub.add_parser("spectrum", help="decay profile and averaged-decay check")
    common(p)
    p.add_argument("--kernel", required=True)
    p.add_argument("--eps", type=float, default=0.5)
    p.add_argument("--t-substeps", type=int, default=64)
    p.add_argument("--csv", default=None, help="profile table CSV path")
    p.set_defaults(func=_cmd_spectrum)

    p = sub.add_parser("sqfn", help="square function on one input")
    common(p)
    p.add_argument("--kernel", required=True)
    p.add_argument("--f", required=True, help='JSON, e.g. {"type":"gaussian"}')
    p.add_argument("--p", type=float, default=2.0)
    p.add_argument("--weight", default=None, help='JSON, e.g. {"type":"power","a":0.5}')
    p.add_argument("--leakage-bound", type=float, default=0.5)
    p.add_argument("--csv", default=None, help="CSV of (x, S(f)(x))")
    p.set_defaults(func=_cmd_sqfn)

    p = sub.add_parser("weights", help="A_p characteristic and refinement trend")
    common(p)
    p.add_argument("--weight", required=True)
    p.add_argument("--p", type=float, default=2.0)
    p.add_argument("--j-min", type=int, default=0)
    p.add_argument("--j-max", type=int, default=6)
    p.add_argument("--levels", type=int, default=16)
    p.set_defaults(func=_cmd_weights)

    p = sub.add_parser("carleson", help="Carleson box ratios over a cube family")
    common(p)
    p.add_argument("--kernel", required=True)
    p.add_argument("--b", required=True, help='JSON, e.g. {"type":"log_abs"}')
    p.add_argument("--weight", default=None)
    p.add_argument("--j-min", type=int, default=5)
    p.add_argument("--j-max", type=int, default=7)
    p.add_argument("--csv", default=None, help="per-cube CSV path")
    p.set_defaults(func=_cmd_carleson)

    p = sub.add_parser("paraproduct", help="truncated paraproduct duality pairing")
    common(p)
    p.add_argument("--eta", required=True)
    p.add_argument("--psi", required=True)
    p.add_argument("--phi", default=None, help="defaults to the mass-one smoothing window")
    p.add_argument("--b", required=True)
    p.add_argument("--f", required=True)
    p.add_argument("--g", required=True)
    p.add_argument("--u", type=float, default=2.0**-5)
    p.add_argument("--v", type=float, default=2.0)
    p.set_defaults(func=_cmd_paraproduct)

    p = sub.add_parser("sweep", help="operator-norm ratio sweep over a family")
    common(p)
    p.add_argument("--op", required=True,
                   help='JSON, e.g. {"name":"square_function","kernel":{"type":"poisson","n":1}}')
    p.add_argument("--family", default="trig",
                   choices=["gaussian", "modulated", "trig", "step"])
    p.add_argument("--count", type=int, default=50)
    p.add_argument("--band", default=None, help="JSON [lo, hi]")
    p.add_argument("--p", type=float, default=2.0)
    p.add_argument("--weight", default=None)
    p.add_argument("--refine-steps", type=int, default=0)
    p.add_argument("--csv", default=None, help="per-function ratio CSV")
    p.set_defaults(func=_cmd_sweep)

    p = sub.add_parser("prop3", help="dilation-energy vs pair-integral identity")
    common(p)
    p.add_argument("--kernel", required=True)
    p.add_argument("--xi", default=None, help="JSON unit vector, e.g. [1.0]")
    p.add_argument("--mc-samples", type=int, default=1_000_000)
    p.set_defaults(func=_cmd_prop3)

    return ap


def dispatch(argv=None) -> int:
    ap = build_parser()
    args = ap.parse_args(argv)
    if not getattr(args, "command", None):
        ap.print_usage()
        return 2
    try:
        return args.func(args)
    except ConfigError as e:
        print(f"config error: {e}", file=sys.stderr)
        return 2


def main() -> None:
    sys.exit(dispatch())
