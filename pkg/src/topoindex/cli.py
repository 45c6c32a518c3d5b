"""Command-line front end: invariant computation and equivalence audits.

Every report is canonical JSON with sorted keys; integer invariants are
accompanied by their adequacy evidence (residues, deviations, branch
checks).  Validation failures exit 2, numerical-adequacy failures exit 3.
"""

from __future__ import annotations

import argparse
import json
import sys
import time
from dataclasses import dataclass, field

import numpy as np

from . import berry, ktable, nctorus, spectral, windex, z2
from .errors import AdequacyError, InvalidParams, TopoIndexError, ValidationError
from .model import MomentumGrid, builtin, check_trs, load_model, ribbonize

REPORT_VERSION = 1


@dataclass
class RunReport:
    command: list[str]
    model: dict | None = None
    grid: list[int] | None = None
    invariants: dict = field(default_factory=dict)
    checks: list = field(default_factory=list)
    wall_time_s: float = 0.0
    csv: str | None = None  # plot-ready payload for --out csv

    def to_json(self, include_timing: bool = True) -> str:
        doc = {
            "report_version": REPORT_VERSION,
            "command": self.command,
            "model": self.model,
            "grid": self.grid,
            "invariants": self.invariants,
            "checks": self.checks,
        }
        if include_timing:
            doc["wall_time_s"] = self.wall_time_s
        return json.dumps(doc, sort_keys=True)


def _parse_params(pairs: list[str], extras: list[str]) -> dict:
    params: dict = {}
    for chunk in pairs:
        for item in chunk.split(","):
            if not item:
                continue
            if "=" not in item:
                raise InvalidParams(f"--params entries must be key=value, got {item!r}")
            k, v = item.split("=", 1)
            params[k.strip()] = float(v)
    i = 0
    while i < len(extras):
        tok = extras[i]
        if not tok.startswith("--"):
            raise InvalidParams(f"unrecognized argument {tok!r}")
        key = tok[2:].replace("-", "_")
        if i + 1 >= len(extras):
            raise InvalidParams(f"flag {tok} needs a value")
        params[key] = float(extras[i + 1])
        i += 2
    return params


def _build_model(args, params):
    if args.config:
        with open(args.config) as fh:
            doc = json.load(fh)
        for k, v in params.items():
            doc[k] = v
        return load_model(doc)
    if not args.model:
        raise InvalidParams("need --model NAME or --config FILE")
    return builtin(args.model, **params)


def _grid_from_arg(arg: str | None, dim: int) -> MomentumGrid:
    if arg is None:
        return MomentumGrid(tuple([12] * dim))
    sizes = tuple(int(x) for x in arg.split(","))
    if len(sizes) == 1:
        sizes = sizes * dim
    return MomentumGrid(sizes)


def _model_descriptor(model) -> dict:
    return {"name": model.name,
            "params": {k: float(v) for k, v in sorted(model.params.items())},
            "bands": model.bands, "occupied": model.occupied, "dim": model.dim}


def _sewing_checks(field_obj) -> list:
    return [
        {"name": "sewing_unitarity", "deviation": field_obj.unitarity_deviation,
         "pass": field_obj.unitarity_deviation <= 1e-8},
        {"name": "sewing_negation_relation", "deviation": field_obj.relation_deviation,
         "pass": field_obj.relation_deviation <= 1e-8},
        {"name": "sewing_trim_skewness", "deviation": field_obj.trim_skew_deviation,
         "pass": field_obj.trim_skew_deviation <= 1e-8},
    ]


def _trs_check(model, grid) -> dict:
    rep = check_trs(model, grid)
    return {"name": "time_reversal_symmetry", "deviation": rep.max_deviation,
            "pass": rep.passed}


def _cmd_chern(args, params, report):
    model = _build_model(args, params)
    grid = _grid_from_arg(args.grid, 2)
    report.model = _model_descriptor(model)
    report.grid = list(grid.sizes)
    frame = berry.occupied_frame(model, grid)
    curvature = berry.berry_curvature_field(frame)
    total = float(np.sum(curvature.values)) / (2.0 * np.pi)
    c1 = int(np.rint(total))
    report.invariants = {"c1": c1, "plaquette_sum_residue": abs(total - c1),
                         "max_plaquette_phase": float(np.max(np.abs(curvature.values)))}
    report.csv = curvature.to_csv()
    return report


def _cmd_z2(args, params, report):
    model = _build_model(args, params)
    grid = _grid_from_arg(args.grid, 2)
    report.model = _model_descriptor(model)
    report.grid = list(grid.sizes)
    sf = z2.sewing_field(model, grid)
    nu = z2.kane_mele_nu(sf)
    flow = z2.wannier_center_flow(model, grid)
    report.invariants = {"nu": nu, "wannier_verdict": flow.verdict,
                         "wannier_crossings": flow.crossings,
                         "oracles_agree": bool(nu == flow.verdict)}
    report.checks = [_trs_check(model, grid)] + _sewing_checks(sf)
    report.csv = flow.to_csv()
    return report


def _cmd_z2_3d(args, params, report):
    model = _build_model(args, params)
    grid = _grid_from_arg(args.grid, 3)
    report.model = _model_descriptor(model)
    report.grid = list(grid.sizes)
    idx = z2.strong_and_weak_indices_3d(model, grid)
    sf = z2.sewing_field(model, grid)
    report.invariants = {"nu0": idx.strong, "weak": list(idx.weak)}
    report.checks = [_trs_check(model, grid)] + _sewing_checks(sf)
    return report


def _cmd_cs_index(args, params, report):
    model = _build_model(args, params)
    grid = _grid_from_arg(args.grid, 3)
    report.model = _model_descriptor(model)
    report.grid = list(grid.sizes)
    sf = z2.smooth_sewing_field(model, grid)
    fieldv = windex.UnitaryField(grid, sf.w)
    res = windex.winding3d(fieldv)
    nu = z2.kane_mele_nu(z2.sewing_field(model, grid))
    report.invariants = {
        "winding": res.value, "rounded": res.rounded, "residue": res.residue,
        "nu": nu, "parity_matches_nu": bool((-1) ** res.rounded == nu),
    }
    report.checks = _sewing_checks(sf)
    return report


def _cmd_boundary_index(args, params, report):
    model = _build_model(args, params)
    grid = _grid_from_arg(args.grid, 2)
    report.model = _model_descriptor(model)
    report.grid = list(grid.sizes)
    sf = z2.sewing_field(model, grid)
    report.invariants = {"boundary_index": windex.boundary_index_2d(sf)}
    report.checks = _sewing_checks(sf)
    return report


def _cmd_edge_parity(args, params, report):
    model = _build_model(args, params)
    width = int(params.pop("width", 24))
    report.model = _model_descriptor(model)
    ribbon = ribbonize(model, open_axis=0, width=width)
    parity = spectral.edge_crossing_parity(ribbon)
    report.invariants = {"edge_parity": parity, "ribbon_width": width}
    report.csv = spectral.ribbon_spectrum_csv(ribbon)
    return report


def _cmd_spectral_flow(args, params, report):
    if not args.config:
        raise InvalidParams("spectral-flow needs --config FILE with Hermitian samples")
    with open(args.config) as fh:
        doc = json.load(fh)
    samples = [np.array([[complex(re, im) for re, im in row] for row in s])
               for s in doc["samples"]]
    path = spectral.SpectralPath(
        ts=np.linspace(0.0, 1.0, len(samples)), samples=samples,
        closed=bool(doc.get("closed", False)))
    level = float(doc.get("level", 0.0))
    report.invariants = {"spectral_flow": spectral.spectral_flow(path, level),
                         "level": level, "samples": len(samples)}
    return report


def _cmd_kgroup(args, params, report):
    """Degrees are given as superscripts: --kq -1 means KQ^{-1}."""
    space = args.space or "torus"
    dim = int(args.dim or 0)
    if args.kq is not None:
        expr = ktable.kq(args.kq, space, dim)
        label = f"KQ^{{{args.kq}}}({_space_label(space, dim)})"
    elif args.kr is not None:
        makers = {"torus": ktable.kr_torus, "sphere": ktable.kr_sphere,
                  "pt": lambda j, d: ktable.ko_point(j)}
        expr = makers[space](-args.kr, dim)
        label = f"KR^{{{args.kr}}}({_space_label(space, dim)})"
    else:
        expr = ktable.ko_point(-(args.ko or 0))
        label = f"KO^{{{args.ko or 0}}}(pt)"
    report.invariants = {"group": expr.to_json(), "pretty": f"{label} = {expr}"}
    return report


def _space_label(space: str, dim: int) -> str:
    if space == "pt":
        return "pt"
    if space == "torus":
        return f"T^{dim}"
    return f"S^{{1,{dim}}}"


def _cmd_nc_index(args, params, report):
    cutoff = int(params.pop("cutoff", 64))
    if "winding" in params:
        wdg = int(params.pop("winding"))
        co = nctorus.winding_loop_coeffs(wdg)
        ti = nctorus.toeplitz_index(co, cutoff)
        pr = nctorus.nc_index_pairing_1d(co, cutoff)
        report.invariants = {"toeplitz_index": ti, "pairing": pr.to_json(),
                             "agree": bool(ti == pr.rounded)}
        return report
    mass = float(params.pop("mass", -2.0))
    co = nctorus.lattice_degree_one_coeffs(mass)
    pr = nctorus.nc_index_pairing_3d(co, min(cutoff, 8), residue_tol=1.0)
    report.invariants = {"pairing_3d": pr.to_json()}
    return report


def _sweep_values(spec: str):
    name, rng = spec.split("=", 1)
    a, b, n = rng.split(":")
    return name, np.linspace(float(a), float(b), int(n))


def _cmd_audit(args, params, report):
    width = int(params.pop("width", 24))
    sweep = [(None, None)]
    if args.sweep:
        name, values = _sweep_values(args.sweep)
        sweep = [(name, float(v)) for v in values]
    points = []
    all_ok = True
    for name, value in sweep:
        pt_params = dict(params)
        if name is not None:
            pt_params[name] = value
        model = _build_model(args, pt_params)
        grid = _grid_from_arg(args.grid, model.dim)
        entry: dict = {"params": {k: float(v) for k, v in sorted(pt_params.items())}}
        try:
            sf = z2.sewing_field(model, grid)
            nu = z2.kane_mele_nu(sf)
            entry["nu"] = nu
            if model.dim == 2:
                flow = z2.wannier_center_flow(model, grid)
                boundary = windex.boundary_index_2d(sf)
                parity = spectral.edge_crossing_parity(ribbonize(model, 0, width))
                entry.update({
                    "wannier_verdict": flow.verdict,
                    "boundary_index": boundary,
                    "edge_parity": parity,
                    "agree": bool(nu == flow.verdict == boundary
                                  and (parity == 1) == (nu == -1)),
                })
            else:
                ssf = z2.smooth_sewing_field(model, grid)
                res = windex.winding3d(windex.UnitaryField(grid, ssf.w))
                entry.update({
                    "winding": res.value, "winding_residue": res.residue,
                    "agree": bool((-1) ** res.rounded == nu),
                })
            all_ok = all_ok and entry["agree"]
        except AdequacyError as exc:
            entry["skipped"] = str(exc)
        points.append(entry)
    report.model = {"name": args.model or args.config}
    report.grid = None if not points else report.grid
    report.invariants = {"points": points, "all_agree": all_ok}
    if not all_ok:
        raise AdequacyError("audit found disagreeing invariants")
    return report


_COMMANDS = {
    "chern": (_cmd_chern, "lattice Chern number of the occupied bundle"),
    "z2": (_cmd_z2, "Kane-Mele invariant with the Wannier-flow oracle"),
    "z2-3d": (_cmd_z2_3d, "strong and weak 3D invariants"),
    "cs-index": (_cmd_cs_index, "3D winding of the sewing field"),
    "boundary-index": (_cmd_boundary_index, "2D boundary-circle product index"),
    "spectral-flow": (_cmd_spectral_flow, "spectral flow of a sampled path"),
    "edge-parity": (_cmd_edge_parity, "ribbon edge-crossing parity"),
    "kgroup": (_cmd_kgroup, "KO/KR/KQ group calculator"),
    "nc-index": (_cmd_nc_index, "noncommutative index pairings"),
    "audit": (_cmd_audit, "cross-check the invariant equivalences"),
}


def _build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="topoindex", allow_abbrev=False,
        description="Topological invariants of time-reversal-invariant insulators.")
    sub = parser.add_subparsers(dest="subcommand", required=True)
    for name, (_, help_text) in _COMMANDS.items():
        p = sub.add_parser(name, help=help_text, allow_abbrev=False)
        p.add_argument("--model", help="builtin model name")
        p.add_argument("--config", help="JSON model or input file")
        p.add_argument("--grid", help="grid size N or N,N[,N]")
        p.add_argument("--params", action="append", default=[],
                       help="model parameters key=value[,key=value...]")
        p.add_argument("--out", choices=("json", "csv"), default="json")
        p.add_argument("--sweep", help="parameter sweep name=a:b:n")
        if name == "kgroup":
            p.add_argument("--kq", type=int)
            p.add_argument("--kr", type=int)
            p.add_argument("--ko", type=int)
            p.add_argument("--space", choices=("pt", "torus", "sphere"))
            p.add_argument("--dim", type=int)
    return parser


def run(argv: list[str]) -> tuple[int, RunReport]:
    """Execute one CLI invocation; returns (exit code, report)."""
    parser = _build_parser()
    args, extras = parser.parse_known_args(argv)
    report = RunReport(command=list(argv))
    start = time.time()
    try:
        params = _parse_params(args.params, extras)
        handler = _COMMANDS[args.subcommand][0]
        report = handler(args, params, report)
        report.command = list(argv)
        code = 0
    except ValidationError as exc:
        report.invariants = {"error": {"type": type(exc).__name__, "message": str(exc)}}
        code = 2
    except AdequacyError as exc:
        report.invariants.setdefault(
            "error", {"type": type(exc).__name__, "message": str(exc)})
        code = 3
    report.wall_time_s = time.time() - start
    return code, report


def main(argv: list[str] | None = None) -> int:
    argv = sys.argv[1:] if argv is None else argv
    code, report = run(argv)
    if code == 0 and "--out" in argv:
        want = argv[argv.index("--out") + 1] if argv.index("--out") + 1 < len(argv) else "json"
        if want == "csv" and report.csv is not None:
            sys.stdout.write(report.csv)
            return code
    print(report.to_json())
    return code


if __name__ == "__main__":
    sys.exit(main())
