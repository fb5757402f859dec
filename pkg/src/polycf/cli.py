"""Command-line front end.

Subcommands::

    polycf approximate SPEC.json [--order K ...] [--meet-index I]
    polycf oracle (--solid NAME [--edge A] | --vertices FILE) [--depth N]
    polycf transform CF.json [--qmax Q --qpoints N]
    polycf validate (--solid NAME | --vertices FILE) [--spec SPEC.json] [--order K ...]

Every command writes JSON/CSV artifacts to ``--out-dir`` and a
``report.json``.  Failures exit nonzero with a JSON error report on stderr
(and in ``error.json``).  Tolerances for ``validate`` come from the
defaults, then ``POLYCF_TOL_<NAME>`` environment variables, then
``--tolerance NAME=VALUE`` flags.
"""

from __future__ import annotations

import argparse
import json
import math
import os
import sys
import time
from dataclasses import asdict, dataclass, field
from pathlib import Path

import numpy as np

from . import io
from .approximator import CldSpec, PiecewiseCf, SpecError, approximate_cf, scale_spec
from .scattering import default_q_grid, intensity, porod_curve, sum_rule_integral

DEFAULT_TOLERANCES = {
    "max_error": 0.03,       # max |gamma_approx - gamma_oracle|
    "continuity": 1e-8,      # value and slope jumps at breakpoints
    "sum_rule": 1e-3,        # |I(0) - V| / V
    "porod": 0.05,           # |plateau / (2 pi S / V) - 1|
}
ENV_PREFIX = "POLYCF_TOL_"

EXIT_OK, EXIT_FAILURE, EXIT_INPUT, EXIT_TOLERANCE = 0, 1, 2, 3


@dataclass
class RunConfig:
    command: str
    inputs: list = field(default_factory=list)
    orders: list | None = None
    meet_index: int | None = None
    side: str | None = None
    qmax: float | None = None
    qpoints: int = 400
    out_dir: str = "."
    tolerances: dict = field(default_factory=lambda: dict(DEFAULT_TOLERANCES))
    seed: int = 0
    solid: str | None = None
    edge: float = 1.0
    vertices: str | None = None
    depth: int = 3
    points: int = 201
    mc_samples: int = 0
    porod_window: tuple | None = None

    def __post_init__(self):
        if self.orders is not None and any(k < 0 for k in self.orders):
            raise ValueError("orders must be non-negative")
        for p in self.inputs:
            if not Path(p).exists():
                raise FileNotFoundError(f"input file not found: {p}")
        if self.vertices is not None and not Path(self.vertices).exists():
            raise FileNotFoundError(f"vertex file not found: {self.vertices}")


# --------------------------------------------------------------------------
# length normalisation
# --------------------------------------------------------------------------

class ScaledCf:
    """A CF computed with D_M = 1, presented in the original length unit."""

    def __init__(self, unit: PiecewiseCf, length: float):
        self.unit, self.length = unit, float(length)
        self.breakpoints = unit.breakpoints * self.length
        self.diameter = float(self.breakpoints[-1])

    def __call__(self, r):
        return self.unit(np.asarray(r, dtype=float) / self.length)

    def derivative(self, r):
        return self.unit.derivative(np.asarray(r, dtype=float) / self.length) / self.length

    def second_derivative(self, r):
        return self.unit.second_derivative(np.asarray(r, dtype=float) / self.length) / self.length ** 2

    def interpolant(self, r):
        return self.unit.interpolant(np.asarray(r, dtype=float) / self.length) / self.length ** 2

    def continuity_residuals(self):
        L = self.length
        return [(d * L, dv, ds / L) for d, dv, ds in self.unit.continuity_residuals()]


def approximate_normalised(spec: CldSpec, orders=None, meet_index=None, side=None) -> ScaledCf:
    D = spec.diameter
    unit = approximate_cf(scale_spec(spec, 1 / D), orders, meet_index, side)
    return ScaledCf(unit, float(D))


def cf_document(cf: ScaledCf) -> dict:
    doc = io.cf_to_dict(cf.unit)
    doc["length_scale"] = cf.length
    return doc


def cf_from_document(doc: dict) -> ScaledCf:
    return ScaledCf(io.cf_from_dict(doc), doc.get("length_scale", 1.0))


# --------------------------------------------------------------------------
# helpers
# --------------------------------------------------------------------------

def _out(cfg: RunConfig) -> Path:
    p = Path(cfg.out_dir)
    p.mkdir(parents=True, exist_ok=True)
    return p


def _grid(cf: ScaledCf, n: int) -> np.ndarray:
    """Uniform grid on [0, D_M] merged with the breakpoints."""
    return np.unique(np.concatenate([np.linspace(0.0, cf.diameter, n), cf.breakpoints]))


def _write_cf_csv(path, cf: ScaledCf, r, extra: dict | None = None, meta: dict | None = None):
    cols = {"r": r, "gamma": cf(r), "gamma_d1": cf.derivative(r), "gamma_d2": cf.second_derivative(r),
            "interpolant": cf.interpolant(r)}
    cols.update(extra or {})
    io.write_csv(path, cols, meta)


def _continuity(cf: ScaledCf) -> dict:
    res = cf.continuity_residuals()
    return {"max_value_jump": max((abs(v) for _, v, _ in res), default=0.0),
            "max_slope_jump": max((abs(s) for _, _, s in res), default=0.0),
            "breakpoints": [{"r": d, "value_jump": v, "slope_jump": s} for d, v, s in res]}


def _polyhedron(cfg: RunConfig):
    from .geometry.polyhedron import build_platonic, load_vertices
    if cfg.vertices:
        return load_vertices(cfg.vertices)
    if cfg.solid:
        return build_platonic(cfg.solid, cfg.edge)
    raise ValueError("give --solid or --vertices")


def _orders(cfg: RunConfig):
    if not cfg.orders:
        return None
    return cfg.orders[0] if len(cfg.orders) == 1 else list(cfg.orders)


def _intensity(cf: ScaledCf, cfg: RunConfig):
    qmax = cfg.qmax if cfg.qmax is not None else 200.0 / cf.diameter
    q = default_q_grid(cf.diameter, cfg.qpoints, qmax * cf.diameter)
    return intensity(cf, q, label="approximation")


def _porod(cf: ScaledCf, volume: float, surface: float, window, n: int = 600) -> dict:
    lo, hi = window
    curve = intensity(cf, np.linspace(lo, hi, n), label="porod window")
    plateau = porod_curve(curve).plateau(lo, hi)
    target = 2 * math.pi * surface / volume
    return {"window": [lo, hi], "plateau": plateau, "target": target, "ratio": plateau / target}


def _sum_rule(cf: ScaledCf, volume: float) -> dict:
    i0 = sum_rule_integral(cf)
    return {"I0": i0, "volume": volume, "relative_deviation": abs(i0 - volume) / volume}


# --------------------------------------------------------------------------
# commands
# --------------------------------------------------------------------------

def cmd_approximate(cfg: RunConfig) -> tuple[int, dict]:
    from .fixtures import sphere_cf
    spec = io.load_cld_spec(cfg.inputs[0])
    cf = approximate_normalised(spec, _orders(cfg), cfg.meet_index, cfg.side)
    out = _out(cfg)
    r = _grid(cf, cfg.points)
    _write_cf_csv(out / "cf.csv", cf, r, meta={"spec": spec.name, "orders": list(cf.unit.orders)})
    io.save_json(cf_document(cf), out / "cf.json")
    io.save_json(io.diagnostics_to_dict(cf.unit.diagnostics), out / "diagnostics.json")
    report = {"command": "approximate", "spec": spec.name, "orders": list(cf.unit.orders),
              "continuity": _continuity(cf), "end_value": cf.unit.diagnostics.end_value,
              "min_value": cf.unit.diagnostics.min_value}
    if spec.name.startswith("sphere"):
        # the sphere CF is known in closed form
        report["max_error_vs_exact"] = float(np.max(np.abs(cf(r) - sphere_cf(r, cf.diameter))))
    return EXIT_OK, report


def cmd_oracle(cfg: RunConfig) -> tuple[int, dict]:
    from .geometry.features import enumerate_breakpoints
    from .geometry.fitting import build_cld_spec
    from .geometry.oracle import cf_oracle, mc_cf
    p = _polyhedron(cfg)
    out = _out(cfg)
    bps = enumerate_breakpoints(p)
    spec = build_cld_spec(p, cfg.depth, bps)
    io.save_cld_spec(spec, out / "spec.json")
    r = np.linspace(0.0, p.diameter, cfg.points)
    s = cf_oracle(p, r)
    io.write_csv(out / "oracle.csv", {"r": s.r, "gamma": s.gamma, "gamma_err": s.gamma_err,
                                      "gamma_d1": s.d1, "gamma_d2": s.d2},
                 {"solid": p.name, "volume": p.volume, "surface": p.surface})
    report = {"command": "oracle", "solid": p.name, "volume": p.volume, "surface": p.surface,
              "diameter": p.diameter, "breakpoints": [float(x) for x in bps]}
    if cfg.mc_samples > 0:
        rs = np.linspace(0.1, 0.9, 5) * p.diameter
        mc = [mc_cf(p, float(x), cfg.mc_samples, cfg.seed + k) for k, x in enumerate(rs)]
        ref = cf_oracle(p, rs).gamma
        io.write_csv(out / "mc.csv", {"r": rs, "mc": [m for m, _ in mc], "mc_se": [e for _, e in mc],
                                      "oracle": ref}, {"seed": cfg.seed, "samples": cfg.mc_samples})
        # binomial error of the oracle value; the sample error vanishes when no pair hits
        n = cfg.mc_samples
        se = np.sqrt(np.maximum(ref * (1 - ref), 1.0 / n) / n)
        report["mc_max_z"] = float(np.max(np.abs(np.array([m for m, _ in mc]) - ref) / se))
    return EXIT_OK, report


def cmd_transform(cfg: RunConfig) -> tuple[int, dict]:
    doc = json.loads(Path(cfg.inputs[0]).read_text())
    cf = cf_from_document(doc)
    L = cf.length
    volume, surface = float(cf.unit.spec.volume) * L ** 3, float(cf.unit.spec.surface) * L ** 2
    curve = _intensity(cf, cfg)
    out = _out(cfg)
    io.write_csv(out / "intensity.csv", {"q": curve.q, "intensity": curve.intensity, "porod": curve.porod},
                 {"volume": volume, "surface": surface, "diameter": cf.diameter})
    report = {"command": "transform", "sum_rule": _sum_rule(cf, volume)}
    if cfg.porod_window:
        report["porod"] = _porod(cf, volume, surface, cfg.porod_window)
    return EXIT_OK, report


def cmd_validate(cfg: RunConfig) -> tuple[int, dict]:
    from .geometry.fitting import build_cld_spec
    from .geometry.oracle import cf_oracle
    p = _polyhedron(cfg)
    spec = io.load_cld_spec(cfg.inputs[0]) if cfg.inputs else build_cld_spec(p, cfg.depth)
    cf = approximate_normalised(spec, _orders(cfg), cfg.meet_index, cfg.side)
    r = np.linspace(0.0, p.diameter, cfg.points)
    ref = cf_oracle(p, r)
    err = cf(r) - ref.gamma
    out = _out(cfg)
    _write_cf_csv(out / "validate.csv", cf, r, {"oracle": ref.gamma, "error": err},
                  {"solid": p.name, "orders": list(cf.unit.orders)})
    edge = p.meta.get("edge", 1.0)
    window = cfg.porod_window or (30.0 / edge, 60.0 / edge)
    report = {"command": "validate", "solid": p.name, "orders": list(cf.unit.orders),
              "max_error": float(np.max(np.abs(err))), "continuity": _continuity(cf),
              "sum_rule": _sum_rule(cf, p.volume), "porod": _porod(cf, p.volume, p.surface, window)}
    tol = cfg.tolerances
    checks = {
        "max_error": report["max_error"] <= tol["max_error"],
        "continuity": max(report["continuity"]["max_value_jump"],
                          report["continuity"]["max_slope_jump"]) <= tol["continuity"],
        "sum_rule": report["sum_rule"]["relative_deviation"] <= tol["sum_rule"],
        "porod": abs(report["porod"]["ratio"] - 1) <= tol["porod"],
    }
    report["tolerances"] = tol
    report["checks"] = checks
    report["passed"] = all(checks.values())
    return (EXIT_OK if report["passed"] else EXIT_TOLERANCE), report


COMMANDS = {"approximate": cmd_approximate, "oracle": cmd_oracle,
            "transform": cmd_transform, "validate": cmd_validate}


# --------------------------------------------------------------------------
# argument handling
# --------------------------------------------------------------------------

def _tolerance_pair(text: str):
    name, sep, value = text.partition("=")
    if not sep:
        raise argparse.ArgumentTypeError(f"expected NAME=VALUE, got {text!r}")
    return name.strip().lower(), float(value)


def _window(text: str):
    lo, _, hi = text.partition(",")
    return float(lo), float(hi)


def resolve_tolerances(flags, environ=None) -> dict:
    environ = os.environ if environ is None else environ
    tol = dict(DEFAULT_TOLERANCES)
    for key, val in environ.items():
        if key.startswith(ENV_PREFIX):
            tol[key[len(ENV_PREFIX):].lower()] = float(val)
    for name, val in flags or []:
        tol[name] = val
    unknown = set(tol) - set(DEFAULT_TOLERANCES)
    if unknown:
        raise ValueError(f"unknown tolerance name(s): {', '.join(sorted(unknown))}")
    return tol


def build_parser() -> argparse.ArgumentParser:
    common = argparse.ArgumentParser(add_help=False)
    common.add_argument("--order", type=int, action="append", dest="orders",
                        help="expansion order K; repeat once per interval or give one for all")
    common.add_argument("--meet-index", type=int, help="breakpoint where the two sweeps meet")
    common.add_argument("--side", choices=("left", "right"), help="force the corrected neighbour")
    common.add_argument("--qmax", type=float, help="largest q (default 200 / D_M)")
    common.add_argument("--qpoints", type=int, default=400)
    common.add_argument("--seed", type=int, default=0)
    common.add_argument("--out-dir", default=".")
    common.add_argument("--tolerance", type=_tolerance_pair, action="append", default=[],
                        metavar="NAME=VALUE")
    common.add_argument("--points", type=int, default=201, help="r samples for CSV output")
    common.add_argument("--porod-window", type=_window, metavar="QMIN,QMAX")

    geo = argparse.ArgumentParser(add_help=False)
    geo.add_argument("--solid", choices=("tetrahedron", "cube", "octahedron"))
    geo.add_argument("--edge", type=float, default=1.0)
    geo.add_argument("--vertices", help="text file with one 'x y z' vertex per line")
    geo.add_argument("--depth", type=int, default=3, help="fitted (a_j, b_j) pairs per endpoint")

    parser = argparse.ArgumentParser(prog="polycf", description=__doc__.splitlines()[0])
    sub = parser.add_subparsers(dest="command", required=True)
    a = sub.add_parser("approximate", parents=[common], help="spec -> CF and diagnostics")
    a.add_argument("spec")
    o = sub.add_parser("oracle", parents=[common, geo], help="polyhedron -> samples and fitted spec")
    o.add_argument("--mc-samples", type=int, default=0, help="Monte Carlo cross-check size")
    t = sub.add_parser("transform", parents=[common], help="CF document -> intensity and Porod CSV")
    t.add_argument("cf")
    v = sub.add_parser("validate", parents=[common, geo], help="approximation vs oracle report")
    v.add_argument("--spec", help="use this spec instead of fitting one from the oracle")
    return parser


def config_from_args(args, environ=None) -> RunConfig:
    inputs = [x for x in (getattr(args, "spec", None), getattr(args, "cf", None)) if x]
    return RunConfig(command=args.command, inputs=inputs, orders=args.orders, meet_index=args.meet_index,
                     side=args.side, qmax=args.qmax, qpoints=args.qpoints, out_dir=args.out_dir,
                     tolerances=resolve_tolerances(args.tolerance, environ), seed=args.seed,
                     solid=getattr(args, "solid", None), edge=getattr(args, "edge", 1.0),
                     vertices=getattr(args, "vertices", None), depth=getattr(args, "depth", 3),
                     points=args.points, mc_samples=getattr(args, "mc_samples", 0),
                     porod_window=args.porod_window)


def _error_report(exc: BaseException) -> dict:
    rep = {"status": "error", "type": type(exc).__name__, "message": str(exc)}
    if isinstance(exc, SpecError) and exc.field:
        rep["field"] = exc.field
    return rep


def run(cfg: RunConfig) -> int:
    t0 = time.perf_counter()
    try:
        code, report = COMMANDS[cfg.command](cfg)
    except (io.SpecFormatError, SpecError, FileNotFoundError, ValueError) as exc:
        return _fail(cfg, exc, EXIT_INPUT)
    except Exception as exc:  # noqa: BLE001 - any pipeline failure becomes a report
        return _fail(cfg, exc, EXIT_FAILURE)
    report["status"] = "ok" if code == EXIT_OK else "tolerance_exceeded"
    report["seconds"] = round(time.perf_counter() - t0, 3)
    report["config"] = asdict(cfg)
    io.save_json(report, _out(cfg) / "report.json")
    print(json.dumps({k: report[k] for k in report if k != "config"}, default=io._json_default))
    return code


def _fail(cfg: RunConfig, exc: BaseException, code: int) -> int:
    rep = _error_report(exc)
    rep["command"] = cfg.command
    try:
        io.save_json(rep, _out(cfg) / "error.json")
    except OSError:
        pass
    print(json.dumps(rep), file=sys.stderr)
    return code


def main(argv=None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        cfg = config_from_args(args)
    except (ValueError, FileNotFoundError) as exc:
        rep = _error_report(exc)
        rep["command"] = args.command
        print(json.dumps(rep), file=sys.stderr)
        return EXIT_INPUT
    return run(cfg)


if __name__ == "__main__":
    sys.exit(main())
