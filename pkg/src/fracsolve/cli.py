"""Command-line driver: ``fracsolve run | verify | op | threshold``.

Exit codes: 0 converged, 1 input error, 2 divergence or no convergence,
3 converged but a hypothesis spot check failed, 4 verification failure.
"""

from __future__ import annotations

import argparse
import json
import math
import sys
import time
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

from .errors import (
    DivergenceError,
    DomainError,
    EvaluationError,
    FracError,
    InputValidationError,
    SingularityError,
)
from .expr import parse_expr
from .operators import (
    GridFn,
    GridPolicy,
    caputo_derivative,
    check_order,
    default_grading,
    make_grid,
    rl_derivative,
    rl_integral,
)
from .thermistor import (
    CaputoSpec,
    RLSpec,
    TSSpec,
    best_weight_rate,
    bound_rl,
    bound_ts,
    caputo_envelope_check,
    caputo_local_radius,
    continuation_window,
    continue_caputo,
    solve_caputo_local,
    solve_rl,
    solve_ts,
    uniqueness_threshold_rl,
    uniqueness_threshold_ts,
)
from .timescale import TimeScale
from .volterra import SolveReport, abel_first_kind_convolution, abel_second_kind

EXIT_OK = 0
EXIT_INPUT = 1
EXIT_DIVERGED = 2
EXIT_HYPOTHESIS = 3
EXIT_VERIFY = 4

REQUIRED = object()

# per kind: field -> default (REQUIRED if mandatory)
KIND_FIELDS = {
    "rl": {"alpha": REQUIRED, "lambda": REQUIRED, "T": 1.0, "N": 1.0, "f": REQUIRED, "h": "0",
           "c1": REQUIRED, "c2": REQUIRED, "Lf": REQUIRED},
    "caputo": {"alpha": REQUIRED, "lambda": REQUIRED, "u0": REQUIRED, "f": REQUIRED, "c1": REQUIRED,
               "c2": REQUIRED, "Lf": REQUIRED, "M": REQUIRED, "omega": 2.0, "b": 1.0, "T": 1.0,
               "continuations": 0},
    "ts": {"alpha": REQUIRED, "lambda": REQUIRED, "f": REQUIRED, "c1": REQUIRED, "c2": REQUIRED,
           "Lf": REQUIRED, "timescale": REQUIRED},
    "abel1": {"alpha": REQUIRED, "T": 1.0, "f": REQUIRED},
    "abel2": {"alpha": REQUIRED, "T": 1.0, "f": REQUIRED, "k": "0"},
    "op": {"apply": REQUIRED, "alpha": REQUIRED, "T": 1.0, "g": REQUIRED},
}

# variables each expression field may mention
EXPR_VARIABLES = {
    ("rl", "f"): ("u",),
    ("rl", "h"): ("t",),
    ("caputo", "f"): ("t", "s", "u"),
    ("ts", "f"): ("u",),
    ("abel1", "f"): ("t",),
    ("abel2", "f"): ("t",),
    ("abel2", "k"): ("t", "s"),
    ("op", "g"): ("t",),
}

OPERATORS = {"Ialpha": rl_integral, "Dalpha": rl_derivative, "Calpha": caputo_derivative}
COMMON = {"kind", "grid", "tol", "max_iter", "out"}


def _number(value, name: str) -> float:
    if isinstance(value, bool) or not isinstance(value, (int, float)):
        raise InputValidationError(f"{name!r} must be a number, got {value!r}")
    if not math.isfinite(value):
        raise InputValidationError(f"{name!r} must be finite")
    return float(value)


def _integer(value, name: str, lo: int) -> int:
    if isinstance(value, bool) or not isinstance(value, int):
        raise InputValidationError(f"{name!r} must be an integer, got {value!r}")
    if value < lo:
        raise InputValidationError(f"{name!r} must be at least {lo}")
    return value


def _expression(kind: str, name: str, src):
    try:
        return parse_expr(src, EXPR_VARIABLES[kind, name])
    except InputValidationError as exc:
        raise InputValidationError(f"field {name!r}: {exc}") from exc


@dataclass
class RunConfig:
    kind: str
    params: dict
    tol: float = 1e-8
    max_iter: int = 200
    grid_n: int = 1024
    grid_gamma: float = 1.0
    csv: str = "u.csv"
    report: str = "report.json"
    base_dir: Path = field(default=Path("."), compare=False)

    @classmethod
    def from_dict(cls, data, base_dir: Path | str = ".") -> RunConfig:
        if not isinstance(data, dict):
            raise InputValidationError("config must be a JSON object")
        kind = data.get("kind")
        if kind not in KIND_FIELDS:
            raise InputValidationError(f"'kind' must be one of {', '.join(KIND_FIELDS)}, got {kind!r}")
        spec = KIND_FIELDS[kind]
        unknown = set(data) - COMMON - set(spec)
        if unknown:
            raise InputValidationError(f"unknown field(s) for kind {kind!r}: {', '.join(sorted(unknown))}")

        params = {}
        for name, default in spec.items():
            if name not in data:
                if default is REQUIRED:
                    raise InputValidationError(f"missing required field {name!r} for kind {kind!r}")
                value = default
            else:
                value = data[name]
            if (kind, name) in EXPR_VARIABLES:
                _expression(kind, name, value)
            elif name == "timescale":
                value = _timescale(value)
            elif name == "apply":
                if value not in OPERATORS:
                    raise InputValidationError(f"'apply' must be one of {', '.join(OPERATORS)}")
            elif name == "continuations":
                value = _integer(value, name, 0)
            else:
                value = _number(value, name)
            params[name] = value

        alpha = params["alpha"]
        grid = data.get("grid", {})
        if not isinstance(grid, dict) or set(grid) - {"n", "gamma"}:
            raise InputValidationError("'grid' must be an object with keys 'n' and 'gamma'")
        order = 2.0 * alpha if kind in ("rl", "caputo", "ts") else alpha
        gamma_default = default_grading(order) if order > 0.0 else 1.0
        out = data.get("out", {})
        if not isinstance(out, dict) or set(out) - {"csv", "report"}:
            raise InputValidationError("'out' must be an object with keys 'csv' and 'report'")
        for key in ("csv", "report"):
            if key in out and not isinstance(out[key], str):
                raise InputValidationError(f"'out.{key}' must be a path string")
        cfg = cls(
            kind=kind,
            params=params,
            tol=_number(data.get("tol", 1e-8), "tol"),
            max_iter=_integer(data.get("max_iter", 200), "max_iter", 1),
            grid_n=_integer(grid.get("n", 1024), "grid.n", 2),
            grid_gamma=_number(grid.get("gamma", gamma_default), "grid.gamma"),
            csv=out.get("csv", "u.csv"),
            report=out.get("report", "report.json"),
            base_dir=Path(base_dir),
        )
        if not cfg.tol > 0.0:
            raise InputValidationError("'tol' must be positive")
        cfg.policy  # validates gamma >= 1
        return cfg

    @classmethod
    def load(cls, path: Path | str) -> RunConfig:
        path = Path(path)
        try:
            text = path.read_text(encoding="utf-8")
        except (OSError, UnicodeDecodeError) as exc:
            raise InputValidationError(f"cannot read {path}: {exc}") from exc
        try:
            data = json.loads(text)
        except json.JSONDecodeError as exc:
            raise InputValidationError(f"{path}: invalid JSON at line {exc.lineno}, column {exc.colno}: {exc.msg}") from exc
        return cls.from_dict(data, path.parent)

    def to_dict(self) -> dict:
        out = {"kind": self.kind}
        out.update(self.params)
        out["grid"] = {"n": self.grid_n, "gamma": self.grid_gamma}
        out["tol"] = self.tol
        out["max_iter"] = self.max_iter
        out["out"] = {"csv": self.csv, "report": self.report}
        return out

    @property
    def policy(self) -> GridPolicy:
        return GridPolicy(self.grid_n, self.grid_gamma)

    def resolve(self, name: str) -> Path:
        return self.base_dir / name

    def expr(self, name: str, *bind):
        return _expression(self.kind, name, self.params[name]).bind(*bind)


def _timescale(value) -> list:
    if not isinstance(value, list) or not all(isinstance(seg, list) and len(seg) == 2 for seg in value):
        raise InputValidationError(f"'timescale' must be a list of [a, b] pairs, got {value!r}")
    segs = [[_number(a, "timescale"), _number(b, "timescale")] for a, b in value]
    TimeScale.from_json(segs)
    return segs


# ---------------------------------------------------------------- running


@dataclass
class Outcome:
    report: dict
    nodes: np.ndarray | None
    values: np.ndarray | None
    exit_code: int


def _json_safe(x):
    if isinstance(x, dict):
        return {k: _json_safe(v) for k, v in x.items()}
    if isinstance(x, (list, tuple)):
        return [_json_safe(v) for v in x]
    if isinstance(x, (bool, np.bool_)):
        return bool(x)
    if isinstance(x, (int, np.integer)):
        return int(x)
    if isinstance(x, (float, np.floating)):
        x = float(x)
        return x if math.isfinite(x) else None
    return x


def _report_fields(rep: SolveReport) -> dict:
    return {
        "converged": rep.converged,
        "iterations": rep.iterations,
        "contraction_factor": rep.contraction_factor,
        "residual": rep.residual,
        "differences": list(rep.differences),
        "warnings": list(rep.warnings),
    }


def _status(rep: SolveReport) -> int:
    if not rep.converged:
        return EXIT_DIVERGED
    return EXIT_HYPOTHESIS if rep.warnings else EXIT_OK


def _rl_spec(cfg: RunConfig) -> RLSpec:
    p = cfg.params
    return RLSpec(p["alpha"], p["lambda"], p["T"], cfg.expr("f", "u"), p["c1"], p["c2"], p["Lf"],
                  h=cfg.expr("h", "t"), N=p["N"], grid=cfg.policy)


def _caputo_spec(cfg: RunConfig) -> CaputoSpec:
    p = cfg.params
    src = _expression("caputo", "f", p["f"])

    def f(s, u):
        shape = np.broadcast_shapes(np.shape(s), np.shape(u))
        return np.broadcast_to(src(t=s, s=s, u=u), shape)

    return CaputoSpec(p["alpha"], p["lambda"], p["u0"], f, p["c1"], p["c2"], p["Lf"], p["M"], p["T"],
                      omega=p["omega"], b=p["b"], grid=cfg.policy)


def _ts_spec(cfg: RunConfig) -> TSSpec:
    p = cfg.params
    return TSSpec(TimeScale.from_json(p["timescale"]), p["alpha"], p["lambda"], cfg.expr("f", "u"),
                  p["c1"], p["c2"], p["Lf"], grid=cfg.policy)


def _run_rl(cfg):
    rep, bnd = solve_rl(_rl_spec(cfg), cfg.tol, cfg.max_iter)
    fields = _report_fields(rep)
    fields.update(threshold=bnd.threshold, bound=bnd.bound, bound_satisfied=bnd.satisfied, info=rep.info)
    return fields, rep


def _run_ts(cfg):
    rep, bnd = solve_ts(_ts_spec(cfg), cfg.tol, cfg.max_iter)
    fields = _report_fields(rep)
    fields.update(threshold=bnd.threshold, bound=bnd.bound, bound_satisfied=bnd.satisfied, info=rep.info)
    return fields, rep


def _run_caputo(cfg):
    spec = _caputo_spec(cfg)
    rep = solve_caputo_local(spec, cfg.tol, cfg.max_iter)
    total = rep.iterations
    for _ in range(cfg.params["continuations"]):
        if not rep.converged:
            break
        rep = continue_caputo(rep, spec, cfg.tol, cfg.max_iter)
        total += rep.iterations
    fields = _report_fields(rep)
    env = caputo_envelope_check(rep, spec, cfg.tol) if rep.converged else None
    info = dict(rep.info)
    info.update(local_radius=caputo_local_radius(spec), total_iterations=total)
    if env is not None:
        info.update(
            envelope_certified=env.envelope is not None,
            envelope_feedback=env.feedback,
            envelope_holds=env.holds,
        )
    fields.update(threshold=None, bound=None, bound_satisfied=None, info=info)
    return fields, rep


def _run_abel1(cfg):
    p = cfg.params
    t = make_grid(p["T"], cfg.policy)
    f = GridFn(t, cfg.expr("f", "t")(t))
    g = abel_first_kind_convolution(f, p["alpha"])
    residual = float(np.max(np.abs(rl_integral(g, 1.0 - p["alpha"]).values - f.values)))
    rep = SolveReport(g, 0, [], 0.0, residual, True)
    fields = _report_fields(rep)
    fields.update(threshold=None, bound=None, bound_satisfied=None, info={})
    return fields, rep


def _run_abel2(cfg):
    p = cfg.params
    t = make_grid(p["T"], cfg.policy)
    f = GridFn(t, cfg.expr("f", "t")(t))
    rep = abel_second_kind(f, cfg.expr("k", "t", "s"), p["alpha"], cfg.tol, cfg.max_iter)
    fields = _report_fields(rep)
    fields.update(threshold=None, bound=None, bound_satisfied=None, info={})
    return fields, rep


def _run_op(cfg):
    p = cfg.params
    t = make_grid(p["T"], cfg.policy)
    out = OPERATORS[p["apply"]](GridFn(t, cfg.expr("g", "t")(t)), p["alpha"])
    rep = SolveReport(out, 0, [], 0.0, 0.0, True)
    fields = _report_fields(rep)
    fields.update(threshold=None, bound=None, bound_satisfied=None, info={"apply": p["apply"]})
    return fields, rep


RUNNERS = {
    "rl": _run_rl,
    "caputo": _run_caputo,
    "ts": _run_ts,
    "abel1": _run_abel1,
    "abel2": _run_abel2,
    "op": _run_op,
}


def execute(cfg: RunConfig) -> Outcome:
    """Run a config; input errors propagate, solver failures become an Outcome."""
    start = time.perf_counter()
    try:
        fields, rep = RUNNERS[cfg.kind](cfg)
        nodes, values, code = rep.solution.nodes, rep.solution.values, _status(rep)
    except DivergenceError as exc:
        fields = _report_fields(exc.report) if exc.report is not None else {"converged": False}
        fields.update(error=str(exc), threshold=None, bound=None, bound_satisfied=None)
        nodes = values = None
        code = EXIT_DIVERGED
    except SingularityError as exc:
        fields = {"converged": False, "error": str(exc), "threshold": None, "bound": None, "bound_satisfied": None}
        nodes = values = None
        code = EXIT_DIVERGED
    report = {"kind": cfg.kind}
    report.update(fields)
    report["wall_time_ms"] = (time.perf_counter() - start) * 1e3
    return Outcome(_json_safe(report), nodes, values, code)


def write_csv(path: Path, nodes, values, header=("t", "u")):
    lines = [",".join(header)]
    lines.extend(f"{t:.17g},{u:.17g}" for t, u in zip(nodes, values))
    path.write_text("\n".join(lines) + "\n", encoding="utf-8")


def read_csv(path: Path) -> GridFn:
    try:
        rows = path.read_text(encoding="utf-8").splitlines()
    except (OSError, UnicodeDecodeError) as exc:
        raise InputValidationError(f"cannot read {path}: {exc}") from exc
    rows = [r for r in rows if r.strip()]
    if not rows:
        raise InputValidationError(f"{path}: empty file")
    start = 1 if rows[0].replace(" ", "").lower().startswith("t,") else 0
    t, v = [], []
    for lineno, row in enumerate(rows[start:], start + 1):
        cells = row.split(",")
        if len(cells) != 2:
            raise InputValidationError(f"{path}:{lineno}: expected 2 columns, found {len(cells)}")
        try:
            t.append(float(cells[0]))
            v.append(float(cells[1]))
        except ValueError as exc:
            raise InputValidationError(f"{path}:{lineno}: {exc}") from exc
    return GridFn(np.array(t), np.array(v))


def write_json(path: Path, data):
    path.write_text(json.dumps(data, indent=2, sort_keys=True, allow_nan=False) + "\n", encoding="utf-8")


# ---------------------------------------------------------------- commands


def cmd_run(args) -> int:
    cfg = RunConfig.load(args.config)
    if args.dump_spec:
        write_json(Path(args.dump_spec), cfg.to_dict())
    outcome = execute(cfg)
    if outcome.nodes is not None:
        write_csv(cfg.resolve(cfg.csv), outcome.nodes, outcome.values)
    write_json(cfg.resolve(cfg.report), outcome.report)
    r = outcome.report
    print(f"{cfg.kind}: converged={r.get('converged')} iterations={r.get('iterations')} exit={outcome.exit_code}")
    for w in r.get("warnings", []):
        print(f"warning: {w}", file=sys.stderr)
    if "error" in r:
        print(f"error: {r['error']}", file=sys.stderr)
    return outcome.exit_code


def cmd_verify(args) -> int:
    from .suites import SUITES, run_suite

    if args.suite not in SUITES and args.suite != "all":
        print(f"error: unknown suite {args.suite!r} (choose from {', '.join(SUITES)}, all)", file=sys.stderr)
        return EXIT_INPUT
    checks = run_suite(args.suite)
    width = max(len(c.name) for c in checks)
    for c in checks:
        print(f"{'PASS' if c.passed else 'FAIL'}  {c.name:<{width}}  {c.detail}")
    failed = sum(not c.passed for c in checks)
    print(f"{len(checks) - failed}/{len(checks)} passed")
    return EXIT_OK if failed == 0 else EXIT_VERIFY


def cmd_op(args) -> int:
    check_order(args.alpha)
    g = read_csv(Path(args.input))
    out = OPERATORS[args.apply](g, args.alpha)
    write_csv(Path(args.output), out.nodes, out.values)
    return EXIT_OK


def cmd_threshold(args) -> int:
    cfg = RunConfig.load(args.config)
    if cfg.kind == "rl":
        spec = _rl_spec(cfg)
        n_best, lam_best = best_weight_rate(spec)
        result = {
            "lambda_star": uniqueness_threshold_rl(spec),
            "N": spec.N,
            "best_N": n_best,
            "best_lambda_star": lam_best,
            "bound": bound_rl(spec),
        }
    elif cfg.kind == "ts":
        spec = _ts_spec(cfg)
        result = {"lambda_star": uniqueness_threshold_ts(spec), "bound": bound_ts(spec)}
    elif cfg.kind == "caputo":
        spec = _caputo_spec(cfg)
        result = {
            "lambda_star": None,
            "local_radius": caputo_local_radius(spec),
            "continuation_window": continuation_window(spec),
        }
    else:
        raise InputValidationError(f"threshold is defined for kinds rl, ts and caputo, not {cfg.kind!r}")
    print(json.dumps(_json_safe(result), indent=2, sort_keys=True))
    return EXIT_OK


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="fracsolve", description=__doc__.splitlines()[0])
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("run", help="solve the problem described by a JSON config")
    p.add_argument("config")
    p.add_argument("--dump-spec", metavar="PATH", help="write the normalised config to PATH")
    p.set_defaults(func=cmd_run)

    p = sub.add_parser("verify", help="run oracle-comparison suites")
    p.add_argument("suite", help="operators, volterra, thermistor, timescale or all")
    p.set_defaults(func=cmd_verify)

    p = sub.add_parser("op", help="apply a fractional operator to CSV samples")
    p.add_argument("--apply", required=True, choices=sorted(OPERATORS))
    p.add_argument("--alpha", required=True, type=float)
    p.add_argument("--in", dest="input", required=True)
    p.add_argument("--out", dest="output", required=True)
    p.set_defaults(func=cmd_op)

    p = sub.add_parser("threshold", help="print the uniqueness threshold and a priori bound")
    p.add_argument("config")
    p.set_defaults(func=cmd_threshold)
    return parser


def main(argv=None) -> int:
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as exc:
        # argparse exits 2 on usage errors; input errors are 1 here
        return EXIT_INPUT if exc.code else EXIT_OK
    try:
        return args.func(args)
    except (InputValidationError, DomainError, EvaluationError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_INPUT
    except FracError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_INPUT
    except OSError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_INPUT


if __name__ == "__main__":
    sys.exit(main())
