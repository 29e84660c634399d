"""Command-line front end.

Subcommands ``transform``, ``invert``, ``simulate``, ``sweep`` and
``converge`` read an optional JSON experiment spec (``--spec``) whose fields
can all be overridden by flags.  Results go to ``--out`` (default stdout) as
CSV or JSON lines; floats are written as shortest round-trip decimals, so
both formats carry identical numbers.

Exit codes: 0 when at least one result row succeeded, 2 for an invalid
spec, 3 for a numeric failure at run time.  Errors are written to stderr as
``{"error": code, "message": text}``.
"""

from __future__ import annotations

import argparse
import csv
import io
import json
import math
import sys
from dataclasses import dataclass, field
from pathlib import Path
from typing import Any, Callable, Iterable

import numpy as np

from .core import (
    EPS_CLASSICAL,
    NORM_TOL,
    DeviationCoefficients,
    ProbPair,
    Regime,
    extract_deviations,
    extract_phases,
    forward_transform,
    hyper_rule,
    orthogonality_residual,
    trig_rule,
)
from .ensemble import (
    BuildMode,
    FlipProcedure,
    convergence_study,
    expected_deviations,
    run_replicas,
    synthesize_flip,
)
from .errors import InfeasiblePhase, DomainError, ProbTransformError
from .families import DeviationProfile, sweep
from .sampling import SeedSpec

DEFAULT_SEED = 12345

EXIT_OK = 0
EXIT_INVALID = 2
EXIT_NUMERIC = 3

COMMANDS = ("transform", "invert", "simulate", "sweep", "converge")
COMMON = {"command", "format", "out", "degrees", "eps_classical"}
PROC_FIELDS = {"q12", "q21", "target", "regime", "theta"}
ALLOWED = {
    "transform": COMMON | {"p", "lambda", "regime", "theta"},
    "invert": COMMON | {"p", "p_out"},
    "simulate": COMMON | PROC_FIELDS | {"p", "N", "replicas", "seed", "stream", "mode", "workers"},
    "sweep": COMMON | {"p", "profile", "thetas", "grid", "half_angle"},
    "converge": COMMON | PROC_FIELDS | {"p", "sizes", "replicas", "seed", "stream", "mode", "workers"},
}
REQUIRED = {
    "transform": {"p"},
    "invert": {"p", "p_out"},
    "simulate": {"p", "N"},
    "sweep": {"p", "profile"},
    "converge": {"p", "sizes"},
}

TRANSFORM_COLUMNS = [
    "p1_in", "p2_in", "lambda1", "lambda2", "p1_out", "p2_out", "regime",
    "theta1", "theta2", "theta1_half", "theta2_half", "index_swapped",
    "orthogonality_residual", "note",
]
SIMULATE_COLUMNS = [
    "replica", "N", "q12", "q21", "n1_before", "n2_before", "n1_after", "n2_after",
    "p1_in_hat", "p2_in_hat", "p1_out_hat", "p2_out_hat", "lambda_hat1", "lambda_hat2",
    "delta1", "delta2", "lambda1_expected", "lambda2_expected", "status",
]
SWEEP_COLUMNS = ["theta", "theta_half", "p1_out", "p2_out", "regime", "status"]
CONVERGE_COLUMNS = [
    "kind", "N", "mean_lambda1", "mean_lambda2", "std_lambda1", "std_lambda2",
    "replicas_used", "excluded",
]
CLASSICAL_NOTE = "classical: theta set to pi/2 by convention (cos theta = 0)"


class SpecError(ProbTransformError):
    """The experiment spec is missing fields, has extra ones, or holds bad values."""


class NumericFailure(ProbTransformError):
    """No result row could be produced, or an emitted value failed validation."""


# --------------------------------------------------------------------------
# experiment spec


def _pair(value: Any, name: str) -> ProbPair:
    if isinstance(value, (list, tuple)):
        if len(value) != 2:
            raise SpecError(f"{name} must be a number or a two-element list")
        return ProbPair(float(value[0]), float(value[1]))
    if isinstance(value, (int, float)) and not isinstance(value, bool):
        return ProbPair.from_p1(float(value))
    raise SpecError(f"{name} must be a number or a two-element list, got {value!r}")


def _regime_kind(value: str) -> str:
    v = str(value).strip().lower()
    if v in ("trig", "trigonometric", "t"):
        return "trig"
    if v in ("hyper", "hypertrigonometric", "ht"):
        return "hyper"
    raise SpecError(f"regime must be 'trig' or 'hyper', got {value!r}")


@dataclass
class ExperimentSpec:
    command: str
    values: dict[str, Any] = field(default_factory=dict)

    @classmethod
    def load(cls, command: str | None, path: str | None, overrides: dict[str, Any]) -> ExperimentSpec:
        values: dict[str, Any] = {}
        if path is not None:
            try:
                values = json.loads(Path(path).read_text())
            except (OSError, json.JSONDecodeError) as exc:
                raise SpecError(f"cannot read spec {path}: {exc}") from exc
            if not isinstance(values, dict):
                raise SpecError("spec document must be a JSON object")
        file_command = values.get("command")
        if command and file_command and command != file_command:
            raise SpecError(f"spec is for {file_command!r} but {command!r} was requested")
        command = command or file_command
        if command not in COMMANDS:
            raise SpecError(f"command must be one of {COMMANDS}, got {command!r}")
        values.update(overrides)
        values["command"] = command
        spec = cls(command, values)
        spec.validate()
        return spec

    def validate(self) -> None:
        keys = set(self.values)
        extra = keys - ALLOWED[self.command]
        if extra:
            raise SpecError(f"fields not used by {self.command}: {sorted(extra)}")
        missing = REQUIRED[self.command] - keys
        if missing:
            raise SpecError(f"{self.command} requires fields: {sorted(missing)}")
        if self.values.get("format", "json") not in ("json", "csv"):
            raise SpecError("format must be 'json' or 'csv'")
        # probabilities are validated on load
        for name in ("p", "p_out", "target"):
            if name in self.values:
                _pair(self.values[name], name)
        if self.command == "transform":
            has_lam = "lambda" in keys
            has_phase = "regime" in keys or "theta" in keys
            if has_lam == has_phase:
                raise SpecError("transform needs either lambda or (regime, theta)")
            if has_phase and not {"regime", "theta"} <= keys:
                raise SpecError("transform by phase needs both regime and theta")
        if self.command in ("simulate", "converge"):
            sources = [bool(keys & {"q12", "q21"}), "target" in keys, bool(keys & {"regime", "theta"})]
            if sum(sources) != 1:
                raise SpecError("procedure needs exactly one of (q12, q21), target, or (regime, theta)")
            if sources[2] and not {"regime", "theta"} <= keys:
                raise SpecError("procedure by phase needs both regime and theta")
        if self.command == "sweep" and ("thetas" in keys) == ("grid" in keys):
            raise SpecError("sweep needs exactly one of thetas or grid")

    def get(self, name: str, default: Any = None) -> Any:
        return self.values.get(name, default)

    def prob(self, name: str) -> ProbPair:
        return _pair(self.values[name], name)

    def angle(self, value: Any) -> float:
        v = float(value)
        return math.radians(v) if self.get("degrees", False) else v

    @property
    def eps_classical(self) -> float:
        return float(self.get("eps_classical", EPS_CLASSICAL))

    @property
    def seed(self) -> SeedSpec:
        return SeedSpec(int(self.get("seed", DEFAULT_SEED)), int(self.get("stream", 0)))

    @property
    def mode(self) -> BuildMode:
        try:
            return BuildMode(str(self.get("mode", BuildMode.SAMPLED.value)).lower())
        except ValueError as exc:
            raise SpecError(f"mode must be 'exact' or 'sampled', got {self.get('mode')!r}") from exc

    def procedure(self, p: ProbPair) -> FlipProcedure:
        if "q12" in self.values or "q21" in self.values:
            return FlipProcedure(float(self.get("q12", 0.0)), float(self.get("q21", 0.0)))
        if "target" in self.values:
            target = self.prob("target")
        else:
            rule = trig_rule if _regime_kind(self.values["regime"]) == "trig" else hyper_rule
            target = rule(p, self.angle(self.values["theta"]))
        return synthesize_flip(p, target)


# --------------------------------------------------------------------------
# emission


def _cell(v: Any) -> Any:
    if isinstance(v, (bool, np.bool_)):
        return bool(v)
    if isinstance(v, (int, np.integer)):
        return int(v)
    if isinstance(v, (float, np.floating)):
        v = float(v)
        return None if math.isnan(v) or math.isinf(v) else v
    if isinstance(v, Regime):
        return v.value
    return v


def _check_normalized(row: dict[str, Any]) -> None:
    for a, b in (("p1_in", "p2_in"), ("p1_out", "p2_out"), ("p1_in_hat", "p2_in_hat"), ("p1_out_hat", "p2_out_hat")):
        x, y = row.get(a), row.get(b)
        if x is not None and y is not None and abs(x + y - 1) > NORM_TOL:
            raise NumericFailure(f"{a} + {b} = {x + y!r} is not normalized")


def _csv_text(v: Any) -> str:
    if v is None:
        return ""
    if isinstance(v, bool):
        return "true" if v else "false"
    if isinstance(v, float):
        return repr(v)
    return str(v)


def render(rows: Iterable[dict[str, Any]], columns: list[str], fmt: str) -> str:
    """Rows as CSV (with header) or JSON lines; every row gets every column."""
    clean = []
    for row in rows:
        r = {c: _cell(row.get(c)) for c in columns}
        _check_normalized(r)
        clean.append(r)
    if fmt == "csv":
        buf = io.StringIO()
        w = csv.writer(buf, lineterminator="\n")
        w.writerow(columns)
        for r in clean:
            w.writerow([_csv_text(r[c]) for c in columns])
        return buf.getvalue()
    return "".join(json.dumps(r, allow_nan=False) + "\n" for r in clean)


# --------------------------------------------------------------------------
# commands; each returns (rows, columns, number of successful rows)


def _phase_fields(phases) -> dict[str, Any]:
    return {
        "regime": phases.regime,
        "theta1": phases.theta1,
        "theta2": phases.theta2,
        "theta1_half": phases.theta1_half,
        "theta2_half": phases.theta2_half,
        "index_swapped": phases.index_swapped,
        "note": CLASSICAL_NOTE if phases.regime is Regime.CLASSICAL else "",
    }


def cmd_transform(spec: ExperimentSpec):
    p = spec.prob("p")
    if "lambda" in spec.values:
        raw = spec.values["lambda"]
        if not isinstance(raw, (list, tuple)) or len(raw) != 2:
            raise SpecError("lambda must be a two-element list")
        lam = DeviationCoefficients(float(raw[0]), float(raw[1]))
        out = forward_transform(p, lam)
    else:
        theta = spec.angle(spec.values["theta"])
        if _regime_kind(spec.values["regime"]) == "trig":
            out = trig_rule(p, theta)
            c = math.cos(theta)
        else:
            out = hyper_rule(p, theta)
            c = math.cosh(theta)
        lam = DeviationCoefficients(c, -p.p1 * c / p.p2)
    phases = extract_phases(p, lam, spec.eps_classical)
    row = {
        "p1_in": p.p1, "p2_in": p.p2,
        "lambda1": lam.lambda1, "lambda2": lam.lambda2,
        "p1_out": out.p1, "p2_out": out.p2,
        "orthogonality_residual": orthogonality_residual(p, lam),
        **_phase_fields(phases),
    }
    return [row], TRANSFORM_COLUMNS, 1


def cmd_invert(spec: ExperimentSpec):
    p_in, p_out = spec.prob("p"), spec.prob("p_out")
    lam = extract_deviations(p_in, p_out)
    phases = extract_phases(p_in, lam, spec.eps_classical)
    row = {
        "p1_in": p_in.p1, "p2_in": p_in.p2,
        "lambda1": lam.lambda1, "lambda2": lam.lambda2,
        "p1_out": p_out.p1, "p2_out": p_out.p2,
        "orthogonality_residual": orthogonality_residual(p_in, lam),
        **_phase_fields(phases),
    }
    return [row], TRANSFORM_COLUMNS, 1


def _positive_int(spec: ExperimentSpec, name: str, default: int | None = None) -> int:
    v = spec.get(name, default)
    if isinstance(v, bool) or not isinstance(v, (int, float)) or int(v) != v or v < 1:
        raise SpecError(f"{name} must be a positive integer, got {v!r}")
    return int(v)


def cmd_simulate(spec: ExperimentSpec):
    p = spec.prob("p")
    proc = spec.procedure(p)
    n = _positive_int(spec, "N")
    replicas = _positive_int(spec, "replicas", 1)
    workers = _positive_int(spec, "workers", 1)
    expected = expected_deviations(p, proc)
    results = run_replicas(n, p, proc, replicas, spec.seed, spec.mode, workers=workers)
    rows = []
    for res in results:
        row = {
            "replica": res.replica, "N": n, "q12": proc.q12, "q21": proc.q21,
            "n1_before": res.before.n1, "n2_before": res.before.n2,
            "n1_after": res.after.n1, "n2_after": res.after.n2,
            "p1_in_hat": res.before.n1 / n, "p2_in_hat": res.before.n2 / n,
            "p1_out_hat": res.after.n1 / n, "p2_out_hat": res.after.n2 / n,
            "lambda1_expected": expected.lambda1, "lambda2_expected": expected.lambda2,
            "status": "ok" if res.estimate else "degenerate_input",
        }
        if res.estimate:
            e = res.estimate
            row.update(lambda_hat1=e.lambda_hat1, lambda_hat2=e.lambda_hat2, delta1=e.delta1, delta2=e.delta2)
        rows.append(row)
    return rows, SIMULATE_COLUMNS, sum(r["status"] == "ok" for r in rows)


def _sweep_thetas(spec: ExperimentSpec) -> list[float]:
    if "thetas" in spec.values:
        raw = spec.values["thetas"]
        if not isinstance(raw, list):
            raise SpecError("thetas must be a list")
        values = [spec.angle(t) for t in raw]
    else:
        grid = spec.values["grid"]
        if not isinstance(grid, dict) or set(grid) - {"lo", "hi", "steps"} or not {"lo", "hi", "steps"} <= set(grid):
            raise SpecError("grid must be an object with exactly lo, hi, steps")
        steps = grid["steps"]
        if isinstance(steps, bool) or not isinstance(steps, int) or steps < 0:
            raise SpecError(f"grid steps must be a non-negative integer, got {steps!r}")
        lo, hi = spec.angle(grid["lo"]), spec.angle(grid["hi"])
        values = [float(t) for t in np.linspace(lo, hi, steps)]
    if spec.get("half_angle", False):
        values = [2 * t for t in values]
    return values


def cmd_sweep(spec: ExperimentSpec):
    p = spec.prob("p")
    raw = spec.values["profile"]
    if isinstance(raw, str):
        raw = {"kind": raw}
    if not isinstance(raw, dict):
        raise SpecError("profile must be a kind name or an object")
    profile = DeviationProfile.from_dict(raw, degrees=bool(spec.get("degrees", False)))
    rows, ok = [], 0
    for theta in _sweep_thetas(spec):
        row: dict[str, Any] = {"theta": theta, "theta_half": theta / 2}
        try:
            (res,) = sweep(p, profile, [theta], spec.eps_classical)
        except InfeasiblePhase:
            row["status"] = "infeasible"
        except DomainError:
            row["status"] = "out_of_domain"
        else:
            row.update(p1_out=res.output.p1, p2_out=res.output.p2, regime=res.regime, status="ok")
            ok += 1
        rows.append(row)
    # an empty grid is a successful empty table
    return rows, SWEEP_COLUMNS, ok if rows else 1


def cmd_converge(spec: ExperimentSpec):
    p = spec.prob("p")
    proc = spec.procedure(p)
    sizes = spec.values["sizes"]
    if not isinstance(sizes, list) or not sizes:
        raise SpecError("sizes must be a non-empty list")
    if any(isinstance(n, bool) or not isinstance(n, (int, float)) or int(n) != n for n in sizes):
        raise SpecError("sizes must be integers")
    replicas = _positive_int(spec, "replicas", 32)
    workers = _positive_int(spec, "workers", 1)
    table = convergence_study(p, proc, [int(n) for n in sizes], replicas, spec.seed, spec.mode, workers)
    rows = [
        {
            "kind": "estimate", "N": r.size,
            "mean_lambda1": r.mean_lambda1, "mean_lambda2": r.mean_lambda2,
            "std_lambda1": r.std_lambda1, "std_lambda2": r.std_lambda2,
            "replicas_used": r.replicas_used, "excluded": r.excluded,
        }
        for r in table
    ]
    expected = expected_deviations(p, proc)
    rows.append({
        "kind": "analytic",
        "mean_lambda1": expected.lambda1, "mean_lambda2": expected.lambda2,
        "std_lambda1": 0.0, "std_lambda2": 0.0,
    })
    return rows, CONVERGE_COLUMNS, sum(r.replicas_used > 0 for r in table)


HANDLERS: dict[str, Callable] = {
    "transform": cmd_transform,
    "invert": cmd_invert,
    "simulate": cmd_simulate,
    "sweep": cmd_sweep,
    "converge": cmd_converge,
}


# --------------------------------------------------------------------------
# argument parsing


class _Parser(argparse.ArgumentParser):
    def error(self, message: str):
        raise SpecError(message)


def _json_arg(text: str) -> Any:
    try:
        return json.loads(text)
    except json.JSONDecodeError:
        return text


def _flag_parser() -> argparse.ArgumentParser:
    fp = _Parser(add_help=False, argument_default=argparse.SUPPRESS)
    a = fp.add_argument
    a("--spec", dest="spec_path", help="JSON experiment spec; flags override its fields")
    a("--format", choices=("json", "csv"))
    a("--out", help="output path, '-' for stdout")
    a("--degrees", action="store_true", help="read all input angles as degrees")
    a("--eps", dest="eps_classical", type=float, help="classical-regime threshold")
    a("--p1", dest="p", type=float, help="input probability of outcome 1")
    a("--p-out", dest="p_out", type=float, help="output probability of outcome 1 (invert)")
    a("--target", type=float, help="target output probability of outcome 1")
    a("--lambda", dest="lambda", type=float, nargs=2, metavar=("L1", "L2"))
    a("--regime", help="trig or hyper")
    a("--theta", type=float, help="phase theta1 (full angle)")
    a("--q12", type=float)
    a("--q21", type=float)
    a("--N", "--size", dest="N", type=int)
    a("--sizes", type=int, nargs="+")
    a("--replicas", type=int)
    a("--seed", type=int)
    a("--stream", type=int)
    a("--mode", choices=("exact", "sampled"))
    a("--workers", type=int)
    a("--profile", type=_json_arg, help="cosine, cosh, or a JSON profile object")
    a("--thetas", type=float, nargs="*")
    a("--grid", type=float, nargs=3, metavar=("LO", "HI", "STEPS"))
    a("--half-angle", dest="half_angle", action="store_true", help="grid/thetas give theta/2")
    return fp


def build_parser() -> argparse.ArgumentParser:
    flags = _flag_parser()
    parser = _Parser(prog="probtransform", parents=[flags], description=__doc__.split("\n\n")[0])
    sub = parser.add_subparsers(dest="command")
    for name in COMMANDS:
        sub.add_parser(name, parents=[flags], help=HANDLERS[name].__name__.removeprefix("cmd_"))
    return parser


def _overrides(ns: argparse.Namespace) -> dict[str, Any]:
    d = {k: v for k, v in vars(ns).items() if k not in ("command", "spec_path")}
    if "grid" in d:
        lo, hi, steps = d["grid"]
        if steps != int(steps):
            raise SpecError("grid STEPS must be an integer")
        d["grid"] = {"lo": lo, "hi": hi, "steps": int(steps)}
    return d


def _error(code: str, message: str, stream) -> None:
    stream.write(json.dumps({"error": code, "message": message}) + "\n")


def run(argv: list[str] | None = None, stdout=None, stderr=None) -> int:
    stdout = stdout if stdout is not None else sys.stdout
    stderr = stderr if stderr is not None else sys.stderr
    try:
        ns = build_parser().parse_args(argv)
        spec = ExperimentSpec.load(ns.command, getattr(ns, "spec_path", None), _overrides(ns))
        rows, columns, ok = HANDLERS[spec.command](spec)
        text = render(rows, columns, spec.get("format", "json"))
    except NumericFailure as exc:
        _error(exc.code, str(exc), stderr)
        return EXIT_NUMERIC
    except ArithmeticError as exc:
        _error("NumericFailure", str(exc), stderr)
        return EXIT_NUMERIC
    except ProbTransformError as exc:
        _error(exc.code, str(exc), stderr)
        return EXIT_INVALID
    except (ValueError, TypeError, KeyError) as exc:
        _error("SpecError", str(exc), stderr)
        return EXIT_INVALID

    out = spec.get("out", "-")
    if out == "-":
        stdout.write(text)
    else:
        with open(out, "w", newline="") as fh:
            fh.write(text)
    if ok == 0:
        _error("NumericFailure", "no result row succeeded", stderr)
        return EXIT_NUMERIC
    return EXIT_OK


def main() -> None:
    sys.exit(run())


if __name__ == "__main__":
    main()
