"""Command-line front end.

Every subcommand builds a :class:`Report` and serializes it as JSON (default),
plain text, or CSV for tabular results.  Exit status is 0 on success, 2 for
invalid input and 3 when a computation cannot be completed.
"""

from __future__ import annotations

import argparse
import csv
import io
import json
import math
import os
import sys
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

from . import catalog
from .battery import BatterySpec, ergotropy, power_upper_bound, variance_range
from .bounds import bound_report, build_time_optimal_hamiltonian
from .errors import (
    AlreadyPassive,
    ComputationError,
    InvalidSpec,
    PassivizeError,
    UnknownCommand,
    UnsupportedFormat,
    ValidationError,
)
from .multipartite import (
    CLOSED_KINDS,
    CollectiveSpec,
    advantage_ratio,
    assisted_bounds,
    delta_N,
    delta_N_closed,
    figure_series,
    tau_cqsl,
)
from .operators import conjugate, expm_skew
from .oracle import numeric_min_distance
from .system import SystemSpec, is_passive, validate_spec

SIG_DIGITS = 12
FORMATS = ("json", "text", "csv")

EXACT = "exact"
UPPER = "upper-bound"
QSL = "qsl"
ORACLE = "numerical-oracle"


@dataclass
class Report:
    input: dict
    results: dict = field(default_factory=dict)
    warnings: list = field(default_factory=list)
    table: list | None = None  # rows for CSV output; first row is the header

    def add(self, name: str, value, provenance: str | None = None, unit: str | None = None):
        entry = {"value": value}
        if unit is not None:
            entry["unit"] = unit
        if provenance is not None:
            entry["provenance"] = provenance
        self.results[name] = entry

    def to_dict(self) -> dict:
        """Results rounded to ``SIG_DIGITS``; the input is echoed verbatim."""
        return {"input": self.input, "results": _round(self.results), "warnings": list(self.warnings)}


def _round(x):
    if isinstance(x, (bool, np.bool_)):
        return bool(x)
    if isinstance(x, (int, np.integer)):
        return int(x)
    if isinstance(x, (float, np.floating)):
        x = float(x)
        if not math.isfinite(x):
            return None
        return float(f"{x:.{SIG_DIGITS}g}") + 0.0  # +0.0 folds -0.0
    if isinstance(x, (complex, np.complexfloating)):
        return [_round(x.real), _round(x.imag)]
    if isinstance(x, np.ndarray):
        return _round(x.tolist())
    if isinstance(x, dict):
        return {k: _round(v) for k, v in x.items()}
    if isinstance(x, (list, tuple)):
        return [_round(v) for v in x]
    return x


def _text_lines(prefix: str, value) -> list[str]:
    if isinstance(value, dict) and "value" in value:
        extra = "".join(f" [{value[k]}]" for k in ("unit", "provenance") if k in value)
        return [f"{prefix} = {json.dumps(value['value'])}{extra}"]
    if isinstance(value, dict):
        out = []
        for k, v in value.items():
            out.extend(_text_lines(f"{prefix}.{k}" if prefix else k, v))
        return out
    return [f"{prefix} = {json.dumps(value)}"]


def emit_report(report: Report, fmt: str = "json") -> str:
    """Serialize with a fixed key order and floats at 12 significant digits."""
    if fmt == "json":
        return json.dumps(report.to_dict(), indent=2) + "\n"
    if fmt == "text":
        d = report.to_dict()
        lines = _text_lines("", d["results"])  # warnings go to stderr
        return "\n".join(lines) + ("\n" if lines else "")
    if fmt == "csv":
        if report.table is None:
            raise UnsupportedFormat("csv output is only available for tabular results")
        buf = io.StringIO()
        w = csv.writer(buf, lineterminator="\n")
        for row in report.table:
            w.writerow(_round(list(row)))
        return buf.getvalue()
    raise UnsupportedFormat(f"unknown format {fmt!r}; expected one of {FORMATS}")


# ---------------------------------------------------------------------------
# input
# ---------------------------------------------------------------------------


def _load_json(source: str) -> dict:
    if source.startswith("catalog:"):
        name = source.split(":", 1)[1]
        if name == "qutrit-battery":
            return catalog.qutrit_battery().to_dict()
        return catalog.get(name).to_dict()
    try:
        text = sys.stdin.read() if source == "-" else Path(source).read_text()
    except OSError as exc:
        raise InvalidSpec(f"cannot read {source}: {exc.strerror}") from None
    try:
        data = json.loads(text)
    except json.JSONDecodeError as exc:
        raise InvalidSpec(f"{source} is not valid JSON: {exc.msg}") from None
    if not isinstance(data, dict):
        raise InvalidSpec("spec must be a JSON object")
    return data


def _system(source: str) -> tuple[SystemSpec, dict, str]:
    data = _load_json(source)
    for key in ("a", "p"):
        if key not in data:
            raise InvalidSpec(f"spec is missing field {key!r}")
    spec = validate_spec(data["a"], data["p"], data.get("omega", 1.0))
    unit = "time" if "omega" in data else "1/omega"
    return spec, data, unit


def _battery(source: str) -> tuple[BatterySpec, dict, str]:
    data = _load_json(source)
    for key in ("eps", "p"):
        if key not in data:
            raise InvalidSpec(f"battery spec is missing field {key!r}")
    b = BatterySpec.from_dict(data)
    unit = "time" if "omega" in data else "1/omega"
    return b, data, unit


def _seed(args) -> int:
    env = os.environ.get("PASSIVIZE_SEED")
    if env is not None:
        try:
            return int(env)
        except ValueError:
            raise ValidationError("PASSIVIZE_SEED must be an integer") from None
    return args.seed


# ---------------------------------------------------------------------------
# subcommands
# ---------------------------------------------------------------------------


def cmd_bounds(args) -> Report:
    spec, data, unit = _system(args.spec)
    rep = bound_report(spec, use_oracle=args.oracle, seed=_seed(args))
    out = Report(data)
    out.add("tau_qsl", rep.tau_qsl, QSL, unit)
    out.add("tau_upper", rep.tau_upper, UPPER, unit)
    if rep.tau_exact is None:
        out.add("tau_exact", None)
    else:
        out.add("tau_exact", rep.tau_exact, ORACLE if rep.numerical else EXACT, unit)
    out.add("method", rep.exact_method)
    out.add("delta", rep.delta, EXACT)
    out.add("upper_permutation", str(rep.upper_permutation))
    out.warnings.extend(rep.warnings)
    if rep.experimental:
        out.warnings.append("exact time relies on an experimental decomposition")
    return out


def cmd_hamiltonian(args) -> Report:
    spec, data, unit = _system(args.spec)
    out = Report(data)
    try:
        H, T = build_time_optimal_hamiltonian(spec, args.method)
    except AlreadyPassive as exc:
        out.warnings.append(f"already passive: {exc}")
        return out
    out.add("tau", T, EXACT, unit)
    out.add("hamiltonian", np.asarray(H, dtype=complex), EXACT)
    return out


def cmd_evolve(args) -> Report:
    spec, data, unit = _system(args.spec)
    if args.time < 0:
        raise ValidationError("time must be nonnegative")
    out = Report(data)
    try:
        H, T = build_time_optimal_hamiltonian(spec, args.method)
    except AlreadyPassive:
        H, T = np.zeros((spec.n, spec.n), dtype=complex), 0.0
        out.warnings.append("already passive; evolving with H = 0")
    rho = conjugate(expm_skew(H, args.time), spec.rho)
    out.add("time", args.time, None, unit)
    out.add("tau_pas", T, EXACT, unit)
    out.add("final_diagonal", np.real(np.diag(rho)), EXACT)
    out.add("passive", bool(is_passive(rho, spec)))
    return out


def cmd_collective(args) -> Report:
    spec, data, unit = _system(args.spec)
    if args.N < 1:
        raise ValidationError("N must be >= 1")
    out = Report(data)
    if args.closed_form:
        dN = delta_N_closed(args.closed_form, args.N)
        out.warnings.append(f"delta_N from the {args.closed_form} closed form")
    else:
        dN = delta_N(CollectiveSpec(spec, args.N))
    c = CollectiveSpec(spec, args.N)
    out.add("N", args.N)
    out.add("delta_N", dN, EXACT)
    out.add("tau_cqsl", tau_cqsl(c, dN), QSL, unit)
    try:
        ratio = advantage_ratio(c) if not args.closed_form else None
    except ComputationError as exc:
        ratio = None
        out.warnings.append(f"advantage ratio unavailable: {exc}")
    if ratio is not None:
        out.add("advantage_ratio", ratio, EXACT)
    return out


def cmd_assisted(args) -> Report:
    spec, data, unit = _system(args.spec)
    t_aqsl, t_upper = assisted_bounds(spec, args.nc)
    out = Report(data)
    out.add("n_c", args.nc)
    out.add("tau_aqsl", t_aqsl, QSL, unit)
    out.add("tau_assisted_upper", t_upper, UPPER, unit)
    return out


def cmd_battery(args) -> Report:
    b, data, unit = _battery(args.spec)
    out = Report(data)
    W = ergotropy(b)
    pb = power_upper_bound(b)
    out.add("ergotropy", W, EXACT, "energy")
    out.add("tau_pas", pb.tau, EXACT if pb.tau_kind == "exact" else QSL, unit)
    out.add("power_bound", pb.power, QSL if pb.weak else EXACT, "energy/time")
    if pb.weak:
        out.warnings.append("power bound uses the speed limit; exact time unknown")
    if b.n <= 10:
        lo, hi = variance_range(b)
        out.add("variance_range", [lo, hi], EXACT, "energy^2")
    else:
        out.add("variance_range", None)
        out.warnings.append("variance range needs enumeration; n > 10")
    return out


def cmd_oracle(args) -> Report:
    spec, data, unit = _system(args.spec)
    res = numeric_min_distance(spec, restarts=args.restarts, seed=_seed(args))
    out = Report(data)
    out.add("distance", res.best_distance, ORACLE)
    out.add("tau_pas", res.best_distance / spec.omega, ORACLE, unit)
    out.add("converged", res.converged)
    out.add("spread", res.spread, ORACLE)
    out.add("restarts", res.restarts_used)
    if res.best_permutation is not None:
        out.add("permutation", str(res.best_permutation))
    return out


def cmd_figures(args) -> Report:
    rows = figure_series(args.which, args.max_n)
    out = Report({"which": args.which, "max_n": args.max_n})
    out.add("series", [[N, r] for N, r in rows], EXACT)
    out.table = [("N", "ratio"), *rows]
    return out


COMMANDS = {
    "bounds": cmd_bounds,
    "hamiltonian": cmd_hamiltonian,
    "evolve": cmd_evolve,
    "collective": cmd_collective,
    "assisted": cmd_assisted,
    "battery": cmd_battery,
    "oracle": cmd_oracle,
    "figures": cmd_figures,
}


class _Parser(argparse.ArgumentParser):
    """Raises instead of exiting so ``run`` can map errors to exit codes."""

    def error(self, message):
        raise UnknownCommand(message)


def build_parser() -> argparse.ArgumentParser:
    p = _Parser(prog="passivize", description="Passivization times and time-optimal Hamiltonians.")
    p.add_argument("--format", choices=FORMATS, default=None, help="output format (default json; csv for figures)")
    # also accepted after the subcommand
    fmt = _Parser(add_help=False)
    fmt.add_argument("--format", choices=FORMATS, default=argparse.SUPPRESS)
    sub = p.add_subparsers(dest="command", required=True, parser_class=_Parser)

    def spec_cmd(name, help_):
        s = sub.add_parser(name, help=help_, parents=[fmt])
        s.add_argument("spec", help="JSON spec file, '-' for stdin, or catalog:<name>")
        return s

    s = spec_cmd("bounds", "speed limit, best cycle bound and exact time")
    s.add_argument("--oracle", action="store_true", help="fall back to the numerical oracle (n <= 6)")
    s.add_argument("--seed", type=int, default=0)

    methods = ["auto", "maximally_active", "involution", "nondegenerate"]
    s = spec_cmd("hamiltonian", "time-optimal Hamiltonian")
    s.add_argument("--method", choices=methods, default="auto")

    s = spec_cmd("evolve", "evolve under the time-optimal Hamiltonian")
    s.add_argument("--time", type=float, required=True)
    s.add_argument("--method", choices=methods, default="auto")

    s = spec_cmd("collective", "collective passivization of N copies")
    s.add_argument("-N", type=int, required=True)
    s.add_argument("--closed-form", choices=CLOSED_KINDS, default=None)

    s = spec_cmd("assisted", "catalyst-assisted bounds")
    s.add_argument("--nc", type=int, required=True)

    spec_cmd("battery", "ergotropy, power bound and variance range of a battery spec")

    s = spec_cmd("oracle", "numerical distance to the passivizing set")
    s.add_argument("--restarts", type=int, default=8)
    s.add_argument("--seed", type=int, default=0)

    s = sub.add_parser("figures", help="collective advantage series", parents=[fmt])
    s.add_argument("--which", choices=["qubit", "qutrit"], required=True)
    s.add_argument("--max-n", type=int, default=14)
    return p


def run(argv: list[str] | None = None) -> tuple[int, str, str]:
    """Run a command line; returns ``(exit code, stdout text, stderr text)``."""
    try:
        args = build_parser().parse_args(argv)
        fmt = args.format or ("csv" if args.command == "figures" else "json")
        report = COMMANDS[args.command](args)
        return 0, emit_report(report, fmt), "".join(f"warning: {w}\n" for w in report.warnings)
    except SystemExit as exc:  # --help
        return int(exc.code or 0), "", ""
    except ValidationError as exc:
        return 2, "", f"error: {type(exc).__name__}: {exc}\n"
    except (ComputationError, PassivizeError) as exc:
        return 3, "", f"error: {type(exc).__name__}: {exc}\n"


def main(argv: list[str] | None = None) -> int:
    code, out, err = run(argv)
    sys.stdout.write(out)
    sys.stderr.write(err)
    return code


if __name__ == "__main__":
    sys.exit(main())
