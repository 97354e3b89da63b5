"""Command-line interface: scenario checking, running, and built-in demos.

Verbs:
    check <file>      parse and validate a scenario
    run <file>        execute a scenario's queries and print a report
    demo <name>       run a built-in demo scenario
    demos             list the built-in demos

Machine-mode reports (--machine) are line-oriented records with decimal
numerics carrying 17 significant digits, so values round-trip exactly.
Exit codes: 0 success, 1 at least one query errored, 2 parse or validation
failure.
"""

from __future__ import annotations

import argparse
import re
import sys
from collections import Counter

import numpy as np

from . import demos as demos_mod
from .dynamics import decoherence_functional, event_weight, sample_history
from .errors import CohistError, ParseError, ValidationError
from .framework import common_refinement, compatible, refines
from .histories import family_compatible
from .models import einstein_locality_check, povm_from_ancilla
from .scenario import (
    Environment,
    Scenario,
    parse,
    resolve,
)


def _f(x: float) -> str:
    return f"{float(x):.16e}"


def _c(z: complex) -> str:
    z = complex(z)
    return f"{z.real:.16e}{z.imag:+.16e}i"


def _b(x: bool) -> str:
    return "true" if x else "false"


def _label(parts) -> str:
    return ",".join(parts)


class Record:
    """One query's worth of report lines."""

    def __init__(self, index: int, kind: str):
        self.index = index
        self.kind = kind
        self.lines: list[str] = []
        self.errored = False

    def add(self, key: str, value: str) -> None:
        self.lines.append(f"{key} {value}")

    def add_matrix(self, key: str, matrix: np.ndarray) -> None:
        rows, cols = matrix.shape
        self.add(key, f"{rows} {cols}")
        for r in range(rows):
            self.lines.append("row " + " ".join(_c(z) for z in matrix[r]))

    def error(self, err: Exception) -> None:
        self.errored = True
        self.add("error", f"{type(err).__name__} {err}")


def _event_spec(spec: dict[int, set[str]]) -> str:
    return " ".join(f"{t}={','.join(sorted(spec[t]))}" for t in sorted(spec))


def _run_consistency(rec: Record, payload: dict, env: Environment) -> None:
    report = decoherence_functional(
        payload["family"], payload["dynamics"],
        tol_consistency=env.tol("tol_consistency"), floor=env.tol("floor"))
    rec.add("n_histories", str(report.n))
    rec.add("verdict", report.verdict)
    rec.add("max_offdiag_abs", _f(report.max_offdiag_abs))
    rec.add("max_offdiag_rel", _f(report.max_offdiag_rel))
    for i, label in enumerate(report.labels):
        suffix = " excluded" if i in report.excluded else ""
        rec.add("weight", f"{_label(label)} {_f(report.weights[i])}{suffix}")
    if report.consistent:
        probs = report.probabilities()
        for i in report.included_indices():
            rec.add("probability", f"{_label(report.labels[i])} {_f(probs[i])}")
    rec.add_matrix("dmatrix", np.asarray(report.matrix))


def _run_probability(rec: Record, payload: dict, env: Environment) -> None:
    family, dynamics = payload["family"], payload["dynamics"]
    report = decoherence_functional(
        family, dynamics, tol_consistency=env.tol("tol_consistency"),
        floor=env.tol("floor"))
    if not report.consistent:
        from .errors import InconsistentFamilyError

        raise InconsistentFamilyError(
            "family fails the consistency condition "
            f"(max off-diagonal {report.max_offdiag_abs:.6e}); probabilities "
            "are meaningless for it and are refused")
    rec.add("where", _event_spec(payload["where"]))
    total = report.total_weight()
    value = event_weight(family, report, payload["where"]) / total
    rec.add("value", _f(value))


def _run_conditional(rec: Record, payload: dict, env: Environment) -> None:
    from .dynamics import conditional_probability

    rec.add("where", _event_spec(payload["where"]))
    rec.add("given", _event_spec(payload["given"]))
    value = conditional_probability(
        payload["family"], payload["dynamics"], payload["where"], payload["given"],
        tol_consistency=env.tol("tol_consistency"), floor=env.tol("floor"))
    rec.add("value", _f(value))


def _run_compatibility(rec: Record, payload: dict, env: Environment) -> None:
    tol = env.tol("tol_alg")
    if "pds" in payload:
        f, g = payload["pds"]
        verdict = compatible(f, g, tol)
        rec.add("objects", "pds")
        rec.add("compatible", _b(verdict))
        if verdict:
            refinement = common_refinement(f, g, tol)
            rec.add("refinement_size", str(refinement.size))
            rec.add("refinement_labels", " ".join(refinement.labels))
    else:
        f1, f2 = payload["families"]
        if "dynamics" in payload:
            f1 = f1.attach(payload["dynamics"])
        verdict = family_compatible(
            f1, f2, tol, tol_consistency=env.tol("tol_consistency"),
            floor=env.tol("floor"))
        rec.add("objects", "families")
        rec.add("compatible", _b(verdict))


def _run_refinement(rec: Record, payload: dict, env: Environment) -> None:
    rec.add("refines", _b(refines(payload["fine"], payload["coarse"],
                                  env.tol("tol_alg"))))


def _run_povm(rec: Record, payload: dict, env: Environment) -> None:
    povm = povm_from_ancilla(payload["pd"], payload["state"], payload["ancilla"],
                             tol=env.tol("tol_alg"))
    rec.add("n_elements", str(len(povm)))
    total = np.zeros((povm.dim, povm.dim), dtype=complex)
    for label, element in povm.items():
        rec.add("element", label)
        rec.add("min_eigenvalue", _f(element.min_eigenvalue()))
        rec.add_matrix("matrix", element.matrix)
        total = total + element.matrix
    rec.add("completeness_residual",
            _f(float(np.linalg.norm(total - np.eye(povm.dim)))))


def _run_locality(rec: Record, payload: dict, env: Environment) -> None:
    report = einstein_locality_check(
        payload["experiment"], payload["c_states"],
        tol_consistency=env.tol("tol_consistency"), floor=env.tol("floor"))
    rec.add("name", payload["name"])
    rec.add("n_cstates", str(len(report.probabilities)))
    rec.add("labels", " ".join(_label(l) for l in report.labels))
    for i, probs in enumerate(report.probabilities):
        rec.add("verdict", f"{i} {report.verdicts[i]}")
        rec.add("probabilities", f"{i} " + " ".join(_f(p) for p in probs))
    rec.add("max_probability_deviation", _f(report.max_probability_deviation))
    rec.add("max_residual_deviation", _f(report.max_residual_deviation))
    rec.add("passed", _b(report.passed))


def _run_sample(rec: Record, payload: dict, env: Environment,
                seed_override: int | None) -> None:
    family, dynamics = payload["family"], payload["dynamics"]
    count = payload["count"]
    seed = seed_override if seed_override is not None else payload["seed"]
    labels = sample_history(family, dynamics, seed, size=count,
                            tol_consistency=env.tol("tol_consistency"),
                            floor=env.tol("floor"))
    rec.add("count", str(count))
    rec.add("seed", str(seed))
    counts = Counter(labels)
    for i in family.included_indices():
        label = family.histories[i].label
        rec.add("draws", f"{_label(label)} {counts.get(label, 0)}")


def execute(scenario: Scenario, env: Environment,
            seed_override: int | None = None) -> tuple[list[Record], int]:
    """Run every bound query in order; query errors are recorded, not fatal."""
    records: list[Record] = []
    status = 0
    for i, bound in enumerate(env.queries, start=1):
        rec = Record(i, bound.kind)
        for key, value in bound.decl.args:
            if key in ("family", "dynamics", "pds", "families", "fine", "coarse",
                       "pd", "state", "locality"):
                rec.add(key, value)
        try:
            if bound.kind == "consistency":
                _run_consistency(rec, bound.payload, env)
            elif bound.kind == "probability":
                _run_probability(rec, bound.payload, env)
            elif bound.kind == "conditional":
                _run_conditional(rec, bound.payload, env)
            elif bound.kind == "compatibility":
                _run_compatibility(rec, bound.payload, env)
            elif bound.kind == "refinement":
                _run_refinement(rec, bound.payload, env)
            elif bound.kind == "povm":
                _run_povm(rec, bound.payload, env)
            elif bound.kind == "locality":
                _run_locality(rec, bound.payload, env)
            elif bound.kind == "sample":
                _run_sample(rec, bound.payload, env, seed_override)
        except CohistError as err:
            rec.error(err)
            status = 1
        records.append(rec)
    return records, status


def render_machine(scenario_name: str, records: list[Record], status: int) -> str:
    out = [f"scenario {scenario_name}"]
    for rec in records:
        out.append(f"record {rec.index} {rec.kind}")
        out.extend(rec.lines)
        out.append("end")
    out.append(f"status {status}")
    return "\n".join(out) + "\n"


_NUMBER = re.compile(r"[+-]?\d\.\d{16}e[+-]\d{2}")


def _shorten(match: re.Match) -> str:
    return f"{float(match.group(0)):.6g}"


def render_human(scenario_name: str, records: list[Record], status: int) -> str:
    out = [f"Scenario: {scenario_name}"]
    for rec in records:
        head = f"[{rec.index}] {rec.kind}"
        out.append("")
        out.append(head)
        out.append("-" * len(head))
        for line in rec.lines:
            out.append("  " + _NUMBER.sub(_shorten, line))
    out.append("")
    out.append(f"Status: {'ok' if status == 0 else 'query errors occurred'}")
    return "\n".join(out) + "\n"


def run_text(text: str, machine: bool = False,
             tolerance_overrides: dict[str, float] | None = None,
             seed_override: int | None = None) -> tuple[str, int]:
    """Parse, validate, and execute scenario text; returns (report, exit code)."""
    try:
        scenario = parse(text)
        env = resolve(scenario, tolerance_overrides)
    except (ParseError, ValidationError) as err:
        return f"error: {err}\n", 2
    records, status = execute(scenario, env, seed_override)
    renderer = render_machine if machine else render_human
    return renderer(scenario.name, records, status), status


def _parse_tolerance_flags(pairs: list[str]) -> dict[str, float]:
    overrides = {}
    for pair in pairs:
        if "=" not in pair:
            raise ValueError(f"--tolerance expects name=value, got {pair!r}")
        key, value = pair.split("=", 1)
        overrides[key] = float(value)
    return overrides


def main(argv: list[str] | None = None) -> int:
    parser = argparse.ArgumentParser(
        prog="cohist",
        description="consistent-histories scenario runner")
    parser.add_argument("--machine", action="store_true",
                        help="emit the machine-readable report format")
    parser.add_argument("--tolerance", action="append", default=[],
                        metavar="NAME=VALUE", help="override a named tolerance")
    parser.add_argument("--seed", type=int, default=None,
                        help="override the seed of every sample query")
    parser.add_argument("--out", default=None, metavar="PATH",
                        help="write the report to a file instead of stdout")
    sub = parser.add_subparsers(dest="verb", required=True)
    p_check = sub.add_parser("check", help="parse and validate a scenario file")
    p_check.add_argument("file")
    p_run = sub.add_parser("run", help="run a scenario file")
    p_run.add_argument("file")
    p_demo = sub.add_parser("demo", help="run a built-in demo")
    p_demo.add_argument("name")
    sub.add_parser("demos", help="list the built-in demos")
    args = parser.parse_args(argv)

    try:
        overrides = _parse_tolerance_flags(args.tolerance)
    except ValueError as err:
        print(f"error: {err}", file=sys.stderr)
        return 2

    if args.verb == "demos":
        lines = [f"{name}  {desc}" for name, desc in demos_mod.list_demos()]
        print("\n".join(lines))
        return 0

    if args.verb == "demo":
        try:
            text = demos_mod.demo_text(args.name)
        except KeyError:
            print(f"error: unknown demo {args.name!r}; try 'cohist demos'",
                  file=sys.stderr)
            return 2
    else:
        try:
            with open(args.file, "r", encoding="utf-8") as fh:
                text = fh.read()
        except OSError as err:
            print(f"error: {err}", file=sys.stderr)
            return 2

    if args.verb == "check":
        try:
            scenario = parse(text)
            resolve(scenario, overrides)
        except (ParseError, ValidationError) as err:
            print(f"error: {err}", file=sys.stderr)
            return 2
        print(f"ok: scenario {scenario.name!r} is valid")
        return 0

    report, status = run_text(text, machine=args.machine,
                              tolerance_overrides=overrides,
                              seed_override=args.seed)
    if status == 2:
        print(report, end="", file=sys.stderr)
        return 2
    if args.out:
        with open(args.out, "w", encoding="utf-8") as fh:
            fh.write(report)
    else:
        print(report, end="")
    return status


if __name__ == "__main__":
    sys.exit(main())
