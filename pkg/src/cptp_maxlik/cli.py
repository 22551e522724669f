"""Command-line interface: simulate, reconstruct, verify, compare.

Exit codes: 0 success / verification pass, 1 verification fail,
2 usage or validation error, 3 I/O error, 4 method precondition failed.
"""

from __future__ import annotations

import argparse
import json
import os
import sys
import tempfile
from pathlib import Path

from . import __version__
from .channels import channel_from_json, preset_channel, process_fidelity, to_choi, verify_cptp
from .compare import EXACT, ComparisonReport, compare_methods
from .errors import CptpMaxlikError, DomainError, NotInformationallyCompleteError
from .optimize import SolverConfig
from .solvers import METHODS, reconstruct
from .tomography import CountsDataset, TomographyDesign, exact_dataset, preset_design, simulate

EXIT_OK, EXIT_FAIL, EXIT_USAGE, EXIT_IO, EXIT_PRECONDITION = 0, 1, 2, 3, 4
TP_REPORT_BOUND = 1e-8


class CliError(Exception):
    def __init__(self, code: int, message: str):
        super().__init__(message)
        self.code = code


def fmt(x: float) -> str:
    return format(float(x), ".10g")


def write_atomic(path: str | os.PathLike, text: str) -> None:
    path = Path(path)
    try:
        path.parent.mkdir(parents=True, exist_ok=True)
        fd, tmp = tempfile.mkstemp(dir=path.parent, prefix=f".{path.name}.", suffix=".tmp")
        with os.fdopen(fd, "w", encoding="utf-8") as fh:
            fh.write(text)
        os.replace(tmp, path)
    except OSError as exc:
        raise CliError(EXIT_IO, f"cannot write {path}: {exc}") from exc


def _read_json(path: str, what: str):
    try:
        with open(path, encoding="utf-8") as fh:
            return json.load(fh)
    except OSError as exc:
        raise CliError(EXIT_IO, f"cannot read {what} file {path}: {exc}") from exc
    except json.JSONDecodeError as exc:
        raise CliError(EXIT_USAGE, f"{what} file {path} is not valid JSON: {exc}") from exc


def _dumps(obj) -> str:
    return json.dumps(obj, indent=1) + "\n"


def resolve_channel(spec: str, field_name: str = "channel"):
    try:
        if spec.endswith(".json") or os.path.exists(spec):
            return to_choi(channel_from_json(_read_json(spec, field_name)))
        return preset_channel(spec)
    except CptpMaxlikError as exc:
        raise CliError(EXIT_USAGE, f"--{field_name}: {exc}") from exc


def resolve_design(spec: str) -> TomographyDesign:
    try:
        if spec.endswith(".json") or os.path.exists(spec):
            return TomographyDesign.from_json(_read_json(spec, "design"))
        return preset_design(spec)
    except CptpMaxlikError as exc:
        raise CliError(EXIT_USAGE, f"--design: {exc}") from exc


def solver_config(args) -> SolverConfig:
    try:
        return SolverConfig(
            max_iterations=args.max_iterations,
            tol_likelihood=args.tol_likelihood,
            tol_step=args.tol_step,
            seed=args.solver_seed,
            dilution_init=args.dilution,
            restarts=args.restarts,
        )
    except CptpMaxlikError as exc:
        raise CliError(EXIT_USAGE, f"solver options: {exc}") from exc


def _add_solver_options(p: argparse.ArgumentParser) -> None:
    d = SolverConfig()
    g = p.add_argument_group("solver overrides")
    g.add_argument("--max-iterations", type=int, default=d.max_iterations)
    g.add_argument("--tol-likelihood", type=float, default=d.tol_likelihood)
    g.add_argument("--tol-step", type=float, default=d.tol_step)
    g.add_argument("--solver-seed", type=int, default=d.seed, help="seed for simplex restarts")
    g.add_argument("--dilution", type=float, default=d.dilution_init)
    g.add_argument("--restarts", type=int, default=d.restarts)


# -- commands --------------------------------------------------------------------


def cmd_simulate(args) -> int:
    if args.shots < 1:
        raise CliError(EXIT_USAGE, f"--shots must be a positive integer, got {args.shots}")
    truth = resolve_channel(args.channel)
    design = resolve_design(args.design)
    if (truth.dim_h, truth.dim_k) != (design.dim_h, design.dim_k):
        raise CliError(EXIT_USAGE, "--design dimensions do not match --channel")
    if args.exact:
        data = exact_dataset(truth, design, args.shots)
    else:
        data = simulate(truth, design, args.shots, args.seed)
    write_atomic(args.output, _dumps(data.to_json()))
    if args.csv:
        write_atomic(args.csv, data.to_csv())
    return EXIT_OK


def summary_lines(res, truth=None) -> list[str]:
    rep = res.cptp_report
    lines = [
        f"method: {res.method}",
        f"converged: {res.converged} after {res.iterations_used} iterations",
        f"log-likelihood: {fmt(res.final_likelihood)}",
        f"min eigenvalue: {fmt(rep.min_eigenvalue)}",
    ]
    if rep.d_inf <= TP_REPORT_BOUND:
        lines.append(f"trace-preservation max violation ≤ 1e-8 ({fmt(rep.d_inf)})")
    else:
        lines.append(f"trace-preservation max violation = {fmt(rep.d_inf)}")
    lines.append("per-input total probability (diagonal of Tr_K S):")
    lines += [f"  input |{h}>: {fmt(t)}" for h, t in enumerate(rep.input_totals)]
    if truth is not None:
        try:
            lines.append(f"fidelity to truth: {fmt(process_fidelity(res.choi, truth))}")
        except DomainError:
            lines.append("fidelity to truth: undefined (estimate is not positive semidefinite)")
    return lines


def cmd_reconstruct(args) -> int:
    obj = _read_json(args.dataset, "dataset")
    try:
        data = CountsDataset.from_json(obj)
    except CptpMaxlikError as exc:
        raise CliError(EXIT_USAGE, f"dataset: {exc}") from exc
    truth = resolve_channel(args.truth, "truth") if args.truth else None
    cfg = solver_config(args)
    try:
        res = reconstruct(data, args.method, cfg)
    except NotInformationallyCompleteError as exc:
        raise CliError(EXIT_PRECONDITION, f"design not informationally complete: {exc}") from exc
    out = res.to_json()
    if truth is not None:
        try:
            out["fidelity"] = process_fidelity(res.choi, truth)
        except DomainError:
            out["fidelity"] = None
    if args.output:
        write_atomic(args.output, _dumps(out))
    print("\n".join(summary_lines(res, truth)))
    return EXIT_OK


def cmd_verify(args) -> int:
    obj = _read_json(args.channel_file, "channel")
    try:
        choi = to_choi(channel_from_json(obj))
    except CptpMaxlikError as exc:
        raise CliError(EXIT_USAGE, f"channel file: {exc}") from exc
    rep = verify_cptp(choi, args.tol)
    print(f"min eigenvalue: {fmt(rep.min_eigenvalue)}")
    print(f"max |Tr_K S - 1_H| entry: {fmt(rep.d_inf)}")
    print(f"Frobenius |Tr_K S - 1_H|: {fmt(rep.d_fro)}")
    for h, t in enumerate(rep.input_totals):
        print(f"input |{h}> total probability: {fmt(t)}")
    print(f"CPTP at tol {args.tol:g}: {'PASS' if rep.passed else 'FAIL'}")
    return EXIT_OK if rep.passed else EXIT_FAIL


def parse_shots(text: str) -> list:
    out = []
    for part in text.split(","):
        part = part.strip()
        if part == EXACT:
            out.append(EXACT)
            continue
        try:
            number = float(part)
        except ValueError:
            raise CliError(EXIT_USAGE, f"--shots: cannot parse {part!r}") from None
        if not number.is_integer():
            raise CliError(EXIT_USAGE, f"--shots entries must be integers, got {part!r}")
        value = int(number)
        if value < 1:
            raise CliError(EXIT_USAGE, f"--shots entries must be positive, got {value}")
        out.append(value)
    return out


def parse_seeds(text: str) -> list[int]:
    try:
        if "," in text:
            return [int(s) for s in text.split(",")]
        n = int(text)
    except ValueError:
        raise CliError(EXIT_USAGE, f"--seeds: cannot parse {text!r}") from None
    if n < 1:
        raise CliError(EXIT_USAGE, "--seeds count must be positive")
    return list(range(n))


def cmd_compare(args) -> int:
    truth = resolve_channel(args.channel)
    design = resolve_design(args.design)
    shots = parse_shots(args.shots)
    seeds = parse_seeds(args.seeds)
    cfg = solver_config(args)
    try:
        report = compare_methods(truth, design, shots, seeds, cfg,
                                 channel_id=args.channel, workers=args.workers)
    except CptpMaxlikError as exc:
        raise CliError(EXIT_USAGE, str(exc)) from exc
    out = Path(args.output_dir)
    write_atomic(out / f"{args.prefix}report.json", _dumps(report.to_json()))
    write_atomic(out / f"{args.prefix}runs.csv", report.to_csv())
    write_atomic(out / f"{args.prefix}plot.csv", report.plot_csv())
    print(report.table())
    return EXIT_OK


def cmd_table(args) -> int:
    obj = _read_json(args.report, "report")
    try:
        report = ComparisonReport.from_json(obj)
    except (KeyError, TypeError) as exc:
        raise CliError(EXIT_USAGE, f"malformed report: {exc}") from exc
    print(report.table())
    return EXIT_OK


def build_parser() -> argparse.ArgumentParser:
    p = argparse.ArgumentParser(prog="cptp-maxlik", description=__doc__.splitlines()[0])
    p.add_argument("--version", action="version", version=f"%(prog)s {__version__}")
    sub = p.add_subparsers(dest="command", required=True)

    s = sub.add_parser("simulate", help="simulate tomography counts for a channel")
    s.add_argument("--channel", required=True, help="preset (identity, amplitude-damping:0.3, ...) or channel JSON")
    s.add_argument("--design", default="qubit-standard", help="preset or design JSON")
    s.add_argument("--shots", type=int, required=True, help="shots per (input, setting)")
    s.add_argument("--seed", type=int, default=0)
    s.add_argument("--exact", action="store_true", help="write noiseless counts shots*p")
    s.add_argument("-o", "--output", required=True)
    s.add_argument("--csv", help="also write the flat CSV export here")
    s.set_defaults(func=cmd_simulate)

    r = sub.add_parser("reconstruct", help="reconstruct a channel from a dataset")
    r.add_argument("dataset")
    r.add_argument("--method", choices=METHODS, required=True)
    r.add_argument("--truth", help="preset or channel JSON to report fidelity against")
    r.add_argument("-o", "--output", help="result JSON path")
    _add_solver_options(r)
    r.set_defaults(func=cmd_reconstruct)

    v = sub.add_parser("verify", help="check the CPTP conditions of a channel file")
    v.add_argument("channel_file")
    v.add_argument("--tol", type=float, default=1e-8)
    v.set_defaults(func=cmd_verify)

    c = sub.add_parser("compare", help="run all methods over shots x seeds")
    c.add_argument("--channel", required=True)
    c.add_argument("--design", default="qubit-standard")
    c.add_argument("--shots", required=True, help="comma list, e.g. 100,1000,exact")
    c.add_argument("--seeds", default="10", help="count N (seeds 0..N-1) or comma list")
    c.add_argument("--workers", type=int, default=None, help="default: $CPTP_MAXLIK_THREADS or all cores")
    c.add_argument("-o", "--output-dir", default=".")
    c.add_argument("--prefix", default="compare_")
    _add_solver_options(c)
    c.set_defaults(func=cmd_compare)

    t = sub.add_parser("table", help="re-print the summary table of a compare report")
    t.add_argument("report")
    t.set_defaults(func=cmd_table)
    return p


def main(argv=None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        return args.func(args)
    except CliError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return exc.code


if __name__ == "__main__":
    sys.exit(main())
