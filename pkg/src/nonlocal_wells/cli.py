"""Command-line front end.

Exit codes: 0 success, 1 argument error, 2 domain condition (for example
NoBoundState or a failed phase check).  Output goes to stdout unless
``--output`` is given or ``NONLOCAL_WELLS_OUTPUT_DIR`` names a directory, in
which case the file ``<command>.<format>`` is written there.
"""

from __future__ import annotations

import argparse
import os
import sys
from pathlib import Path

import numpy as np

from . import dicke, measurement, nonlocal_algebra as na, well_solver as ws
from .errors import DomainError, FitUnavailable, InvalidParameters, PhaseEquivalenceViolation
from .serialize import Digits, csv_text, dumps, validate

OUTPUT_DIR_ENV = "NONLOCAL_WELLS_OUTPUT_DIR"
EXACT_MAX_WELLS = 6
ENTROPY_DIGITS = 12


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        self.print_usage(sys.stderr)
        self.exit(1, f"{self.prog}: error: {message}\n")


def _int_list(text: str) -> list[int]:
    try:
        return [int(t) for t in text.split(",") if t.strip()]
    except ValueError:
        raise argparse.ArgumentTypeError(f"expected comma-separated integers, got {text!r}")


def _seed(text: str) -> int:
    value = int(text)
    if not 0 <= value < 2**64:
        raise argparse.ArgumentTypeError("seed must be a 64-bit unsigned integer")
    return value


def _common(p):
    p.add_argument("--format", choices=("json", "csv"), default="json")
    p.add_argument("--output", type=Path, default=None, help="file to write (default: stdout)")


def build_parser() -> argparse.ArgumentParser:
    parser = _Parser(prog="nonlocal-wells", description="Double-well spectra, nonlocal bases and Dicke states.")
    sub = parser.add_subparsers(dest="command", required=True, parser_class=_Parser)

    p = sub.add_parser("solve-well", help="bound states of the double well")
    p.add_argument("--a", type=float, required=True)
    p.add_argument("--b", type=float, required=True)
    p.add_argument("--v0", type=float, required=True)
    p.add_argument("--levels", type=int, default=1)
    p.add_argument("--grid", type=int, default=ws.DEFAULT_SAMPLES, help="number of wavefunction samples")
    _common(p)

    p = sub.add_parser("splitting-scan", help="doublet splitting versus barrier half-width")
    p.add_argument("--a-min", type=float, required=True)
    p.add_argument("--a-max", type=float, required=True)
    p.add_argument("--steps", type=int, default=16)
    p.add_argument("--width", type=float, required=True, help="well width b - a")
    p.add_argument("--v0", type=float, required=True)
    p.add_argument("--dps", type=int, default=60, help="decimal digits for the root solve (0: double precision)")
    p.add_argument("--workers", type=int, default=1)
    _common(p)

    p = sub.add_parser("verify-phase", help="check the nonlocal/local determinant phase identity")
    p.add_argument("--n", type=int, required=True)
    p.add_argument("--trials", type=int, default=20)
    p.add_argument("--seed", type=_seed, default=None)
    p.add_argument("--kind", choices=("general", "phase", "dft", "paper2"), default="general")
    p.add_argument("--excite-slot", type=int, default=None)
    _common(p)

    p = sub.add_parser("simulate", help="sequential well measurements")
    p.add_argument("--wells", type=int, required=True)
    p.add_argument("--excitations", type=int, default=0)
    p.add_argument("--order", type=_int_list, default=None)
    p.add_argument("--shots", type=int, required=True)
    p.add_argument("--seed", type=_seed, required=True)
    p.add_argument("--basis", choices=("dft", "paper2", "local"), default="dft")
    p.add_argument("--shards", type=int, default=1)
    p.add_argument("--workers", type=int, default=1)
    _common(p)

    p = sub.add_parser("triangle", help="Pascal triangle of Dicke states")
    p.add_argument("--max-n", type=int, required=True)
    _common(p)

    p = sub.add_parser("entropy", help="bipartite entropy of D(n, k)")
    p.add_argument("--n", type=int, required=True)
    p.add_argument("--k", type=int, required=True)
    p.add_argument("--cut", type=_int_list, required=True, help="qubits on the A side, e.g. 1,2")
    _common(p)
    return parser


def cmd_solve_well(args):
    spec = ws.DoubleWellSpec(args.a, args.b, args.v0)
    if args.levels < 1 or args.grid < 3:
        raise InvalidParameters("--levels must be >= 1 and --grid >= 3")
    states = ws.solve(spec, args.levels, n_points=args.grid)
    doc = {"spec": {"a": spec.a, "b": spec.b, "v0": spec.v0}, "states": [s.to_json() for s in states]}
    header = ["level", "energy", "parity", "x", "psi"]
    rows = [[i, s.energy, s.parity, float(x), float(p)] for i, s in enumerate(states) for x, p in s.samples]
    return doc, header, rows


def cmd_splitting_scan(args):
    if args.a_min > args.a_max:
        raise InvalidParameters("--a-min exceeds --a-max")
    if args.steps < 1 or args.dps < 0 or args.workers < 1:
        raise InvalidParameters("--steps and --workers must be >= 1, --dps >= 0")
    a_values = np.linspace(args.a_min, args.a_max, args.steps) if args.steps > 1 else [args.a_min]
    points = ws.splitting_scan(args.width, args.v0, a_values, dps=args.dps or None, workers=args.workers)
    try:
        slope, intercept, r2 = ws.fit_log_splitting(points)
        fit = {"slope": slope, "intercept": intercept, "r_squared": r2}
    except FitUnavailable:
        fit = None
    doc = {
        "width": args.width,
        "v0": args.v0,
        "dps": args.dps,
        "points": [
            {"a": p.a, "delta_e": p.delta_e, "e_even": p.e_even, "e_odd": p.e_odd, "degenerate": p.degenerate}
            for p in points
        ],
        "fit": fit,
    }
    rows = [[p.a, "" if p.delta_e is None else p.delta_e, p.e_even, p.e_odd] for p in points]
    footer = [] if fit is None else [["# slope", fit["slope"]], ["# r_squared", fit["r_squared"]]]
    return doc, ["a", "delta_e", "e_even", "e_odd"], rows + footer


def cmd_verify_phase(args):
    n = args.n
    if n < 2:
        raise InvalidParameters("--n must be >= 2")
    if args.trials < 1:
        raise InvalidParameters("--trials must be >= 1")
    if args.excite_slot is not None and not 0 <= args.excite_slot < n:
        raise InvalidParameters(f"--excite-slot must lie in 0..{n - 1}")
    if args.kind in ("general", "phase"):
        if args.seed is None:
            raise InvalidParameters("--seed is required for random matrices")
        rng = np.random.Generator(np.random.PCG64(args.seed))
        make = na.random_unitary if args.kind == "general" else na.random_phase_unitary
        matrices = [make(n, rng) for _ in range(args.trials)]
    else:
        matrices = [na.standard_phase_unitary(n, args.kind)]
    excitation = None if args.excite_slot is None else na.ExcitationSpec.on(n, args.excite_slot)

    worst_dev, worst_phase, failure, theta = 0.0, 0.0, None, None
    for c in matrices:
        try:
            check = na.verify_phase_equivalence(c, excitation)
        except PhaseEquivalenceViolation as exc:
            worst_dev = max(worst_dev, exc.deviation)
            failure = str(exc)
            continue
        worst_dev = max(worst_dev, check.max_deviation)
        worst_phase = max(worst_phase, check.phase_error)
        theta = check.global_phase
    passed = failure is None and worst_dev <= na.PHASE_TOL and worst_phase <= na.PHASE_TOL
    doc = {
        "n": n,
        "kind": args.kind,
        "trials": len(matrices),
        "seed": args.seed,
        "excite_slot": args.excite_slot,
        "max_deviation": worst_dev,
        "max_phase_error": worst_phase,
        "theta": theta if len(matrices) == 1 else None,
        "status": "PASS" if passed else "FAIL",
    }
    if failure:
        doc["failure"] = failure
    row = [n, args.kind, len(matrices), worst_dev, worst_phase, doc["status"]]
    return doc, ["n", "kind", "trials", "max_deviation", "max_phase_error", "status"], [row]


def _protocol_state(args) -> na.MultiParticleState:
    n, k = args.wells, args.excitations
    if n < 1 or n > na.MAX_PARTICLES:
        raise InvalidParameters(f"--wells must lie in 1..{na.MAX_PARTICLES}")
    if not 0 <= k <= n:
        raise InvalidParameters("--excitations must lie in 0..wells")
    if args.basis == "local":
        states = na.local_basis(n)
    else:
        states = na.to_nonlocal_basis(na.standard_phase_unitary(n, args.basis))
    if k == 0:
        return na.antisymmetrize(states)
    return na.excite(states, na.ExcitationSpec.on(n, *range(k)))


def cmd_simulate(args):
    if args.shots < 0:
        raise InvalidParameters("--shots must be >= 0")
    state = _protocol_state(args)
    order = tuple(state.wells) if args.order is None else tuple(args.order)
    if args.shots:
        record = measurement.run_protocol(state, order, args.shots, args.seed, shards=args.shards, workers=args.workers)
        doc = record.to_json()
    else:
        order = measurement.check_order(state, order)
        doc = {"seed": args.seed, "shots": 0, "order": list(order), "counts": {}}
    doc["wells"] = args.wells
    doc["excitations"] = args.excitations
    doc["basis"] = args.basis
    if args.wells <= EXACT_MAX_WELLS:
        joint = measurement.joint_distribution(state, order)
        doc["exact"] = measurement.sequence_distribution_json(joint, order)
        doc["patterns"] = measurement.well_pattern_distribution(state)
    rows = []
    exact = measurement.multiset_distribution(joint, order) if args.wells <= EXACT_MAX_WELLS else {}
    for key in sorted(set(doc["counts"]) | set(exact)):
        count = doc["counts"].get(key, 0)
        freq = count / args.shots if args.shots else ""
        rows.append([key, count, freq, exact.get(key, "")])
    return doc, ["outcomes", "count", "frequency", "exact"], rows


def cmd_triangle(args):
    table = dicke.triangle_table(args.max_n)
    rows = [[e["n"], e["k"], e["label"], e["terms"]] for row in table for e in row]
    return table, ["n", "k", "label", "terms"], rows


def cmd_entropy(args):
    state = dicke.generate(args.n, args.k)
    cut = dicke.Bipartition(args.n, frozenset(args.cut))
    value = dicke.bipartite_entropy(state, cut)
    short = Digits(value, ENTROPY_DIGITS)
    doc = {"n": args.n, "k": args.k, "cut": sorted(cut.side_a), "entropy_bits": value, "entropy_bits_12": short}
    row = [args.n, args.k, " ".join(map(str, sorted(cut.side_a))), short]
    return doc, ["n", "k", "cut", "entropy_bits"], [row]


COMMANDS = {
    "solve-well": (cmd_solve_well, "solve_well"),
    "splitting-scan": (cmd_splitting_scan, "splitting_scan"),
    "verify-phase": (cmd_verify_phase, "verify_phase"),
    "simulate": (cmd_simulate, "simulate"),
    "triangle": (cmd_triangle, "triangle"),
    "entropy": (cmd_entropy, "entropy"),
}


def _destination(args) -> Path | None:
    if args.output is not None:
        return args.output
    directory = os.environ.get(OUTPUT_DIR_ENV)
    if directory:
        return Path(directory) / f"{args.command}.{args.format}"
    return None


def run(argv=None) -> int:
    try:
        args = build_parser().parse_args(argv)
    except SystemExit as exc:
        return int(exc.code or 0)
    func, schema = COMMANDS[args.command]
    try:
        doc, header, rows = func(args)
    except InvalidParameters as exc:
        print(f"{type(exc).__name__}: {exc}", file=sys.stderr)
        return 1
    except DomainError as exc:
        print(f"{type(exc).__name__}: {exc}", file=sys.stderr)
        return 2
    validate(schema, doc)
    text = dumps(doc) if args.format == "json" else csv_text(header, rows)
    dest = _destination(args)
    if dest is None:
        sys.stdout.write(text)
    else:
        dest.parent.mkdir(parents=True, exist_ok=True)
        dest.write_text(text)
    if args.command == "verify-phase" and doc["status"] != "PASS":
        print(doc.get("failure", "phase check failed"), file=sys.stderr)
        return 2
    return 0


def main(argv=None):
    sys.exit(run(argv))


if __name__ == "__main__":
    main()
