"""Command-line driver.

Standard output carries exactly one JSON result record; diagnostics go to
standard error. Exit codes: 0 success, 2 parse/validation error, 3 dimension
mismatch, 4 entropy out of range, 5 dimension cap exceeded.

Inputs (``--state``, ``--ham``, ``--measurement``) are JSON files or
``gen:SPEC`` generator specs; ``ergolab gen SPEC`` writes the generated file.
"""

from __future__ import annotations

import argparse
import math
import os
import sys

import numpy as np

from . import __version__
from .entropy import entanglement_entropy, observational_entropy, schmidt, von_neumann_entropy
from .errors import DimensionMismatch, ErgolabError, MissingDims, ParseError
from .localopt import STRATEGIES, OptimizerConfig, quantum_correlation_entropy
from .protocol import EXACT, ProtocolConfig, convergence_study, cooling_diagnostic, simulate_extraction
from .qstate import VALIDATION_TOL, PureState, as_density
from .serialization import (
    GEN_PREFIX,
    digest,
    dumps_record,
    encode_array,
    generate,
    hamiltonian_from_json,
    load_document,
    measurement_from_json,
    state_from_json,
)
from .thermo import ergotropy, observational_ergotropy, work_at_entropy

ENTROPY_KEYS = ("s_vn", "s_obs", "s_ent", "s_min", "s_qc", "s_target")


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        self.print_usage(sys.stderr)
        raise ParseError(f"{self.prog}: {message}")


def _source_label(source: str | None):
    if source is None or source.startswith(GEN_PREFIX):
        return source
    return os.path.basename(source)


class _Inputs:
    def __init__(self, args):
        self.docs = {}
        self.state = self.ham = self.measurement = None
        tol = getattr(args, "tol", VALIDATION_TOL)
        if getattr(args, "state", None):
            self.docs["state"] = load_document(args.state)
            self.state = state_from_json(self.docs["state"], tol)
        if getattr(args, "ham", None):
            self.docs["ham"] = load_document(args.ham)
            self.ham = hamiltonian_from_json(self.docs["ham"])
        if getattr(args, "measurement", None):
            self.docs["measurement"] = load_document(args.measurement)
            self.measurement = measurement_from_json(self.docs["measurement"])
        if self.state is not None and self.ham is not None and self.state.dim != self.ham.dim:
            raise DimensionMismatch(f"state dimension {self.state.dim} != Hamiltonian dimension {self.ham.dim}")
        if self.state is not None and self.measurement is not None and self.state.dim != self.measurement.dim:
            raise DimensionMismatch(
                f"state dimension {self.state.dim} != measurement dimension {self.measurement.dim}")

    def digest(self) -> str:
        return digest(self.docs)


def _record(command, args, inputs, results, arrays=None, seed=None):
    echo = {k: (_source_label(v) if k in ("state", "ham", "measurement") else v)
            for k, v in sorted(vars(args).items()) if k not in ("func", "command")}
    unit = "bits" if getattr(args, "bits", False) else "nats"
    if unit == "bits":
        results = {k: (v / math.log(2) if k in ENTROPY_KEYS and v is not None else v) for k, v in results.items()}
    return {
        "command": command,
        "args": echo,
        "inputs_digest": inputs.digest(),
        "results": results,
        "arrays": arrays or {},
        "seed": seed,
        "unit": unit,
        "version": __version__,
    }


def _ergotropy_fields(res) -> dict:
    return {
        "work": res.work,
        "beta": res.beta,
        "s_obs": res.s_obs,
        "e_initial": res.e_initial,
        "e_final": res.e_final,
        "poorly_matched": res.poorly_matched,
    }


def cmd_entropy(args):
    if args.measurement and args.schmidt:
        raise ParseError("--measurement and --schmidt are mutually exclusive")
    inp = _Inputs(args)
    results, arrays = {"s_vn": von_neumann_entropy(inp.state)}, {}
    if inp.measurement is not None:
        results["s_obs"] = observational_entropy(inp.state, inp.measurement)
    if args.schmidt:
        if inp.state.dims is None:
            raise MissingDims("--schmidt needs a state file with 'dims'")
        results["s_ent"] = entanglement_entropy(inp.state)
        psi = inp.state if isinstance(inp.state, PureState) else None
        if psi is not None:
            arrays["schmidt_coefficients"] = schmidt(psi).coefficients
    return _record("entropy", args, inp, results, arrays)


def _local_optimum(args, inp, results, arrays):
    cfg = OptimizerConfig(restarts=args.restarts, seed=args.seed, strategy=args.strategy)
    qc = quantum_correlation_entropy(inp.state, cfg)
    results.update(s_min=qc.s_min, s_qc=qc.s_qc, s_vn=qc.s_vn,
                   restarts_agreeing=qc.result.restarts_agreeing, converged=qc.result.converged)
    arrays["history"] = list(qc.result.history)
    arrays["basis_A"] = encode_array(qc.basis.basis_A)
    arrays["basis_B"] = encode_array(qc.basis.basis_B)
    return qc


def cmd_ergotropy(args, command="ergotropy"):
    if args.measurement and args.optimize_local:
        raise ParseError("--measurement and --optimize-local are mutually exclusive")
    inp = _Inputs(args)
    rho = as_density(inp.state)
    results = {"ergotropy": ergotropy(rho, inp.ham), "e_initial": rho.expectation(inp.ham.data)}
    arrays = {}
    seed = None
    if args.optimize_local:
        seed = args.seed
        qc = _local_optimum(args, inp, results, arrays)
        results.update(_ergotropy_fields(work_at_entropy(rho, inp.ham, qc.s_min)))
    elif inp.measurement is not None:
        results.update(_ergotropy_fields(observational_ergotropy(rho, inp.ham, inp.measurement)))
    return _record(command, args, inp, results, arrays, seed)


def cmd_qce(args):
    args.optimize_local = True
    args.measurement = None
    return cmd_ergotropy(args, command="qce")


def cmd_protocol(args):
    inp = _Inputs(args)
    cert = EXACT if args.cert_samples is None else args.cert_samples
    cfg = ProtocolConfig(args.copies, args.trials, args.seed, inp.measurement, cert)
    ws = simulate_extraction(inp.state, inp.ham, cfg)
    results = {
        "mean": ws.mean,
        "std_error": ws.std_error,
        "exact_mean": ws.exact_mean,
        "mean_per_copy": ws.mean / args.copies,
        "initial_energy": ws.initial_energy,
        "certified_initial_energy": ws.certified_initial_energy,
        "max_purity_error": ws.max_purity_error,
    }
    q = np.quantile(ws.samples, [0.0, 0.25, 0.5, 0.75, 1.0])
    arrays = {
        "certified_distribution": ws.distribution.probabilities,
        "samples_summary": {"min": q[0], "q25": q[1], "median": q[2], "q75": q[3], "max": q[4],
                            "count": len(ws.samples)},
    }
    if args.converge:
        rep = convergence_study(inp.state, inp.ham, inp.measurement, args.converge, cert, args.seed)
        results.update(w_inf=rep.w_inf, beta=rep.beta, s_obs=rep.s_obs)
        arrays["convergence"] = [{"N": r.n, "work_per_copy": r.work_per_copy, "gap": r.gap} for r in rep.rows]
    if args.cooling:
        rows = []
        for n in range(1, args.copies + 1):
            c = cooling_diagnostic(ws.distribution, inp.ham, n)
            rows.append({"N": n, "trace_distance": c.trace_distance})
        results["cooling_beta"] = c.beta
        arrays["cooling"] = rows
    return _record("protocol", args, inp, results, arrays, args.seed)


def cmd_gen(args):
    sys.stdout.write(dumps_record(generate(args.spec)))
    return None


def build_parser() -> argparse.ArgumentParser:
    parser = _Parser(prog="ergolab", description=__doc__.splitlines()[0])
    parser.add_argument("--version", action="version", version=__version__)
    sub = parser.add_subparsers(dest="command", required=True, parser_class=_Parser)

    def common(p):
        p.add_argument("--state", required=True, help="state JSON file or gen:SPEC")
        p.add_argument("--tol", type=float, default=VALIDATION_TOL, help="validation tolerance")
        p.add_argument("--bits", action="store_true", help="report entropies in bits")

    p = sub.add_parser("entropy", help="von Neumann, observational and entanglement entropy")
    common(p)
    p.add_argument("--measurement")
    p.add_argument("--schmidt", action="store_true")
    p.set_defaults(func=cmd_entropy)

    def ergo(p, optimize_flag=True):
        common(p)
        p.add_argument("--ham", required=True)
        if optimize_flag:
            p.add_argument("--measurement")
            p.add_argument("--optimize-local", action="store_true")
        p.add_argument("--restarts", type=int, default=16)
        p.add_argument("--seed", type=int, default=0)
        p.add_argument("--strategy", choices=STRATEGIES, default="givens_sweeps")

    p = sub.add_parser("ergotropy", help="ergotropy and observational ergotropy")
    ergo(p)
    p.set_defaults(func=cmd_ergotropy)

    p = sub.add_parser("qce", help="quantum correlation entropy and work at the optimal local basis")
    ergo(p, optimize_flag=False)
    p.set_defaults(func=cmd_qce)

    p = sub.add_parser("protocol", help="simulate certification and N-copy extraction")
    common(p)
    p.add_argument("--ham", required=True)
    p.add_argument("--measurement", required=True)
    p.add_argument("--copies", type=int, required=True)
    p.add_argument("--trials", type=int, required=True)
    p.add_argument("--seed", type=int, required=True)
    cert = p.add_mutually_exclusive_group()
    cert.add_argument("--cert-samples", type=int)
    cert.add_argument("--cert-exact", action="store_true")
    p.add_argument("--converge", type=int, metavar="N_MAX")
    p.add_argument("--cooling", action="store_true")
    p.set_defaults(func=cmd_protocol)

    p = sub.add_parser("gen", help="write a generated input file")
    p.add_argument("spec")
    p.set_defaults(func=cmd_gen)
    return parser


def main(argv=None) -> int:
    try:
        args = build_parser().parse_args(argv)
        record = args.func(args)
    except ErgolabError as exc:
        print(f"ergolab: error: {exc}", file=sys.stderr)
        attainable = getattr(exc, "attainable", None)
        if attainable is not None:
            print(f"ergolab: attainable entropy range [{attainable[0]!r}, {attainable[1]!r}] nats", file=sys.stderr)
        return exc.exit_code
    except ValueError as exc:
        print(f"ergolab: error: {exc}", file=sys.stderr)
        return ParseError.exit_code
    if record is not None:
        sys.stdout.write(dumps_record(record))
    return 0


if __name__ == "__main__":
    sys.exit(main())
