"""qpolar command line: construct codes, run simulation jobs, analyze codes.

Exit codes: 0 on success, 1 on a domain error (bad parameters, bad job
file, unwritable output), 2 on a usage error reported by argparse.
"""

from __future__ import annotations

import argparse
import contextlib
import json
import logging
import os
import sys
from collections.abc import Iterator
from pathlib import Path
from typing import IO, Any

import numpy as np

from qpolar.analysis import (
    ClassSpectrum,
    beta_scan,
    distance_report,
    exhaustive_spectrum,
    q1_scan,
    random_syndromes,
    weight_spectrum,
    write_beta_csv,
    write_distance_csv,
    write_dominance_csv,
    write_q1_csv,
    write_spectrum_csv,
)
from qpolar.config import Settings, load_settings
from qpolar.jobfile import load_job, resolve_dimensions
from qpolar.polar_core import ConstructionKind, ConstructionSpec, parse_beta
from qpolar.quantum_css import QuantumPolarCode, build_qpc, row_weight_bounds
from qpolar.sim_harness import estimate, trace_trials, write_csv, write_json

log = logging.getLogger("qpolar.cli")

CONSTRUCTIONS = tuple(k.value.lower() for k in ConstructionKind)


class _Formatter(argparse.ArgumentDefaultsHelpFormatter):
    pass


def _float_list(raw: str) -> list[float]:
    try:
        values = [float(tok) for tok in raw.split(",") if tok.strip()]
    except ValueError as exc:
        msg = f"not a comma-separated list: {raw!r}"
        raise argparse.ArgumentTypeError(msg) from exc
    if not values:
        raise argparse.ArgumentTypeError("list is empty")
    return values


def _int_list(raw: str) -> list[int]:
    try:
        values = [int(tok) for tok in raw.split(",") if tok.strip()]
    except ValueError as exc:
        msg = f"not a comma-separated list: {raw!r}"
        raise argparse.ArgumentTypeError(msg) from exc
    if not values:
        raise argparse.ArgumentTypeError("list is empty")
    return values


def _token_list(raw: str) -> list[str]:
    tokens = [tok.strip() for tok in raw.split(",") if tok.strip()]
    if not tokens:
        raise argparse.ArgumentTypeError("list is empty")
    return tokens


def _bits(raw: str) -> list[int]:
    if not raw or set(raw) - {"0", "1"}:
        msg = f"expected a string of 0/1 digits, got {raw!r}"
        raise argparse.ArgumentTypeError(msg)
    return [int(c) for c in raw]


# --- Parser ----------------------------------------------------------------


def _common() -> argparse.ArgumentParser:
    common = argparse.ArgumentParser(add_help=False)
    common.add_argument(
        "-v", "--verbose", action="store_true", help="enable debug logging"
    )
    common.add_argument(
        "--config",
        type=Path,
        default=None,
        help="YAML overlay on the packaged defaults.yaml",
    )
    return common


def _code_flags() -> argparse.ArgumentParser:
    code = argparse.ArgumentParser(add_help=False)
    code.add_argument(
        "--n", type=int, required=True, help="log2 of the blocklength N"
    )
    code.add_argument(
        "--k", type=int, help="logical qubits; sets K_X = K_Z = (N + K) / 2"
    )
    code.add_argument("--kx", type=int, help="X-basis information rows K_X")
    code.add_argument("--kz", type=int, help="Z-basis information rows K_Z")
    code.add_argument(
        "--construction",
        choices=CONSTRUCTIONS,
        default="pw",
        help="row ordering (q1 freezes by position)",
    )
    code.add_argument(
        "--beta",
        help="PW base: a decimal, '2^(1/4)' or '2^(1/4)-0.02'; values > 2 act as 2",
    )
    code.add_argument(
        "--q1-index", type=int, help="information row i of a Q1 code"
    )
    return code


def build_parser() -> argparse.ArgumentParser:
    common = _common()
    parser = argparse.ArgumentParser(
        prog="qpolar",
        description="Quantum polar codes with successive-cancellation list decoding.",
    )
    sub = parser.add_subparsers(dest="command", required=True, metavar="COMMAND")

    construct = sub.add_parser(
        "construct",
        parents=[common, _code_flags()],
        formatter_class=_Formatter,
        help="build a code and print it as JSON",
    )
    construct.add_argument(
        "--out", type=Path, help="write JSON here instead of standard output"
    )

    simulate = sub.add_parser(
        "simulate",
        parents=[common],
        formatter_class=_Formatter,
        help="run a Monte Carlo job file and write a results CSV",
    )
    simulate.add_argument("job", type=Path, help="YAML or JSON job file")
    simulate.add_argument(
        "--threads",
        type=int,
        default=None,
        help="worker threads (default: $QPOLAR_THREADS, else 1)",
    )
    simulate.add_argument(
        "--out", type=Path, help="results CSV path; overrides the job's `out`"
    )
    simulate.add_argument("--json", type=Path, help="also write the records as JSON")
    simulate.add_argument(
        "--seed", type=int, help="64-bit master seed; overrides the job's `seed`"
    )
    simulate.add_argument(
        "--dump-decisions",
        type=Path,
        help="write per-trial decisions (JSON lines) for the first trials of each p",
    )
    simulate.add_argument(
        "--dump-trials",
        type=int,
        default=10,
        help="trials per p dumped by --dump-decisions",
    )

    analyze = sub.add_parser(
        "analyze", help="weight spectra, distances and scans"
    )
    modes = analyze.add_subparsers(dest="mode", required=True, metavar="MODE")

    spectrum = modes.add_parser(
        "spectrum",
        parents=[common, _code_flags()],
        formatter_class=_Formatter,
        help="per-class weight histograms for one or more syndromes",
    )
    source = spectrum.add_mutually_exclusive_group()
    source.add_argument(
        "--list", type=int, dest="list_size", help="SCL list size (default: config)"
    )
    source.add_argument(
        "--exhaustive",
        action="store_true",
        help="enumerate every coset element (N <= config limit)",
    )
    spectrum.add_argument(
        "--p", type=float, help="flip probability for decoder LLRs (default: config)"
    )
    picks = spectrum.add_mutually_exclusive_group()
    picks.add_argument(
        "--syndrome", type=_bits, help="syndrome bits, one per Z-frozen row"
    )
    picks.add_argument(
        "--random", type=int, help="number of uniformly random syndromes"
    )
    spectrum.add_argument("--seed", type=int, help="seed for --random syndromes")
    spectrum.add_argument("--out", type=Path, help="CSV path (default: stdout)")
    spectrum.add_argument(
        "--dominance",
        type=Path,
        metavar="PATH",
        help="also write first- vs second-order spread per syndrome as CSV",
    )

    distance = modes.add_parser(
        "distance",
        parents=[common, _code_flags()],
        formatter_class=_Formatter,
        help="row-weight bound and list-search distance",
    )
    distance.add_argument(
        "--list", type=int, dest="list_size", help="SCL list size (default: config)"
    )
    distance.add_argument(
        "--p", type=float, help="flip probability for decoder LLRs (default: config)"
    )
    distance.add_argument(
        "--exhaustive",
        action="store_true",
        help="also certify the distance by enumeration (N <= config limit)",
    )
    distance.add_argument("--out", type=Path, help="CSV path (default: stdout)")

    q1 = modes.add_parser(
        "q1scan",
        parents=[common],
        formatter_class=_Formatter,
        help="SC logical rates of Q1 codes over their information index",
    )
    q1.add_argument("--n", type=int, required=True, help="log2 of the blocklength N")
    q1.add_argument(
        "--p-grid",
        type=_float_list,
        required=True,
        help="flip probabilities, comma separated",
    )
    q1.add_argument(
        "--trials", type=int, required=True, help="trials per (i, p, basis)"
    )
    q1.add_argument("--seed", type=int, required=True, help="64-bit master seed")
    q1.add_argument(
        "--indices", type=_int_list, help="candidate indices (default: 1..N-2)"
    )
    q1.add_argument("--threads", type=int, default=None, help="worker threads")
    q1.add_argument("--out", type=Path, help="CSV path (default: stdout)")

    betas = modes.add_parser(
        "betascan",
        parents=[common],
        formatter_class=_Formatter,
        help="logical rows and row-weight bound of PW codes over beta",
    )
    betas.add_argument("--n", type=int, required=True, help="log2 of the blocklength N")
    betas.add_argument("--k", type=int, required=True, help="logical qubits")
    betas.add_argument(
        "--betas", type=_token_list, required=True, help="beta values, comma separated"
    )
    betas.add_argument("--list", type=int, dest="list_size", help="SCL-E list size")
    betas.add_argument("--p", type=float, help="flip probability")
    betas.add_argument("--trials", type=int, help="trials per beta; enables simulation")
    betas.add_argument("--seed", type=int, help="64-bit master seed")
    betas.add_argument("--threads", type=int, default=None, help="worker threads")
    betas.add_argument("--out", type=Path, help="CSV path (default: stdout)")
    return parser


# --- Helpers ---------------------------------------------------------------


@contextlib.contextmanager
def _output(path: Path | None) -> Iterator[IO[str]]:
    if path is None:
        yield sys.stdout
        return
    with path.open("w", newline="") as fh:
        yield fh


def _check_writable(*paths: Path | None) -> None:
    """Fail before any decoding if an output cannot be created."""
    for path in paths:
        if path is None:
            continue
        parent = path.parent
        if path.is_dir():
            raise IsADirectoryError(f"cannot write {path}: it is a directory")
        if not parent.is_dir():
            raise FileNotFoundError(f"cannot write {path}: no directory {parent}")
        target = path if path.exists() else parent
        if not os.access(target, os.W_OK):
            raise PermissionError(f"cannot write {path}: permission denied")


def _spec_from_args(args: argparse.Namespace) -> ConstructionSpec:
    kind = ConstructionKind(args.construction.upper())
    if args.beta is not None and kind is not ConstructionKind.PW:
        raise ValueError(f"--beta only applies to pw, not {args.construction}")
    if args.q1_index is not None and kind is not ConstructionKind.Q1:
        raise ValueError("--q1-index only applies to --construction q1")
    match kind:
        case ConstructionKind.PW:
            if args.beta is None:
                return ConstructionSpec.pw()
            return ConstructionSpec.pw(parse_beta(args.beta))
        case ConstructionKind.HPW:
            return ConstructionSpec.hpw()
        case ConstructionKind.RM:
            return ConstructionSpec.rm()
        case ConstructionKind.Q1:
            if args.q1_index is None:
                raise ValueError("--construction q1 needs --q1-index")
            return ConstructionSpec.q1(args.q1_index)


def _code_from_args(args: argparse.Namespace) -> QuantumPolarCode:
    spec = _spec_from_args(args)
    k_x, k_z = resolve_dimensions(
        args.n, spec, args.k, getattr(args, "kx", None), getattr(args, "kz", None)
    )
    return build_qpc(args.n, k_x, k_z, spec)


def _threads(args: argparse.Namespace, settings: Settings) -> int:
    threads = args.threads if args.threads is not None else settings.default_threads()
    if threads < 1:
        raise ValueError(f"--threads must be >= 1, got {threads!r}")
    return threads


def _summary(qpc: QuantumPolarCode) -> str:
    x_bound, z_bound = row_weight_bounds(qpc)
    return (
        f"N={qpc.N} K={qpc.K} K_X={qpc.K_X} K_Z={qpc.K_Z}\n"
        f"logical rows: {' '.join(str(i) for i in qpc.logical)}\n"
        f"frozen rows: X {len(qpc.frozen_x)}, Z {len(qpc.frozen_z)}\n"
        f"row-weight bound: X {x_bound}, Z {z_bound}"
    )


# --- Commands --------------------------------------------------------------


def cmd_construct(args: argparse.Namespace, settings: Settings) -> int:
    qpc = _code_from_args(args)
    x_bound, z_bound = row_weight_bounds(qpc)
    record: dict[str, Any] = qpc.to_dict()
    record |= {"row_weight_bound": x_bound, "z_row_weight_bound": z_bound}
    text = json.dumps(record, indent=2) + "\n"
    if args.out is None:
        sys.stdout.write(text)
        print(_summary(qpc), file=sys.stderr)
    else:
        args.out.write_text(text)
        print(_summary(qpc))
        log.info("wrote %s", args.out)
    return 0


def cmd_simulate(args: argparse.Namespace, settings: Settings) -> int:
    jobfile = load_job(args.job)
    job = jobfile.to_job(seed=args.seed, threads=_threads(args, settings))
    out = args.out if args.out is not None else jobfile.out
    _check_writable(out, args.json, args.dump_decisions)
    log.info(
        "simulating N=%d K=%d decoders=%s L=%d over %d p value(s), seed %d",
        job.qpc.N,
        job.qpc.K,
        ",".join(job.decoders),
        job.list_size,
        len(job.p_grid),
        job.master_seed,
    )
    points = estimate(job, settings)
    with _output(out) as fh:
        write_csv(job.qpc, points, fh)
    if args.json is not None:
        write_json(job.qpc, points, args.json)
    if args.dump_decisions is not None:
        with args.dump_decisions.open("w") as fh:
            for p_index in range(len(job.p_grid)):
                trials = range(args.dump_trials)
                for record in trace_trials(job, p_index, trials, settings):
                    fh.write(json.dumps({"p": job.p_grid[p_index]} | record) + "\n")
    if out is not None:
        log.info("wrote %d row(s) to %s", len(points), out)
    return 0


def _spectrum(args: argparse.Namespace, settings: Settings) -> int:
    _check_writable(args.dominance)
    qpc = _code_from_args(args)
    width = qpc.N - qpc.K_Z
    if args.random is not None:
        if args.seed is None:
            raise ValueError("--random needs --seed")
        syndromes = list(random_syndromes(qpc, args.random, args.seed))
    elif args.syndrome is not None:
        if len(args.syndrome) != width:
            raise ValueError(
                f"--syndrome needs {width} bits (N - K_Z), got {len(args.syndrome)}"
            )
        syndromes = [np.array(args.syndrome, dtype=np.uint8)]
    else:
        syndromes = [np.zeros(width, dtype=np.uint8)]
    spectra: list[ClassSpectrum] = []
    for syndrome in syndromes:
        if args.exhaustive:
            spectra.append(exhaustive_spectrum(qpc, syndrome, settings))
        else:
            spectra.append(
                weight_spectrum(qpc, syndrome, args.p, args.list_size, settings)
            )
    with _output(args.out) as fh:
        write_spectrum_csv(spectra, fh, args.seed)
    if args.dominance is not None:
        p = args.p if args.p is not None else settings.analysis.spectrum_p
        with args.dominance.open("w", newline="") as fh:
            write_dominance_csv(spectra, p, fh)
    return 0


def _distance(args: argparse.Namespace, settings: Settings) -> int:
    qpc = _code_from_args(args)
    report = distance_report(
        qpc, args.list_size, args.p, exhaustive=args.exhaustive, settings=settings
    )
    with _output(args.out) as fh:
        write_distance_csv(qpc, report, fh)
    return 0


def _q1scan(args: argparse.Namespace, settings: Settings) -> int:
    rows = q1_scan(
        args.n,
        args.p_grid,
        args.trials,
        args.seed,
        args.indices,
        threads=_threads(args, settings),
        settings=settings,
    )
    with _output(args.out) as fh:
        write_q1_csv(rows, fh)
    return 0


def _betascan(args: argparse.Namespace, settings: Settings) -> int:
    sim_flags = (args.list_size, args.p, args.trials, args.seed)
    if any(f is not None for f in sim_flags) and None in sim_flags:
        raise ValueError(
            "simulation in betascan needs --list, --p, --trials and --seed"
        )
    rows = beta_scan(
        args.n,
        args.k,
        [parse_beta(tok) for tok in args.betas],
        list_size=args.list_size,
        p=args.p,
        trials=args.trials,
        seed=args.seed,
        threads=_threads(args, settings),
        settings=settings,
    )
    with _output(args.out) as fh:
        write_beta_csv(rows, fh)
    return 0


def cmd_analyze(args: argparse.Namespace, settings: Settings) -> int:
    handlers = {
        "spectrum": _spectrum,
        "distance": _distance,
        "q1scan": _q1scan,
        "betascan": _betascan,
    }
    return handlers[args.mode](args, settings)


def main(argv: list[str] | None = None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)

    logging.basicConfig(
        level=logging.DEBUG if args.verbose else logging.INFO,
        format="%(levelname)s %(name)s: %(message)s",
    )

    commands = {
        "construct": cmd_construct,
        "simulate": cmd_simulate,
        "analyze": cmd_analyze,
    }
    try:
        settings = load_settings(args.config)
        _check_writable(getattr(args, "out", None))
        return commands[args.command](args, settings)
    except (ValueError, OSError) as exc:
        print(f"Error: {exc}", file=sys.stderr)
        return 1


if __name__ == "__main__":
    sys.exit(main())
