"""Command-line front end.

Subcommands: analyze, sweep, mucr, oracle, rootlocus. The verdict doubles as
the exit code for scripting: 0 stable, 1 unstable, 2 validation or usage
failure, 3 numerical failure.
"""

from __future__ import annotations

import argparse
import json
import math
import sys

import numpy as np

from .analysis import analyze_network, mu_cr_surface, sweep_droop, sweep_line_length
from .admittance import KronReductionError, susceptance_set
from .charpoly import CharPolyModel, NumericalError, root_locus
from .netmodel import (
    DEFAULT_OMEGA_C,
    NetworkModel,
    ParseError,
    ValidationError,
    parse_network,
)
from .sampling import random_network
from .spectral import (
    CLUSTER_THRESHOLD,
    InternalConsistencyError,
    droop_matrix,
    weighted_spectrum,
)
from .statespace import theorem1_check

EXIT_STABLE = 0
EXIT_UNSTABLE = 1
EXIT_VALIDATION = 2
EXIT_NUMERICAL = 3


def _write_out(text: str, out_path: str | None) -> None:
    if out_path:
        with open(out_path, "w", encoding="utf-8") as fh:
            fh.write(text)
    else:
        sys.stdout.write(text)


def _load_model(path: str, omega_c: float | None) -> tuple[NetworkModel, str]:
    with open(path, encoding="utf-8") as fh:
        text = fh.read()
    model = parse_network(text)
    if omega_c is not None:
        # Command-line override of the document's power-filter cutoff.
        import dataclasses
        tau = 1.0 / omega_c
        inverters = tuple(dataclasses.replace(inv, tau=tau) for inv in model.inverters)
        model = dataclasses.replace(model, inverters=inverters, omega_c=omega_c)
    return model, text


def _cmd_analyze(args: argparse.Namespace) -> int:
    model, text = _load_model(args.input, args.omega_c)
    report = analyze_network(model, cluster_threshold=args.cluster_threshold,
                             input_text=text)
    _write_out(report.to_text() if args.pretty else report.to_json() + "\n",
               args.out)
    return EXIT_UNSTABLE if report.verdict == "unstable" else EXIT_STABLE


def _cmd_sweep(args: argparse.Namespace) -> int:
    model, _ = _load_model(args.input, args.omega_c)
    kind, _, target = args.parameter.partition(":")
    lo, hi = args.range
    if kind == "line-length":
        result = sweep_line_length(model, target, (lo, hi), args.count)
    elif kind == "droop-m":
        # The CLI takes droop percentages, matching the input document.
        result = sweep_droop(model, target, (lo / 100.0, hi / 100.0), args.count)
    else:
        raise KeyError(f"unknown sweep parameter '{args.parameter}' "
                       "(expected line-length:<line-id> or droop-m:<bus-id>)")
    _write_out(result.to_csv(), args.out)
    summary = dict(result.to_dict())
    del summary["mu"], summary["values"]  # bulk data lives in the CSV
    print(json.dumps(summary, sort_keys=True), file=sys.stderr)
    return EXIT_STABLE


def _cmd_mucr(args: argparse.Namespace) -> int:
    rho = np.linspace(args.rho[0], args.rho[1], int(args.rho[2]))
    k = np.linspace(args.k[0], args.k[1], int(args.k[2]))
    omega0 = 2.0 * math.pi * args.frequency_hz
    surface = mu_cr_surface(rho, k, tau=1.0 / args.omega_c, omega0=omega0)
    _write_out(surface.to_csv(), args.out)
    return EXIT_STABLE


def _cmd_oracle(args: argparse.Namespace) -> int:
    if args.random is not None:
        model = random_network(args.seed, m=args.random,
                               nonuniform_k=args.inject_nonuniform_k,
                               omega_c=args.omega_c)
    elif args.input:
        model, _ = _load_model(args.input, args.omega_c)
    else:
        print("oracle: need an input document or --random M", file=sys.stderr)
        return EXIT_VALIDATION
    spectrum = weighted_spectrum(susceptance_set(model).b_prime, droop_matrix(model))
    cp = CharPolyModel(rho=model.rho, k=model.k, tau=1.0 / model.omega_c,
                       omega0=model.base.omega0)
    report = theorem1_check(model, spectrum, cp)
    if report.status == "SKIPPED":
        print(f"SKIPPED ({report.notice}): theorem hypothesis violated")
        return EXIT_STABLE
    lines = ["quintic root                    <->  eig(A)"]
    for root, eig in report.pairs:
        lines.append(f"{root.real:+14.6f} {root.imag:+14.6f}j  <->  "
                     f"{eig.real:+14.6f} {eig.imag:+14.6f}j")
    lines.append(f"max distance = {report.max_root_distance:.3e} "
                 f"(spectral radius {report.spectral_radius:.3e})")
    lines.append(f"max eigenvector cosine distance = {report.max_cosine_distance:.3e}")
    lines.append(report.status)
    _write_out("\n".join(lines) + "\n", args.out)
    return EXIT_STABLE if report.passed else EXIT_NUMERICAL


def _cmd_rootlocus(args: argparse.Namespace) -> int:
    if args.input:
        model, _ = _load_model(args.input, args.omega_c)
        cp = CharPolyModel(rho=model.rho, k=model.k, tau=1.0 / model.omega_c,
                           omega0=model.base.omega0)
    else:
        omega_c = args.omega_c if args.omega_c is not None else DEFAULT_OMEGA_C
        cp = CharPolyModel(rho=args.rho, k=args.k, tau=1.0 / omega_c,
                           omega0=2.0 * math.pi * args.frequency_hz)
    result = root_locus(cp, (args.mu_range[0], args.mu_range[1]), args.count)
    _write_out(result.to_csv(), args.out)
    return EXIT_STABLE


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="droopspec",
        description="Small-signal stability of droop-controlled inverter "
                    "microgrids via the weighted susceptance spectrum.")
    sub = parser.add_subparsers(dest="command", required=True)

    def common(p: argparse.ArgumentParser) -> None:
        p.add_argument("--out", metavar="PATH", default=None,
                       help="write the result here instead of stdout")
        p.add_argument("--omega-c", type=float, default=None, metavar="RAD_S",
                       help="override the power-filter cutoff "
                            f"(document default {DEFAULT_OMEGA_C})")

    p = sub.add_parser("analyze", help="full stability report for a network")
    p.add_argument("input", help="network document (JSON)")
    p.add_argument("--pretty", action="store_true", help="human-readable text")
    p.add_argument("--cluster-threshold", type=float, default=CLUSTER_THRESHOLD,
                   metavar="F", help="eigenvector membership threshold "
                                     f"(default {CLUSTER_THRESHOLD})")
    common(p)
    p.set_defaults(func=_cmd_analyze)

    p = sub.add_parser("sweep", help="sweep a line length or droop gain")
    p.add_argument("input", help="network document (JSON)")
    p.add_argument("parameter",
                   help="line-length:<line-id> (km) or droop-m:<bus-id> (percent)")
    p.add_argument("--range", nargs=2, type=float, required=True,
                   metavar=("LO", "HI"))
    p.add_argument("--count", type=int, default=50)
    common(p)
    p.set_defaults(func=_cmd_sweep)

    p = sub.add_parser("mucr", help="mu_cr surface over a (rho, k) grid")
    p.add_argument("--rho", nargs=3, type=float, default=[0.7, 3.0, 20],
                   metavar=("LO", "HI", "N"))
    p.add_argument("--k", nargs=3, type=float, default=[0.5, 5.0, 20],
                   metavar=("LO", "HI", "N"))
    p.add_argument("--omega-c", type=float, default=DEFAULT_OMEGA_C, metavar="RAD_S")
    p.add_argument("--frequency-hz", type=float, default=50.0)
    p.add_argument("--out", metavar="PATH", default=None)
    p.set_defaults(func=_cmd_mucr)

    p = sub.add_parser("oracle", help="modal decomposition vs full state matrix")
    p.add_argument("input", nargs="?", default=None)
    p.add_argument("--random", type=int, default=None, metavar="M",
                   help="use a random M-inverter network instead of a document")
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--inject-nonuniform-k", action="store_true",
                   help="deliberately break the uniform droop ratio")
    common(p)
    p.set_defaults(func=_cmd_oracle)

    p = sub.add_parser("rootlocus", help="quintic roots swept over mu")
    p.add_argument("input", nargs="?", default=None,
                   help="network document; or give --rho/--k directly")
    p.add_argument("--rho", type=float, default=1.4)
    p.add_argument("--k", type=float, default=1.0)
    p.add_argument("--frequency-hz", type=float, default=50.0)
    p.add_argument("--mu-range", nargs=2, type=float, default=[60.0, 1000.0],
                   metavar=("LO", "HI"))
    p.add_argument("--count", type=int, default=100)
    common(p)
    p.set_defaults(func=_cmd_rootlocus)

    return parser


def main(argv: list[str] | None = None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        return args.func(args)
    except (NumericalError, KronReductionError, InternalConsistencyError,
            np.linalg.LinAlgError) as exc:
        print(f"numerical failure: {exc}", file=sys.stderr)
        return EXIT_NUMERICAL
    except (ParseError, ValidationError, KeyError, ValueError, OSError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_VALIDATION


if __name__ == "__main__":
    sys.exit(main())
