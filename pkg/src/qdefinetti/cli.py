"""Command-line front end.

Exit codes: 0 when the check passes (or the run converges), 1 when a check
fails, 2 on unreadable or invalid input.
"""
from __future__ import annotations

import argparse
import json
import logging
import sys
from pathlib import Path

import numpy as np

from . import channels as ch
from . import definetti as dft
from . import io
from .linalg import DimensionError, NotHermitianError
from .states import InvalidStateError, basis_state
from .tomography import ImpossibleRecordError, InvalidPovmError, UnknownIdError, run_experiment

EXIT_OK, EXIT_FAIL, EXIT_INPUT = 0, 1, 2

logger = logging.getLogger("qdefinetti")


class _Emitter:
    """Writes a report in the requested format and, when asked, a figure beside it."""

    def __init__(self, args):
        self.out = args.out
        self.fmt = args.format
        self.figure = args.figure
        if self.figure is None and self.out is not None and not args.no_figure:
            self.figure = str(Path(self.out).with_suffix(".png"))
        if args.no_figure:
            self.figure = None

    def emit(self, doc: dict, rows: list[dict], plot=None):
        text = io.dumps_csv(rows) if self.fmt == "csv" else io.dumps_json(doc)
        io.write_text(text, self.out)
        if self.figure and plot is not None:
            plot(self.figure)
            logger.info("figure written to %s", self.figure)


def _add_report_flags(p, figures=True):
    p.add_argument("--out", help="write the report here instead of stdout")
    p.add_argument("--format", choices=("json", "csv"), default="json")
    p.add_argument("--tol", type=float, help="override the module tolerance for this check")
    if figures:
        p.add_argument("--figure", help="figure path (default: report path with .png suffix)")
        p.add_argument("--no-figure", action="store_true", help="do not render a figure")


def cmd_check_cp(args) -> int:
    c = io.load_channel(args.channel)
    tol = ch.TOL_PSD if args.tol is None else args.tol
    ok, lo = ch.is_cp(c, tol)
    ev = np.linalg.eigvalsh(c.choi)
    doc = {"schema": "qdefinetti.check-cp/1", "passed": ok, "min_eigenvalue": lo,
           "tolerance": tol, "eigenvalues": [float(x) for x in ev]}
    rows = [{"index": i, "eigenvalue": float(x)} for i, x in enumerate(ev)]
    from .plotting import plot_spectrum

    _Emitter(args).emit(doc, rows, lambda path: plot_spectrum(ev, path))
    return EXIT_OK if ok else EXIT_FAIL


def cmd_check_tp(args) -> int:
    c = io.load_channel(args.channel)
    tol = ch.TOL_TP if args.tol is None else args.tol
    ok, dev = ch.is_tp(c, tol)
    doc = {"schema": "qdefinetti.check-tp/1", "passed": ok, "max_deviation": dev, "tolerance": tol}
    _Emitter(args).emit(doc, [{"passed": ok, "max_deviation": dev, "tolerance": tol}])
    return EXIT_OK if ok else EXIT_FAIL


def cmd_check_exchangeable(args) -> int:
    ens = io.load_ensemble(args.ensemble)
    tol = max(ch.TOL_SYM, ch.TOL_EXT) if args.tol is None else args.tol
    report = dft.verify_exchangeable_prefix(ens, args.n_max, tol)
    doc = report.to_dict()
    from .plotting import plot_exchangeability

    _Emitter(args).emit(doc, doc["levels"], lambda path: plot_exchangeability(report, path))
    return EXIT_OK if report.passed else EXIT_FAIL


def cmd_build_mixture(args) -> int:
    ens = io.load_ensemble(args.ensemble)
    c = dft.mixture_power(ens, args.n)
    io.save_channel(c, args.out)
    return EXIT_OK


def cmd_extract_weights(args) -> int:
    target = io.load_channel(args.channel)
    doc_dict = io.read_json(args.dictionary)
    dictionary = io.dictionary_from_dict(doc_dict)
    labels = io.member_labels(doc_dict)
    n = target.n if args.n is None else args.n
    converged = True
    try:
        w, res = dft.extract_weights(target, dictionary, n)
    except dft.ConvergenceError as exc:
        logger.error("%s", exc)
        converged, w, res = False, exc.weights, exc.residual
    unique = dft.uniqueness_probe(dictionary, n)
    passed = converged and (args.max_residual is None or res <= args.max_residual)
    doc = {"schema": "qdefinetti.weights/1", "n": n, "converged": converged, "passed": passed,
           "residual": res, "unique": unique, "labels": labels, "weights": [float(x) for x in w]}
    rows = [{"label": lab, "weight": float(x)} for lab, x in zip(labels, w)]
    from .plotting import plot_weights

    _Emitter(args).emit(doc, rows, lambda path: plot_weights(w, labels, path,
                                                             f"recovered weights (residual {res:.2e})"))
    return EXIT_OK if passed else EXIT_FAIL


def cmd_scan_tp_violation(args) -> int:
    ens = io.load_ensemble(args.ensemble)
    if args.state is not None:
        candidates = [("file", io.state_from_dict(io.read_json(args.state), ens.d))]
    elif args.basis_state is not None:
        candidates = [(f"basis:{args.basis_state}", basis_state(ens.d, args.basis_state))]
    else:
        candidates = [(f"basis:{k}", basis_state(ens.d, k)) for k in range(ens.d)]
    ns = list(range(1, args.n_max + 1))
    rows, flagged = [], []
    for name, rho in candidates:
        first = dft.tp_violation_scan(ens, rho, args.n_max, args.threshold)
        flagged.append({"state": name, "first_n": first})
        for n in ns:
            rows.append({"state": name, "n": n, "moment": dft.moment_trace(ens, rho, n)})
    hits = [f["first_n"] for f in flagged if f["first_n"] is not None]
    doc = {"schema": "qdefinetti.tp-scan/1", "threshold": args.threshold, "n_max": args.n_max,
           "flagged": bool(hits), "first_n": min(hits) if hits else None,
           "states": flagged, "moments": rows}

    def plot(path):
        from .plotting import plot_moments

        plot_moments(ns, [r["moment"] for r in rows[:len(ns)]], args.threshold, path,
                     f"output-trace moments ({candidates[0][0]})")

    _Emitter(args).emit(doc, rows, plot)
    return EXIT_FAIL if hits else EXIT_OK


def cmd_tomography_run(args) -> int:
    config = io.experiment_from_dict(io.read_json(args.config), seed=args.seed, shots=args.shots)
    traj = run_experiment(config)
    doc = io.trajectory_to_dict(traj)
    from .plotting import plot_trajectory

    _Emitter(args).emit(doc, doc["steps"], lambda path: plot_trajectory(traj, path))
    return EXIT_FAIL if traj.converged is False else EXIT_OK


def cmd_random_channel(args) -> int:
    io.save_channel(ch.random_cptp(args.d, args.kraus_rank, args.seed), args.out)
    return EXIT_OK


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="qdefinetti", description=__doc__.splitlines()[0])
    parser.add_argument("-v", "--verbose", action="store_true")
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("check-cp", help="complete positivity via the Choi spectrum")
    p.add_argument("channel")
    _add_report_flags(p)
    p.set_defaults(func=cmd_check_cp)

    p = sub.add_parser("check-tp", help="trace preservation via the Choi marginal")
    p.add_argument("channel")
    _add_report_flags(p, figures=False)
    p.set_defaults(func=cmd_check_tp, figure=None, no_figure=True)

    p = sub.add_parser("check-exchangeable", help="symmetry and extendibility of an ensemble's sequence")
    p.add_argument("ensemble")
    p.add_argument("--n-max", type=int, default=3)
    _add_report_flags(p)
    p.set_defaults(func=cmd_check_exchangeable)

    p = sub.add_parser("build-mixture", help="write the n-system mixture channel of an ensemble")
    p.add_argument("ensemble")
    p.add_argument("--n", type=int, required=True)
    p.add_argument("--out", help="channel file (stdout if omitted)")
    p.set_defaults(func=cmd_build_mixture)

    p = sub.add_parser("extract-weights", help="recover mixture weights over a dictionary")
    p.add_argument("channel")
    p.add_argument("dictionary")
    p.add_argument("--n", type=int, help="number of systems (default: the channel's)")
    p.add_argument("--max-residual", type=float, help="fail (exit 1) above this residual")
    _add_report_flags(p)
    p.set_defaults(func=cmd_extract_weights)

    p = sub.add_parser("scan-tp-violation", help="look for growth of output-trace moments")
    p.add_argument("ensemble")
    p.add_argument("--n-max", type=int, default=20)
    p.add_argument("--threshold", type=float, default=0.25)
    g = p.add_mutually_exclusive_group()
    g.add_argument("--basis-state", type=int, help="scan only this computational basis state")
    g.add_argument("--state", help="state file; default scans every basis state")
    _add_report_flags(p)
    p.set_defaults(func=cmd_scan_tp_violation)

    p = sub.add_parser("tomography-run", help="simulate Bayesian process tomography")
    p.add_argument("config")
    p.add_argument("--seed", type=int, help="override the config seed")
    p.add_argument("--shots", type=int, help="override the config shot count")
    _add_report_flags(p)
    p.set_defaults(func=cmd_tomography_run)

    p = sub.add_parser("random-channel", help="write a random CPTP channel")
    p.add_argument("--d", type=int, default=2)
    p.add_argument("--kraus-rank", type=int, default=2)
    p.add_argument("--seed", type=int, required=True)
    p.add_argument("--out")
    p.set_defaults(func=cmd_random_channel)
    return parser


_INPUT_ERRORS = (OSError, json.JSONDecodeError, io.FormatError, DimensionError, NotHermitianError,
                 InvalidStateError, InvalidPovmError, UnknownIdError, ImpossibleRecordError,
                 KeyError, ValueError, TypeError)


def main(argv=None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING,
                        format="%(levelname)s %(name)s: %(message)s")
    try:
        return args.func(args)
    except _INPUT_ERRORS as exc:
        print(f"qdefinetti {args.command}: {exc}", file=sys.stderr)
        return EXIT_INPUT


if __name__ == "__main__":
    sys.exit(main())
