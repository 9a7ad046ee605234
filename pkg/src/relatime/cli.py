"""Command-line front end: validate scenarios, run sweeps, emit CSV.

Subcommands mirror the runners in ``scenario``: ``validate``, ``sweep``,
``clock-recovery``, ``pearle-compare`` and ``report``. Output goes to
stdout unless ``--out`` names a file. Failures print a machine-parsable
prefix (E_PARSE / E_VALIDATION / E_NUMERIC) on stderr and exit 2 for
parse or validation problems, 3 for numerical ones.
"""

from __future__ import annotations

import argparse
import sys
from pathlib import Path

from .errors import (
    ConsistencyError,
    EigensolverError,
    QuadratureDriftError,
    RelatimeError,
    ScenarioParseError,
    ZeroProbabilityError,
)
from .scenario import (
    parse_scenario,
    run_clock_recovery,
    run_decoherence_sweep,
    run_pearle_compare,
    run_report,
)

EXIT_OK = 0
EXIT_INVALID = 2
EXIT_NUMERIC = 3

_NUMERIC_ERRORS = (
    QuadratureDriftError,
    EigensolverError,
    ZeroProbabilityError,
    ConsistencyError,
)

_RUNNERS = {
    "sweep": run_decoherence_sweep,
    "clock-recovery": run_clock_recovery,
    "pearle-compare": run_pearle_compare,
    "report": run_report,
}


def _add_common(sub: argparse.ArgumentParser, with_out: bool = True) -> None:
    sub.add_argument("file", help="scenario file to read")
    if with_out:
        sub.add_argument("--out", help="write CSV here instead of stdout")
    sub.add_argument(
        "--nodes", type=int, default=64, help="quadrature node count (default 64)"
    )
    sub.add_argument(
        "--threshold",
        type=float,
        default=1e-6,
        help="complete-decoherence cutoff on off-diagonal magnitude",
    )
    sub.add_argument(
        "--seed", type=int, default=0, help="64-bit seed for randomized presets"
    )


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="relatime",
        description="relational-time evolution sweeps over scenario files",
    )
    sub = parser.add_subparsers(dest="command", required=True)

    _add_common(sub.add_parser("validate", help="parse and validate only"),
                with_out=False)
    _add_common(sub.add_parser("sweep", help="decoherence sweep over t_B or lambda"))
    _add_common(
        sub.add_parser(
            "clock-recovery",
            help="conditional readout over the pointer grid",
        )
    )
    _add_common(
        sub.add_parser(
            "pearle-compare",
            help="collapse dynamics vs Gaussian relational state",
        )
    )
    _add_common(sub.add_parser("report", help="per-pair coherence report"))
    return parser


def _fail(prefix: str, exc: Exception, code: int) -> int:
    print(f"{prefix}: {exc}", file=sys.stderr)
    return code


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    if not 0 <= args.seed < 2**64:
        print("E_VALIDATION: --seed must fit in 64 unsigned bits", file=sys.stderr)
        return EXIT_INVALID

    try:
        text = Path(args.file).read_text(encoding="utf-8")
    except OSError as exc:
        return _fail("E_VALIDATION", exc, EXIT_INVALID)

    try:
        scenario = parse_scenario(text, seed=args.seed)
    except ScenarioParseError as exc:
        return _fail("E_PARSE", exc, EXIT_INVALID)
    except (RelatimeError, ValueError) as exc:
        return _fail("E_VALIDATION", exc, EXIT_INVALID)

    if args.command == "validate":
        clock = "none"
        if scenario.clock is not None:
            clock = f"{scenario.clock.dim} x {scenario.clock.tick}"
        print(
            f"OK: dimension {scenario.dimension}, kernel "
            f"{scenario.kernel_spec.kind}, clock {clock}, "
            f"sha256 {scenario.digest()}"
        )
        return EXIT_OK

    runner = _RUNNERS[args.command]
    try:
        table = runner(
            scenario,
            nodes=args.nodes,
            threshold=args.threshold,
            seed=args.seed,
        )
        csv_text = table.to_csv()
    except _NUMERIC_ERRORS as exc:
        return _fail("E_NUMERIC", exc, EXIT_NUMERIC)
    except (RelatimeError, ValueError) as exc:
        return _fail("E_VALIDATION", exc, EXIT_INVALID)

    if args.out:
        Path(args.out).write_text(csv_text, encoding="utf-8")
    else:
        sys.stdout.write(csv_text)
    return EXIT_OK


if __name__ == "__main__":
    sys.exit(main())
