"""Command-line scenario runner.

Examples::

    ctcsim --scenario distinguish-correlated --n-sweep 2,4,6,8,10 --out sweep.csv
    ctcsim --config my_scenario.json --format json --out result.json
    ctcsim --verify-goldens goldens/

Exit codes: 0 success, 1 invalid spec, 2 simulation error, 3 golden mismatch.
"""

from __future__ import annotations

import argparse
import logging
import sys
from dataclasses import replace

from ctcsim.scenarios import (
    BUILTIN_SCENARIOS,
    SCENARIO_CLAIMS,
    ScenarioSpec,
    SimulationError,
    SpecError,
    load_config,
    run_sweep,
    scenario_spec,
    verify_goldens,
    write_goldens,
)
from ctcsim.qmath import QMathError

EXIT_OK, EXIT_SPEC, EXIT_SIM, EXIT_GOLDEN = 0, 1, 2, 3


def _parse_sweep(text: str) -> tuple[int, ...]:
    try:
        return tuple(int(x) for x in text.split(",") if x.strip())
    except ValueError:
        raise SpecError("n", f"bad sweep list {text!r}")


def _parse_stage(text: str):
    if text == "auto":
        return "auto"
    try:
        return int(text)
    except ValueError:
        raise SpecError("retained_stage", f"expected an integer or 'auto', got {text!r}")


def build_parser() -> argparse.ArgumentParser:
    p = argparse.ArgumentParser(prog="ctcsim", description=__doc__.split("\n\n")[0])
    src = p.add_mutually_exclusive_group()
    src.add_argument("--scenario", choices=sorted(BUILTIN_SCENARIOS))
    src.add_argument("--config", metavar="PATH", help="JSON scenario config")
    src.add_argument("--verify-goldens", metavar="DIR")
    src.add_argument("--write-goldens", metavar="DIR")
    src.add_argument("--list", action="store_true", help="list builtin scenarios")
    size = p.add_mutually_exclusive_group()
    size.add_argument("--n", type=int)
    size.add_argument("--n-sweep", metavar="a,b,c")
    p.add_argument("--form", help="correlated, iid or measured:K")
    p.add_argument("--unitary")
    p.add_argument("--stage", help="retained stage (integer or auto)")
    p.add_argument("--ctc-seed", choices=("mixed", "zero"))
    p.add_argument("--tol", type=float)
    p.add_argument("--out", metavar="PATH")
    p.add_argument("--format", choices=("csv", "json"))
    p.add_argument("-v", "--verbose", action="count", default=0)
    return p


def spec_from_args(args) -> ScenarioSpec:
    if args.config:
        spec = load_config(args.config)
        base_name = None
    else:
        base_name = args.scenario
    n = None
    if args.n is not None:
        n = args.n
    elif args.n_sweep:
        n = _parse_sweep(args.n_sweep)
    overrides = dict(
        n=n,
        form=args.form,
        unitary=args.unitary,
        retained_stage=_parse_stage(args.stage) if args.stage else None,
        ctc_seed=args.ctc_seed,
        tol=args.tol,
        output_path=args.out,
        format=args.format,
    )
    if base_name:
        return scenario_spec(base_name, **overrides)
    return replace(spec, **{k: v for k, v in overrides.items() if v is not None})


def _print_table(results) -> None:
    for r in results:
        m = r.metrics
        line = (
            f"{r.scenario} form={r.form} U={r.unitary} n={r.n} s={r.stage} "
            f"MI={m['quantum_mutual_information']:.10f} "
            f"MI_zz={m['classical_mutual_information_zz']:.10f}"
        )
        if m["helstrom_success"] is not None:
            line += f" helstrom={m['helstrom_success']:.10f}"
        if r.deutsch is not None:
            line += f" deutsch_ctc_delta={r.deutsch['ctc_delta']:.2e}"
        if r.extrapolated:
            line += " [extrapolated]"
        print(line)


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    level = logging.DEBUG if args.verbose >= 2 else logging.INFO if args.verbose else logging.WARNING
    logging.basicConfig(level=level, format="%(levelname)s: %(message)s")

    if args.list:
        for name in BUILTIN_SCENARIOS:
            print(f"{name:24s} {SCENARIO_CLAIMS[name]}")
        return EXIT_OK
    if args.write_goldens:
        for path in write_goldens(args.write_goldens):
            print(f"wrote {path}")
        return EXIT_OK
    if args.verify_goldens:
        report = verify_goldens(args.verify_goldens)
        print("\n".join(report.lines()))
        return EXIT_OK if report.passed else EXIT_GOLDEN
    if not (args.scenario or args.config):
        print("error: one of --scenario, --config, --verify-goldens is required", file=sys.stderr)
        return EXIT_SPEC

    try:
        spec = spec_from_args(args)
        results = run_sweep(spec)
    except SpecError as exc:
        print(f"invalid spec: {exc}", file=sys.stderr)
        return EXIT_SPEC
    except (SimulationError, QMathError) as exc:
        print(f"simulation error: {exc}", file=sys.stderr)
        return EXIT_SIM
    _print_table(results)
    return EXIT_OK


if __name__ == "__main__":
    sys.exit(main())
