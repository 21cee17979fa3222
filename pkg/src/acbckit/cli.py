"""Command-line interface.

Exit codes: 0 success, 2 invalid input (design, records, arguments),
1 runtime failure.
"""
from __future__ import annotations

import argparse
import json
import sys
from fractions import Fraction
from pathlib import Path
from typing import Optional, Sequence

from acbckit.model import (
    DesignError,
    default_design,
    load_design,
    save_design,
    validate_design,
)

EXIT_OK = 0
EXIT_RUNTIME = 1
EXIT_INVALID = 2


def _design_from_args(args) -> "SurveyDesign":
    if args.design:
        return load_design(args.design)
    return default_design()


def _cmd_validate(args) -> int:
    design = _design_from_args(args)
    report = validate_design(design, n=args.respondents, N=args.population)
    print(report)
    if args.records:
        from acbckit.records import read_records

        records = read_records(args.records, design)
        print(f"records: {len(records)} valid respondent records")
    return EXIT_OK if report.small_study else EXIT_INVALID


def _cmd_simulate(args) -> int:
    from acbckit.simulation import BYO_MODES, estimate_hit_probabilities

    design = _design_from_args(args)
    utilities = None
    if args.utilities:
        utilities = [float(v) for v in args.utilities.split(",")]
    modes = list(BYO_MODES) if args.mode == "all" else [args.mode]
    seed = 0 if args.seed is None else args.seed
    rows = []
    names = [attr.label for attr in design.attributes]
    print(f"{'mode':<10}" + "".join(f"{n:>18}" for n in names))
    for mode in modes:
        est = estimate_hit_probabilities(
            design,
            mode,
            trials=args.trials,
            master_seed=seed,
            utilities=utilities,
            force_byo=args.force_byo,
        )
        cells = "".join(
            f"{p:>12.3f} ({se:.3f})"
            for p, se in zip(est.probabilities, est.standard_errors)
        )
        print(f"{mode:<10}{cells}")
        for name, p, se in zip(names, est.probabilities, est.standard_errors):
            rows.append(f"{mode},{name},{p:.6f},{se:.6f}")
    if args.out:
        Path(args.out).write_text(
            "mode,attribute,probability,standard_error\n"
            + "\n".join(rows)
            + "\n",
            encoding="utf-8",
        )
        print(f"wrote {args.out}")
    return EXIT_OK


def _cmd_paprika(args) -> int:
    from acbckit.engine import replay
    from acbckit.paprika import (
        InconsistentRespondentError,
        constraint_from_choice,
        export_feasible_csv,
        feasible_set,
        mi_counts,
    )
    from acbckit.records import read_records

    design = _design_from_args(args)
    records = read_records(args.records, design)
    if args.respondent:
        records = [r for r in records if r.id == args.respondent]
        if not records:
            raise DesignError(f"no record with id {args.respondent!r}")
    for record in records:
        constraints = [constraint_from_choice(t) for t in replay(record).tasks]
        frs = feasible_set(design, constraints, linear=args.linear)
        if frs.empty:
            print(f"{record.id}: no feasible ranking (respondent removed)")
            continue
        print(f"{record.id}: {frs.size} feasible rankings")
        try:
            credits = mi_counts(frs)
        except InconsistentRespondentError:  # unreachable after empty check
            continue
        for attr, row in zip(design.attributes, credits):
            parts = ", ".join(
                f"{label}={credit}"
                for label, credit in zip(attr.levels, row)
                if credit
            )
            print(f"  {attr.label}: {parts}")
        if args.out and len(records) == 1:
            export_feasible_csv(frs, args.out)
            print(f"wrote {args.out}")
    return EXIT_OK


def _frac_str(x: Fraction) -> str:
    return f"{x} ({float(x):.4f})" if x.denominator != 1 else str(x)


def _cmd_estimate(args) -> int:
    from acbckit.estimation import (
        admissible_populations,
        ensemble_size,
        mae_bound,
        mle_estimate,
        population_proportions,
        wmae_curve,
    )

    counts = [int(v) for v in args.counts.split(",")]
    N = args.population
    print(f"sample counts: {tuple(counts)}  n={sum(counts)}  N={N}")
    print(f"admissible populations: {ensemble_size(counts, N)}")
    print(f"worst-case error bound: {_frac_str(mae_bound(counts, N))}")
    mle = mle_estimate(counts, N)
    flag = " (not unique)" if mle.non_unique else ""
    print(f"maximum likelihood: {mle.counts}{flag}")
    if mle.wmae is not None:
        print(f"  weighted mean abs error: {_frac_str(mle.wmae)}")
    prop = population_proportions(counts, N)
    est = prop.estimate
    flag = " (not unique)" if est.non_unique else ""
    print(f"error-minimizing: {est.counts}{flag}")
    print(f"  weighted mean abs error: {_frac_str(est.wmae)}")
    shares = ", ".join(
        f"{float(p):.2f}" for p in prop.proportions
    )
    print(f"  proportions: {shares}  +/- {float(prop.error):.2f}")
    if args.out:
        ensemble = admissible_populations(counts, N)
        lines = ["id," + ",".join(f"count_{i+1}" for i in range(len(counts))) + ",wmae"]
        for k, (pop, value) in enumerate(
            zip(ensemble.populations, wmae_curve(ensemble)), start=1
        ):
            lines.append(
                ",".join([str(k), *map(str, pop), f"{float(value):.6f}"])
            )
        Path(args.out).write_text("\n".join(lines) + "\n", encoding="utf-8")
        print(f"wrote {args.out}")
    return EXIT_OK


def _parse_population_sizes(pairs: Sequence[str]) -> dict[str, int]:
    sizes = {}
    for pair in pairs:
        tag, sep, value = pair.partition("=")
        if not sep or not value.isdigit():
            raise DesignError(
                f"population size {pair!r} must look like TAG=COUNT"
            )
        sizes[tag] = int(value)
    return sizes


def _cmd_report(args) -> int:
    from acbckit.report import run_report

    sizes = _parse_population_sizes(args.population_size)
    outdir = args.out or "report_out"
    report, written = run_report(
        args.design, args.records, sizes, outdir, linear=args.linear
    )
    for pop in report.populations:
        removed = len(pop.paprika.removed)
        note = f", {removed} removed" if removed else ""
        print(
            f"{pop.tag}: n={pop.n_recruited}{note}, N={pop.N}"
        )
    for path in written:
        print(f"wrote {path}")
    return EXIT_OK


def _cmd_serve(args) -> int:
    import uvicorn

    from acbckit.service import create_app

    design = _design_from_args(args)
    app = create_app(
        design,
        study_id=args.study,
        storage_dir=args.storage,
        seed=args.seed,
        static_dir=args.static,
    )
    uvicorn.run(app, host=args.host, port=args.port, log_level="warning")
    return EXIT_OK


def _cmd_init_design(args) -> int:
    out = args.out or "design.json"
    save_design(default_design(), out)
    print(f"wrote {out}")
    return EXIT_OK


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="acbckit",
        description=(
            "Adaptive choice survey toolkit: tournament elicitation, "
            "feasible-ranking analysis, and small-sample population estimates."
        ),
    )
    parser.add_argument("--seed", type=int, default=None, help="master random seed")
    parser.add_argument("--out", default=None, help="output file or directory")
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("validate", help="check a design and optional records file")
    p.add_argument("--design", default=None, help="design JSON (default: built-in)")
    p.add_argument("--respondents", "-n", type=int, required=True)
    p.add_argument("--population", "-N", type=int, required=True)
    p.add_argument("--records", default=None, help="records JSONL to validate")
    p.set_defaults(func=_cmd_validate)

    p = sub.add_parser("simulate", help="Monte Carlo recovery-rate study")
    p.add_argument("--design", default=None)
    p.add_argument(
        "--mode",
        choices=["ideal", "typical", "random", "all"],
        default="all",
    )
    p.add_argument("--trials", type=int, default=10_000)
    p.add_argument(
        "--utilities",
        default=None,
        help="comma-separated per-level utilities, highest first (default 2,1,0)",
    )
    p.add_argument(
        "--force-byo",
        action="store_true",
        help="always keep the anchor profile in the tournament field",
    )
    p.set_defaults(func=_cmd_simulate)

    p = sub.add_parser("paprika", help="feasible rankings per respondent")
    p.add_argument("--design", default=None)
    p.add_argument("--records", required=True)
    p.add_argument("--respondent", default=None, help="restrict to one id")
    p.add_argument(
        "--linear",
        action="store_true",
        help="require an exact utility witness for each surviving ranking",
    )
    p.set_defaults(func=_cmd_paprika)

    p = sub.add_parser("estimate", help="population estimates from sample counts")
    p.add_argument("--counts", required=True, help="comma-separated level counts")
    p.add_argument("--population", "-N", type=int, required=True)
    p.set_defaults(func=_cmd_estimate)

    p = sub.add_parser("report", help="full study report from records")
    p.add_argument("--design", required=True)
    p.add_argument("--records", required=True)
    p.add_argument(
        "--population-size",
        action="append",
        default=[],
        metavar="TAG=COUNT",
        help="population size per tag (repeatable)",
    )
    p.add_argument("--linear", action="store_true")
    p.set_defaults(func=_cmd_report)

    p = sub.add_parser("serve", help="run the survey HTTP service")
    p.add_argument("--design", default=None)
    p.add_argument("--study", default="default")
    p.add_argument("--storage", default=".", help="directory for event logs")
    p.add_argument("--host", default="127.0.0.1")
    p.add_argument("--port", type=int, default=8000)
    p.add_argument("--static", default=None, help="directory of UI assets to serve")
    p.set_defaults(func=_cmd_serve)

    p = sub.add_parser("init-design", help="write the built-in example design")
    p.set_defaults(func=_cmd_init_design)

    return parser


def main(argv: Optional[Sequence[str]] = None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        return args.func(args)
    except DesignError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_INVALID
    except (OSError, json.JSONDecodeError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_RUNTIME
    except KeyboardInterrupt:
        return EXIT_RUNTIME
    except Exception as exc:  # noqa: BLE001 - map anything else to runtime
        print(f"error: {type(exc).__name__}: {exc}", file=sys.stderr)
        return EXIT_RUNTIME


if __name__ == "__main__":
    sys.exit(main())
