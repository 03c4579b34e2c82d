"""Command-line interface.

Exit codes: 0 success, 1 validation error, 2 computation error, 3 I/O error.
"""

from __future__ import annotations

import argparse
import json
import re
import sys
import warnings
from pathlib import Path

from . import __version__
from .cellsim import PRNG, compare_to_analytic, simulate_replications
from .errors import ComputationError, ValidationError
from .mcdm import ahp_weights, ahp_weights_geometric, consistency_ratio
from .report import (
    CR_LIMIT,
    cell_blocking,
    cell_spec,
    metrics_table,
    render_table,
    run_rank,
    scenario_meta,
)
from .scenario import CRITERION_LABELS, load_pairwise, load_scenario_file, load_weights
from .teletraffic import blocking_probabilities, effective_channels

EXIT_OK, EXIT_VALIDATION, EXIT_COMPUTATION, EXIT_IO = 0, 1, 2, 3


def _read(path) -> str:
    return Path(path).read_text()


def cmd_evaluate(args) -> int:
    scenario = load_scenario_file(args.scenario)
    table = metrics_table(scenario, args.mode, args.override_blocking)
    out = render_table(table, args.format)
    if args.format == "text" and table.meta.get("reference"):
        bad = table.meta["reference_mismatches"]
        out += f"\nreference {table.meta['reference']}: {len(bad)} delay cell(s) differ by more than 1e-6 s\n"
        for c in bad:
            tag = " (documented anomaly)" if c["documented_anomaly"] else ""
            out += (f"  {c['protocol']} {c['column']}: computed {c['computed']:.10g}, "
                    f"published {c['published']:.10g}{tag}\n")
    sys.stdout.write(out)
    return EXIT_OK


def cmd_rank(args) -> int:
    scenario = load_scenario_file(args.scenario)
    weights = pairwise = None
    if args.weights:
        weights = load_weights(_read(args.weights), scenario.mcdm.criteria)
    if args.pairwise:
        pairwise, criteria = load_pairwise(_read(args.pairwise))
        if criteria and tuple(criteria) != tuple(scenario.mcdm.criteria):
            raise ValidationError("pairwise criteria do not match the scenario's criteria list")
    with warnings.catch_warnings():
        warnings.simplefilter("ignore")
        report = run_rank(scenario, weights, pairwise, args.override_blocking)
    if args.format == "json":
        sys.stdout.write(json.dumps(report.as_dict(), indent=2) + "\n")
    else:
        sys.stdout.write(report.render())
    return EXIT_OK


def _parse_sweep(text: str, channels: int) -> range:
    m = re.fullmatch(r"g=(\d+)\.\.(\d+|C-1)", text.replace(" ", ""))
    if not m:
        raise ValidationError(f"--sweep expects g=A..B (B may be C-1), got {text!r}")
    hi = channels - 1 if m.group(2) == "C-1" else int(m.group(2))
    return range(int(m.group(1)), hi + 1)


def cmd_blocking(args) -> int:
    scenario = load_scenario_file(args.scenario)
    C = scenario.cell.channels_total
    rows = []
    if args.sweep:
        for g in _parse_sweep(args.sweep, C):
            for kind in ("hard", "soft"):
                if effective_channels(kind, C) <= g:
                    continue
                rows.append((kind, cell_blocking(scenario, kind, g)))
    else:
        for kind in ("hard", "soft"):
            rows.append((kind, cell_blocking(scenario, kind)))
    if args.format == "json":
        payload = {"rows": [dict(handover=k, **vars(b)) for k, b in rows], "meta": scenario_meta(scenario)}
        sys.stdout.write(json.dumps(payload, indent=2) + "\n")
        return EXIT_OK
    print(f"{'handover':<8} {'C':>3} {'g':>3} {'lambda_new':>11} {'lambda_ho':>11} "
          f"{'P_block_new':>12} {'P_drop_ho':>12}")
    for kind, b in rows:
        print(f"{kind:<8} {b.channels:>3} {b.guard:>3} {b.lambda_new:>11.5g} {b.lambda_handoff:>11.5g} "
              f"{b.p_block_new:>12.5g} {b.p_drop_handoff:>12.5g}")
    return EXIT_OK


def cmd_simulate(args) -> int:
    scenario = load_scenario_file(args.scenario)
    b = cell_blocking(scenario, args.handover)
    spec = cell_spec(scenario, args.handover).with_handoff_rate(b.lambda_handoff)
    stats = simulate_replications(spec, args.arrivals, args.seed, args.replications)
    analytic = blocking_probabilities(spec)
    payload = {"spec": {"channels": spec.channels, "guard": spec.guard, "lambda_new": spec.lambda_new,
                        "lambda_handoff": spec.lambda_handoff, "holding_rate": spec.holding_rate},
               "stats": stats.as_dict(),
               "analytic": {"p_block_new": analytic.p_block_new, "p_drop_handoff": analytic.p_drop_handoff},
               "meta": scenario_meta(scenario, prng=PRNG, seed=args.seed, replications=args.replications,
                                     arrivals=args.arrivals)}
    if stats.new_offered or stats.handoff_offered:
        cmp = compare_to_analytic(stats, spec)
        payload["comparison"] = {
            name: {"z": c.z, "passed": c.passed, "note": c.note}
            for name, c in (("p_block_new", cmp.block), ("p_drop_handoff", cmp.drop))
        }
    if args.format == "json":
        sys.stdout.write(json.dumps(payload, indent=2) + "\n")
        return EXIT_OK
    s = stats
    print(f"cell: C={spec.channels} g={spec.guard} lambda_new={spec.lambda_new:.5g}/s "
          f"lambda_handoff={spec.lambda_handoff:.5g}/s holding rate={spec.holding_rate:.5g}/s")
    print(f"seed {args.seed}, {args.replications} replication(s) of {args.arrivals} arrivals, {PRNG}")
    for label, est, se, ref, key in (("new-call blocking", s.p_block_hat, s.se_block,
                                      analytic.p_block_new, "p_block_new"),
                                     ("handoff dropping", s.p_drop_hat, s.se_drop,
                                      analytic.p_drop_handoff, "p_drop_handoff")):
        cmp = payload.get("comparison", {}).get(key)
        if est is None:
            print(f"  {label:<18} no arrivals offered (analytic {ref:.6g})")
            continue
        verdict = "" if cmp is None or cmp["z"] is None else f"  z = {cmp['z']:+.2f}"
        print(f"  {label:<18} {est:.6g} +/- {se or 0:.2g} (analytic {ref:.6g}){verdict}")
    return EXIT_OK


def cmd_ahp(args) -> int:
    matrix, criteria = load_pairwise(_read(args.pairwise))
    w, lam = ahp_weights(matrix)
    ci, cr = consistency_ratio(matrix)
    names = criteria or [f"C{i + 1}" for i in range(len(w))]
    if args.format == "json":
        sys.stdout.write(json.dumps({
            "criteria": list(names), "weights": w.tolist(),
            "geometric_mean_weights": ahp_weights_geometric(matrix).tolist(),
            "lambda_max": lam, "CI": ci, "CR": cr, "consistent": cr <= CR_LIMIT,
        }, indent=2) + "\n")
        return EXIT_OK
    for name, x in zip(names, w):
        print(f"{CRITERION_LABELS.get(name, name):<32} {x:.6f}")
    print(f"lambda_max = {lam:.6f}  CI = {ci:.6f}  CR = {cr:.4f}")
    if cr > CR_LIMIT:
        print(f"warning: CR above {CR_LIMIT}; judgements should be revised")
    return EXIT_OK


def build_parser() -> argparse.ArgumentParser:
    p = argparse.ArgumentParser(prog="handover", description=__doc__.splitlines()[0])
    p.add_argument("--version", action="version", version=f"%(prog)s {__version__}")
    sub = p.add_subparsers(dest="command", required=True)

    e = sub.add_parser("evaluate", help="per-protocol metric table")
    e.add_argument("--scenario", required=True)
    e.add_argument("--mode", choices=("parametric", "numeric"), default="numeric")
    e.add_argument("--format", choices=("text", "csv", "json"), default="text")
    e.add_argument("--override-blocking", action="store_true",
                   help="use the published blocking probabilities")
    e.set_defaults(func=cmd_evaluate)

    r = sub.add_parser("rank", help="AHP/TOPSIS ranking of the protocols")
    r.add_argument("--scenario", required=True)
    src = r.add_mutually_exclusive_group()
    src.add_argument("--weights", help="file with a [weights] section")
    src.add_argument("--pairwise", help="file with a [pairwise] section")
    r.add_argument("--override-blocking", action="store_true",
                   help="use the published blocking probabilities")
    r.add_argument("--format", choices=("text", "json"), default="text")
    r.set_defaults(func=cmd_rank)

    b = sub.add_parser("blocking", help="guard-channel blocking probabilities")
    b.add_argument("--scenario", required=True)
    b.add_argument("--sweep", nargs="?", const="g=0..C-1", metavar="g=A..B",
                   help="sweep the number of guard channels")
    b.add_argument("--format", choices=("text", "json"), default="text")
    b.set_defaults(func=cmd_blocking)

    s = sub.add_parser("simulate", help="discrete-event simulation of the scenario's cell")
    s.add_argument("--scenario", required=True)
    s.add_argument("--arrivals", type=int, required=True)
    s.add_argument("--seed", type=int, required=True)
    s.add_argument("--replications", type=int, default=1)
    s.add_argument("--handover", choices=("hard", "soft"), default="hard")
    s.add_argument("--format", choices=("text", "json"), default="text")
    s.set_defaults(func=cmd_simulate)

    a = sub.add_parser("ahp", help="AHP weights and consistency for a pairwise matrix")
    a.add_argument("--pairwise", required=True)
    a.add_argument("--format", choices=("text", "json"), default="text")
    a.set_defaults(func=cmd_ahp)
    return p


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    try:
        return args.func(args)
    except ValidationError as e:
        print(f"error: {e}", file=sys.stderr)
        return EXIT_VALIDATION
    except ComputationError as e:
        print(f"error: {e}", file=sys.stderr)
        return EXIT_COMPUTATION
    except OSError as e:
        print(f"error: {e}", file=sys.stderr)
        return EXIT_IO


if __name__ == "__main__":
    sys.exit(main())
