"""
Skillgeo CLI - Command line interface for skill-geometry analysis

Features:
- Polytope vertices of a tabular MDP with policy provenance
- Exact MISL center with LSEPIN tie-breaking and a grid-oracle check
- Skill-set metrics (I(S;Z), LSEPIN, WSEP, KLSEP, AWD)
- Adaptation-bound reports and seeded bound suites
- PWSEP vertex discovery checked against the extreme-point oracle
- Self-checking worked examples
- Live progress on stderr, reports on stdout
"""

import argparse
import json
import sys
from dataclasses import asdict
from pathlib import Path
from typing import Any, Dict, List, Optional

import numpy as np

from .adaptation import (
    MAC_VARIANTS,
    BoundReport,
    lemma_b1_bound,
    mac_bounds,
    run_bound_suite,
    task_targets,
    wac,
    wac_bound_corollary,
)
from .divergences import (
    CostMatrix,
    SkillSet,
    indicator_mi,
    klsep,
    lsepin,
    skill_mutual_information,
    wsep,
)
from .errors import (
    EXIT_INPUT,
    AllDiscovered,
    FixtureError,
    MalformedSpec,
    NotMislSolution,
    SkillgeoError,
)
from .export import Exporter, export_report
from .geometry import grid_center_oracle, lsepin_tiebreak, misl_center
from .mdp import (
    OCCUPANCY_KINDS,
    OccupancyMeasure,
    Polytope,
    enumerate_policy_occupancies,
    extreme_points,
    load_mdp,
    load_polytope,
    polytope_from_mdp,
)
from .progress import SolverProgress
from .scenarios import SCENARIOS, run_scenario, scenario_to_dict
from .wdsl import (
    awd,
    matches_vertices,
    maximize_awd,
    maximize_wsep,
    placements_are_extreme,
    pwsep_run,
    run_pwsep_suite,
)

# Grid oracle and solver centers must agree within this L∞ distance
VERIFY_TOL = 5e-3


def print_progress(progress: SolverProgress, quiet: bool = False):
    """Print progress update to stderr."""
    if quiet:
        return

    if progress.status in ("warm_start", "ascent", "polish", "seed"):
        print(f"\r{progress.message}", end="", file=sys.stderr)
    elif progress.status == "discover":
        print(f"\n  {progress.message}", file=sys.stderr)
    elif progress.status == "complete":
        print(f"\n{progress.message}", file=sys.stderr)


def _progress(args: argparse.Namespace):
    return lambda p: print_progress(p, args.quiet)


# ---------------------------------------------------------------------------
# Input loading
# ---------------------------------------------------------------------------


def _read_json(path: str, what: str) -> Any:
    if not Path(path).exists():
        raise MalformedSpec(f"{what} file not found: {path}")
    with open(path, encoding="utf-8") as f:
        try:
            return json.load(f)
        except json.JSONDecodeError as e:
            raise MalformedSpec(f"{what} is not valid JSON: {e}") from e


def _require(args: argparse.Namespace, name: str) -> str:
    value = getattr(args, name)
    if not value:
        raise MalformedSpec(f"--{name} is required for '{args.command}'")
    return value


def _load_candidates(args: argparse.Namespace) -> List[OccupancyMeasure]:
    """Occupancy of every deterministic policy, or the listed vertices."""
    doc = _read_json(_require(args, "mdp"), "MDP spec")
    if isinstance(doc, dict) and "vertices" in doc:
        return list(load_polytope(doc).vertices)
    mdp = load_mdp(doc)
    if args.occupancy:
        mdp = mdp.with_kind(args.occupancy)
    return [occ for _, occ in enumerate_policy_occupancies(mdp)]


def _load_polytope(args: argparse.Namespace) -> Polytope:
    """Polytope from --mdp: an MDP spec or a {"vertices": ...} document."""
    doc = _read_json(_require(args, "mdp"), "MDP spec")
    if isinstance(doc, dict) and "vertices" in doc:
        return load_polytope(doc)
    mdp = load_mdp(doc)
    if args.occupancy:
        mdp = mdp.with_kind(args.occupancy)
    return polytope_from_mdp(mdp)


def _load_skills(args: argparse.Namespace) -> SkillSet:
    return SkillSet.from_dict(_read_json(_require(args, "skills"), "skill set"))


def _load_cost(args: argparse.Namespace, num_states: int) -> CostMatrix:
    if args.cost == "unit":
        return CostMatrix.unit(num_states)
    return CostMatrix.from_json(_read_json(args.cost, "cost matrix"), num_states)


def _emit(args: argparse.Namespace, output: str):
    """Write the report to --out or stdout."""
    if args.out:
        with open(args.out, "w", encoding="utf-8") as f:
            f.write(output)
        if not args.quiet:
            print(f"Report written to: {args.out}", file=sys.stderr)
    else:
        sys.stdout.write(output)


# ---------------------------------------------------------------------------
# Commands
# ---------------------------------------------------------------------------


def cmd_vertices(args: argparse.Namespace):
    """Handle vertices command."""
    polytope = _load_polytope(args)
    doc = {"count": len(polytope), **Exporter.polytope_to_dict(polytope)}
    _emit(args, export_report(doc))


def cmd_misl(args: argparse.Namespace):
    """Handle misl command: center, active set and tie-broken weights."""
    polytope = _load_polytope(args)
    if not args.quiet:
        print(f"Polytope: {len(polytope)} vertices", file=sys.stderr)

    solution = misl_center(polytope, tol=args.tol, on_progress=_progress(args))
    active = [polytope.vertices[i] for i in solution.active]
    tiebreak = lsepin_tiebreak(
        active, solution.center, solution.radius, seed=args.seed
    )

    doc: Dict[str, Any] = Exporter.solution_to_dict(solution)
    doc["lsepin"] = tiebreak.lsepin
    doc["tiebreak"] = Exporter.tiebreak_to_dict(tiebreak)

    if args.verify:
        if polytope.num_states > 3:
            if not args.quiet:
                print("Grid oracle skipped: more than 3 states", file=sys.stderr)
        else:
            oracle = grid_center_oracle(polytope)
            gap = float(np.max(np.abs(oracle.probs - solution.center.probs)))
            doc["verify"] = {
                "oracle_center": oracle.to_list(),
                "linf": gap,
                "agrees": gap <= VERIFY_TOL,
            }

    _emit(args, export_report(doc))


def cmd_metrics(args: argparse.Namespace):
    """Handle metrics command."""
    ss = _load_skills(args)
    cost = _load_cost(args, ss.num_states)
    value, weakest = lsepin(ss)
    doc = {
        "mutual_information": skill_mutual_information(ss),
        "indicator_mi": [
            {"skill": z, "value": indicator_mi(ss, z)} for z in ss.active()
        ],
        "lsepin": value,
        "lsepin_skill": weakest,
        "wsep": wsep(ss, cost),
        "klsep": klsep(ss),
        "awd": awd(ss, cost),
    }
    _emit(args, export_report(doc))


def cmd_place(args: argparse.Namespace):
    """Handle place command: skills at vertices maximizing WSEP or AWD."""
    polytope = _load_polytope(args)
    cost = _load_cost(args, polytope.num_states)
    if args.objective == "wsep":
        result = maximize_wsep(polytope, cost, k=args.k, mode=args.mode)
    else:
        result = maximize_awd(polytope, cost, k=args.k, seed=args.seed)
    doc = {
        "objective": args.objective,
        "value": result.value,
        "indices": result.indices,
        "heuristic": result.heuristic,
        "extreme": placements_are_extreme(polytope, result.indices),
        **result.skillset.to_dict(),
    }
    _emit(args, export_report(doc))


def _unevaluated(variant: str, measured: float, tag: str) -> BoundReport:
    nan = float("nan")
    return BoundReport(variant, nan, measured, False, nan, None, [tag])


def _bound_rows(args: argparse.Namespace) -> List[BoundReport]:
    polytope = _load_polytope(args)
    ss = _load_skills(args)
    cost = _load_cost(args, polytope.num_states)
    tf = task_targets(polytope)

    rows = []
    try:
        solution = misl_center(polytope, tol=args.tol, on_progress=_progress(args))
        rows.append(wac_bound_corollary(ss, tf, solution))
    except NotMislSolution:
        rows.append(_unevaluated("wac_corollary", wac(ss, tf)[0], "NotMislSolution"))
    try:
        rows.extend(mac_bounds(ss, polytope, cost))
    except AllDiscovered:
        rows.extend(
            _unevaluated(v, float("nan"), "AllDiscovered") for v in MAC_VARIANTS
        )
    rows.append(lemma_b1_bound(ss, tf))
    return rows


def cmd_bounds(args: argparse.Namespace):
    """Handle bounds command. Reports only; never fails on a violated bound."""
    if not args.seeds:
        rows = [Exporter.bound_to_dict(r) for r in _bound_rows(args)]
        _emit(args, export_report(rows, "jsonl"))
        return

    cost = None if args.cost == "unit" else _load_cost(args, args.states)
    suite = run_bound_suite(
        range(args.seeds),
        num_states=args.states,
        num_actions=args.actions,
        occupancy_kind=args.occupancy or "discounted",
        c=cost,
        workers=args.workers,
        on_progress=_progress(args),
    )
    rows: List[Dict[str, Any]] = []
    for seed in suite.seeds:
        rows.extend(
            {"seed": seed, **Exporter.bound_to_dict(r)} for r in suite.reports[seed]
        )
    rows.append(
        {
            "summary": {
                variant: {
                    "satisfied": suite.satisfied.get(variant, 0),
                    "total": total,
                    "rate": suite.rate(variant),
                }
                for variant, total in suite.total.items()
            }
        }
    )
    _emit(args, export_report(rows, "jsonl"))


def cmd_pwsep(args: argparse.Namespace):
    """Handle pwsep command: discovery plus the set-equality verdict."""
    if args.seeds:
        cost = None if args.cost == "unit" else _load_cost(args, args.states)
        verdicts = run_pwsep_suite(
            range(args.seeds),
            num_states=args.states,
            num_actions=args.actions,
            occupancy_kind=args.occupancy or "discounted",
            c=cost,
            workers=args.workers,
            on_progress=_progress(args),
        )
        matched = sum(v.match and v.iterations == v.vertices for v in verdicts)
        verdict = "MATCH" if matched == len(verdicts) else "MISMATCH"
        doc = {
            "verdict": verdict,
            "matched": matched,
            "seeds": len(verdicts),
            "runs": [asdict(v) for v in verdicts],
        }
        if not args.quiet:
            print(f"Verdict: {verdict} {matched}/{len(verdicts)}", file=sys.stderr)
        _emit(args, export_report(doc))
        return

    candidates = _load_candidates(args)
    cost = _load_cost(args, len(candidates[0]))
    state = pwsep_run(
        candidates,
        cost,
        tol=args.tol,
        seed=args.seed,
        workers=args.workers,
        on_progress=_progress(args),
    )
    oracle = extreme_points(candidates)
    verdict = "MATCH" if matches_vertices(state, oracle) else "MISMATCH"

    doc = Exporter.pwsep_to_dict(state)
    doc["vertices"] = len(oracle)
    doc["verdict"] = verdict
    if not args.quiet:
        print(f"Verdict: {verdict}", file=sys.stderr)
    _emit(args, export_report(doc))


def cmd_repro(args: argparse.Namespace):
    """Handle repro command. The report is written before a failure exits."""
    report = run_scenario(args.scenario)
    extra = None
    if report.pathology is not None:
        extra = {"pathology": Exporter.pathology_to_dict(report.pathology)}
    _emit(args, export_report(scenario_to_dict(report, extra)))
    if not report.passed:
        failed = ", ".join(c.name for c in report.checks if not c.passed)
        raise FixtureError(f"scenario {report.name} failed: {failed}")
    if not args.quiet:
        print(f"Scenario {report.name}: all checks passed", file=sys.stderr)


def _version() -> str:
    try:
        import importlib.metadata

        return importlib.metadata.version("skillgeo")
    except Exception:
        from . import __version__

        return __version__


def cmd_help(args: argparse.Namespace):
    """Show detailed help."""
    from .banner import render_banner

    help_text = f"""
{render_banner(plain=not sys.stdout.isatty())}
  SKILLGEO v{_version()} - Skill geometry on tabular MDPs

COMMANDS
--------
  skillgeo vertices --mdp M.json            Polytope vertices with policy provenance
  skillgeo misl --mdp M.json [--verify]     MISL center, active set, LSEPIN tie-break
  skillgeo metrics --skills S.json          I(S;Z), I(S;1_z), LSEPIN, WSEP, KLSEP, AWD
  skillgeo place --mdp M.json --k 3        Skills at vertices maximizing WSEP or AWD
  skillgeo bounds --mdp M.json --skills S.json
                                            Bound reports as JSON lines
  skillgeo bounds --seeds 100               Seeded random bound suite
  skillgeo pwsep --mdp M.json               PWSEP discovery and MATCH verdict
  skillgeo pwsep --seeds 100                Seeded PWSEP sweep
  skillgeo repro <name>                     Worked example self-check
                                            ({', '.join(SCENARIOS)})

OPTIONS
-------
  --mdp <file>                  MDP spec or {{"vertices": [...]}} document
  --skills <file>               Skill set {{"skills": [...], "weights": [...]}}
  --cost unit|<file>            Ground cost for transport (default: unit)
  --tol <r>                     Solver tolerance
  --seed <n>                    Seed for tie-breaks and reference picks
  --k <n>                       Number of skills to place (default: 2)
  --seeds <n>                   Sweep seeds 0..n-1 on random MDPs
  --states, --actions <n>       Random MDP size for sweeps (default: 3)
  --occupancy <kind>            discounted | stationary
  --workers, -w <n>             Threads for sweeps and candidate scoring
  --out, -o <file>              Write report to file
  --verify                      Cross-check the center on a grid (|S| <= 3)
  --quiet, -q                   Suppress progress messages

EXIT CODES
----------
  0 success   2 input   3 resource caps   4 solver   5 example self-check

CONFIG
------
  ~/.skillgeo/config.yaml (or config.json) overrides tolerances and caps.
"""
    print(help_text)


def print_simple_help():
    """Print clean, simple help."""
    from .banner import render_banner

    help_text = f"""
{render_banner(plain=not sys.stdout.isatty())}

  skillgeo v{_version()}
  Skill geometry on tabular MDPs.

Usage:
  skillgeo <command> [options]

Commands:
  vertices                         Polytope vertices of an MDP
  misl                             Exact MISL center
  metrics                          Separability metrics of a skill set
  place                            WSEP or AWD skill placement
  bounds                           Adaptation-cost bound reports
  pwsep                            PWSEP vertex discovery
  repro <name>                     Worked example self-check

Examples:
  skillgeo misl --mdp c6.json --verify
  skillgeo bounds --seeds 100 -q
  skillgeo repro c6

Run 'skillgeo help' for the full reference.
"""
    print(help_text)


def _add_common(parser: argparse.ArgumentParser):
    parser.add_argument("--mdp", help="MDP spec or vertex-list JSON")
    parser.add_argument(
        "--cost", default="unit", help="unit or a cost-matrix JSON (default: unit)"
    )
    parser.add_argument(
        "--occupancy", choices=OCCUPANCY_KINDS, help="Override the occupancy kind"
    )
    parser.add_argument("--tol", type=float, help="Solver tolerance")
    parser.add_argument("--seed", type=int, default=0, help="Seed (default: 0)")
    parser.add_argument("--out", "-o", help="Write report to file")
    parser.add_argument(
        "--quiet", "-q", action="store_true", help="Suppress progress messages"
    )


def _add_sweep(parser: argparse.ArgumentParser):
    parser.add_argument(
        "--seeds", type=int, default=0, help="Sweep seeds 0..N-1 on random MDPs"
    )
    parser.add_argument(
        "--states", type=int, default=3, help="Random MDP states (default: 3)"
    )
    parser.add_argument(
        "--actions", type=int, default=3, help="Random MDP actions (default: 3)"
    )
    parser.add_argument(
        "--workers",
        "-w",
        type=int,
        default=1,
        help="Worker threads (default: 1)",
    )


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="skillgeo",
        description="Skillgeo - skill geometry on tabular MDPs",
        formatter_class=argparse.RawDescriptionHelpFormatter,
        add_help=False,  # We handle help ourselves
    )
    subparsers = parser.add_subparsers(dest="command", help="Command to run")

    vertices_parser = subparsers.add_parser("vertices", help="Polytope vertices")
    _add_common(vertices_parser)

    misl_parser = subparsers.add_parser("misl", help="Exact MISL center")
    _add_common(misl_parser)
    misl_parser.add_argument(
        "--verify", action="store_true", help="Cross-check with the grid oracle"
    )

    metrics_parser = subparsers.add_parser("metrics", help="Skill-set metrics")
    _add_common(metrics_parser)
    metrics_parser.add_argument("--skills", help="Skill set JSON")

    bounds_parser = subparsers.add_parser("bounds", help="Bound reports")
    _add_common(bounds_parser)
    _add_sweep(bounds_parser)
    bounds_parser.add_argument("--skills", help="Skill set JSON")

    pwsep_parser = subparsers.add_parser("pwsep", help="PWSEP vertex discovery")
    _add_common(pwsep_parser)
    _add_sweep(pwsep_parser)

    place_parser = subparsers.add_parser("place", help="WSEP or AWD skill placement")
    _add_common(place_parser)
    place_parser.add_argument(
        "--k", type=int, default=2, help="Number of skills (default: 2)"
    )
    place_parser.add_argument(
        "--objective", choices=["wsep", "awd"], default="wsep", help="default: wsep"
    )
    place_parser.add_argument(
        "--mode",
        choices=["exhaustive", "greedy"],
        default="exhaustive",
        help="WSEP search mode (default: exhaustive)",
    )

    repro_parser = subparsers.add_parser("repro", help="Worked example self-check")
    repro_parser.add_argument("scenario", choices=sorted(SCENARIOS))
    repro_parser.add_argument("--out", "-o", help="Write report to file")
    repro_parser.add_argument(
        "--quiet", "-q", action="store_true", help="Suppress progress messages"
    )

    subparsers.add_parser("help", help="Show detailed help")
    return parser


def main(argv: Optional[List[str]] = None):
    argv = sys.argv[1:] if argv is None else argv
    # Handle --help and -h with clean output
    if not argv or argv[0] in ("--help", "-h"):
        print_simple_help()
        sys.exit(0)

    args = build_parser().parse_args(argv)
    if args.command is None:
        print_simple_help()
        sys.exit(0)

    try:
        if args.command == "vertices":
            cmd_vertices(args)
        elif args.command == "misl":
            cmd_misl(args)
        elif args.command == "metrics":
            cmd_metrics(args)
        elif args.command == "place":
            cmd_place(args)
        elif args.command == "bounds":
            cmd_bounds(args)
        elif args.command == "pwsep":
            cmd_pwsep(args)
        elif args.command == "repro":
            cmd_repro(args)
        elif args.command == "help":
            cmd_help(args)
    except KeyboardInterrupt:
        print("\nInterrupted", file=sys.stderr)
        sys.exit(1)
    except SkillgeoError as e:
        print(f"Error: {e}", file=sys.stderr)
        sys.exit(e.exit_code)
    except (OSError, ValueError) as e:
        print(f"Error: {e}", file=sys.stderr)
        sys.exit(EXIT_INPUT)


if __name__ == "__main__":
    main()
