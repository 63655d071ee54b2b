"""Command-line front door: construction, verification, dynamics, enumeration,
anarchy ratios, and scripted reproduction bundles.

Exit codes: 0 verdict produced, 1 assertion failure, 2 usage error,
3 budget or cap exhausted.
"""

from __future__ import annotations

import argparse
import json
import random
import sys
from fractions import Fraction
from pathlib import Path

from . import dynamics as dyn
from . import equilibrium as eq
from . import metrics
from .constructions import (
    BuyerPattern,
    Example1Params,
    InvalidParams,
    InvalidPattern,
    cfip3_cycle_moves,
    make_cfip3_profile,
    make_example1,
    make_hoffman_singleton,
    make_standard,
    star_profile,
)
from .core import GameParams, StrategyProfile, build_graph, graph_properties
from .equilibrium import SearchBudget, SEVerdict
from .files import (
    AlphaParseError,
    ManifestTimer,
    SchemaError,
    export_dot,
    parse_alpha,
    parse_profile_file,
    write_profile_file,
)
from .parallel import resolve_threads

EXIT_OK = 0
EXIT_FAIL = 1
EXIT_USAGE = 2
EXIT_BUDGET = 3


class RecipeFailed(AssertionError):
    pass


def _require(cond: bool, message: str):
    if not cond:
        raise RecipeFailed(message)


def main(argv=None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    threads = resolve_threads(args.threads)
    manifest = None
    if args.manifest:
        manifest = ManifestTimer(
            args.command, _manifest_params(args), worker_count=threads
        )
    try:
        code = args.handler(args, threads, manifest)
    except (SchemaError, AlphaParseError, InvalidPattern, InvalidParams) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_USAGE
    except (eq.BudgetExhausted, dyn.StateCapHit) as exc:
        print(f"budget exhausted: {exc}", file=sys.stderr)
        return EXIT_BUDGET
    except RecipeFailed as exc:
        print(f"FAIL: {exc}", file=sys.stderr)
        return EXIT_FAIL
    if manifest is not None:
        manifest.write(args.manifest)
    return code


def _manifest_params(args) -> dict:
    skip = {"handler", "manifest"}
    return {
        k: (str(v) if isinstance(v, Path) else v)
        for k, v in vars(args).items()
        if k not in skip and not callable(v)
    }


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="ncg", description="network creation game workbench"
    )
    parser.add_argument("--threads", type=int, default=None,
                        help="worker count (NCG_THREADS also honored; flag wins)")
    parser.add_argument("--manifest", type=Path, default=None,
                        help="write a run manifest to this path")
    sub = parser.add_subparsers(dest="command", required=True)

    c = sub.add_parser("construct", help="generate a named profile")
    c.add_argument("family", choices=["star", "cycle", "complete", "path",
                                      "example1", "hoffman-singleton", "cfip3"])
    c.add_argument("--n", type=int, default=None)
    c.add_argument("--A", type=int, default=None)
    c.add_argument("--k", type=int, default=None)
    c.add_argument("--pattern", default=None)
    c.add_argument("--alpha", default="1")
    c.add_argument("--out", type=Path, required=True)
    c.add_argument("--dot", type=Path, default=None)
    c.set_defaults(handler=cmd_construct)

    v = sub.add_parser("verify", help="Nash / strong equilibrium verdict")
    v.add_argument("--profile", type=Path, required=True)
    v.add_argument("--mode", choices=["nash", "strong"], default="strong")
    v.add_argument("--strict", action="store_true",
                   help="strict Nash / strict strong variant (weak improvements)")
    v.add_argument("--coalition-size", type=int, default=None)
    v.add_argument("--bonus", type=int, default=None)
    v.add_argument("--node-cap", type=int, default=None)
    v.add_argument("--out", type=Path, default=None)
    v.set_defaults(handler=cmd_verify)

    d = sub.add_parser("dynamics", help="run improvement dynamics")
    d.add_argument("--profile", type=Path, required=True)
    d.add_argument("--policy", required=True,
                   help="br | first | coalition:k | script-alpha1 | script-tree")
    d.add_argument("--max-steps", type=int, default=1000)
    d.add_argument("--detect-iso", action="store_true")
    d.add_argument("--trace", type=Path, default=None, help="JSONL move trace")
    d.add_argument("--summary", type=Path, default=None)
    d.add_argument("--dot-every", type=int, default=0)
    d.add_argument("--dot-dir", type=Path, default=None)
    d.set_defaults(handler=cmd_dynamics)

    e = sub.add_parser("enumerate", help="exhaustive strong equilibria (n <= 5)")
    e.add_argument("--n", type=int, required=True)
    e.add_argument("--alpha", required=True)
    e.add_argument("--dedup", action="store_true")
    e.add_argument("--out", type=Path, default=None)
    e.set_defaults(handler=cmd_enumerate)

    s = sub.add_parser("spoa", help="strong price of anarchy")
    s.add_argument("--n", type=int, required=True)
    s.add_argument("--alpha", required=True)
    s.add_argument("--brute-force", action="store_true",
                   help="cross-check the optimum by brute force")
    s.add_argument("--out", type=Path, default=None)
    s.set_defaults(handler=cmd_spoa)

    q = sub.add_parser("spoa-sequence", help="lower-bound ratio sequence CSV")
    q.add_argument("--x-max", type=int, default=20)
    q.add_argument("--out", type=Path, default=None)
    q.set_defaults(handler=cmd_spoa_sequence)

    x = sub.add_parser("export-dot", help="write a DOT rendering of a profile")
    x.add_argument("--profile", type=Path, required=True)
    x.add_argument("--out", type=Path, required=True)
    x.set_defaults(handler=cmd_export_dot)

    r = sub.add_parser("repro", help="run a reproduction recipe")
    r.add_argument("recipe", choices=["alpha1-spoa", "star-theorem", "example1-check",
                                      "hs-strict-nash", "cfip-cycles", "tree-script"])
    r.add_argument("--seed", type=int, default=2024)
    r.set_defaults(handler=cmd_repro)
    return parser


# ---------------------------------------------------------------------------


def cmd_construct(args, threads, manifest) -> int:
    family = args.family
    if family == "star":
        prof = make_standard("star", args.n or 4, BuyerPattern.parse(args.pattern or "leaves-buy"))
    elif family in ("cycle", "complete", "path"):
        default = {"cycle": "each-buys-next", "complete": "lowest-buys",
                   "path": "lower-buys"}[family]
        prof = make_standard(family, args.n or 4, BuyerPattern.parse(args.pattern or default))
    elif family == "example1":
        if args.A is None or args.k is None:
            raise InvalidParams("example1 needs --A and --k")
        prof = make_example1(Example1Params(args.A, args.k))
    elif family == "hoffman-singleton":
        prof = make_hoffman_singleton()
    else:
        prof = make_cfip3_profile(args.n or 3)
    params = GameParams(prof.n, parse_alpha(args.alpha))
    write_profile_file(args.out, prof, params)
    if manifest is not None:
        manifest.add_output(args.out)
    if args.dot:
        export_dot(prof, args.dot)
        if manifest is not None:
            manifest.add_output(args.dot)
    print(f"wrote {args.out} (n={prof.n}, alpha={params.alpha})")
    return EXIT_OK


def cmd_verify(args, threads, manifest) -> int:
    prof, params = parse_profile_file(args.profile)
    if manifest is not None:
        manifest.add_input(args.profile)
    if args.mode == "nash":
        res = eq.is_nash(prof, params, strict=args.strict)
        payload = {
            "verdict": "nash" if res.is_nash else "not-nash",
            "strict": args.strict,
            "nodes_explored": res.evaluations,
            "budget_used": None,
        }
        if res.witness is not None:
            payload["witness"] = {
                "coalition": [i + 1 for i in res.witness.coalition],
                "replacement": [sorted(j + 1 for j in s) for s in res.witness.replacement],
                "deltas": [str(d) for d in res.witness.deltas],
            }
        code = EXIT_OK
    else:
        budget = SearchBudget(
            args.coalition_size if args.coalition_size is not None else params.n,
            args.bonus,
            args.node_cap,
        )
        res = eq.is_strong_equilibrium(prof, params, budget,
                                       strict_strong_mode=args.strict)
        payload = res.to_json_dict()
        code = EXIT_BUDGET if res.verdict == SEVerdict.INCONCLUSIVE else EXIT_OK
    text = json.dumps(payload, indent=2)
    print(text)
    if args.out:
        args.out.write_text(text + "\n")
        if manifest is not None:
            manifest.add_output(args.out)
    return code


def _move_json(step: int, move: dyn.Move) -> dict:
    return {
        "step": step,
        "movers": [i + 1 for i in move.movers],
        "strategies": [sorted(j + 1 for j in s) for s in move.strategies],
        "deltas": [str(d) for d in move.deltas],
    }


def cmd_dynamics(args, threads, manifest) -> int:
    prof, params = parse_profile_file(args.profile)
    if manifest is not None:
        manifest.add_input(args.profile)
    if args.policy == "script-alpha1":
        record = dyn.script_alpha1_to_strong(prof, params)
    elif args.policy == "script-tree":
        record = dyn.script_tree_to_star(prof, params)
    else:
        policy = dyn.Policy.parse(args.policy)
        record = dyn.run_dynamics(prof, params, policy, args.max_steps,
                                  detect_isomorphic=args.detect_iso)
    if args.trace:
        with open(args.trace, "w") as fh:
            for t, move in enumerate(record.moves, start=1):
                fh.write(json.dumps(_move_json(t, move)) + "\n")
        if manifest is not None:
            manifest.add_output(args.trace)
    if args.dot_every and args.dot_dir:
        args.dot_dir.mkdir(parents=True, exist_ok=True)
        states = record.states()
        for t in range(0, len(states), args.dot_every):
            path = args.dot_dir / f"state_{t:05d}.dot"
            export_dot(states[t], path)
            if manifest is not None:
                manifest.add_output(path)
    term = record.termination
    summary = {
        "termination": term.kind.value,
        "period": term.period,
        "first_revisit": term.first_revisit,
        "steps": len(record.moves),
        "final_strategies": [sorted(j + 1 for j in s) for s in record.final.strategies],
        "potentials": {
            k: [str(v) for v in vals] for k, vals in record.potentials.items()
        },
    }
    text = json.dumps(summary, indent=2)
    print(text)
    if args.summary:
        args.summary.write_text(text + "\n")
        if manifest is not None:
            manifest.add_output(args.summary)
    if term.kind == dyn.TerminationKind.STEP_CAP_HIT:
        return EXIT_BUDGET
    return EXIT_OK


def cmd_enumerate(args, threads, manifest) -> int:
    params = GameParams(args.n, parse_alpha(args.alpha))
    profiles = metrics.enumerate_strong_equilibria(params, dedup=args.dedup,
                                                   threads=threads)
    payload = {
        "n": params.n,
        "alpha": str(params.alpha),
        "dedup": args.dedup,
        "count": len(profiles),
        "profiles": [
            [sorted(j + 1 for j in s) for s in prof.strategies] for prof in profiles
        ],
    }
    print(f"{len(profiles)} strong equilibria")
    if args.out:
        args.out.write_text(json.dumps(payload, indent=2) + "\n")
        if manifest is not None:
            manifest.add_output(args.out)
    return EXIT_OK


def cmd_spoa(args, threads, manifest) -> int:
    params = GameParams(args.n, parse_alpha(args.alpha))
    report = metrics.strong_price_of_anarchy(params, threads=threads)
    payload = report.to_json_dict()
    if args.brute_force:
        bf, _ = metrics.social_optimum_cost(params, "brute_force")
        payload["optimum_brute_force"] = str(bf)
        _require(bf == report.optimum_cost,
                 f"brute-force optimum {bf} != closed form {report.optimum_cost}")
    text = json.dumps(payload, indent=2)
    print(text)
    if args.out:
        args.out.write_text(text + "\n")
        if manifest is not None:
            manifest.add_output(args.out)
    return EXIT_OK


def cmd_spoa_sequence(args, threads, manifest) -> int:
    rows = ["x,n,alpha,cost_se,cost_opt,ratio_num,ratio_den"]
    for x in range(4, args.x_max + 1):
        r = metrics.example1_ratio(x)
        _require(r.bounds_hold, f"x={x}: polynomial bounds violated")
        rows.append(
            f"{r.x},{r.n},{r.alpha},{r.tree_cost},{r.optimum_cost},"
            f"{r.ratio.numerator},{r.ratio.denominator}"
        )
    text = "\n".join(rows) + "\n"
    print(text, end="")
    if args.out:
        args.out.write_text(text)
        if manifest is not None:
            manifest.add_output(args.out)
    return EXIT_OK


def cmd_export_dot(args, threads, manifest) -> int:
    prof, _ = parse_profile_file(args.profile)
    if manifest is not None:
        manifest.add_input(args.profile)
    export_dot(prof, args.out)
    if manifest is not None:
        manifest.add_output(args.out)
    print(f"wrote {args.out}")
    return EXIT_OK


# ---------------------------------------------------------------------------
# reproduction recipes


def cmd_repro(args, threads, manifest) -> int:
    recipe = args.recipe.replace("-", "_")
    handler = globals()[f"_repro_{recipe}"]
    handler(args, threads)
    print(f"PASS {args.recipe}")
    return EXIT_OK


def _repro_alpha1_spoa(args, threads):
    expected = {3: Fraction(10, 9), 4: Fraction(10, 9), 5: Fraction(17, 15)}
    for n, want in expected.items():
        report = metrics.strong_price_of_anarchy(GameParams(n, 1), threads=threads)
        _require(report.ratio == want, f"n={n}: ratio {report.ratio} != {want}")
        _require(report.closed_form.value == want, f"n={n}: closed form mismatch")
        print(f"  n={n}: spoa = {report.ratio}")


def _repro_star_theorem(args, threads):
    from .canonical import canonical_masks

    for n in (4, 5, 6):
        for alpha in (Fraction(2), Fraction(5, 2), Fraction(10)):
            params = GameParams(n, alpha)
            checked: dict[tuple, bool] = {}
            for mask in range(1 << (n - 1)):
                prof = star_profile(n, mask)
                key = canonical_masks(prof.masks, n)
                if key not in checked:
                    res = eq.is_strong_equilibrium(prof, params)
                    checked[key] = res.verdict == SEVerdict.YES
                _require(checked[key],
                         f"star n={n} alpha={alpha} mask={mask} is not strong")
            print(f"  n={n} alpha={alpha}: all {1 << (n - 1)} patterns strong "
                  f"({len(checked)} classes)")


def _repro_example1_check(args, threads):
    for a in (4, 5, 6):
        for k in (1, 2, 3, 4):
            p = Example1Params(a, k)
            prof = make_example1(p)
            params = GameParams(p.n, 2 * p.n)
            dc = p.distance_costs()
            from .core import player_cost

            for i in range(p.n):
                got = player_cost(prof, params, i).distance
                want = dc[p.class_of(i)]
                _require(got == want,
                         f"A={a} k={k} player {i}: distance {got} != {want}")
    print("  class distance formulas match BFS on the full (A, k) grid")

    p = Example1Params(4, 2)
    prof = make_example1(p)
    params = GameParams(10, 20)
    w = eq.find_improving_coalition(prof, params, SearchBudget(2, None, None))
    _require(w is None, f"A=4 k=2: size-2 witness found: {w}")
    w3 = eq.find_improving_coalition(prof, params, SearchBudget(3, None, 10**8))
    _require(w3 is None, f"A=4 k=2: size-3 witness found: {w3}")
    print("  A=4, k=2, alpha=20: no improving coalition of size <= 3")

    for x in range(4, 13):
        r = metrics.example1_ratio(x)
        _require(r.bounds_hold, f"x={x}: bounds violated")
    print("  ratio-sequence polynomial bounds hold for x in 4..12")


def _repro_hs_strict_nash(args, threads):
    hs = make_hoffman_singleton()
    props = graph_properties(build_graph(hs))
    _require(props.edge_count == 175 and props.diameter == 2,
             "construction is off")
    rep = eq.nash_deviation_scan(hs, GameParams(50, 5), weak=True)
    _require(rep.witness is None, f"alpha=5: weak improvement found: {rep.witness}")
    print(f"  alpha=5: strict Nash confirmed over {rep.evaluations} evaluations")
    rep2 = eq.nash_deviation_scan(hs, GameParams(50, Fraction(26, 3)), weak=True)
    _require(rep2.witness is not None, "alpha=26/3: no cost-equal deviation found")
    _require(rep2.witness.new_costs == rep2.witness.old_costs,
             "alpha=26/3 witness is not cost-equal")
    print(f"  alpha=26/3: cost-equal deviation exists (player "
          f"{rep2.witness.members[0] + 1})")


def _repro_cfip_cycles(args, threads):
    prof = make_cfip3_profile()
    params = GameParams(3, Fraction(1, 2))
    pol = dyn.Policy("replay", replay=tuple(cfip3_cycle_moves()))
    record = dyn.run_dynamics(prof, params, pol, max_steps=10)
    _require(record.termination.kind == dyn.TerminationKind.CYCLE_DETECTED
             and record.termination.period == 3,
             f"expected a period-3 cycle, got {record.termination}")
    print("  3-player coalition cycle: period 3")
    star = star_profile(4)
    cyc = dyn.find_improvement_cycle(star, GameParams(4, Fraction(3, 2)))
    _require(cyc is not None, "no coalitional cycle found from the 4-star")
    print(f"  4-star cycle at alpha=3/2: period {cyc.termination.period}")


def _repro_tree_script(args, threads):
    rng = random.Random(args.seed)
    n = 8
    runs = 0
    for alpha in (Fraction(2), Fraction(3), Fraction(7, 2)):
        params = GameParams(n, alpha)
        for _ in range(34):
            prof = random_tree_profile(n, rng)
            record = dyn.script_tree_to_star(prof, params)
            dyn.validate_path_record(record, params)
            final = record.final
            props = graph_properties(build_graph(final))
            _require(props.is_star, "script did not end in a star")
            pred = eq.theory_oracle(final, params)
            _require(pred.verdict == eq.OracleVerdict.STRONG_EQUILIBRIUM,
                     "final star not recognized as a strong equilibrium")
            runs += 1
    print(f"  {runs} random trees converged to rational stars, every step improving")


def random_tree_profile(n: int, rng: random.Random) -> StrategyProfile:
    """Uniform random labeled tree (random parent attachment over a random
    permutation), each edge bought by a random endpoint."""
    order = list(range(n))
    rng.shuffle(order)
    strat = [set() for _ in range(n)]
    for t in range(1, n):
        child = order[t]
        parent = order[rng.randrange(t)]
        if rng.random() < 0.5:
            strat[child].add(parent)
        else:
            strat[parent].add(child)
    return StrategyProfile(tuple(frozenset(s) for s in strat))


if __name__ == "__main__":
    sys.exit(main())
