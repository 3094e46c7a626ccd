"""Command-line interface.

Subcommands: validate, reduce, solve, solve-inf, simulate, diagnose,
oracle.  Exit codes: 0 success, 2 validation failure, 3 resource guard
exceeded, 4 parse error.  All CSV outputs carry a header row with the
column orders fixed by the exporters.
"""

from __future__ import annotations

import argparse
import csv
import json
import sys
from pathlib import Path

import numpy as np

from .diagnostics import (
    belief_kernel_comodulus,
    equivalence_suite,
    mixture_preservation_check,
    write_reports_csv,
)
from .families import (
    family_from_spec,
    mixture_from_spec,
    model_family_from_spec,
    sequence_from_spec,
)
from .measures import Dist
from .models import (
    MDPModel,
    ModelValidationError,
    mdpii_from_mdp,
    validate as validate_model,
)
from .reduction import (
    Belief,
    BeliefNode,
    ReachableCapError,
    expand_reachable,
    initial_belief,
    write_edges_csv,
    write_nodes_csv,
)
from .runtime import (
    BACKEND,
    LiftError,
    ModelFormatError,
    as_full_model,
    lift_policy,
    load_model,
    monte_carlo_value,
    simulate,
)
from .simplexgrid import SimplexGrid
from .solver import (
    BruteForceGuardError,
    GridBudgetError,
    PolicyTree,
    StationaryGridPolicy,
    brute_force_optimal,
    finite_horizon_solve,
    finite_mdp_solve,
    infinite_horizon_grid_solve,
    write_grid_policy_csv,
    write_grid_values_csv,
    write_policy_csv,
    write_value_tables_csv,
)

EXIT_OK = 0
EXIT_VALIDATION = 2
EXIT_GUARD = 3
EXIT_PARSE = 4


class CliError(Exception):
    def __init__(self, message: str, code: int):
        super().__init__(message)
        self.code = code


def _load(path: str):
    try:
        return load_model(path, validate=False)
    except FileNotFoundError:
        raise CliError(f"no such file: {path}", EXIT_PARSE)
    except json.JSONDecodeError as e:
        raise CliError(f"{path}:{e.lineno}:{e.colno}: {e.msg}", EXIT_PARSE)
    except ModelFormatError as e:
        raise CliError(f"{path}: {e}", EXIT_PARSE)


def _load_valid(path: str):
    model = _load(path)
    violations = validate_model(model)
    if violations:
        lines = "\n".join(f"  - {v}" for v in violations)
        raise CliError(f"{path} fails validation:\n{lines}", EXIT_VALIDATION)
    return model


def _parse_belief(text: str, space) -> Dist:
    if text == "uniform":
        return Dist.uniform(space)
    try:
        weights = np.array([float(x) for x in text.split(",")], dtype=float)
        return Dist(space, weights)
    except ValueError as e:
        raise CliError(f"bad belief {text!r}: {e}", EXIT_PARSE)


def _working_model(model, belief_arg: str):
    """Resolve (full model, prior) for commands running the reduction."""
    if isinstance(model, MDPModel):
        initial = _parse_belief(belief_arg, model.X)
        full = mdpii_from_mdp(model, initial.weights)
        return full, Dist.uniform(full.W)  # singleton unobservable part
    full = as_full_model(model)
    return full, _parse_belief(belief_arg, full.W)


def _roots(model, prior):
    return [
        BeliefNode(initial_belief(model, prior, y0)[0], y0) for y0 in model.Y.labels
    ]


def _outdir(args) -> Path:
    out = Path(args.out_dir)
    out.mkdir(parents=True, exist_ok=True)
    return out


# ---------------------------------------------------------------- subcommands


def cmd_validate(args) -> int:
    model = _load(args.model)
    violations = validate_model(model)
    if violations:
        for v in violations:
            print(f"violation: {v}")
        return EXIT_VALIDATION
    print(f"{args.model}: valid {type(model).__name__}")
    return EXIT_OK


def cmd_reduce(args) -> int:
    model, prior = _working_model(_load_valid(args.model), args.belief)
    rs = expand_reachable(model, _roots(model, prior), args.horizon, cap=args.cap)
    out = _outdir(args)
    with open(out / "nodes.csv", "w", newline="") as fh:
        write_nodes_csv(rs, fh)
    with open(out / "edges.csv", "w", newline="") as fh:
        write_edges_csv(rs, fh)
    print(
        f"reachable set: {len(rs.nodes)} states over {len(rs.layers)} layers -> "
        f"{out / 'nodes.csv'}, {out / 'edges.csv'}"
    )
    return EXIT_OK


def cmd_solve(args) -> int:
    model, prior = _working_model(_load_valid(args.model), args.belief)
    sol = finite_horizon_solve(
        model, prior, args.horizon, args.alpha, cap=args.cap, validate=False
    )
    out = _outdir(args)
    with open(out / "nodes.csv", "w", newline="") as fh:
        write_nodes_csv(sol.reachable, fh)
    with open(out / "edges.csv", "w", newline="") as fh:
        write_edges_csv(sol.reachable, fh)
    with open(out / "values.csv", "w", newline="") as fh:
        write_value_tables_csv(sol.tables, sol.reachable, fh)
    with open(out / "policy.csv", "w", newline="") as fh:
        write_policy_csv(sol.policy, sol.reachable, fh)
    print(f"value: {sol.value!r}")
    for y0, (pr, v) in sol.per_y0.items():
        print(f"  y0={y0}: probability {pr:.6g}, value {v!r}")
    print(f"files: nodes.csv edges.csv values.csv policy.csv in {out}")
    return EXIT_OK


def cmd_solve_inf(args) -> int:
    model = _load_valid(args.model)
    out = _outdir(args)
    if isinstance(model, MDPModel):
        values, policy, bound = finite_mdp_solve(
            model, args.alpha, args.tol, validate=False
        )
        with open(out / "values.csv", "w", newline="") as fh:
            w = csv.writer(fh)
            w.writerow(["state", "value"])
            for label, v in zip(model.X.labels, values):
                w.writerow([label, repr(float(v))])
        with open(out / "policy.csv", "w", newline="") as fh:
            w = csv.writer(fh)
            w.writerow(["state", "action"])
            for label, a in zip(model.X.labels, policy):
                w.writerow([label, a])
        print(f"observable model: fixed-point bound {bound:g}; files in {out}")
        return EXIT_OK
    full = as_full_model(model)
    try:
        sol = infinite_horizon_grid_solve(
            full, args.grid, args.alpha, args.tol, validate=False
        )
    except (TypeError, ValueError) as e:
        raise CliError(str(e), EXIT_VALIDATION)
    with open(out / "grid_values.csv", "w", newline="") as fh:
        write_grid_values_csv(sol, fh, full.W.labels)
    with open(out / "grid_policy.csv", "w", newline="") as fh:
        write_grid_policy_csv(sol, fh, full.W.labels)
    print(
        f"grid {args.grid}: {len(sol.grid)} vertices, {sol.iterations} sweeps, "
        f"fixed-point bound {sol.bound:g}; files in {out}"
    )
    return EXIT_OK


def _load_policy(path_arg: str, model, prior):
    """Policy from solver CSV exports: a directory with policy.csv (tree)
    or grid_policy.csv (stationary), or a direct path to either file."""
    path = Path(path_arg)
    if path.is_dir():
        for name in ("policy.csv", "grid_policy.csv"):
            if (path / name).exists():
                path = path / name
                break
        else:
            raise CliError(f"{path}: no policy.csv or grid_policy.csv", EXIT_PARSE)
    with open(path, newline="") as fh:
        rows = list(csv.reader(fh))
    if not rows:
        raise CliError(f"{path}: empty policy file", EXIT_PARSE)
    header = rows[0]
    if header == ["epoch", "node_id", "action"]:
        entries = [(int(r[0]), int(r[1]), r[2]) for r in rows[1:]]
        horizon = max(e[0] for e in entries) + 1 if entries else 0
        rs = expand_reachable(model, _roots(model, prior), horizon)
        epochs: list[dict] = [dict() for _ in range(horizon)]
        for epoch, nid, action in entries:
            if nid >= len(rs.nodes):
                raise CliError(
                    f"{path}: node id {nid} not reachable from this prior",
                    EXIT_VALIDATION,
                )
            epochs[epoch][rs.nodes[nid].key] = action
        return PolicyTree(epochs)
    if header[:-1] == [f"n_{l}" for l in model.W.labels] and header[-1] == "action":
        comps = [[int(c) for c in r[:-1]] for r in rows[1:]]
        acts = [r[-1] for r in rows[1:]]
        k = sum(comps[0])
        grid = SimplexGrid(len(model.W), k)
        ordered = [""] * len(grid)
        for comp, a in zip(comps, acts):
            ordered[grid.vertex_id(comp)] = a
        if any(a == "" for a in ordered):
            raise CliError(f"{path}: grid policy misses vertices", EXIT_PARSE)
        return StationaryGridPolicy(grid, tuple(ordered))
    raise CliError(f"{path}: unrecognized policy header {header}", EXIT_PARSE)


def cmd_simulate(args) -> int:
    model, prior = _working_model(_load_valid(args.model), args.belief)
    policy = _load_policy(args.policy, model, prior)
    lifted = lift_policy(model, policy, prior)
    if args.runs == 1:
        traj = simulate(model, lifted, prior, args.horizon, args.alpha, args.seed)
        print(f"backend: {BACKEND}")
        print(f"discounted total: {traj.discounted_total!r}")
        for step in traj.steps:
            print(f"  t={step.t} w={step.w} y={step.y} a={step.a} cost={step.cost!r}")
        return EXIT_OK
    mean, stderr = monte_carlo_value(
        model, lifted, prior, args.horizon, args.alpha, args.runs, args.seed
    )
    print(f"backend: {BACKEND}")
    print(f"runs: {args.runs}, mean: {mean!r}, stderr: {stderr!r}")
    return EXIT_OK


def cmd_oracle(args) -> int:
    model, prior = _working_model(_load_valid(args.model), args.belief)
    value = brute_force_optimal(model, prior, args.horizon, args.alpha)
    print(f"brute-force optimal value: {value!r}")
    return EXIT_OK


def cmd_diagnose(args) -> int:
    try:
        with open(args.family_spec, encoding="utf-8") as fh:
            spec = json.load(fh)
    except FileNotFoundError:
        raise CliError(f"no such file: {args.family_spec}", EXIT_PARSE)
    except json.JSONDecodeError as e:
        raise CliError(
            f"{args.family_spec}:{e.lineno}:{e.colno}: {e.msg}", EXIT_PARSE
        )
    try:
        seq = sequence_from_spec(spec["sequence"])
        threshold = float(spec.get("threshold", 1e-2))
        if args.suite == "equivalence":
            fam = family_from_spec(spec["family"])
            suite = equivalence_suite(fam, seq, threshold=threshold)
        elif args.suite == "belief":
            family = model_family_from_spec(spec["model_family"])
            model = family(seq.target)
            z = Belief(Dist(model.W, np.asarray(spec["belief"], dtype=float)))
            suite = belief_kernel_comodulus(
                family, z, spec["action"], seq, threshold=threshold
            )
        else:
            base, mixing_seq, target = mixture_from_spec(spec["mixture"])
            suite = mixture_preservation_check(
                base, mixing_seq, target, seq, threshold=threshold
            )
    except KeyError as e:
        raise CliError(f"{args.family_spec}: missing key {e}", EXIT_PARSE)
    except ValueError as e:
        raise CliError(f"{args.family_spec}: {e}", EXIT_VALIDATION)
    if args.out == "-":
        write_reports_csv(suite.reports, sys.stdout)
    else:
        with open(args.out, "w", newline="") as fh:
            write_reports_csv(suite.reports, fh)
        print(f"report: {args.out}")
    print(f"suite verdict: {suite.verdict} (all vanish: {suite.all_vanish})")
    return EXIT_OK


# --------------------------------------------------------------------- parser


def build_parser() -> argparse.ArgumentParser:
    ap = argparse.ArgumentParser(
        prog="beliefmdp",
        description="Belief-state reduction, solving, simulation, and kernel-"
        "continuity diagnostics for finite partially observable models.",
    )
    sub = ap.add_subparsers(dest="command", required=True)

    def add_common(p, belief=True):
        p.add_argument("model", help="model JSON file")
        if belief:
            p.add_argument(
                "--belief",
                default="uniform",
                help="prior over the unobservable states: 'uniform' or comma-"
                "separated weights (for fully observable models: over states)",
            )

    p = sub.add_parser("validate", help="check model invariants")
    add_common(p, belief=False)
    p.set_defaults(fn=cmd_validate)

    p = sub.add_parser("reduce", help="expand the reachable belief states")
    add_common(p)
    p.add_argument("--horizon", type=int, required=True)
    p.add_argument("--cap", type=int, default=10**6)
    p.add_argument("--out-dir", default=".")
    p.set_defaults(fn=cmd_reduce)

    p = sub.add_parser("solve", help="finite-horizon optimal value and policy")
    add_common(p)
    p.add_argument("--horizon", type=int, required=True)
    p.add_argument("--alpha", type=float, default=1.0)
    p.add_argument("--cap", type=int, default=10**6)
    p.add_argument("--out-dir", default=".")
    p.set_defaults(fn=cmd_solve)

    p = sub.add_parser(
        "solve-inf", help="infinite-horizon value iteration (grid for beliefs)"
    )
    add_common(p, belief=False)
    p.add_argument("--grid", type=int, default=10, help="lattice resolution")
    p.add_argument("--alpha", type=float, required=True)
    p.add_argument("--tol", type=float, default=1e-6)
    p.add_argument("--out-dir", default=".")
    p.set_defaults(fn=cmd_solve_inf)

    p = sub.add_parser("simulate", help="seeded rollouts of an exported policy")
    add_common(p)
    p.add_argument("--policy", required=True, help="solver output dir or policy CSV")
    p.add_argument("--runs", type=int, default=1)
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--horizon", type=int, required=True)
    p.add_argument("--alpha", type=float, default=1.0)
    p.set_defaults(fn=cmd_simulate)

    p = sub.add_parser("diagnose", help="kernel-continuity modulus suites")
    p.add_argument("family_spec", help="family description JSON")
    p.add_argument(
        "--suite", choices=("equivalence", "belief", "mixture"), required=True
    )
    p.add_argument("--out", default="-", help="CSV output path ('-' = stdout)")
    p.set_defaults(fn=cmd_diagnose)

    p = sub.add_parser("oracle", help="brute-force optimal value (small instances)")
    add_common(p)
    p.add_argument("--horizon", type=int, required=True)
    p.add_argument("--alpha", type=float, default=1.0)
    p.set_defaults(fn=cmd_oracle)

    return ap


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    try:
        return args.fn(args)
    except CliError as e:
        print(f"error: {e}", file=sys.stderr)
        return e.code
    except ModelValidationError as e:
        print(f"error: {e}", file=sys.stderr)
        return EXIT_VALIDATION
    except LiftError as e:
        print(f"error: {e}", file=sys.stderr)
        return EXIT_VALIDATION
    except (ReachableCapError, BruteForceGuardError, GridBudgetError) as e:
        print(f"error: {e}", file=sys.stderr)
        return EXIT_GUARD


if __name__ == "__main__":
    sys.exit(main())
