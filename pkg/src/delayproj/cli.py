"""Config-driven experiment runner.

Subcommands: ``generate`` (build and snapshot a problem), ``run`` (solver
sweep producing one trace CSV per entry per repetition plus a summary),
``verify`` (built-in verification suites), and ``compare`` (rebuild the
summary table from emitted CSVs).

Configs are JSON with an explicit ``schema_version``; unknown fields are
rejected so sweeps stay reproducible.  Exit codes: 0 success, 1
verification failure, 2 config error.  ``DP_THREADS`` caps sweep
parallelism.
"""

import argparse
import concurrent.futures
import json
import os
import sys
from pathlib import Path

import numpy as np

from .errors import ConfigError, DelayProjError, EmptySweep
from .metrics import RunTrace, complexity_to_eps
from .problems import (
    load_problem,
    make_constrained_logreg,
    make_lcqp,
    make_network_flow,
    save_problem,
    solve_reference,
)
from .solvers import SolverConfig, dp_asvrg, dp_sgd, dp_svrg
from .verify import run_suite

SCHEMA_VERSION = 1

_TOP_FIELDS = {"schema_version", "problem", "solvers", "repetitions", "eps",
               "reference_tol"}
_PROBLEM_FIELDS = {"generator", "seed", "params"}
_SOLVER_FIELDS = {"name", "variant", "eta", "gap_E", "inner_m", "stages_S",
                  "total_T", "mu", "batch", "seed", "record_every", "theta"}
_GENERATOR_PARAMS = {
    "lcqp": {"p", "n_atoms", "m_constraints", "eigen_floor", "eigen_ceil"},
    "logreg": {"n_samples", "d", "n_classes", "m_constraints", "weight_decay",
               "label_noise", "signal_scale"},
    "network_flow": {"edges", "node_rates", "weights"},
}

TRACE_COLUMNS_DOC = """\
Trace CSV columns
-----------------
run_id        solver label
variant       dp_sgd | dp_svrg | dp_asvrg
stage         completed stages (0 for the plain solver)
iter          inner iterations so far
projections   projection events: schedule hits plus one per stage boundary
gradients     stochastic-gradient evaluations (anchor passes count N)
comm_rounds   synchronization rounds (federated runs only, else 0)
suboptimality F(point) - F(x*): the just-projected iterate on event rows,
              the stage snapshot on stage rows, the output on the last row
feasibility   ||A^T x - b|| of the row's iterate
wall_ns       wall clock since solver start

Rows are emitted at projection events (thinned by record_every), at every
stage boundary, and once at the end.
"""


def _fail_unknown(fields, allowed, where):
    unknown = set(fields) - allowed
    if unknown:
        raise ConfigError(f"unknown field(s) {sorted(unknown)} in {where}")


def _require(mapping, key, where):
    if key not in mapping:
        raise ConfigError(f"missing required field '{key}' in {where}")
    return mapping[key]


def load_config(path):
    """Parse and validate an experiment config (fail-closed)."""
    try:
        with open(path) as handle:
            raw = json.load(handle)
    except OSError as exc:
        raise ConfigError(f"cannot read config {path}: {exc}") from exc
    except json.JSONDecodeError as exc:
        raise ConfigError(f"config {path} line {exc.lineno}: {exc.msg}") from exc
    if not isinstance(raw, dict):
        raise ConfigError("config root must be an object")
    _fail_unknown(raw, _TOP_FIELDS, "config root")
    version = _require(raw, "schema_version", "config root")
    if version != SCHEMA_VERSION:
        raise ConfigError(f"unsupported schema_version {version}")
    problem = _require(raw, "problem", "config root")
    _fail_unknown(problem, _PROBLEM_FIELDS, "problem")
    gen = _require(problem, "generator", "problem")
    if gen not in _GENERATOR_PARAMS:
        raise ConfigError(f"unknown generator '{gen}' "
                          f"(expected one of {sorted(_GENERATOR_PARAMS)})")
    params = problem.get("params", {})
    _fail_unknown(params, _GENERATOR_PARAMS[gen], f"problem.params for {gen}")
    if gen != "network_flow":
        _require(problem, "seed", "problem")
    solvers = raw.get("solvers", [])
    for i, entry in enumerate(solvers):
        _fail_unknown(entry, _SOLVER_FIELDS, f"solvers[{i}]")
        variant = _require(entry, "variant", f"solvers[{i}]")
        if variant not in ("dp_sgd", "dp_svrg", "dp_asvrg"):
            raise ConfigError(f"solvers[{i}]: unknown variant '{variant}'")
    return raw


def build_problem(config, seed_offset=0):
    problem = config["problem"]
    gen = problem["generator"]
    params = dict(problem.get("params", {}))
    if gen == "lcqp":
        return make_lcqp(seed=problem["seed"] + seed_offset, **params)
    if gen == "logreg":
        return make_constrained_logreg(seed=problem["seed"] + seed_offset, **params)
    return make_network_flow(**params)


def _solver_config(entry, seed_offset):
    fields = {k: v for k, v in entry.items() if k != "name"}
    fields["seed"] = int(fields.get("seed", 0)) + seed_offset
    return SolverConfig(**fields)


def _entry_label(entry, index):
    return entry.get("name") or f"{entry['variant']}_E{entry.get('gap_E', 1)}_{index}"


_SOLVERS = {"dp_sgd": dp_sgd, "dp_svrg": dp_svrg, "dp_asvrg": dp_asvrg}


def cmd_generate(config_path, out_dir):
    config = load_config(config_path)
    out = Path(out_dir)
    out.mkdir(parents=True, exist_ok=True)
    problem = build_problem(config)
    save_problem(problem, out / "problem.npz")
    tol = config.get("reference_tol", 1e-10)
    x_star = solve_reference(problem, tol=tol)
    meta = {
        "generator": config["problem"]["generator"],
        "seed": config["problem"].get("seed"),
        "dim": problem.dim,
        "n_atoms": problem.n_atoms,
        "L": problem.smoothness_L,
        "mu": problem.strong_convexity_mu,
        "kappa": (problem.smoothness_L / problem.strong_convexity_mu
                  if problem.strong_convexity_mu > 0 else None),
        "f_star": problem.value_oracle(x_star),
        "reference_tol": tol,
    }
    with open(out / "metadata.json", "w") as handle:
        json.dump(meta, handle, indent=2)
    print(f"wrote {out / 'problem.npz'} and metadata.json "
          f"(L={meta['L']:.6g}, mu={meta['mu']:.6g})")
    return 0


def _run_entry(problem, entry, index, rep, base_offset, f_star, out):
    label = f"{_entry_label(entry, index)}_rep{rep}"
    cfg = _solver_config(entry, base_offset + rep)
    solver = _SOLVERS[entry["variant"]]
    y_hat, trace = solver(problem, cfg, f_star=f_star)
    trace.run_id = label
    path = out / f"{label}.csv"
    trace.write_csv(path)
    return label, trace, str(path)


def cmd_run(config_path, out_dir, seed_offset=0, eps_list=None):
    config = load_config(config_path)
    entries = config.get("solvers", [])
    if not entries:
        raise EmptySweep("config contains no solver sweep entries")
    out = Path(out_dir)
    out.mkdir(parents=True, exist_ok=True)

    snapshot = out / "problem.npz"
    if snapshot.exists():
        problem = load_problem(snapshot)
    else:
        problem = build_problem(config)
        save_problem(problem, snapshot)
    tol = config.get("reference_tol", 1e-10)
    x_star = solve_reference(problem, tol=tol)
    f_star = problem.value_oracle(x_star)
    eps_values = list(eps_list if eps_list is not None else config.get("eps", [1e-6]))
    reps = int(config.get("repetitions", 1))

    jobs = [(entry, i, rep) for rep in range(reps)
            for i, entry in enumerate(entries)]
    try:
        n_threads = max(1, int(os.environ.get("DP_THREADS", "1")))
    except ValueError:
        raise ConfigError("DP_THREADS must be an integer") from None
    results, failures = [], []

    def _execute(job):
        entry, i, rep = job
        try:
            return _run_entry(problem, entry, i, rep, seed_offset, f_star, out)
        except DelayProjError as exc:
            return (_entry_label(entry, i) + f"_rep{rep}", None, repr(exc))

    if n_threads > 1:
        with concurrent.futures.ThreadPoolExecutor(max_workers=n_threads) as pool:
            outcomes = list(pool.map(_execute, jobs))
    else:
        outcomes = [_execute(job) for job in jobs]
    for label, trace, info in outcomes:
        if trace is None:
            failures.append({"run": label, "error": info})
        else:
            results.append((label, trace))

    summary = {
        "f_star": f_star,
        "eps": eps_values,
        "runs": [_summary_rows(label, trace, eps_values) for label, trace in results],
        "failed": failures,
    }
    with open(out / "summary.json", "w") as handle:
        json.dump(summary, handle, indent=2)
    with open(out / "README.md", "w") as handle:
        handle.write(TRACE_COLUMNS_DOC)
    print(f"{len(results)} run(s) completed, {len(failures)} failed; "
          f"summary at {out / 'summary.json'}")
    for failure in failures:
        print(f"  FAILED {failure['run']}: {failure['error']}", file=sys.stderr)
    return 0


def _summary_rows(label, trace, eps_values):
    rows = []
    for eps in eps_values:
        row = complexity_to_eps(trace, eps)
        rows.append({
            "eps": eps,
            "reached": row.reached,
            "projections_to_eps": row.projections_to_eps,
            "gradients_to_eps": row.gradients_to_eps,
            "iterations_to_eps": row.iterations_to_eps,
            "comm_rounds_to_eps": row.comm_rounds_to_eps,
        })
    return {"run": label, "table": rows}


def cmd_compare(csv_paths, eps_list, out_path=None):
    eps_values = list(eps_list) if eps_list else [1e-6]
    runs = []
    for path in csv_paths:
        trace = RunTrace.read_csv(path)
        runs.append(_summary_rows(trace.run_id, trace, eps_values))
    summary = {"eps": eps_values, "runs": runs}
    text = json.dumps(summary, indent=2)
    if out_path:
        Path(out_path).write_text(text)
    else:
        print(text)
    return 0


def cmd_verify(level):
    ok, _ = run_suite(level)
    print(f"verification ({level}): {'PASS' if ok else 'FAIL'}")
    return 0 if ok else 1


def main(argv=None):
    parser = argparse.ArgumentParser(
        prog="delayproj",
        description="Delayed-projection solver experiment runner.")
    sub = parser.add_subparsers(dest="command", required=True)

    p_gen = sub.add_parser("generate", help="generate and snapshot a problem")
    p_gen.add_argument("--config", required=True)
    p_gen.add_argument("--out", required=True)

    p_run = sub.add_parser("run", help="run the solver sweep")
    p_run.add_argument("--config", required=True)
    p_run.add_argument("--out", required=True)
    p_run.add_argument("--seed-offset", type=int, default=0)
    p_run.add_argument("--eps", type=float, action="append", default=None)

    p_ver = sub.add_parser("verify", help="run the built-in verification suite")
    p_ver.add_argument("--level", choices=("quick", "full"), default="quick")

    p_cmp = sub.add_parser("compare", help="rebuild the summary from trace CSVs")
    p_cmp.add_argument("csvs", nargs="+")
    p_cmp.add_argument("--eps", type=float, action="append", default=None)
    p_cmp.add_argument("--out", default=None)

    args = parser.parse_args(argv)
    try:
        if args.command == "generate":
            return cmd_generate(args.config, args.out)
        if args.command == "run":
            return cmd_run(args.config, args.out, args.seed_offset, args.eps)
        if args.command == "verify":
            return cmd_verify(args.level)
        if args.command == "compare":
            return cmd_compare(args.csvs, args.eps, args.out)
    except (ConfigError, EmptySweep) as exc:
        print(f"config error: {exc}", file=sys.stderr)
        return 2
    except DelayProjError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 1
    return 0


if __name__ == "__main__":
    sys.exit(main())
