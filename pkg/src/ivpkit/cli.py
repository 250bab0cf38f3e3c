"""Command-line scenario runner.

Each subcommand resolves its settings from defaults, an optional
``key = value`` config file and command-line flags (flags win), runs one
scenario and writes a JSON report plus CSV tables to the output directory.

Exit codes: 0 when every asserted property holds, 1 on a property
violation, 2 on a usage or config error.
"""
from __future__ import annotations

import argparse
import csv
import json
import math
import os
import re
import sys
import time
from dataclasses import dataclass
from pathlib import Path
from typing import Callable, Optional

import numpy as np

from . import blackwell, ivp, signaling, testing_game
from .beliefs import Experiment

OUTPUT_DIR_ENV = "IVPKIT_OUTPUT_DIR"
DEFAULT_OUTPUT_DIR = "ivpkit-output"


class ConfigError(ValueError):
    def __init__(self, message: str, line: Optional[int] = None, source: str = ""):
        where = f"{source}:{line}: " if line is not None else ""
        super().__init__(where + message)


# -- value parsing --------------------------------------------------------------

def _int(lo=None, hi=None):
    def parse(text):
        try:
            value = int(text)
        except ValueError:
            raise ValueError(f"expected an integer, got {text!r}") from None
        if lo is not None and value < lo:
            raise ValueError(f"must be >= {lo}")
        if hi is not None and value > hi:
            raise ValueError(f"must be <= {hi}")
        return value
    return parse


def _float(lo=None, hi=None, open_lo=False):
    def parse(text):
        try:
            value = float(text)
        except ValueError:
            raise ValueError(f"expected a number, got {text!r}") from None
        if not math.isfinite(value):
            raise ValueError("must be finite")
        if lo is not None and (value < lo or (open_lo and value == lo)):
            raise ValueError(f"must be {'>' if open_lo else '>='} {lo}")
        if hi is not None and value > hi:
            raise ValueError(f"must be <= {hi}")
        return value
    return parse


def _float_list(lo=None, hi=None):
    item = _float()

    def parse(text):
        values = [item(v) for v in str(text).split(",") if v.strip()]
        if not values:
            raise ValueError("expected a comma-separated list of numbers")
        for v in values:
            if (lo is not None and v <= lo) or (hi is not None and v >= hi):
                raise ValueError(f"values must lie in ({lo}, {hi})")
        return values
    return parse


def _bool(text):
    t = str(text).strip().lower()
    if t in ("1", "true", "yes", "on"):
        return True
    if t in ("0", "false", "no", "off"):
        return False
    raise ValueError(f"expected a boolean, got {text!r}")


def _choice(*options):
    def parse(text):
        if text not in options:
            raise ValueError(f"expected one of {', '.join(options)}")
        return text
    return parse


_seed = _int(0, 2 ** 64 - 1)

_CONSTRUCTORS = {
    "uninformative": (blackwell.uninformative, (int,)),
    "fully_informative": (blackwell.fully_informative, (int,)),
    "binary_symmetric": (blackwell.binary_symmetric, (float,)),
    "threshold_reveal": (blackwell.threshold_reveal, (int, int)),
    "pool_pair_reveal": (blackwell.pool_pair_reveal, (int, int)),
}


def parse_experiment(text: str) -> Experiment:
    """Build an experiment from ``name[:args]``.

    ``uninformative`` and ``fully_informative`` default to a binary state;
    ``matrix:a b/c d`` gives the likelihood rows directly.
    """
    name, _, args = text.strip().partition(":")
    if name == "matrix":
        try:
            rows = [[float(x) for x in row.split()] for row in args.split("/")]
            return Experiment(np.array(rows), name=text.strip())
        except ValueError as err:
            raise ValueError(f"bad matrix experiment {text!r}: {err}") from None
    if name not in _CONSTRUCTORS:
        raise ValueError(f"unknown experiment {name!r}; known: "
                         f"{', '.join(sorted(_CONSTRUCTORS))}, matrix")
    fn, types = _CONSTRUCTORS[name]
    parts = [p for p in args.split(",") if p.strip()]
    if not parts and name in ("uninformative", "fully_informative"):
        parts = ["2"]
    if len(parts) != len(types):
        raise ValueError(f"{name} takes {len(types)} argument(s), got {len(parts)}")
    try:
        exp = fn(*(t(p) for t, p in zip(types, parts)))
    except ValueError as err:
        raise ValueError(f"bad experiment {text!r}: {err}") from None
    return Experiment(exp.likelihood, name=text.strip())


def _experiment_list(text):
    specs = [s for s in str(text).split(";") if s.strip()]
    if not specs:
        raise ValueError("expected a ';'-separated list of experiments")
    for s in specs:
        parse_experiment(s)
    return [s.strip() for s in specs]


def _experiment(text):
    parse_experiment(text)
    return str(text).strip()


@dataclass(frozen=True)
class Param:
    parse: Callable
    default: str
    help: str


SCHEMAS = {
    "verify-ivp": {
        "trials": Param(_int(1), "10000", "number of random instances"),
        "max_states": Param(_int(2), "6", "largest state count L"),
        "max_signals": Param(_int(1), "8", "largest signal count K"),
        "seed": Param(_seed, "0", "64-bit campaign seed"),
    },
    "counterexamples": {
        "example": Param(_choice("all", "non-mlrp", "direction", "undershoot"), "all",
                         "which construction to run"),
        "x": Param(_float_list(0.0, 1.0), "0.1,0.5,0.9",
                   "middle-state weights for the non-MLRP instance"),
        "trials": Param(_int(1), "1000", "sampled prior pairs per construction"),
        "max_states": Param(_int(3), "6", "largest state count for sampled pairs"),
        "seed": Param(_seed, "0", "64-bit sampling seed"),
    },
    "blackwell-check": {
        "more": Param(_experiment, "binary_symmetric:0.9", "claimed more informative experiment"),
        "less": Param(_experiment, "binary_symmetric:0.7", "claimed garbling"),
        "round_trips": Param(_int(0), "1000", "random garble-and-recover checks"),
        "max_states": Param(_int(2), "6", "largest state count for round trips"),
        "max_signals": Param(_int(1), "8", "largest signal count for round trips"),
        "seed": Param(_seed, "0", "64-bit seed for round trips"),
    },
    "testing-game": {
        "tests": Param(_experiment_list,
                       "binary_symmetric:0.5;binary_symmetric:0.7;binary_symmetric:0.9;"
                       "binary_symmetric:1.0",
                       "';'-separated tests, least informative first"),
        "cost": Param(_float(0.0), "0.3", "testing cost"),
        "grid": Param(_int(3), "2001", "type grid size"),
        "certifier": Param(_bool, "true", "also solve the monopolist certifier"),
        "certifier_tests": Param(_experiment_list,
                                 "uninformative;binary_symmetric:0.7;binary_symmetric:0.9;"
                                 "fully_informative",
                                 "';'-separated tests the certifier may offer"),
    },
    "signaling-game": {
        "experiments": Param(_experiment_list, "uninformative",
                             "';'-separated binary-state experiments"),
        "cost": Param(_choice("quadratic"), "quadratic", "cost family"),
        "eps": Param(_float(0.0, 0.5, open_lo=True), "1e-4", "grid stops at 1 - eps"),
        "grid": Param(_int(3), "4001", "output grid size"),
        "step": Param(_float(0.0, 0.1, open_lo=True), "0.00025", "initial RK4 step in the report"),
        "random_pairs": Param(_int(0), "0", "random ranked pairs to compare"),
        "pair_grid": Param(_int(3), "401", "output grid size for random pairs"),
        "max_signals": Param(_int(2), "6", "largest signal count for random pairs"),
        "seed": Param(_seed, "0", "64-bit seed for random pairs"),
    },
    "appendix-b": {
        "z": Param(_float_list(0.0, 0.5), "0.1,0.25,0.4", "three-state weights z in (0, 1/2)"),
        "t_points": Param(_int(2), "11", "types on [0, 1] for the three-state table"),
        "samples": Param(_int(0), "200", "random experiments for the convex-payoff check"),
        "seed": Param(_seed, "0", "64-bit seed for sampled experiments"),
    },
}

ALIASES = {"states": "max_states", "signals": "max_signals"}


def read_config_file(path: str, schema: dict) -> dict:
    """``key = value`` lines; ``#`` starts a comment; blank lines are skipped."""
    out = {}
    try:
        lines = Path(path).read_text().splitlines()
    except OSError as err:
        raise ConfigError(f"cannot read config: {err.strerror}") from None
    for no, raw in enumerate(lines, start=1):
        line = raw.split("#", 1)[0].strip()
        if not line:
            continue
        key, sep, value = line.partition("=")
        if not sep:
            raise ConfigError("expected 'key = value'", no, path)
        key = key.strip().replace("-", "_")
        key = ALIASES.get(key, key)
        if key not in schema:
            raise ConfigError(f"unknown key {key!r}", no, path)
        try:
            schema[key].parse(value.strip())
        except ValueError as err:
            raise ConfigError(f"{key}: {err}", no, path) from None
        out[key] = (value.strip(), no)
    return out


def parse_config(subcommand: str, config_path: Optional[str] = None,
                 overrides: Optional[dict] = None) -> dict:
    """Resolved settings: defaults, then the config file, then ``overrides``."""
    schema = SCHEMAS[subcommand]
    raw = {k: (p.default, None) for k, p in schema.items()}
    if config_path:
        raw.update(read_config_file(config_path, schema))
    for k, v in (overrides or {}).items():
        if v is not None:
            raw[k] = (v, None)
    resolved = {}
    for key, (text, line) in raw.items():
        try:
            resolved[key] = schema[key].parse(text)
        except ValueError as err:
            origin = f"--{key.replace('_', '-')}" if line is None else key
            raise ConfigError(f"{origin}: {err}", line, config_path or "") from None
    return resolved


# -- report plumbing ------------------------------------------------------------

def _record(name, lhs, rhs, passed) -> dict:
    return {"name": name, "lhs": float(lhs), "rhs": float(rhs),
            "residual": float(rhs) - float(lhs), "pass": bool(passed)}


def _at_most(name, lhs, rhs, tol=0.0) -> dict:
    return _record(name, lhs, rhs, float(rhs) - float(lhs) >= -tol)


def _below(name, lhs, rhs, margin=0.0) -> dict:
    return _record(name, lhs, rhs, float(rhs) - float(lhs) > margin)


def _check_record(check) -> dict:
    return _record(check.name, check.lhs, check.rhs, check.passed)


def _clean(obj):
    if isinstance(obj, dict):
        return {str(k): _clean(v) for k, v in obj.items()}
    if isinstance(obj, (list, tuple)):
        return [_clean(v) for v in obj]
    if isinstance(obj, np.ndarray):
        return _clean(obj.tolist())
    if isinstance(obj, (bool, np.bool_)):
        return bool(obj)
    if isinstance(obj, (int, np.integer)):
        return int(obj)
    if isinstance(obj, (float, np.floating)):
        x = float(obj)
        return x if math.isfinite(x) else repr(x)
    return obj


def write_csv(path: Path, header, rows) -> None:
    """Header plus rows; floats with 17 significant digits, LF line endings."""
    with open(path, "w", newline="") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(header)
        for row in rows:
            cells = []
            for x in row:
                if isinstance(x, (float, np.floating)):
                    if not math.isfinite(x):
                        raise ValueError(f"non-finite value in {path.name}")
                    cells.append(format(float(x), ".17g"))
                else:
                    cells.append(x)
            w.writerow(cells)


def _slug(text: str) -> str:
    return re.sub(r"[^A-Za-z0-9]+", "_", text).strip("_")


# -- scenarios ------------------------------------------------------------------

def run_verify_ivp(cfg, out_dir, workers):
    summary = ivp.run_property_campaign(trials=cfg["trials"], max_states=cfg["max_states"],
                                        max_signals=cfg["max_signals"], seed=cfg["seed"],
                                        workers=workers)
    assertions = [
        _at_most("chain_violations", summary.chain_violations, 0),
        _at_most("subchain_violations", summary.subchain_violations, 0),
        _at_most("disagreement_violations", summary.disagreement_violations, 0),
        _at_most("equivalence_mismatches", summary.equivalence_mismatches, 0),
        _at_most("min_residual", -ivp.RESIDUAL_TOL, summary.min_residual),
    ]
    return summary.to_dict(), assertions


def run_counterexamples(cfg, out_dir, workers):
    results, assertions = {}, []
    which = cfg["example"]
    if which in ("all", "non-mlrp"):
        rows = []
        for x in cfg["x"]:
            states, a, b, exp, rep = ivp.non_mlrp_instance(x)
            top = float(states.values[-1])
            rows.append({"x": x, "m_a": rep.m_a, "m_b": rep.m_b,
                         "a_expects_b": rep.a_expects_b,
                         "direction_status": rep.direction_a.status,
                         "undershoot_status": rep.undershoot_a.status})
            assertions.append(_record(f"non_mlrp_cross_mean_is_top_state[x={x:g}]",
                                      rep.a_expects_b, top, rep.a_expects_b == top))
            assertions.append(_below(f"non_mlrp_direction_fails[x={x:g}]",
                                     rep.m_b, rep.a_expects_b, ivp.RESIDUAL_TOL))
            print(f"non-MLRP instance x={x:g}: m_A={rep.m_a:.17g} m_B={rep.m_b:.17g} "
                  f"E_A[m_B]={rep.a_expects_b:.17g} direction={rep.direction_a.status.upper()}")
        results["non_mlrp"] = {"experiment": exp.likelihood, "states": states.values,
                               "instances": rows}
    if which in ("all", "direction", "undershoot"):
        camp = ivp.run_counterexample_campaign(cfg["trials"], cfg["seed"], cfg["max_states"])
        for label in ("direction", "undershoot"):
            if which not in ("all", label):
                continue
            r = camp[label]
            results[label] = r
            assertions.append(_at_most(f"{label}_strict_violations", r["trials"],
                                       r["strict_violations"]))
            assertions.append(_below(f"{label}_max_residual", r["max_residual"],
                                     -ivp.RESIDUAL_TOL))
            print(f"{label}: {r['strict_violations']}/{r['trials']} strict violations, "
                  f"max residual {r['max_residual']:.3g}")
    return results, assertions


def run_blackwell_check(cfg, out_dir, workers):
    more, less = parse_experiment(cfg["more"]), parse_experiment(cfg["less"])
    if more.num_states != less.num_states:
        raise ConfigError("more and less are defined on different state counts")
    kernel = blackwell.find_garbling(more, less)
    reverse = blackwell.find_garbling(less, more)
    results = {"more_dominates_less": kernel is not None,
               "less_dominates_more": reverse is not None,
               "kernel": None if kernel is None else kernel.matrix}
    assertions = [_record("more_dominates_less", 0, 1 if kernel is not None else 0,
                          kernel is not None)]
    if kernel is not None:
        err = float(np.max(np.abs(more.likelihood @ kernel.matrix - less.likelihood)))
        assertions.append(_at_most("kernel_reconstruction_error", err, blackwell.FEASIBILITY_TOL))
    if cfg["round_trips"]:
        rt = blackwell.garbling_round_trips(cfg["round_trips"], cfg["seed"],
                                            cfg["max_states"], cfg["max_signals"])
        results["round_trips"] = rt
        assertions.append(_at_most("round_trips_recovered", rt["trials"], rt["passed"]))
        assertions.append(_at_most("round_trip_reconstruction_error",
                                   rt["max_reconstruction_error"], blackwell.FEASIBILITY_TOL))
    return results, assertions


def accuracy_equivalent(exp: Experiment) -> float:
    """``0.5 + TV/2`` for the largest total-variation gap between state rows.

    Equals ``q`` for a binary symmetric test, 0.5 without information and 1
    with full revelation of a binary state.
    """
    g = exp.likelihood
    tv = max(0.5 * np.abs(g[i] - g[j]).sum() for i in range(len(g)) for j in range(i + 1, len(g)))
    return 0.5 + 0.5 * float(tv)


def run_testing_game(cfg, out_dir, workers):
    specs = cfg["tests"]
    tests = [parse_experiment(s) for s in specs]
    if any(t.num_states != 2 for t in tests):
        raise ConfigError("tests must be over the two qualities of the canonical model")
    model = testing_game.canonical_model(tests[0], cfg["cost"], n=cfg["grid"])
    results, assertions = {}, []
    try:
        table = testing_game.comparative_statics(
            model, tests, ids=specs, params=[accuracy_equivalent(t) for t in tests])
    except blackwell.NotRankedError as err:
        results["ranking_error"] = str(err)
        return results, [_record("tests_ranked", 0, 0, False)]
    write_csv(out_dir / "testing_game.csv",
              ["test_id", "informativeness_param", "smallest_cutoff", "largest_cutoff",
               "tested_mass", "agent_exante_cost"],
              [(r.test_id, r.informativeness_param, r.smallest_cutoff, r.largest_cutoff,
                r.tested_mass, r.agent_exante_cost) for r in table.rows])
    rows = []
    for test, row in zip(tests, table.rows):
        priced = model.with_test(test)
        cutoffs = []
        for cut in row.cutoffs:
            entry = {"t_star": cut.t_star, "kind": cut.kind, "residual": cut.residual,
                     "upper": cut.upper}
            if cut.kind == "interior":
                checks = testing_game.ivp_sandwich(priced, cut)
                entry["sandwich"] = [c.as_record() for c in checks]
                ok = testing_game.sandwich_holds(checks)
                assertions.append(_record(f"ivp_sandwich[{row.test_id}@{cut.t_star:.9g}]",
                                          checks[0].lhs, checks[-1].rhs, ok))
            cutoffs.append(entry)
        rows.append({"test_id": row.test_id, "smallest_cutoff": row.smallest_cutoff,
                     "largest_cutoff": row.largest_cutoff, "cutoffs": cutoffs})
    results["statics"] = rows
    small = [r.smallest_cutoff for r in table.rows]
    large = [r.largest_cutoff for r in table.rows]
    assertions.append(_record("smallest_cutoff_monotone", 0, float(np.min(np.diff(small), initial=0)),
                              table.smallest_monotone))
    assertions.append(_record("largest_cutoff_monotone", 0, float(np.min(np.diff(large), initial=0)),
                              table.largest_monotone))
    if cfg["certifier"]:
        offer = [parse_experiment(s) for s in cfg["certifier_tests"]]
        best = testing_game.monopolist_certifier(model, offer, ids=cfg["certifier_tests"])
        results["certifier"] = {"test_id": best.test_id, "price": best.price,
                                "cutoff": best.cutoff, "profit": best.profit}
    return results, assertions


def _signaling_model(cfg, exp: Experiment, grid: int):
    exp = blackwell.order_signals_binary(exp)
    return signaling.SignalingModel(
        exp, signaling.quadratic_cost(), eps=cfg["eps"], step=cfg["step"], n_grid=grid,
        boundary_informative=bool(np.any(exp.likelihood <= 0)))


def run_signaling_game(cfg, out_dir, workers):
    specs = cfg["experiments"]
    exps = [parse_experiment(s) for s in specs]
    if any(e.num_states != 2 for e in exps):
        raise ConfigError("signaling experiments must have a binary state")
    results, assertions = {"solutions": []}, []
    for i, (spec, exp) in enumerate(zip(specs, exps)):
        model = _signaling_model(cfg, exp, cfg["grid"])
        try:
            sol = signaling.solve_lcse(model)
        except signaling.IntegrationError as err:
            results["solutions"].append({"experiment": spec, "error": str(err)})
            assertions.append(_record(f"lcse_solved[{spec}]", 0, 0, False))
            continue
        name = f"signaling_{i}_{_slug(spec)}.csv"
        write_csv(out_dir / name, ["t", "rho", "cost", "marginal_benefit"],
                  zip(sol.t, sol.rho, sol.cost, sol.marginal_benefit))
        entry = {"experiment": spec, "csv": name, "ode_residual": sol.ode_residual,
                 "step": sol.step, "monotone": sol.monotone, "inflates": sol.inflates,
                 "rho_at_end": float(sol.rho[-1]),
                 "single_crossing_violations": int(sol.single_crossing.violations.shape[0]),
                 "single_crossing_min_violating_report": sol.single_crossing.min_violating_report}
        assertions.append(_at_most(f"ode_residual[{spec}]", sol.ode_residual,
                                   signaling.RESIDUAL_TOL))
        assertions.append(_record(f"strictly_increasing[{spec}]", 0, 1, sol.monotone))
        if np.all(model.experiment.likelihood[0] == model.experiment.likelihood[1]):
            defect = signaling.uninformative_quadratic_defect(sol)
            entry["closed_form_defect"] = defect
            assertions.append(_at_most(f"closed_form_defect[{spec}]", defect, 1e-6))
        results["solutions"].append(entry)

    base = _signaling_model(cfg, exps[0], cfg["grid"])
    comparisons = []
    for i, j in ((i, j) for i in range(len(exps)) for j in range(len(exps)) if i != j):
        if blackwell.find_garbling(exps[i], exps[j]) is None:
            continue
        if i > j and blackwell.find_garbling(exps[j], exps[i]) is not None:
            continue   # equivalent pair, compared once
        cmp = signaling.compare_informativeness(base, exps[i], exps[j], check_ranked=False)
        name = f"signaling_compare_{i}_{j}.csv"
        write_csv(out_dir / name,
                  ["t", "mb_more", "mb_less", "rho_more", "rho_less", "cost_more", "cost_less"],
                  zip(cmp.t, cmp.mb_more, cmp.mb_less, cmp.rho_more, cmp.rho_less,
                      cmp.cost_more, cmp.cost_less))
        label = f"{specs[i]}>={specs[j]}"
        comparisons.append({"more": specs[i], "less": specs[j], "csv": name,
                            "mb_gap": cmp.mb_gap, "rho_gap": cmp.rho_gap,
                            "cost_gap": cmp.cost_gap})
        assertions.append(_at_most(f"mb_ordered[{label}]", -cmp.slack, cmp.mb_gap))
        assertions.append(_at_most(f"rho_ordered[{label}]", -cmp.slack, cmp.rho_gap))
        assertions.append(_at_most(f"cost_ordered[{label}]", -cmp.slack, cmp.cost_gap))
    results["comparisons"] = comparisons

    if cfg["random_pairs"]:
        camp = signaling.ranked_pair_campaign(
            _signaling_model(cfg, blackwell.uninformative(2), cfg["pair_grid"]),
            pairs=cfg["random_pairs"], seed=cfg["seed"], max_signals=cfg["max_signals"])
        results["random_pairs"] = camp
        assertions.append(_at_most("random_pairs_ordered", camp["pairs"], camp["ordered"]))
    return results, assertions


def run_appendix_b(cfg, out_dir, workers):
    results, assertions = {}, []
    t_inner = np.linspace(0.0, 1.0, 101)[1:-1]
    rep = signaling.appendix_b1_nonlinear_check(blackwell.uninformative(2), t_inner)
    assertions.append(_record("convex_payoff_equality_without_information", 0, 0,
                              rep.status == "equality"))
    statuses = {"equality": 0, "reversal": 0, "reversal extreme": 0, "fail": 0}
    rng = np.random.default_rng(np.random.SeedSequence(entropy=cfg["seed"]))
    samples = [signaling.random_ranked_pair(rng)[0] for _ in range(cfg["samples"])]
    samples.append(blackwell.fully_informative(2))
    samples.append(blackwell.binary_symmetric(0.9))
    for exp in samples:
        statuses[signaling.appendix_b1_nonlinear_check(exp, t_inner).status] += 1
    results["convex_payoff"] = {"uninformative_status": rep.status,
                                "sampled": len(samples), "status_counts": statuses}
    assertions.append(_at_most("convex_payoff_informative_strict",
                               statuses["equality"] + statuses["fail"], 0))

    ts = np.linspace(0.0, 1.0, cfg["t_points"])
    rows = []
    tables = []
    for z in cfg["z"]:
        table = signaling.appendix_b2_three_state_check(z, ts)
        tables.append({"z": z, "max_defect": table.max_defect,
                       "reversal_holds": table.reversal_holds})
        assertions.append(_at_most(f"three_state_closed_form[z={z:g}]", table.max_defect, 1e-8))
        gap = min(r.informative - r.uninformative for r in table.rows)
        assertions.append(_at_most(f"three_state_reversal[z={z:g}]", 0, gap))
        rows += [(z, r.t, r.uninformative, r.informative, r.uninformative_numeric,
                  r.informative_numeric) for r in table.rows]
    write_csv(out_dir / "appendix_b_three_state.csv",
              ["z", "t", "uninformative", "informative", "uninformative_numeric",
               "informative_numeric"], rows)
    results["three_state"] = tables
    return results, assertions


RUNNERS = {
    "verify-ivp": run_verify_ivp,
    "counterexamples": run_counterexamples,
    "blackwell-check": run_blackwell_check,
    "testing-game": run_testing_game,
    "signaling-game": run_signaling_game,
    "appendix-b": run_appendix_b,
}


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="ivpkit", description=__doc__.splitlines()[0])
    sub = parser.add_subparsers(dest="subcommand", required=True)
    for name, schema in SCHEMAS.items():
        p = sub.add_parser(name)
        p.add_argument("--config", help="key = value file; flags override it")
        p.add_argument("--output-dir",
                       help=f"report directory (default ${OUTPUT_DIR_ENV} or {DEFAULT_OUTPUT_DIR})")
        p.add_argument("--workers", type=int, default=1, help="parallel processes where supported")
        for key, param in schema.items():
            p.add_argument("--" + key.replace("_", "-"), dest=key, default=None,
                           help=f"{param.help} (default: {param.default})")
    return parser


def run(argv=None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    name = args.subcommand
    schema = SCHEMAS[name]
    try:
        cfg = parse_config(name, args.config, {k: getattr(args, k) for k in schema})
        if args.workers < 1:
            raise ConfigError("--workers must be >= 1")
        out_dir = Path(args.output_dir or os.environ.get(OUTPUT_DIR_ENV) or DEFAULT_OUTPUT_DIR)
        out_dir.mkdir(parents=True, exist_ok=True)
        start = time.perf_counter()
        results, assertions = RUNNERS[name](cfg, out_dir, args.workers)
    except ConfigError as err:
        print(f"ivpkit {name}: error: {err}", file=sys.stderr)
        return 2
    elapsed = time.perf_counter() - start
    passed = all(a["pass"] for a in assertions)
    body = {"subcommand": name, "config": cfg, "results": results,
            "assertions": assertions, "pass": passed}
    report = {"body": _clean(body), "wall_clock_seconds": elapsed}
    path = out_dir / f"{name.replace('-', '_')}.json"
    path.write_text(json.dumps(report, indent=2, sort_keys=True, allow_nan=False) + "\n")
    for a in assertions:
        if not a["pass"]:
            print(f"FAIL {a['name']}: lhs={a['lhs']!r} rhs={a['rhs']!r}", file=sys.stderr)
    print(f"{'PASS' if passed else 'FAIL'}: {len(assertions)} assertions, report {path}")
    return 0 if passed else 1


def main() -> None:
    sys.exit(run())
