"""End-to-end acceptance gate, one test per criterion at full scale.

Each test appends a PASS/FAIL line that is printed in the ``acceptance``
section of the pytest terminal summary.
"""
import json

import numpy as np
import pytest

from conftest import record_acceptance
from ivpkit import cli, ivp, signaling, testing_game
from ivpkit.blackwell import (
    binary_symmetric,
    find_garbling,
    fully_informative,
    garbling_round_trips,
    uninformative,
)

SEED = 20240611


@pytest.fixture(scope="module")
def campaign():
    return ivp.run_property_campaign(trials=10_000, max_states=6, max_signals=8, seed=SEED)


def test_chain_campaign(campaign):
    ok = (campaign.chain_violations == 0 and campaign.subchain_violations == 0
          and campaign.min_residual >= -ivp.RESIDUAL_TOL)
    record_acceptance("chain campaign (10,000 trials)", ok,
                      f"{campaign.chain_instances} full-chain + "
                      f"{campaign.trials - campaign.chain_instances} sub-chain instances, "
                      f"violations={campaign.chain_violations + campaign.subchain_violations}, "
                      f"min residual={campaign.min_residual:.3g}")
    assert ok


def test_disagreement_ordering(campaign):
    ok = campaign.disagreement_violations == 0 and campaign.equivalence_mismatches == 0
    record_acceptance("expected-disagreement ordering", ok,
                      f"violations={campaign.disagreement_violations}, "
                      f"verdict mismatches with the chain={campaign.equivalence_mismatches}")
    assert ok


def test_non_mlrp_regression():
    values, statuses = [], []
    for x in (0.1, 0.5, 0.9):
        _, _, _, _, rep = ivp.non_mlrp_instance(x)
        values.append(rep.a_expects_b)
        statuses.append(rep.direction_a.status)
    ok = values == [2.0, 2.0, 2.0] and statuses == ["fail"] * 3
    record_acceptance("non-MLRP regression", ok, f"E_A[m_B]={values}, direction={statuses}")
    assert ok


def test_counterexample_constructions():
    out = ivp.run_counterexample_campaign(trials=1000, seed=SEED)
    ok = all(out[k]["strict_violations"] == 1000 and out[k]["max_residual"] < -ivp.RESIDUAL_TOL
             for k in ("direction", "undershoot"))
    record_acceptance("counterexample constructions", ok, ", ".join(
        f"{k} {out[k]['strict_violations']}/1000 (max residual {out[k]['max_residual']:.3g})"
        for k in ("direction", "undershoot")))
    assert ok


def test_blackwell_lp():
    q = find_garbling(binary_symmetric(0.9), binary_symmetric(0.7))
    eps = None if q is None else float(q.matrix[0, 1])
    reverse = find_garbling(binary_symmetric(0.7), binary_symmetric(0.9))
    trips = garbling_round_trips(1000, seed=SEED)
    ok = (eps is not None and abs(eps - 0.25) <= 1e-8 and abs(q.matrix[1, 0] - 0.25) <= 1e-8
          and reverse is None and trips["passed"] == 1000)
    record_acceptance("Blackwell LP", ok,
                      f"flip eps={eps!r}, reverse feasible={reverse is not None}, "
                      f"round trips {trips['passed']}/1000")
    assert ok


def test_testing_game_closed_forms():
    cost = 0.3
    base = testing_game.canonical_model(uninformative(2), cost)
    blind = testing_game.solve_equilibrium_cutoffs(base)
    full = testing_game.solve_equilibrium_cutoffs(base.with_test(fully_informative(2)))
    full_interior = [c.t_star for c in full if c.kind == "interior"]
    tests = [binary_symmetric(q) for q in (0.5, 0.7, 0.9, 1.0)]
    table = testing_game.comparative_statics(base, tests)
    sandwiches = []
    for test, row in zip(tests, table.rows):
        for c in row.cutoffs:
            if c.kind == "interior":
                sandwiches.append(testing_game.sandwich_holds(
                    testing_game.ivp_sandwich(base.with_test(test), c)))
    ok = ([(c.t_star, c.kind) for c in blind] == [(0.0, "all-test")]
          and len(full_interior) == 1 and abs(full_interior[0] - 0.6) <= 1e-6
          and table.monotone and sandwiches and all(sandwiches))
    record_acceptance("testing game closed forms", ok,
                      f"uninformative cutoff={blind[0].t_star} ({blind[0].kind}), "
                      f"full-information cutoff={full_interior}, "
                      f"smallest cutoffs={[round(r.smallest_cutoff, 6) for r in table.rows]}, "
                      f"sandwich holds at {sum(sandwiches)}/{len(sandwiches)} interior cutoffs")
    assert ok


def test_monopolist_certifier():
    model = testing_game.canonical_model(uninformative(2), 0.0)
    best = testing_game.monopolist_certifier(model, [uninformative(2), fully_informative(2)])
    ok = (best.test_index == 0 and best.price == model.prior_mean - model.t_lo
          and best.cutoff == model.t_lo and abs(best.profit - 0.5) <= 1e-9)
    record_acceptance("monopolist certifier", ok,
                      f"test={best.test_id}, price={best.price}, cutoff={best.cutoff}, "
                      f"profit={best.profit!r}")
    assert ok


def test_lcse_closed_form():
    sol = signaling.solve_lcse(signaling.SignalingModel(uninformative(2)))
    defect = signaling.uninformative_quadratic_defect(sol)
    ok = defect <= 1e-6 and sol.ode_residual <= 1e-7
    record_acceptance("LCSE closed-form oracle", ok,
                      f"max defect={defect:.3g} over {sol.t.size} types, "
                      f"ODE residual={sol.ode_residual:.3g}")
    assert ok


def test_signaling_informativeness():
    spot = signaling.marginal_benefit(0.5, binary_symmetric(0.75))
    out = signaling.ranked_pair_campaign(signaling.SignalingModel(uninformative(2)),
                                         pairs=1000, seed=SEED)
    ok = abs(spot - 0.75) <= 1e-10 and out["ordered"] == 1000
    record_acceptance("marginal benefit and cost ordering", ok,
                      f"MB(0.5; q=0.75)={spot!r}, ordered pairs {out['ordered']}/1000, "
                      f"min gaps mb={out['mb_gap']:.3g} cost={out['cost_gap']:.3g}")
    assert ok


def test_reversal_without_linearity_or_mlrp():
    t = np.linspace(0.0, 1.0, 101)[1:-1]
    blind = signaling.appendix_b1_nonlinear_check(uninformative(2), t).status
    rng = np.random.default_rng(SEED)
    sampled = [signaling.appendix_b1_nonlinear_check(signaling.random_ranked_pair(rng)[0], t).status
               for _ in range(200)]
    tables = [signaling.appendix_b2_three_state_check(z, np.linspace(0, 1, 21))
              for z in (0.1, 0.25, 0.4)]
    defect = max(tab.max_defect for tab in tables)
    ok = (blind == "equality" and all(s in ("reversal", "reversal extreme") for s in sampled)
          and defect <= 1e-8 and all(tab.reversal_holds for tab in tables))
    record_acceptance("reversals without linearity or MLRP", ok,
                      f"uninformative={blind}, informative strict in "
                      f"{sum(s != 'equality' for s in sampled)}/200, "
                      f"three-state max defect={defect:.3g}")
    assert ok


SCENARIOS = [
    ["verify-ivp", "--seed", str(SEED)],
    ["counterexamples", "--seed", str(SEED)],
    ["blackwell-check", "--seed", str(SEED)],
    ["testing-game"],
    ["signaling-game", "--experiments", "uninformative;binary_symmetric:0.9;binary_symmetric:0.7",
     "--random-pairs", "1000", "--seed", str(SEED)],
    ["appendix-b", "--seed", str(SEED)],
]


def _outputs(directory):
    out = {}
    for path in sorted(directory.iterdir()):
        if path.suffix == ".json":
            out[path.name] = json.dumps(json.loads(path.read_text())["body"], sort_keys=True).encode()
        else:
            out[path.name] = path.read_bytes()
    return out


def test_determinism(tmp_path):
    mismatched = []
    codes = []
    for argv in SCENARIOS:
        runs = []
        for i, workers in enumerate((1, 1, 2)):
            d = tmp_path / f"{argv[0]}-{i}"
            codes.append(cli.run(argv + ["--workers", str(workers), "--output-dir", str(d)]))
            runs.append(_outputs(d))
        if not runs[0] == runs[1] == runs[2]:
            mismatched.append(argv[0])
    ok = not mismatched and all(c == 0 for c in codes)
    record_acceptance("deterministic reports", ok,
                      f"{len(SCENARIOS)} scenarios x 3 runs (workers 1, 1, 2), "
                      f"mismatched={mismatched}, exit codes={sorted(set(codes))}")
    assert ok
