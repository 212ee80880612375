import numpy as np
import pytest

from klss import PLUS, sequence_to_behavior, validate_strategy
from klss.equilibrium import SolverConfig, exploitability
from klss.errors import BadOrder, BadParameter
from klss.games import make_game
from klss.harness import (
    allocation_play,
    blueprint_update_schedule,
    epsilon_action_blueprint,
    epsilon_uniform_blueprint,
    nested_klss_everywhere,
    prop1_counterexample,
    run_table1,
    run_table2,
    suite_preservation,
    suite_update_monotone,
)


def test_blueprint_exploitability_decreases_with_eps(kuhn):
    es = [0.0, 0.1, 0.25, 0.5, 1.0]
    vals = [exploitability(kuhn, epsilon_uniform_blueprint(kuhn, e))
            for e in es]
    assert all(b >= a - 1e-9 for a, b in zip(vals, vals[1:]))
    assert vals[0] <= 1e-8


def test_blueprint_rejects_bad_eps(kuhn):
    with pytest.raises(BadParameter):
        epsilon_uniform_blueprint(kuhn, 1.5)
    with pytest.raises(BadParameter):
        epsilon_action_blueprint(kuhn, 0.25, "castle")


def test_nested_rejects_higher_order(kuhn):
    bp = epsilon_uniform_blueprint(kuhn, 0.25)
    with pytest.raises(BadOrder):
        nested_klss_everywhere(kuhn, bp, 3)


def test_nested_improves_kuhn(kuhn):
    bp = epsilon_uniform_blueprint(kuhn, 0.25)
    rec = nested_klss_everywhere(kuhn, bp, 1)
    validate_strategy(kuhn, rec.strategy)
    assert not rec.failures
    assert rec.expl_after <= rec.expl_before
    assert rec.num_solves == len(rec.path)


def test_nested_only_restricts_solves(kuhn):
    bp = epsilon_uniform_blueprint(kuhn, 0.25)
    rec = nested_klss_everywhere(kuhn, bp, 1, only={0})
    keys = {I.key for I in kuhn.index.infosets[PLUS] if I.index == 0}
    assert set(rec.path) <= keys
    # untouched infosets keep blueprint behavior
    old = sequence_to_behavior(kuhn, bp)
    new = sequence_to_behavior(kuhn, rec.strategy)
    for I in kuhn.index.infosets[PLUS]:
        if I.key not in keys and rec.strategy.values[I.parent_seq] > 1e-12:
            assert np.allclose(old[I.index], new[I.index], atol=1e-9)


def test_update_schedule_trace_monotone(kuhn):
    bp = epsilon_uniform_blueprint(kuhn, 0.25)
    reachable = [I for I in kuhn.index.infosets[PLUS]
                 if bp.values[I.parent_seq] > 0.0]
    _, trace = blueprint_update_schedule(kuhn, bp, reachable[:3])
    assert len(trace) == 4
    assert all(b <= a + 5e-9 for a, b in zip(trace, trace[1:]))


def test_allocation_play_is_safe(kuhn):
    bp = epsilon_uniform_blueprint(kuhn, 0.25)
    for seed in range(3):
        rec, audit = allocation_play(kuhn, bp, seed)
        assert audit["ok"]
        assert rec.expl_after <= audit["bound"]


def test_suite_update_monotone_smoke():
    out = suite_update_monotone(games=("fig1",), seeds=range(2))
    assert len(out) == 2
    assert all(r["ok"] for r in out)


def test_suite_preservation_smoke():
    out = suite_preservation(games=("fig1",))
    assert out[0]["ok"]


def test_prop1_small():
    r = prop1_counterexample(10)
    assert r["before"] == pytest.approx(0.4, abs=1e-6)
    assert r["after"] == pytest.approx(1.0, abs=1e-6)
    assert r["min_tails_prob"] >= 1.0 - 1e-6


def test_table1_row_schema_and_determinism():
    cfg = SolverConfig(seed=1)
    r1 = run_table1(games=["kuhn"], config=cfg)
    r2 = run_table1(games=["kuhn"], config=cfg)
    assert not r1.failures
    row1, row2 = r1.rows[0], r2.rows[0]
    drop = {"wallclock_ms"}
    assert {k: v for k, v in row1.items() if k not in drop} \
        == {k: v for k, v in row2.items() if k not in drop}
    csv1 = "\n".join(
        ",".join(c for i, c in enumerate(line.split(",")) if i != 7)
        for line in r1.to_csv().splitlines())
    csv2 = "\n".join(
        ",".join(c for i, c in enumerate(line.split(",")) if i != 7)
        for line in r2.to_csv().splitlines())
    assert csv1 == csv2
    assert r1.to_csv().splitlines()[0] == \
        "game,epsilon,blueprint_expl,post_expl,ratio,seed,solver_iters," \
        "wallclock_ms"


def test_table1_ratio_definition():
    r = run_table1(games=["mp-10"]).rows[0]
    if r["post_expl"] > 1e-10:
        assert r["ratio"] == pytest.approx(
            r["blueprint_expl"] / r["post_expl"], rel=1e-12)
    else:
        assert r["ratio"] == float("inf")


def test_table1_records_failures_and_continues():
    # an unknown game must not abort the whole table
    rep = run_table1(games=["kuhn", "atlantis"])
    assert len(rep.rows) == 1
    assert rep.failures and rep.failures[0]["game"] == "atlantis"


def test_table2_rows():
    rows = run_table2(games=["kuhn"])
    r = rows[0]
    assert (r["nodes"], r["infosets"], r["diameter"]) == (58, 12, 3)
    assert r["avg_I1"] == pytest.approx(2.0)
