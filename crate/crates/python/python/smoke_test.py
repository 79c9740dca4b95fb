"""Smoke test for the opeval extension module. Run after `maturin develop`."""

import json
import math
import os
import tempfile

import opeval


def check_tree():
    env = opeval.TreeEnv(depth=6)
    assert env.internal_count == 31
    assert math.isclose(env.uniform_return(), 1 / 32, rel_tol=0, abs_tol=1e-15)
    best = env.optimal_qtable()
    assert math.isclose(env.exact_return(best), 5 / 31, abs_tol=1e-15)
    fm = env.first_mistake_error(best)
    assert (fm["epsilon"], fm["c"], fm["bound"]) == (0.0, 0.0, 1.0)


def check_metrics():
    assert opeval.opc_of_points([0.9, 0.7, 0.8, 0.1], [True, True, False, False]) == 0.25
    assert math.isclose(opeval.spearman([1, 2, 3], [3, 1, 2]), -0.5, abs_tol=1e-15)

    env = opeval.TreeEnv(depth=6)
    data = env.collect(500, seed=1)
    assert len(data) == 500 and not data.is_annotated
    q = env.random_qtable(0, 0, 1.0)
    scores = {
        "opc": opeval.opc(data, q),
        "soft_opc": opeval.soft_opc(data, q),
        "td": opeval.td_error(data, q),
        "sum_adv": opeval.sum_advantages(data, q),
        "mcc": opeval.mcc_error(data, q),
    }
    assert 0.0 <= scores["opc"] <= 1.0
    assert scores["sum_adv"] <= 0.0
    assert opeval.extended_opc(data, q) == scores["opc"]

    with tempfile.TemporaryDirectory() as tmp:
        path = os.path.join(tmp, "log.jsonl")
        data.annotate(q).save(path)
        back = opeval.Dataset.load(path, binary=True)
        assert back.is_annotated
        assert opeval.opc(back) == scores["opc"]
        with open(path) as f:
            first = json.loads(f.readline())
        assert first["steps"][-1]["q_greedy_next"] is None

    try:
        opeval.opc(opeval.TreeEnv(depth=3, success_leaves=[]).collect(10), q=opeval.TreeEnv(depth=3).optimal_qtable())
    except opeval.DegenerateError:
        pass
    else:
        raise AssertionError("expected DegenerateError")


def check_experiment():
    res = opeval.run_experiment("n_qfunctions = 200\nn_validation_episodes = 500\n")
    summaries = res["summaries"]
    assert set(summaries) == {"TDErr", "SumAdv", "MCCErr", "OPC", "SoftOPC"}
    assert len(res["true_returns"]) == 200
    print({k: round(v["spearman"], 3) for k, v in summaries.items()})
    assert summaries["SoftOPC"]["spearman"] > summaries["TDErr"]["spearman"]


if __name__ == "__main__":
    check_tree()
    check_metrics()
    check_experiment()
    print("smoke test passed")
