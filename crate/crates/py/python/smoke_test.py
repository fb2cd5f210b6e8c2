"""Quick end-to-end check of the Python bindings.

Build first, e.g. `maturin develop -m crates/py/Cargo.toml`, then run
`python crates/py/python/smoke_test.py`.
"""

import json
import math

import ssp_omd_py as so


def main():
    inst = so.Instance(json.dumps({"construction": "failure", "num_states": 9}))
    mdp = inst.mdp
    assert (mdp.num_states, mdp.num_actions) == (9, 2)
    diameter, _ = mdp.fast_policy()
    assert abs(diameter - 3.0) < 1e-12

    # Round trip through the JSON document.
    again = so.Mdp.from_json(mdp.to_json())
    assert again.num_pairs == mdp.num_pairs

    reg = so.Regularizer.lr_norm(3.0)
    q, rep = so.project(reg, [1.0] * mdp.num_pairs, mdp, 4.0)
    assert rep["converged"] and rep["kkt_residual"] <= 1e-8
    assert abs(sum(q) - 3.0) < 1e-6

    costs = inst.costs(50, 0)
    cmp = so.best_in_hindsight(mdp, costs)
    assert abs(cmp["total"] - 12.5) < 1e-9

    learner = so.Learner(json.dumps({"kind": "neg_entropy", "eta": 0.1}), inst, costs)
    learner.set_comparator(cmp["occupancy"])
    total = 0.0
    for c in costs:
        probs = learner.policy()
        assert len(probs) == mdp.num_pairs
        total += learner.observe(c)["loss"]
    assert total - cmp["total"] > 0

    summary = json.loads(so.run_experiment(json.dumps({
        "instance": {"construction": "failure", "num_states": 9},
        "learner": {"kind": "lr_norm_tuned", "m": 3.0},
        "episodes": 64,
        "seeds": [0, 1],
    })))
    assert len(summary["seeds"]) == 2 and math.isfinite(summary["mean_regret"])

    est, se, bound = so.rw_max_expectation(0.75, 100, trials=2000, seed=1)
    assert est - 3 * se >= bound

    print("smoke test ok: regret %.3f, random-walk estimate %.2f" % (total - cmp["total"], est))


if __name__ == "__main__":
    main()
