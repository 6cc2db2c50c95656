import json
import math
import os

import numpy as np
import pytest

import ucplan


def unit_grid(n):
    h = 1.0 / (n - 1)
    y, x = np.mgrid[0:n, 0:n] * h
    return h, x, y


def test_distance_field():
    n = 101
    h, x, y = unit_grid(n)
    one = np.ones((n, n))
    u, residual = ucplan.solve_eikonal(one, one, [(0.5, 0.5)], h)
    exact = np.hypot(x - 0.5, y - 0.5)
    assert u.shape == (n, n)
    assert np.max(np.abs(u - exact)) <= 2 * h
    assert residual < 1e-9


def test_mask_and_errors():
    n = 21
    h, _, _ = unit_grid(n)
    one = np.ones((n, n))
    mask = np.ones((n, n), dtype=bool)
    mask[:, 10] = False
    u, _ = ucplan.solve_eikonal(one, one, [(0.1, 0.5)], h, mask=mask)
    assert np.all(np.isinf(u[:, 10:]))
    with pytest.raises(ucplan.InvalidInput):
        ucplan.solve_eikonal(one, 0 * one, [(0.1, 0.5)], h)


def test_random_termination_below_q():
    n = 41
    h, x, y = unit_grid(n)
    q = np.minimum(np.hypot(x - 0.2, y - 0.3) + 0.1, np.hypot(x - 0.8, y - 0.7))
    u, motionless, residual = ucplan.solve_random_termination(q, np.ones((n, n)), 5.0, h)
    assert np.all(u <= q + 1e-12)
    assert motionless.any()
    assert residual < 1e-9


def test_fields_bracket_and_dr():
    a = np.array([[1.0, 2.0], [3.0, 4.0]])
    b = np.array([[2.0, 0.0], [5.0, 1.0]])
    q = ucplan.expected_field([a, b], [0.5, 0.5])
    w = ucplan.worst_field([a, b])
    ce = ucplan.risk_sensitive_field([a, b], [0.5, 0.5], 3.0)
    assert np.all(q <= ce + 1e-12) and np.all(ce <= w + 1e-12)
    assert np.allclose(ucplan.dr_field([a, b], [0.5, 0.5], 1.0), w)
    p = ucplan.dr_worst_distribution([0.5, 0.3, 0.2], [1.0, 3.0, 2.0], 0.25)
    assert math.isclose(sum(p), 1.0)
    assert ucplan.tv_distance([0.5, 0.3, 0.2], p) <= 0.25 + 1e-12
    assert p[1] == pytest.approx(0.55)


def test_scenarios_and_configs():
    names = ucplan.builtin_scenario_names()
    assert "paper_main" in names
    cfg_dir = os.environ.get("UCPLAN_SCENARIO_DIR")
    for name in names:
        text = ucplan.scenario_json(name)
        assert json.loads(text)["name"] == name
        if cfg_dir:
            assert ucplan.scenario_json(os.path.join(cfg_dir, name + ".json")) == text


def test_chance_policy_on_coarse_scenario():
    data = ucplan.scenario_fields("paper_main", grid=51)
    reach = data["mask"] & (data["start"] <= 0.4)
    atoms, objective, risk = ucplan.chance_constrained_policy(
        data["fields"], data["probs"], reach, 0.6, 0.25
    )
    assert 1 <= len(atoms) <= 2
    assert sum(a[2] for a in atoms) == pytest.approx(1.0)
    assert risk <= 0.25 + 1e-12
    q = ucplan.expected_field(data["fields"], data["probs"])
    assert objective >= np.min(q[reach]) - 1e-12


def test_cli_in_process(tmp_path):
    code, _, err = ucplan.run_cli(["bogus", "--out", str(tmp_path / "x")])
    assert code == 2 and err.startswith("error: config:")
    out = tmp_path / "fixed"
    code, _, err = ucplan.run_cli(["plan-fixed", "--grid", "41", "--T", "0.4", "--out", str(out)])
    assert code == 0, err
    summary = json.loads((out / "summary.json").read_text())
    assert summary["expected_total"] == pytest.approx(0.4 + summary["q_at_waypoint"])
