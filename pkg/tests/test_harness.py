import json
import math
from dataclasses import replace

import numpy as np
import pytest
from click.testing import CliRunner

from isacrrm.harness import (
    ConfigError,
    ResultRecord,
    UnverifiedResult,
    bundled_scenario,
    draw_scenario,
    emit_results,
    load_results,
    run_scenario,
    sweep_grid,
)
from isacrrm.harness.cli import main
from isacrrm.harness.config import bundled_names, parse_text, realization_rng
from isacrrm.harness.runner import allocation_from_record
from isacrrm.solver import Infeasible, priority_eta2_threshold, solve
from isacrrm.verify import check_allocation, enumerate_optimum

SMALL = """\
schema_version: 1
name: small
horizon: 3
seed: 7
realizations: 2
noise: {sigma_com_dbm: -94, sigma_sen_dbm: -44}
codebook: {n_directions: 7}
objective: {eta1: 1, eta2: auto}
users: {count: 1, beta_deg: [80, 100], distance_m: 50, snr_min: 40, s_com: 1}
targets: {count: 1, theta_deg: 100, psi_bar: 1.0e-3, sinr_min: 2, s_sen: 2}
schemes: [opt, tlb, elb, bl3]
"""


@pytest.fixture
def small_cfg(tmp_path):
    path = tmp_path / "small.cfg"
    path.write_text(SMALL)
    return path


def test_bundled_presets_parse():
    for name in bundled_names():
        cfg = bundled_scenario(name, warn=False)
        assert cfg.name == f"scenario_{name}"
    one = bundled_scenario("I")
    assert len(one.users) == len(one.targets) == 1 and one.horizon == 1
    assert one.users[0]["snr_min"] == 80 and one.targets[0]["sinr_min"] == 2
    seven = bundled_scenario("VII", warn=False)
    assert (len(seven.users), len(seven.targets), seven.horizon) == (6, 4, 30)
    assert all(u["s_com"] == 3 for u in seven.users) and all(t["s_sen"] == 3 for t in seven.targets)


def test_missing_required_field_is_located():
    text = SMALL.replace("snr_min: 40, ", "")
    with pytest.raises(ConfigError) as info:
        parse_text(text, "small.cfg")
    assert info.value.field_path == "users.snr_min"
    assert info.value.line == 9
    assert "small.cfg:9" in str(info.value)


def test_unknown_and_bad_fields():
    with pytest.raises(ConfigError, match="unknown field"):
        parse_text(SMALL + "colour: blue\n")
    with pytest.raises(ConfigError, match="schema version"):
        parse_text(SMALL.replace("schema_version: 1", "schema_version: 9"))
    with pytest.raises(ConfigError, match="upsilon"):
        parse_text(SMALL + "uncertainty: {upsilon: 2}\n")
    with pytest.raises(ConfigError, match="parse error"):
        parse_text("a: [1, 2\n")


def test_auto_time_weight():
    cfg = parse_text(SMALL)
    expected = 1.01 * priority_eta2_threshold(1.0, 3, 1.0, 0.1, cfg.delta0)
    assert cfg.eta2_resolved == pytest.approx(expected)


def test_horizon_warning():
    with pytest.warns(UserWarning, match="horizon 1 is below"):
        cfg = parse_text(SMALL.replace("horizon: 3", "horizon: 1"))
    assert cfg.warnings


def test_draws_are_deterministic():
    cfg = parse_text(SMALL)
    a = draw_scenario(cfg, realization_rng(cfg, 1))
    b = draw_scenario(cfg, realization_rng(cfg, 1))
    c = draw_scenario(cfg, realization_rng(cfg, 0))
    np.testing.assert_array_equal(a.users[0].h_bar, b.users[0].h_bar)
    assert not np.array_equal(a.users[0].h_bar, c.users[0].h_bar)
    assert 80 <= a.users[0].beta_deg <= 100


def test_run_emit_roundtrip(tmp_path):
    cfg = parse_text(SMALL)
    records = run_scenario(cfg)
    assert len(records) == 2 * 4
    for fmt in ("csv", "json"):
        path = tmp_path / f"out.{fmt}"
        emit_results(records, fmt, path)
        back = load_results(path)
        assert [r.scheme for r in back] == [r.scheme for r in records]
        for old, new in zip(records, back):
            assert old.feasible == new.feasible
            if old.feasible:
                assert new.energy_mJ == pytest.approx(old.energy_mJ)
                assert new.energy_mJ == pytest.approx(sum(s["energy_W"] for s in new.slots))
    data = json.loads((tmp_path / "out.json").read_text())
    assert data["units"]["energy_mJ"] == "mJ"


def test_allocation_roundtrip_verifies(tmp_path):
    cfg = parse_text(SMALL)
    records = [r for r in run_scenario(cfg, ["opt"]) if r.feasible]
    assert records
    path = tmp_path / "opt.json"
    emit_results(records, "json", path)
    for rec in load_results(path):
        scen = draw_scenario(cfg, realization_rng(cfg, rec.realization))
        alloc = allocation_from_record(scen, rec)
        assert check_allocation(scen, alloc).passed


def test_empty_results_file_is_header_only(tmp_path):
    path = tmp_path / "empty.csv"
    emit_results([], "csv", path)
    assert path.read_text().strip().count("\n") == 0
    assert load_results(path) == []


def test_unverified_results_refused(tmp_path):
    rec = ResultRecord("OPT", 0, True, energy_mJ=1.0, verified=False)
    with pytest.raises(UnverifiedResult):
        emit_results([rec], "csv", tmp_path / "x.csv")


def test_cli_solve_exit_codes(small_cfg, tmp_path):
    runner = CliRunner()
    out = tmp_path / "res.csv"
    ok = runner.invoke(main, ["solve", str(small_cfg), "--out", str(out)])
    assert ok.exit_code == 0, ok.output
    assert out.exists()

    hard = tmp_path / "hard.cfg"
    hard.write_text(SMALL.replace("snr_min: 40", "snr_min: 1.0e9"))
    res = runner.invoke(main, ["solve", str(hard), "--schemes", "opt"])
    assert res.exit_code == 2

    broken = tmp_path / "broken.cfg"
    broken.write_text(SMALL.replace("horizon: 3\n", ""))
    res = runner.invoke(main, ["solve", str(broken)])
    assert res.exit_code == 1 and "horizon" in res.output


def test_cli_verify_roundtrip(small_cfg, tmp_path):
    runner = CliRunner()
    out = tmp_path / "res.json"
    assert runner.invoke(main, ["solve", str(small_cfg), "--schemes", "opt", "--out", str(out)]).exit_code == 0
    res = runner.invoke(main, ["verify", str(small_cfg), str(out), "--out", str(tmp_path / "rep.json")])
    assert res.exit_code == 0, res.output
    assert "pass" in res.output
    reports = json.loads((tmp_path / "rep.json").read_text())
    assert all(r["passed"] for r in reports)


def test_cli_codebook_dump(small_cfg, tmp_path):
    res = CliRunner().invoke(main, ["codebook", "dump", str(small_cfg), "--out", str(tmp_path)])
    assert res.exit_code == 0
    tx = json.loads((tmp_path / "codebook_tx.json").read_text())
    assert len(tx["codewords"]) == 7 * 3 * 10


def test_cli_sweep(small_cfg, tmp_path):
    out = tmp_path / "grid.csv"
    res = CliRunner().invoke(main, [
        "sweep", str(small_cfg), "--grid", "users.snr_min=10:150:3,targets.sinr_min=1:15:3",
        "--horizons", "2,3", "--out", str(out),
    ])
    assert res.exit_code == 0, res.output
    assert "horizon 2:" in res.output and out.exists()


def test_grid_infeasible_cells_agree_with_enumeration():
    cfg = parse_text(SMALL.replace("n_directions: 7", "n_directions: 3")).with_overrides({"targets.s_sen": 1})
    axes = {"users.snr_min": [10, 400, 4], "targets.sinr_min": [1, 60, 4]}
    grid = sweep_grid(cfg, axes, [1])
    base = draw_scenario(cfg, realization_rng(cfg, 0))
    checked = 0
    for i, snr in enumerate(grid.axis_values[0]):
        for j, sinr in enumerate(grid.axis_values[1]):
            scen = base.with_(
                users=[replace(base.users[0], snr_min=snr)],
                targets=[replace(base.targets[0], sinr_min=sinr)],
                horizon=1,
            )
            try:
                enumerate_optimum(scen)
                feasible = True
            except Infeasible:
                feasible = False
            assert feasible == grid.feasible[1][i, j]
            checked += 1
    assert checked == 16
    assert 0 < grid.count(1) < 16


def test_eta2_auto_prefers_fewer_slots():
    cfg = parse_text(SMALL)
    scen = draw_scenario(cfg, realization_rng(cfg, 0))
    try:
        fast = solve(scen)
    except Infeasible:
        pytest.skip("instance infeasible")
    slow = solve(scen, eta2=0.0)
    assert fast.active_slots <= slow.active_slots
    assert slow.energy_total_j <= fast.energy_total_j + 1e-15
    assert math.isfinite(fast.objective)


def test_exponent_without_sign_is_a_number():
    cfg = parse_text(SMALL.replace("snr_min: 40", "snr_min: 4e1"))
    assert cfg.users[0]["snr_min"] == 40.0
    assert parse_text(SMALL.replace("snr_min: 40", "snr_min: 1.0e9")).users[0]["snr_min"] == 1e9
