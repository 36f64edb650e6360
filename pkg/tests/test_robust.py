import math

import numpy as np
import pytest

from isacrrm.robust import (
    LinkGeometryCache,
    LmiProblem,
    aod_quadratic_min,
    build_lmi_blocks,
    lmi_certificate,
    robust_comm_feasible,
    robust_sensing_feasible,
    worst_case_rc_threshold,
    worst_case_snr,
)
from oracles import CLOSED_FORM_FAMILIES, LMI_FAMILIES, lmi_agreement


@pytest.mark.parametrize("family", sorted(CLOSED_FORM_FAMILIES))
def test_closed_form_sound_and_tight(family):
    rng = np.random.default_rng(11)
    for _ in range(20):
        worst, tight = CLOSED_FORM_FAMILIES[family](rng, 200)
        assert worst <= 1e-9
        assert tight <= 1e-9


@pytest.mark.parametrize("family", sorted(LMI_FAMILIES))
def test_lmi_agrees_with_closed_form(family):
    agree, disagree, _ = lmi_agreement(LMI_FAMILIES[family], np.random.default_rng(2), 60)
    assert disagree == 0 and agree > 40


def test_csi_ball_swallowing_the_gain_gives_zero_snr():
    h = np.ones(4, dtype=complex)
    b = np.ones(4, dtype=complex)
    assert worst_case_snr(h, 10.0, np.eye(4), b, 1.0) == 0.0
    assert worst_case_snr(h, 0.0, np.eye(4), b, 2.0) == pytest.approx(8.0)


def test_rc_threshold_infinite_when_disk_contains_zero():
    assert math.isinf(worst_case_rc_threshold(2.0, 1e-3, 1e-3))
    assert worst_case_rc_threshold(2.0, 1e-3, 0.0) == pytest.approx(2e6)
    with pytest.raises(ValueError):
        worst_case_rc_threshold(0.0, 1e-3, 0.0)


def test_aod_quadratic_interior_minimum():
    value, t = aod_quadratic_min(1.0 + 0j, -2.0 + 0j, 1.0)
    assert t == pytest.approx(0.5) and value == pytest.approx(0.0)
    value, t = aod_quadratic_min(1.0 + 0j, -2.0 + 0j, 0.1)
    assert t == pytest.approx(0.1) and value == pytest.approx(0.64)


def test_lmi_problem_rejects_non_hermitian():
    with pytest.raises(ValueError):
        LmiProblem(np.array([[1, 1], [0, 1]]), np.eye(2))
    with pytest.raises(ValueError):
        LmiProblem(np.eye(2), np.eye(3))
    with pytest.raises(ValueError):
        build_lmi_blocks("X9")


def test_lmi_certificate_reports_multiplier():
    # -1 + alpha >= 0 and 4 - alpha >= 0: feasible for alpha in [1, 4]
    cert = lmi_certificate(LmiProblem(np.diag([-1.0, 4.0]), np.diag([1.0, -1.0])))
    assert cert.feasible and 1 - 1e-6 <= cert.alpha <= 4 + 1e-6
    cert = lmi_certificate(LmiProblem(np.diag([-1.0, 0.5]), np.diag([1.0, -1.0])))
    assert not cert.feasible


def test_cache_tables_match_scalar_checks(mixed_scenario):
    scen = mixed_scenario
    cache = LinkGeometryCache(scen)
    snr = cache.user_snr(scen.users[0])
    for flat in (0, 123, 569):
        b = scen.tx_codebook[flat].vector
        ok, margin = robust_comm_feasible(b, scen.users[0], scen)
        assert margin + scen.users[0].snr_min == pytest.approx(snr[flat], rel=1e-9)
    margins = cache.sensing_margin(scen.targets[0])
    for rx, tx in ((0, 0), (30, 300), (56, 569)):
        ok, m = robust_sensing_feasible(scen.tx_codebook[tx].vector, scen.rx_codebook[rx].vector, scen.targets[0], scen)
        assert m == pytest.approx(margins[rx, tx], rel=1e-8, abs=1e-9 * abs(margins).max())
