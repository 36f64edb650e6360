import math

import numpy as np
import pytest

from isacrrm.codebook import BeamGrid, build_codebook, default_grid
from isacrrm.physmodel import ArrayConfig, dbm_to_watts, generate_user_channel
from isacrrm.scenario import Scenario, Target, UncertaintyConfig, User

SIGMA_COM2 = dbm_to_watts(-94)
SIGMA_SEN2 = dbm_to_watts(-44)


@pytest.fixture(scope="session")
def array():
    return ArrayConfig()


@pytest.fixture(scope="session")
def books(array):
    return (
        build_codebook(array, "tx", default_grid(array, "tx")),
        build_codebook(array, "rx", default_grid(array, "rx")),
    )


def default_uncertainty():
    return UncertaintyConfig(
        eps_csi=0.1 * math.sqrt(SIGMA_COM2),
        eps_aod_rad=math.radians(1.0),
        eps_rc=1e-4,
        eps_rsi=0.0,
        upsilon=1e-4,
    )


def make_scenario(books, users, targets, horizon, uncertainty=None, seed=0, array=None, **kw):
    """users: (beta_deg, distance_m, snr_min, s_com); targets: (theta_deg, psi_bar, sinr_min, s_sen)."""
    array = array or ArrayConfig()
    rng = np.random.default_rng(seed)
    us = [User(generate_user_channel(rng, array, b, r).h, snr, s, b, r) for b, r, snr, s in users]
    ts = [Target(th, psi, lam, s) for th, psi, lam, s in targets]
    kw.setdefault("eta2", "auto")
    return Scenario(
        array, books[0], books[1], us, ts, horizon,
        uncertainty if uncertainty is not None else default_uncertainty(),
        SIGMA_COM2, SIGMA_SEN2, **kw,
    )


def tiny_scenario(rng):
    """Random instance small enough for exhaustive enumeration."""
    arr = ArrayConfig()
    dirs = np.sort(rng.choice(np.arange(75, 106, 5), 2, replace=False)).astype(float)
    powers = np.sort(rng.choice(np.round(np.arange(1, 11) * 0.1, 10), 3, replace=False))
    tx = build_codebook(arr, "tx", BeamGrid(tuple(dirs), (13, 26), tuple(powers), (8, 4)))
    rx = build_codebook(arr, "rx", BeamGrid(tuple(dirs), (6, 13, 26), (0.1,), (16, 8, 4)))
    users = []
    for _ in range(rng.integers(0, 3)):
        beta, dist = rng.uniform(70, 110), rng.uniform(30, 80)
        h = generate_user_channel(rng, arr, beta, dist).h
        users.append(User(h, rng.uniform(5, 80), int(rng.integers(1, 3)), beta, dist))
    targets = [
        Target(rng.uniform(80, 100), 1e-3, rng.uniform(0.5, 6), int(rng.integers(1, 3)))
        for _ in range(rng.integers(0 if users else 1, 3))
    ]
    eta1 = float(rng.choice([0.0, 1.0, 1.0]))
    eta2 = rng.choice([0.0, 2.0, "auto"])
    if eta1 == 0 and eta2 == 0:
        eta2 = 1.0
    eta2 = eta2 if eta2 == "auto" else float(eta2)
    return Scenario(
        arr, tx, rx, users, targets, int(rng.integers(2, 5)), default_uncertainty(),
        SIGMA_COM2, SIGMA_SEN2, eta1=eta1, eta2=eta2,
    )


@pytest.fixture(scope="session")
def mixed_scenario(books):
    return make_scenario(
        books,
        [(70, 50, 80, 2), (100, 60, 80, 1)],
        [(110, 1e-3, 2, 2), (95, 1e-3, 2, 1)],
        6,
    )


@pytest.fixture(scope="session")
def mixed_solution(mixed_scenario):
    from isacrrm.solver import build_tables, solve

    tables = build_tables(mixed_scenario)
    return tables, solve(mixed_scenario, tables)


def pytest_terminal_summary(terminalreporter):
    import sys

    module = sys.modules.get("test_acceptance")
    results = getattr(module, "RESULTS", None)
    if not results:
        return
    terminalreporter.section("acceptance criteria")
    order = sorted(results, key=lambda k: (int(k.rstrip("ab")), k))
    for key in order:
        terminalreporter.write_line(results[key])
