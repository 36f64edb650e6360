import numpy as np
import pytest

from isacrrm.physmodel import (
    ArrayConfig,
    GeometryError,
    coupling_matrix,
    dbm_to_watts,
    generate_user_channel,
    linearized_response,
    nominal_rsi,
    pathloss_db,
    response_matrix,
    steering_vector,
)
from isacrrm.robust import link_vector, vec


def test_steering_is_unit_norm(array):
    for side in ("tx", "rx"):
        for theta in (0.0, 37.0, 90.0, 151.0):
            assert np.linalg.norm(steering_vector(array, side, theta)) == pytest.approx(1.0)


@pytest.mark.parametrize("theta, expected", [(90, 1.0), (110, 0.2235728), (130, 0.1439650)])
def test_tx_channel_similarity_frozen(array, theta, expected):
    ref = steering_vector(array, "tx", 90)
    assert abs(np.vdot(ref, steering_vector(array, "tx", theta))) == pytest.approx(expected, abs=1e-7)


def test_response_is_outer_product(array):
    a = response_matrix(array, 104.0)
    expected = np.outer(steering_vector(array, "rx", 104.0), steering_vector(array, "tx", 104.0).conj())
    np.testing.assert_allclose(a, expected)
    lin, _ = linearized_response(array, 104.0)
    np.testing.assert_allclose(lin, a, atol=1e-15)


@pytest.mark.parametrize("theta", [45.0, 90.0, 123.4])
def test_linearized_response_matches_central_difference(array, theta):
    _, a_tilde = linearized_response(array, theta)
    h = 1e-6
    fd = (response_matrix(array, theta + np.degrees(h)) - response_matrix(array, theta - np.degrees(h))) / (2 * h)
    assert np.linalg.norm(fd - a_tilde) <= 1e-6 * max(np.linalg.norm(a_tilde), 1e-12) + 1e-9


def test_linearization_remainder_is_quadratic(array):
    a, a_tilde = linearized_response(array, 100.0)
    errs = []
    for d in (1e-2, 1e-3):
        errs.append(np.linalg.norm(response_matrix(array, 100.0 + np.degrees(d)) - a - a_tilde * d))
    assert errs[0] / errs[1] == pytest.approx(100.0, rel=0.05)


def test_coupling_matrix_structure():
    z = coupling_matrix(5, 0.1)
    assert np.allclose(np.diag(z), 1)
    assert np.allclose(np.diag(z, 1), 0.1) and np.allclose(np.diag(z, -1), 0.1)
    assert np.count_nonzero(z) == 5 + 2 * 4
    np.testing.assert_array_equal(coupling_matrix(1, 0.3), [[1]])


def test_coupling_bound_is_validated():
    with pytest.raises(ValueError):
        ArrayConfig(coupling_tx=1.0)
    with pytest.raises(ValueError):
        ArrayConfig(n_tx=0)


def test_link_vector_vec_identity():
    rng = np.random.default_rng(3)
    arr = ArrayConfig(n_tx=4, n_rx=3, coupling_tx=0.05, coupling_rx=0.03)
    b = rng.standard_normal(4) + 1j * rng.standard_normal(4)
    c = rng.standard_normal(3) + 1j * rng.standard_normal(3)
    m = rng.standard_normal((3, 4)) + 1j * rng.standard_normal((3, 4))
    direct = np.vdot(arr.z_rx @ c, m @ (arr.z_tx @ b))
    d = link_vector(arr.z_tx, arr.z_rx, b, c)
    assert np.vdot(d, vec(m)) == pytest.approx(direct, rel=1e-12)


def test_nominal_rsi_decays_with_separation():
    near = np.linalg.norm(nominal_rsi(ArrayConfig(array_center_sep=0.2)).r_bar_matrix)
    far = np.linalg.norm(nominal_rsi(ArrayConfig(array_center_sep=2.0)).r_bar_matrix)
    assert far < near


def test_coincident_elements_raise():
    arr = ArrayConfig(n_tx=2, n_rx=2, array_center_sep=0.0)
    with pytest.raises(GeometryError):
        nominal_rsi(arr)


def test_pathloss_and_units():
    assert pathloss_db(50, 41) == pytest.approx(97.633017, abs=1e-6)
    assert dbm_to_watts(30) == pytest.approx(1.0)
    assert dbm_to_watts(-94) == pytest.approx(3.981072e-13, rel=1e-6)
    with pytest.raises(ValueError):
        pathloss_db(0, 41)


def test_user_channel_is_mostly_line_of_sight(array):
    rng = np.random.default_rng(0)
    real = generate_user_channel(rng, array, 80.0, 50.0, k_factor=1e6)
    los = steering_vector(array, "tx", 80.0)
    amp = 10 ** (-real.pathloss_db / 20)
    assert abs(np.vdot(los, real.h)) == pytest.approx(amp, rel=1e-2)
