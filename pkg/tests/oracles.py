"""Random instances and brute-force oracles for the worst-case closed forms."""

import math

import numpy as np

from isacrrm.physmodel import ArrayConfig, dbm_to_watts, linearized_response
from isacrrm.robust import (
    build_lmi_blocks,
    link_vector,
    lmi_certificate,
    vec,
    worst_case_aod_numerator,
    worst_case_aod_offset,
    worst_case_csi_perturbation,
    worst_case_rc_threshold,
    worst_case_rsi_perturbation,
    worst_case_rsi_power,
    worst_case_snr,
)
from isacrrm.verify import sample_complex_ball


def cplx(rng, *shape):
    return rng.standard_normal(shape) + 1j * rng.standard_normal(shape)


# Path-loss amplitude and noise powers of a 50 m link at 41 GHz; the LMI
# blocks are badly scaled there, so half of the LMI instances use them.
PHYS_GAIN = 10 ** (-97.6 / 20)
PHYS_SIGMA_COM2 = dbm_to_watts(-94)
PHYS_SIGMA_SEN2 = dbm_to_watts(-44)


def csi_instance(rng, n=8, gain=1.0):
    arr = ArrayConfig(n_tx=n, n_rx=4, coupling_tx=rng.uniform(0, 0.1))
    h = gain * cplx(rng, n)
    b = cplx(rng, n)
    g = arr.z_tx @ b
    # mostly balls that leave the gain positive, sometimes one that swallows it
    eps = rng.uniform(0.05, 1.2) * abs(np.vdot(h, g)) / np.linalg.norm(g)
    return arr.z_tx, h, b, eps


def csi_family(rng, n_samples):
    """(max relative violation over samples, relative gap at the extremal point)."""
    z, h, b, eps = csi_instance(rng)
    closed = worst_case_snr(h, eps, z, b, 1.0)
    g = z @ b
    dh = sample_complex_ball(rng, n_samples, h.size, eps)
    sampled = np.abs((h[None, :] + dh).conj() @ g) ** 2
    scale = max(abs(np.vdot(h, g)) ** 2, 1e-300)
    worst = float(np.max((closed - sampled) / scale))
    star = worst_case_csi_perturbation(h, eps, z, b)
    assert np.linalg.norm(star) <= eps * (1 + 1e-12)
    attained = abs(np.vdot(h + star, g)) ** 2
    return worst, abs(attained - closed) / scale


def aod_instance(rng):
    arr = ArrayConfig(n_tx=8, n_rx=16)
    theta = rng.uniform(30, 150)
    a, a_tilde = linearized_response(arr, theta)
    rx_active = rng.integers(4, 17)
    b = np.exp(1j * rng.uniform(0, 2 * np.pi, 8)) * rng.uniform(0.1, 1)
    c = np.zeros(16, dtype=complex)
    c[:rx_active] = cplx(rng, rx_active)
    d = link_vector(arr.z_tx, arr.z_rx, b, c)
    return vec(a), vec(a_tilde), math.radians(rng.uniform(0.1, 6)), d


def aod_family(rng, n_samples):
    a, at, eps, d = aod_instance(rng)
    closed = worst_case_aod_numerator(a, at, eps, d, 1.0)
    c0, c1 = np.vdot(d, a), np.vdot(d, at)
    t = rng.uniform(-eps, eps, n_samples)
    sampled = np.abs(c0 + c1 * t) ** 2
    scale = max(abs(c0) ** 2 + (abs(c1) * eps) ** 2, 1e-300)
    worst = float(np.max((closed - sampled) / scale))
    t_star = worst_case_aod_offset(a, at, eps, d)
    assert abs(t_star) <= eps
    return worst, abs(abs(c0 + c1 * t_star) ** 2 - closed) / scale


def rc_family(rng, n_samples):
    psi = complex(*rng.standard_normal(2)) * 1e-3
    eps = rng.uniform(0.05, 0.95) * abs(psi)
    lam = rng.uniform(0.5, 10)
    closed = worst_case_rc_threshold(lam, psi, eps)
    dpsi = sample_complex_ball(rng, n_samples, 1, eps)[:, 0]
    sampled = lam / np.abs(psi + dpsi) ** 2
    worst = float(np.max((sampled - closed) / closed))
    star = -eps * psi / abs(psi)
    return worst, abs(lam / abs(psi + star) ** 2 - closed) / closed


def rsi_instance(rng):
    n = 12
    r = cplx(rng, n) * 1e-3
    d = cplx(rng, n)
    return r, rng.uniform(0.01, 1), rng.uniform(0.05, 2) * np.linalg.norm(r), d


def rsi_family(rng, n_samples):
    r, ups, eps, d = rsi_instance(rng)
    closed = worst_case_rsi_power(r, ups, eps, d)
    dr = sample_complex_ball(rng, n_samples, r.size, eps)
    sampled = ups**2 * np.abs((r[None, :] + dr) @ d.conj()) ** 2
    worst = float(np.max((sampled - closed) / closed))
    star = worst_case_rsi_perturbation(r, eps, d)
    assert np.linalg.norm(star) <= eps * (1 + 1e-12)
    attained = ups**2 * abs(np.vdot(d, r + star)) ** 2
    return worst, abs(attained - closed) / closed


CLOSED_FORM_FAMILIES = {"CSI": csi_family, "AOD": aod_family, "RC": rc_family, "RSI": rsi_family}


# ---------------------------------------------- closed form vs LMI pairs


def e1_pair(rng):
    phys = rng.random() < 0.5
    sigma2 = PHYS_SIGMA_COM2 if phys else 1.0
    z, h, b, eps = csi_instance(rng, gain=PHYS_GAIN if phys else 1.0)
    snr = worst_case_snr(h, eps, z, b, sigma2)
    base = snr if snr > 0 else 0.1 * abs(np.vdot(h, z @ b)) ** 2 / sigma2
    snr_min = base * rng.uniform(0.5, 1.5)
    prob = build_lmi_blocks("E1", h_bar=h, eps_csi=eps, z_tx=z, b=b, sigma_com2=sigma2, snr_min=snr_min)
    return snr - snr_min, snr_min, prob


def i1_pair(rng):
    a, at, eps, d = aod_instance(rng)
    sigma2 = PHYS_SIGMA_SEN2 if rng.random() < 0.5 else 1.0
    num = worst_case_aod_numerator(a, at, eps, d, sigma2)
    z = num * rng.uniform(0.5, 1.5)
    prob = build_lmi_blocks("I1", a_vec=a, a_tilde_vec=at, eps_aod=eps, d_vec=d, sigma_sen2=sigma2, z=z)
    return num - z, z, prob


def j5_pair(rng):
    r, ups, eps, d = rsi_instance(rng)
    phys = rng.random() < 0.5
    sigma2 = PHYS_SIGMA_SEN2 if phys else 1.0
    # physical scale: reflection threshold lambda / |psi|^2 with |psi| ~ 1e-3
    lam = rng.uniform(0.5, 5) * (1e6 if phys else 1.0)
    noise = rng.uniform(0.1, 2)
    need = lam * (worst_case_rsi_power(r, ups, eps, d) / sigma2 + noise)
    z = need * rng.uniform(0.5, 1.5)
    prob = build_lmi_blocks(
        "J5", r_bar_vec=r, upsilon=ups, eps_rsi=eps, d_vec=d, sigma_sen2=sigma2,
        lam_bar=lam, noise_gain=noise, z=z,
    )
    return z - need, z, prob


LMI_FAMILIES = {"E1": e1_pair, "I1": i1_pair, "J5": j5_pair}


def lmi_agreement(pair, rng, n, margin=1e-7):
    """(agreements, disagreements, skipped) over n random instances."""
    agree = disagree = skipped = 0
    for _ in range(n):
        slack, scale, prob = pair(rng)
        if abs(slack) < margin * max(abs(scale), 1e-300):
            skipped += 1
            continue
        if lmi_certificate(prob).feasible == (slack >= 0):
            agree += 1
        else:
            disagree += 1
    return agree, disagree, skipped
