"""Worst-case feasibility over the four uncertainty balls, in closed form and
through a one-multiplier S-procedure LMI certificate."""

from __future__ import annotations

import copy
import math
from dataclasses import dataclass
from functools import cached_property

import numpy as np

from .physmodel import linearized_response

GOLDEN = (math.sqrt(5.0) - 1.0) / 2.0


def _phase(z: complex) -> complex:
    return z / abs(z) if z != 0 else 1.0 + 0j


# ---------------------------------------------------------------- closed forms


def worst_case_snr(h_bar, eps_csi, z_tx, b, sigma_com2) -> float:
    """min over ||dh|| <= eps of |(h_bar + dh)^H Z b|^2 / sigma^2."""
    g = z_tx @ b
    g_norm = np.linalg.norm(g)
    if g_norm == 0:
        return 0.0
    amp = max(0.0, abs(np.vdot(h_bar, g)) - eps_csi * g_norm)
    return amp * amp / sigma_com2


def worst_case_csi_perturbation(h_bar, eps_csi, z_tx, b) -> np.ndarray:
    """Channel error inside the ball that attains worst_case_snr."""
    g = z_tx @ b
    g_norm = np.linalg.norm(g)
    if g_norm == 0:
        return np.zeros_like(h_bar, dtype=complex)
    v = np.vdot(h_bar, g)
    scale = min(eps_csi, abs(v) / g_norm)
    return -scale * (g / g_norm) * np.conj(_phase(v))


def worst_case_rc_threshold(lambda_sinr, psi_bar, eps_rc) -> float:
    """Scaled SINR threshold covering every reflection coefficient in the disk.

    Returns math.inf when the disk contains zero (target can never be sensed).
    """
    if lambda_sinr <= 0:
        raise ValueError("SINR threshold must be positive")
    gap = abs(psi_bar) - eps_rc
    if gap <= 0:
        return math.inf
    return lambda_sinr / gap**2


def aod_quadratic_min(c0, c1, eps_aod):
    """Minimum of |c0 + c1 t|^2 over real t in [-eps, eps] and its argmin.

    Works elementwise on arrays.
    """
    c0 = np.asarray(c0)
    c1 = np.asarray(c1)
    quad = np.abs(c1) ** 2
    lin = np.real(np.conj(c0) * c1)
    with np.errstate(divide="ignore", invalid="ignore"):
        t_star = np.where(quad > 0, -lin / np.where(quad > 0, quad, 1.0), 0.0)
    t_star = np.clip(t_star, -eps_aod, eps_aod)
    value = np.abs(c0 + c1 * t_star) ** 2
    return value, t_star


def worst_case_aod_numerator(a_vec, a_tilde_vec, eps_aod, d_vec, sigma_sen2) -> float:
    c0 = np.vdot(d_vec, a_vec)
    c1 = np.vdot(d_vec, a_tilde_vec)
    value, _ = aod_quadratic_min(c0, c1, eps_aod)
    return float(value) / sigma_sen2


def worst_case_aod_offset(a_vec, a_tilde_vec, eps_aod, d_vec) -> float:
    _, t = aod_quadratic_min(np.vdot(d_vec, a_vec), np.vdot(d_vec, a_tilde_vec), eps_aod)
    return float(t)


def worst_case_rsi_power(r_bar_vec, upsilon, eps_rsi, d_vec) -> float:
    """max over ||dR||_F <= eps of |d^H vec(upsilon (R_bar + dR))|^2."""
    amp = abs(np.vdot(d_vec, r_bar_vec)) + eps_rsi * np.linalg.norm(d_vec)
    return upsilon**2 * amp * amp


def worst_case_rsi_perturbation(r_bar_vec, eps_rsi, d_vec) -> np.ndarray:
    """vec(dR) attaining worst_case_rsi_power."""
    d_norm = np.linalg.norm(d_vec)
    if d_norm == 0:
        return np.zeros_like(r_bar_vec, dtype=complex)
    return eps_rsi * (d_vec / d_norm) * _phase(np.vdot(d_vec, r_bar_vec))


def link_vector(z_tx, z_rx, b, c) -> np.ndarray:
    """d with c^H Z_rx^H A Z_tx b = d^H vec(A) (column-major vec)."""
    return np.kron(np.conj(z_tx @ b), z_rx @ c)


def vec(matrix) -> np.ndarray:
    return np.asarray(matrix).reshape(-1, order="F")


# ---------------------------------------------------------- per-target caches


@dataclass(frozen=True)
class TargetGeometry:
    """Bilinear gains of every (rx, tx) codeword pair for one target.

    Arrays are indexed [rx flat position, tx flat position] over the codebook
    order handed in.
    """

    c0: np.ndarray  # c^H Z_rx^H A(theta_bar) Z_tx b
    c1: np.ndarray  # same with the angular derivative of A
    rsi: np.ndarray  # c^H Z_rx^H R_bar Z_tx b
    d_norm: np.ndarray  # ||Z_tx b|| * ||Z_rx c|| = ||d||
    noise_gain: np.ndarray  # ||Z_rx c||^2, one per rx codeword


class LinkGeometryCache:
    """Coupled codeword matrices and per-target gain tables."""

    def __init__(self, scenario, tx_book=None, rx_book=None):
        self.scenario = scenario
        self.tx_book = tx_book if tx_book is not None else scenario.tx_codebook
        self.rx_book = rx_book if rx_book is not None else scenario.rx_codebook
        arr = scenario.array
        self.bz = arr.z_tx @ self.tx_book.matrix
        self.cz = arr.z_rx @ self.rx_book.matrix
        self.tx_gain = np.linalg.norm(self.bz, axis=0)
        self.noise_gain = np.linalg.norm(self.cz, axis=0) ** 2
        self._targets = {}

    def for_scenario(self, scenario) -> "LinkGeometryCache":
        """Reuse the geometry for another instance on the same array and codebooks."""
        if scenario.array != self.scenario.array:
            raise ValueError("geometry can only be shared between instances on one array")
        clone = copy.copy(self)
        clone.scenario = scenario
        if (scenario.uncertainty.upsilon == 0) != (self.scenario.uncertainty.upsilon == 0):
            clone.__dict__.pop("rsi_gain", None)
            clone._targets = {}
        return clone

    @cached_property
    def rsi_gain(self) -> np.ndarray:
        return self.cz.conj().T @ self.scenario.rsi.r_bar_matrix @ self.bz

    def target(self, theta_deg: float) -> TargetGeometry:
        key = float(theta_deg)
        if key not in self._targets:
            a, a_tilde = linearized_response(self.scenario.array, key)
            ch = self.cz.conj().T
            self._targets[key] = TargetGeometry(
                c0=ch @ a @ self.bz,
                c1=ch @ a_tilde @ self.bz,
                rsi=self.rsi_gain,
                d_norm=np.sqrt(self.noise_gain)[:, None] * self.tx_gain[None, :],
                noise_gain=self.noise_gain,
            )
        return self._targets[key]

    def user_snr(self, user) -> np.ndarray:
        """Worst-case SNR of every tx codeword for one user."""
        scen = self.scenario
        amp = np.abs(user.h_bar.conj() @ self.bz) - scen.uncertainty.eps_csi * self.tx_gain
        return np.maximum(amp, 0.0) ** 2 / scen.sigma_com2

    def sensing_margin(self, target) -> np.ndarray:
        """Signed sensing slack for every (rx, tx) pair, -inf if never sensable."""
        scen = self.scenario
        unc = scen.uncertainty
        lam_bar = worst_case_rc_threshold(target.sinr_min, target.psi_bar, target.rc_radius(unc))
        geo = self.target(target.theta_deg)
        if math.isinf(lam_bar):
            return np.full(geo.c0.shape, -np.inf)
        numerator, _ = aod_quadratic_min(geo.c0, geo.c1, unc.eps_aod_rad)
        numerator = numerator / scen.sigma_sen2
        rsi = unc.upsilon**2 * (np.abs(geo.rsi) + unc.eps_rsi * geo.d_norm) ** 2
        return numerator - lam_bar * (rsi / scen.sigma_sen2 + geo.noise_gain[:, None])


def sensing_terms(b, c, target, scenario):
    """(aod numerator, scaled threshold, rsi power, noise gain) for one pair."""
    arr = scenario.array
    unc = scenario.uncertainty
    d = link_vector(arr.z_tx, arr.z_rx, b, c)
    a, a_tilde = linearized_response(arr, target.theta_deg)
    numerator = worst_case_aod_numerator(vec(a), vec(a_tilde), unc.eps_aod_rad, d, scenario.sigma_sen2)
    lam_bar = worst_case_rc_threshold(target.sinr_min, target.psi_bar, target.rc_radius(unc))
    rsi = worst_case_rsi_power(scenario.rsi.r_bar_vec, unc.upsilon, unc.eps_rsi, d)
    noise_gain = float(np.linalg.norm(arr.z_rx @ c) ** 2)
    return numerator, lam_bar, rsi, noise_gain


def robust_sensing_feasible(b, c, target, scenario):
    """(feasible, signed margin) of the worst-case sensing SINR requirement."""
    numerator, lam_bar, rsi, noise_gain = sensing_terms(b, c, target, scenario)
    if math.isinf(lam_bar):
        return False, -math.inf
    margin = numerator - lam_bar * (rsi / scenario.sigma_sen2 + noise_gain)
    return margin >= 0, float(margin)


def robust_comm_feasible(b, user, scenario):
    snr = worst_case_snr(user.h_bar, scenario.uncertainty.eps_csi, scenario.array.z_tx, b, scenario.sigma_com2)
    margin = snr - user.snr_min
    return margin >= 0, float(margin)


# ------------------------------------------------------------ LMI certificate


@dataclass(frozen=True)
class LmiProblem:
    """Is there alpha >= 0 with m0 + alpha * m1 positive semidefinite?"""

    m0: np.ndarray
    m1: np.ndarray
    kind: str = ""

    def __post_init__(self):
        m0 = np.asarray(self.m0, dtype=complex)
        m1 = np.asarray(self.m1, dtype=complex)
        if m0.shape != m1.shape or m0.ndim != 2 or m0.shape[0] != m0.shape[1]:
            raise ValueError("LMI matrices must be square and of equal size")
        for name, m in (("m0", m0), ("m1", m1)):
            scale = max(1.0, np.abs(m).max(initial=0.0))
            if np.abs(m - m.conj().T).max(initial=0.0) > 1e-12 * scale:
                raise ValueError(f"{name} is not Hermitian")
        object.__setattr__(self, "m0", m0)
        object.__setattr__(self, "m1", m1)


@dataclass(frozen=True)
class LmiCertificate:
    feasible: bool
    alpha: float
    min_eigenvalue: float  # at alpha, in the equilibrated coordinates
    tolerance: float


def _equilibrate(m0, m1):
    """Rescale to ball-normalized coordinates and unit-norm matrices.

    The diagonal congruence D m D with D built from the multiplier's diagonal
    keeps semidefiniteness; it turns the radius-eps ball into the unit ball.
    Returns (m0', m1', alpha_scale) where alpha = beta * alpha_scale.
    """
    diag = np.abs(np.diag(m1))
    d = np.where(diag > 0, 1.0 / np.sqrt(np.where(diag > 0, diag, 1.0)), 1.0)
    m0 = m0 * d[:, None] * d[None, :]
    m1 = m1 * d[:, None] * d[None, :]
    s0 = np.linalg.norm(m0) or 1.0
    s1 = np.linalg.norm(m1) or 1.0
    return m0 / s0, m1 / s1, s0 / s1


def lmi_certificate(problem: LmiProblem, rel_tol: float = 1e-8, width: float = 1e-10) -> LmiCertificate:
    """Maximize the concave map alpha -> lambda_min(m0 + alpha m1) over alpha >= 0."""
    m0, m1, alpha_scale = _equilibrate(problem.m0, problem.m1)
    tol = rel_tol

    def lam(alpha):
        m = m0 + alpha * m1
        return float(np.linalg.eigvalsh(0.5 * (m + m.conj().T))[0])

    f0 = lam(0.0)
    best_alpha, best = 0.0, f0
    if f0 >= -tol:
        return LmiCertificate(True, 0.0, f0, tol)

    def track(alpha, value):
        nonlocal best_alpha, best
        if value > best:
            best_alpha, best = alpha, value
        return value >= -tol

    lo, hi = 0.0, 1.0
    f_hi = lam(hi)
    if track(hi, f_hi):
        return LmiCertificate(True, best_alpha * alpha_scale, best, tol)
    if f_hi > f0:
        # still climbing: double until the function turns down
        prev = 0.0
        for _ in range(400):
            nxt = 2.0 * hi
            f_nxt = lam(nxt)
            if track(nxt, f_nxt):
                return LmiCertificate(True, best_alpha * alpha_scale, best, tol)
            if f_nxt <= f_hi:
                lo, hi = prev, nxt
                break
            prev, hi, f_hi = hi, nxt, f_nxt
        else:
            return LmiCertificate(False, best_alpha * alpha_scale, best, tol)
    # golden-section on [lo, hi]
    a, b = lo, hi
    x1 = b - GOLDEN * (b - a)
    x2 = a + GOLDEN * (b - a)
    f1, f2 = lam(x1), lam(x2)
    if track(x1, f1) or track(x2, f2):
        return LmiCertificate(True, best_alpha * alpha_scale, best, tol)
    while b - a > width * max(1.0, b):
        if f1 < f2:
            a, x1, f1 = x1, x2, f2
            x2 = a + GOLDEN * (b - a)
            f2 = lam(x2)
            if track(x2, f2):
                break
        else:
            b, x2, f2 = x2, x1, f1
            x1 = b - GOLDEN * (b - a)
            f1 = lam(x1)
            if track(x1, f1):
                break
    for end in (a, b):
        track(end, lam(end))
    return LmiCertificate(best >= -tol, best_alpha * alpha_scale, best, tol)


def lmi_feasible_1d(problem: LmiProblem) -> bool:
    return lmi_certificate(problem).feasible


def _block(top_left, top_right, bottom_right):
    n = top_left.shape[0]
    m = np.empty((n + 1, n + 1), dtype=complex)
    m[:n, :n] = top_left
    m[:n, n] = top_right
    m[n, :n] = np.conj(top_right)
    m[n, n] = bottom_right
    return m


def _ball_multiplier(n, eps):
    m1 = np.zeros((n + 1, n + 1), dtype=complex)
    m1[:n, :n] = np.eye(n)
    m1[n, n] = -eps * eps
    return m1


def build_lmi_blocks(kind: str, **ctx) -> LmiProblem:
    """Assemble the S-procedure matrix of one robust constraint.

    kind "E1": h_bar, eps_csi, z_tx, b, sigma_com2, snr_min[, mu=1]
    kind "I1": a_vec, a_tilde_vec, eps_aod, d_vec, sigma_sen2, z[, real_angle=True]
    kind "J5": r_bar_vec, upsilon, eps_rsi, d_vec, sigma_sen2, lam_bar,
               noise_gain, z[, delta=1]
    """
    if kind == "E1":
        h_bar = np.asarray(ctx["h_bar"], dtype=complex)
        g = np.asarray(ctx["z_tx"]) @ np.asarray(ctx["b"])
        if g.shape != h_bar.shape:
            raise ValueError("channel and beam dimensions differ")
        ell = -np.outer(g, g.conj()) / ctx["sigma_com2"]
        mu = ctx.get("mu", 1)
        m0 = _block(-ell, -ell @ h_bar, -np.real(np.vdot(h_bar, ell @ h_bar)) - ctx["snr_min"] * mu)
        return LmiProblem(m0, _ball_multiplier(h_bar.size, ctx["eps_csi"]), "E1")
    if kind == "I1":
        a = np.asarray(ctx["a_vec"], dtype=complex)
        at = np.asarray(ctx["a_tilde_vec"], dtype=complex)
        d = np.asarray(ctx["d_vec"], dtype=complex)
        if not a.shape == at.shape == d.shape:
            raise ValueError("response and link vectors must have equal length")
        # F = -(1/sigma^2) d d^H, so x^H F y = -(x^H d)(d^H y)/sigma^2
        s2 = ctx["sigma_sen2"]
        c0, c1 = np.vdot(d, a), np.vdot(d, at)
        at_f_at = -abs(c1) ** 2 / s2
        a_f_a = -abs(c0) ** 2 / s2
        at_f_a = -np.conj(c1) * c0 / s2
        off = -at_f_a
        if ctx.get("real_angle", True):
            off = off.real  # the angle error is real, so only the real part couples
        m0 = np.array([[-at_f_at, off], [np.conj(off), -a_f_a - ctx["z"]]], dtype=complex)
        eps = ctx["eps_aod"]
        return LmiProblem(m0, np.diag([1.0, -eps * eps]).astype(complex), "I1")
    if kind == "J5":
        r = np.asarray(ctx["r_bar_vec"], dtype=complex)
        d = np.asarray(ctx["d_vec"], dtype=complex)
        if r.shape != d.shape:
            raise ValueError("RSI and link vectors must have equal length")
        w = ctx["upsilon"] ** 2 * ctx["lam_bar"]
        f = -np.outer(d, d.conj()) / ctx["sigma_sen2"]
        fr = f @ r
        corner = w * np.real(np.vdot(r, fr)) - ctx["lam_bar"] * ctx["noise_gain"] * ctx.get("delta", 1) + ctx["z"]
        m0 = _block(w * f, w * fr, corner)
        return LmiProblem(m0, _ball_multiplier(r.size, ctx["eps_rsi"]), "J5")
    raise ValueError(f"unknown LMI block {kind!r}")
