"""Independent checks: constraint-by-constraint verification of a schedule,
a brute-force optimum, logic truth tables and Monte-Carlo sampling."""

from __future__ import annotations

import itertools
import math
from dataclasses import dataclass, field

import numpy as np

from .physmodel import linearized_response, response_matrix
from .robust import (
    LinkGeometryCache,
    build_lmi_blocks,
    link_vector,
    lmi_certificate,
    robust_comm_feasible,
    robust_sensing_feasible,
    vec,
    worst_case_aod_numerator,
    worst_case_aod_offset,
    worst_case_csi_perturbation,
    worst_case_rc_threshold,
    worst_case_rsi_perturbation,
)
from .solver import Allocation, Infeasible, SlotDecision, design_weights, resolve_eta2

SLACK_TOL = 1e-9


class BudgetExceeded(RuntimeError):
    """Enumeration would visit more nodes than allowed."""


class MalformedAllocation(ValueError):
    pass


# ----------------------------------------------------------------- report


@dataclass
class ConstraintRecord:
    status: str  # "pass", "fail", "not-applicable"
    worst_slack: float = math.inf
    note: str = ""


@dataclass
class VerificationReport:
    records: dict = field(default_factory=dict)
    certificates: dict = field(default_factory=dict)
    monte_carlo: dict = field(default_factory=dict)

    @property
    def passed(self) -> bool:
        return all(r.status != "fail" for r in self.records.values())

    def failures(self):
        return sorted(k for k, r in self.records.items() if r.status == "fail")

    def to_dict(self):
        return {
            "passed": self.passed,
            "records": {
                k: {"status": r.status, "worst_slack": _finite(r.worst_slack), "note": r.note}
                for k, r in self.records.items()
            },
            "certificates": self.certificates,
            "monte_carlo": self.monte_carlo,
        }


def _finite(x):
    return None if not math.isfinite(x) else float(x)


class _Recorder:
    def __init__(self, report):
        self.report = report

    def add(self, cid, slack, note=""):
        """Fold one scaled slack into the record of constraint `cid`."""
        rec = self.report.records.setdefault(cid, ConstraintRecord("pass"))
        if slack < rec.worst_slack:
            rec.worst_slack = float(slack)
        if slack < -SLACK_TOL:
            rec.status = "fail"
            if note and not rec.note:
                rec.note = note

    def touch(self, cid, status="pass", note=""):
        rec = self.report.records.setdefault(cid, ConstraintRecord(status, note=note))
        return rec


def _scaled(lhs, rhs):
    """Slack of lhs >= rhs scaled by the larger magnitude."""
    scale = max(abs(lhs), abs(rhs), 1e-300)
    return (lhs - rhs) / scale


# ------------------------------------------------------------ allocation check


def _binaries(scenario, allocation):
    n_s = len(allocation.slots)
    n_tx, n_rx = len(scenario.tx_codebook), len(scenario.rx_codebook)
    mu = np.zeros((scenario.n_users, n_s), dtype=int)
    tau = np.zeros((scenario.n_targets, n_s), dtype=int)
    chi = np.zeros((n_tx, n_s), dtype=int)
    rho = np.zeros((n_rx, n_s), dtype=int)
    for s, slot in enumerate(allocation.slots):
        if not isinstance(slot, SlotDecision):
            raise MalformedAllocation(f"slot {s} is not a slot decision")
        if slot.user is not None:
            if not 0 <= slot.user < scenario.n_users:
                raise MalformedAllocation(f"slot {s}: unknown user {slot.user}")
            mu[slot.user, s] = 1
        if slot.target is not None:
            if not 0 <= slot.target < scenario.n_targets:
                raise MalformedAllocation(f"slot {s}: unknown target {slot.target}")
            tau[slot.target, s] = 1
        if slot.tx is not None:
            if not 0 <= slot.tx < n_tx:
                raise MalformedAllocation(f"slot {s}: tx index {slot.tx} out of range")
            chi[slot.tx, s] = 1
        if slot.rx is not None:
            if not 0 <= slot.rx < n_rx:
                raise MalformedAllocation(f"slot {s}: rx index {slot.rx} out of range")
            rho[slot.rx, s] = 1
    return mu, tau, chi, rho


def check_allocation(scenario, allocation: Allocation, lmi=True) -> VerificationReport:
    report = VerificationReport()
    rec = _Recorder(report)
    mu, tau, chi, rho = _binaries(scenario, allocation)
    n_s = len(allocation.slots)
    arr = scenario.array
    unc = scenario.uncertainty
    txb, rxb = scenario.tx_codebook, scenario.rx_codebook

    kappa = mu.sum(axis=0)  # C6 defines kappa
    zeta = tau.sum(axis=0)  # C8 defines zeta
    gamma = chi.sum(axis=0)  # C10 ties gamma to the tx selection
    # binary domains
    rec.add("C1", -float(np.max(np.abs(kappa - np.clip(kappa, 0, 1)), initial=0)))
    rec.add("C2", -float(np.max(np.abs(zeta - np.clip(zeta, 0, 1)), initial=0)))
    for cid in ("C5", "C7", "C9", "C12"):
        rec.add(cid, 0.0)
    rec.add("C6", 0.0)
    rec.add("C8", 0.0)
    rec.add("C10", -float(np.max(gamma - 1, initial=0)))
    rec.add("C13", -float(np.max(np.abs(rho.sum(axis=0) - zeta), initial=0)))
    for cid in ("C11", "C14"):
        rec.touch(cid, "pass", "beams are the selected codewords by construction")
    # D-family (C3 through its linearization)
    for s in range(n_s):
        k, z, g = kappa[s], zeta[s], gamma[s]
        rec.add("D1", float(k + z - g))
        rec.add("D2", float(g - k))
        rec.add("D3", float(g - z))
        rec.add("D4", float(1 - g))
        rec.add("C3", -abs(g - int(bool(k) or bool(z))))
    rec.add("C4", _scaled(scenario.horizon, float(gamma.sum())))
    for u, user in enumerate(scenario.users):
        rec.add("C17", -abs(int(mu[u].sum()) - user.s_com) / max(user.s_com, 1))
    for t, target in enumerate(scenario.targets):
        rec.add("C22", -abs(int(tau[t].sum()) - target.s_sen) / max(target.s_sen, 1))
    if not scenario.users:
        rec.touch("C17", "not-applicable")
    if not scenario.targets:
        rec.touch("C22", "not-applicable")

    # F-family and J1-J4 on every (b, c, t, s), one slot at a time
    pi_nonzero, delta_nonzero = [], []
    chi8, rho8, tau8 = chi.astype(np.int8), rho.astype(np.int8), tau.astype(np.int8)
    for s in range(n_s):
        x = chi8[:, s][:, None, None]
        r = rho8[:, s][None, :, None]
        t = tau8[:, s][None, None, :]
        pi = x * r * t
        if pi.size:
            rec.add("F1", float(np.min(x - pi)))
            rec.add("F2", float(np.min(r - pi)))
            rec.add("F3", float(np.min(t - pi)))
            rec.add("F4", float(np.min(2 + pi - x - r - t)))
            rec.add("F5", float(min(np.min(pi), np.min(1 - pi))))
            pi_nonzero += [[int(b), int(c), int(tt), s] for b, c, tt in np.argwhere(pi)]
        r2, t2 = rho8[:, s][:, None], tau8[:, s][None, :]
        delta = r2 * t2
        if delta.size:
            rec.add("J1", float(np.min(r2 - delta)))
            rec.add("J2", float(np.min(t2 - delta)))
            rec.add("J3", float(np.min(delta - r2 - t2 + 1)))
            rec.add("J4", float(min(np.min(delta), np.min(1 - delta))))
            delta_nonzero += [[int(c), int(tt), s] for c, tt in np.argwhere(delta)]
    for cid in ("F1", "F2", "F3", "F4", "F5", "J1", "J2", "J3", "J4"):
        if cid not in report.records:
            rec.touch(cid, "not-applicable")

    z_tx, z_rx = arr.z_tx, arr.z_rx
    w = [txb[int(np.argmax(chi[:, s]))].vector if gamma[s] else np.zeros(arr.n_tx, complex) for s in range(n_s)]
    v = [rxb[int(np.argmax(rho[:, s]))].vector if rho[:, s].any() else np.zeros(arr.n_rx, complex) for s in range(n_s)]

    # communication: closed form (C16) and S-procedure certificate (E1/E2)
    alphas = np.zeros((scenario.n_users, n_s))
    for u, user in enumerate(scenario.users):
        for s in range(n_s):
            if mu[u, s]:
                _, margin = robust_comm_feasible(w[s], user, scenario)
                rec.add("C16", _scaled(margin + user.snr_min, user.snr_min))
            if lmi:
                prob = build_lmi_blocks(
                    "E1", h_bar=user.h_bar, eps_csi=unc.eps_csi, z_tx=z_tx, b=w[s],
                    sigma_com2=scenario.sigma_com2, snr_min=user.snr_min, mu=int(mu[u, s]),
                )
                cert = lmi_certificate(prob)
                alphas[u, s] = cert.alpha
                rec.add("E1", 0.0 if cert.feasible else cert.min_eigenvalue, f"user {u} slot {s}")
                rec.add("E2", float(cert.alpha))
    if not scenario.users:
        rec.touch("C16", "not-applicable")
    elif "C16" not in report.records:
        rec.touch("C16", "not-applicable")
    # K1 cutting plane
    p_max = txb.max_power
    for u, user in enumerate(scenario.users):
        bound = (np.linalg.norm(z_tx.conj().T @ user.h_bar) + unc.eps_csi * np.linalg.norm(z_tx)) ** 2 * p_max
        for s in range(n_s):
            g = z_tx @ w[s]
            worst = (abs(np.vdot(user.h_bar, g)) + unc.eps_csi * np.linalg.norm(g)) ** 2
            rec.add("K1", _scaled(bound, worst))
    if not scenario.users:
        rec.touch("K1", "not-applicable")

    # sensing: z certificate, H1/H4, I1/I2, J5/J6 and the closed form C21
    geo = LinkGeometryCache(scenario)
    z_cert = np.zeros((scenario.n_targets, n_s))
    xis = np.zeros((scenario.n_targets, n_s))
    iotas = np.zeros((scenario.n_targets, n_s))
    for t, target in enumerate(scenario.targets):
        a, a_t = linearized_response(arr, target.theta_deg)
        m_ub = float(np.max(np.abs(geo.target(target.theta_deg).c0)) ** 2 / scenario.sigma_sen2)
        lam_bar = worst_case_rc_threshold(target.sinr_min, target.psi_bar, target.rc_radius(unc))
        for s in range(n_s):
            d = link_vector(z_tx, z_rx, w[s], v[s]) * tau[t, s]
            z = tau[t, s] * worst_case_aod_numerator(vec(a), vec(a_t), unc.eps_aod_rad, d, scenario.sigma_sen2)
            z_cert[t, s] = z
            rec.add("H1", z)
            rec.add("H4", _scaled(tau[t, s] * m_ub, z))
            # H2: z below the worst-case numerator (equal by construction)
            rec.add("H2", 0.0 if z == 0 else _scaled(
                tau[t, s] * worst_case_aod_numerator(vec(a), vec(a_t), unc.eps_aod_rad, d, scenario.sigma_sen2), z))
            if tau[t, s]:
                ok, margin = robust_sensing_feasible(w[s], v[s], target, scenario)
                slack = -math.inf if not math.isfinite(margin) else _scaled(z, z - margin)
                rec.add("H3", slack, f"target {t} slot {s}")
                rec.add("C21", slack, f"target {t} slot {s}")
            else:
                rec.add("H3", 0.0)
            if not lmi:
                continue
            prob = build_lmi_blocks(
                "I1", a_vec=vec(a), a_tilde_vec=vec(a_t), eps_aod=unc.eps_aod_rad, d_vec=d,
                sigma_sen2=scenario.sigma_sen2, z=z,
            )
            cert = lmi_certificate(prob)
            xis[t, s] = cert.alpha
            rec.add("I1", 0.0 if cert.feasible else cert.min_eigenvalue, f"target {t} slot {s}")
            rec.add("I2", float(cert.alpha))
            noise_gain = float(np.linalg.norm(z_rx @ v[s]) ** 2)
            if tau[t, s] and math.isinf(lam_bar):
                rec.add("J5", -math.inf, f"target {t} reflection disk contains zero")
                continue
            lb = 0.0 if not tau[t, s] else lam_bar
            prob = build_lmi_blocks(
                "J5", r_bar_vec=scenario.rsi.r_bar_vec, upsilon=unc.upsilon, eps_rsi=unc.eps_rsi, d_vec=d,
                sigma_sen2=scenario.sigma_sen2, lam_bar=lb, noise_gain=noise_gain, z=z,
                delta=int(tau[t, s] and rho[:, s].any()),
            )
            cert = lmi_certificate(prob)
            iotas[t, s] = cert.alpha
            rec.add("J5", 0.0 if cert.feasible else cert.min_eigenvalue, f"target {t} slot {s}")
            rec.add("J6", float(cert.alpha))
    for cid in ("H1", "H2", "H3", "H4", "C21", "I1", "I2", "J5", "J6", "E1", "E2"):
        if cid not in report.records:
            rec.touch(cid, "not-applicable")
    for cid in ("C15", "C18", "C19", "C20"):
        rec.touch(cid, "not-applicable", "uncertainty set definition; enforced through its robust counterpart")

    # K2: non-increasing per-slot energy
    energy = np.array([
        (txb[int(np.argmax(chi[:, s]))].energy_w if gamma[s] else 0.0)
        + (rxb[int(np.argmax(rho[:, s]))].energy_w if rho[:, s].any() else 0.0)
        for s in range(n_s)
    ])
    if n_s > 1:
        rec.add("K2", float(np.min(energy[:-1] - energy[1:])), "per-slot energy increases")
    else:
        rec.touch("K2", "pass")

    report.certificates = {
        "pi_nonzero": pi_nonzero,
        "delta_nonzero": delta_nonzero,
        "z": z_cert.tolist(),
        "alpha": alphas.tolist(),
        "xi": xis.tolist(),
        "iota": iotas.tolist(),
        "slot_energy_w": energy.tolist(),
    }
    return report


# -------------------------------------------------------------- enumeration


def slot_options(scenario):
    """Every feasible single-slot configuration, grouped by (user, target, energy).

    Configurations with equal coverage and energy are interchangeable, so one
    representative (lowest tx, then rx flat index) stands for the class.
    """
    txb, rxb = scenario.tx_codebook, scenario.rx_codebook
    classes = {}

    def offer(user, target, tx, rx, energy):
        key = (user, target, round(energy, 12))
        rep = classes.get(key)
        cand = (tx.flat_index, -1 if rx is None else rx.flat_index)
        if rep is None or cand < rep[0]:
            classes[key] = (cand, SlotDecision(user, target, tx.flat_index, None if rx is None else rx.flat_index, energy))

    comm_ok = {}
    for u, user in enumerate(scenario.users):
        for b in txb.codewords:
            comm_ok[u, b.flat_index] = robust_comm_feasible(b.vector, user, scenario)[0]
            if comm_ok[u, b.flat_index]:
                offer(u, None, b, None, b.energy_w)
    for t, target in enumerate(scenario.targets):
        for b in txb.codewords:
            for c in rxb.codewords:
                if not robust_sensing_feasible(b.vector, c.vector, target, scenario)[0]:
                    continue
                energy = b.energy_w + c.energy_w
                offer(None, t, b, c, energy)
                for u in range(scenario.n_users):
                    if comm_ok[u, b.flat_index]:
                        offer(u, t, b, c, energy)
    opts = [slot for _, slot in classes.values()]
    opts.sort(key=lambda s: (s.energy_w, -1 if s.user is None else s.user, -1 if s.target is None else s.target))
    return opts


def enumerate_optimum(scenario, eta1=None, eta2=None, horizon=None, budget=10**8):
    """Exhaustive search over multisets of slot configurations."""
    eta1 = scenario.eta1 if eta1 is None else float(eta1)
    eta2 = resolve_eta2(scenario, eta1, scenario.eta2 if eta2 is None else eta2)
    horizon = scenario.horizon if horizon is None else int(horizon)
    omega = design_weights(max(horizon, scenario.max_horizon, 1), scenario.delta0, scenario.delta_omega)
    cum_w = np.concatenate([[0.0], np.cumsum(omega)])
    opts = slot_options(scenario)
    need_u = [u.s_com for u in scenario.users]
    need_t = [t.s_sen for t in scenario.targets]
    best = [math.inf, None]
    nodes = [0]
    chosen = []

    def rec(start, energy):
        nodes[0] += 1
        if nodes[0] > budget:
            raise BudgetExceeded(f"more than {budget} enumeration nodes")
        if not any(need_u) and not any(need_t):
            n = len(chosen)
            obj = scenario.slot_duration * (eta1 * energy + eta2 * cum_w[n])
            if obj < best[0]:
                best[0], best[1] = obj, list(chosen)
            return
        free = horizon - len(chosen)
        if max(sum(need_u), sum(need_t)) > free:
            return
        for i in range(start, len(opts)):
            o = opts[i]
            if o.user is not None and need_u[o.user] == 0:
                continue
            if o.target is not None and need_t[o.target] == 0:
                continue
            if o.user is not None:
                need_u[o.user] -= 1
            if o.target is not None:
                need_t[o.target] -= 1
            chosen.append(o)
            rec(i, energy + o.energy_w)
            chosen.pop()
            if o.user is not None:
                need_u[o.user] += 1
            if o.target is not None:
                need_t[o.target] += 1

    rec(0, 0.0)
    if best[1] is None:
        raise Infeasible("enumeration found no feasible schedule")
    slots = sorted(best[1], key=lambda s: -s.energy_w)
    n = len(slots)
    slots = tuple(slots) + (SlotDecision(),) * (horizon - n)
    energy_j = scenario.slot_duration * sum(s.energy_w for s in slots)
    n_joint = np.zeros((scenario.n_users, scenario.n_targets), dtype=int)
    n_user = np.zeros(scenario.n_users, dtype=int)
    n_target = np.zeros(scenario.n_targets, dtype=int)
    for s in slots[:n]:
        if s.user is not None and s.target is not None:
            n_joint[s.user, s.target] += 1
        elif s.user is not None:
            n_user[s.user] += 1
        else:
            n_target[s.target] += 1
    alloc = Allocation(slots, n_joint, n_user, n_target, best[0], energy_j, scenario.slot_duration * cum_w[n], n,
                       "ENUM", False, eta1, eta2, tuple(omega), scenario.slot_duration)
    return best[0], alloc


def min_active_slots(scenario, tables) -> int | None:
    """Fewest active slots over all joint-count matrices (plain product scan)."""
    e_joint, e_user, e_target = tables.energy_arrays()
    s_com = np.array([u.s_com for u in scenario.users], dtype=int)
    s_sen = np.array([t.s_sen for t in scenario.targets], dtype=int)
    cells = [(u, t) for u in range(scenario.n_users) for t in range(scenario.n_targets)]
    ranges = [range(min(s_com[u], s_sen[t]) + 1) if np.isfinite(e_joint[u, t]) else range(1) for u, t in cells]
    best = None
    for combo in itertools.product(*ranges):
        n = np.zeros((scenario.n_users, scenario.n_targets), dtype=int)
        for (u, t), k in zip(cells, combo):
            n[u, t] = k
        nu = s_com - n.sum(axis=1)
        nt = s_sen - n.sum(axis=0)
        if np.any(nu < 0) or np.any(nt < 0):
            continue
        if np.any((nu > 0) & ~np.isfinite(e_user)) or np.any((nt > 0) & ~np.isfinite(e_target)):
            continue
        active = int(n.sum() + nu.sum() + nt.sum())
        if active <= scenario.horizon and (best is None or active < best):
            best = active
    return best


# ---------------------------------------------------------- logic tables


def _system_holds(constraints, values):
    return all(c(values) for c in constraints)


D_SYSTEM = (
    lambda v: v["gamma"] <= v["kappa"] + v["zeta"],
    lambda v: v["gamma"] >= v["kappa"],
    lambda v: v["gamma"] >= v["zeta"],
    lambda v: v["gamma"] <= 1,
)
F_SYSTEM = (
    lambda v: v["pi"] <= v["chi"],
    lambda v: v["pi"] <= v["rho"],
    lambda v: v["pi"] <= v["tau"],
    lambda v: 2 + v["pi"] >= v["chi"] + v["rho"] + v["tau"],
    lambda v: 0 <= v["pi"] <= 1,
)
J_SYSTEM = (
    lambda v: v["delta"] <= v["rho"],
    lambda v: v["delta"] <= v["tau"],
    lambda v: v["delta"] >= v["rho"] + v["tau"] - 1,
    lambda v: 0 <= v["delta"] <= 1,
)


def _truth_table(system, inputs, aux, target_fn):
    rows = 0
    for bits in itertools.product((0, 1), repeat=len(inputs) + 1):
        vals = dict(zip(inputs + (aux,), bits))
        rows += 1
        if _system_holds(system, vals) != (vals[aux] == target_fn(vals)):
            return False, rows
    # continuous auxiliary: the only feasible value in [0, 1] must be the logical one
    for bits in itertools.product((0, 1), repeat=len(inputs)):
        vals = dict(zip(inputs, bits))
        grid = np.linspace(0.0, 1.0, 101)
        feasible = [x for x in grid if _system_holds(system, {**vals, aux: x})]
        if feasible != [float(target_fn(vals))]:
            return False, rows
    return True, rows


def check_logic_reformulations():
    """Truth tables of the OR and product linearizations; returns {name: (ok, rows)}."""
    return {
        "D": _truth_table(D_SYSTEM, ("kappa", "zeta"), "gamma", lambda v: int(v["kappa"] or v["zeta"])),
        "F": _truth_table(F_SYSTEM, ("chi", "rho", "tau"), "pi", lambda v: v["chi"] * v["rho"] * v["tau"]),
        "J": _truth_table(J_SYSTEM, ("rho", "tau"), "delta", lambda v: v["rho"] * v["tau"]),
    }


# ------------------------------------------------------------- Monte Carlo


def sample_complex_ball(rng, n_samples, dim, radius):
    """Uniform samples in the complex ball {x in C^dim : ||x|| <= radius}."""
    g = rng.standard_normal((n_samples, 2 * dim))
    g /= np.linalg.norm(g, axis=1, keepdims=True)
    r = radius * rng.random(n_samples) ** (1.0 / (2 * dim))
    g *= r[:, None]
    return g[:, :dim] + 1j * g[:, dim:]


@dataclass
class MonteCarloResult:
    samples: int
    checks: int
    linear_violations: int
    nonlinear_violations: int
    probe_violations: int

    @property
    def nonlinear_fraction(self):
        return self.nonlinear_violations / self.checks if self.checks else 0.0

    def as_dict(self):
        return {**self.__dict__, "nonlinear_fraction": self.nonlinear_fraction}


def monte_carlo_robustness(scenario, allocation, n_samples, rng, rel_tol=1e-9) -> MonteCarloResult:
    arr = scenario.array
    unc = scenario.uncertainty
    txb, rxb = scenario.tx_codebook, scenario.rx_codebook
    z_tx, z_rx = arr.z_tx, arr.z_rx
    active = [s for s in allocation.slots if s.gamma]
    dh = [sample_complex_ball(rng, n_samples, arr.n_tx, unc.eps_csi) for _ in scenario.users]
    dtheta = [rng.uniform(-unc.eps_aod_rad, unc.eps_aod_rad, n_samples) for _ in scenario.targets]
    dpsi = [sample_complex_ball(rng, n_samples, 1, t.rc_radius(unc))[:, 0] for t in scenario.targets]
    dr = sample_complex_ball(rng, n_samples, arr.n_rx * arr.n_tx, unc.eps_rsi)
    r_bar = scenario.rsi.r_bar_vec
    checks = lin_viol = nl_viol = probe_viol = 0
    for slot in active:
        b = txb[slot.tx].vector
        g = z_tx @ b
        if slot.user is not None:
            user = scenario.users[slot.user]
            h = user.h_bar[None, :] + dh[slot.user]
            snr = np.abs(h.conj() @ g) ** 2 / scenario.sigma_com2
            checks += n_samples
            bad = snr < user.snr_min * (1 - rel_tol)
            lin_viol += int(bad.sum())
            nl_viol += int(bad.sum())
            h_w = user.h_bar + worst_case_csi_perturbation(user.h_bar, unc.eps_csi, z_tx, b)
            probe_viol += int(abs(np.vdot(h_w, g)) ** 2 / scenario.sigma_com2 < user.snr_min * (1 - rel_tol))
        if slot.target is not None:
            target = scenario.targets[slot.target]
            c = rxb[slot.rx].vector
            d = link_vector(z_tx, z_rx, b, c)
            a, a_t = linearized_response(arr, target.theta_deg)
            c0, c1 = np.vdot(d, vec(a)), np.vdot(d, vec(a_t))
            psi2 = np.abs(target.psi_bar + dpsi[slot.target]) ** 2
            rsi = unc.upsilon**2 * np.abs(np.vdot(d, r_bar) + dr.conj() @ d) ** 2
            noise = scenario.sigma_sen2 * np.linalg.norm(z_rx @ c) ** 2
            lin = psi2 * np.abs(c0 + c1 * dtheta[slot.target]) ** 2 / (rsi + noise)
            thetas = target.theta_deg + np.rad2deg(dtheta[slot.target])
            gains = np.array([np.vdot(d, vec(response_matrix(arr, th))) for th in thetas])
            nonlin = psi2 * np.abs(gains) ** 2 / (rsi + noise)
            checks += n_samples
            lin_viol += int((lin < target.sinr_min * (1 - rel_tol)).sum())
            nl_viol += int((nonlin < target.sinr_min * (1 - rel_tol)).sum())
            # probe at the closed-form extremal point of every ball at once
            t_w = worst_case_aod_offset(vec(a), vec(a_t), unc.eps_aod_rad, d)
            psi_w = abs(target.psi_bar) - target.rc_radius(unc)
            r_w = r_bar + worst_case_rsi_perturbation(r_bar, unc.eps_rsi, d)
            sinr_w = max(psi_w, 0.0) ** 2 * abs(c0 + c1 * t_w) ** 2 / (
                unc.upsilon**2 * abs(np.vdot(d, r_w)) ** 2 + noise
            )
            probe_viol += int(sinr_w < target.sinr_min * (1 - rel_tol))
    return MonteCarloResult(n_samples, checks, lin_viol, nl_viol, probe_viol)
