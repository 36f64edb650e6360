"""Exact scheduling: per-configuration minimal energies plus an integer
count search over user/target pairings, and the comparison baselines."""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np
from scipy.optimize import linear_sum_assignment

from .physmodel import steering_vector
from .robust import LinkGeometryCache


class Infeasible(Exception):
    """No schedule meets every demand and robust requirement."""


class HorizonTooSmall(Infeasible):
    """Demands could be met, but not within the available slots."""


# ------------------------------------------------------------------ weights


def design_weights(s_max: int, delta0: float, delta_omega: float) -> np.ndarray:
    if delta0 <= 0 or delta_omega <= 0:
        raise ValueError("slot weights need delta0 > 0 and delta_omega > 0")
    return delta0 + delta_omega * np.arange(int(s_max), dtype=float)


def priority_eta2_threshold(eta1, s_max, p_tx_max_w, p_rx_max_w, delta0) -> float:
    """Time weight above which one saved slot outweighs any energy saving."""
    return eta1 * s_max * (p_tx_max_w + p_rx_max_w) / delta0


# ------------------------------------------------------------- K1 prefilter


@dataclass(frozen=True)
class Prefilter:
    kept: tuple  # per user: boolean mask over the tx codebook order
    infeasible_users: tuple
    upper_bounds: np.ndarray  # (||Z^H h|| + eps ||Z||_F)^2 P_max per user


def prefilter_k1(scenario, codebook_tx=None, cache=None) -> Prefilter:
    book = codebook_tx if codebook_tx is not None else scenario.tx_codebook
    cache = cache or LinkGeometryCache(scenario, tx_book=book)
    eps = scenario.uncertainty.eps_csi
    z = scenario.array.z_tx
    p_max = book.max_power
    kept, bad, bounds = [], [], []
    for uid, user in enumerate(scenario.users):
        ub = (np.linalg.norm(z.conj().T @ user.h_bar) + eps * np.linalg.norm(z)) ** 2 * p_max
        bounds.append(ub)
        if user.snr_min * scenario.sigma_com2 > ub:
            bad.append(uid)
            kept.append(np.zeros(len(book), dtype=bool))
            continue
        # best case over the ball; a codeword failing it can never be robust-feasible
        best = (np.abs(user.h_bar.conj() @ cache.bz) + eps * cache.tx_gain) ** 2 / scenario.sigma_com2
        kept.append(best >= user.snr_min)
    return Prefilter(tuple(kept), tuple(bad), np.array(bounds))


# ------------------------------------------------------------------ tables


@dataclass(frozen=True)
class SlotConfigCost:
    kind: str  # "joint", "user", "target"
    user: int | None
    target: int | None
    min_energy_w: float
    argmin_tx: int | None
    argmin_rx: int | None
    feasible: bool


class Tables:
    """Robust feasibility masks and per-configuration cheapest codewords."""

    def __init__(self, scenario, tx_book=None, rx_book=None, prefilter=True, cache=None):
        self.scenario = scenario
        self.tx_book = tx_book if tx_book is not None else scenario.tx_codebook
        self.rx_book = rx_book if rx_book is not None else scenario.rx_codebook
        if cache is not None and cache.tx_book is self.tx_book and cache.rx_book is self.rx_book:
            cache = cache.for_scenario(scenario)
        else:
            cache = LinkGeometryCache(scenario, self.tx_book, self.rx_book)
        self.cache = cache
        self.tx_flat = np.array([cw.flat_index for cw in self.tx_book.codewords])
        self.rx_flat = np.array([cw.flat_index for cw in self.rx_book.codewords])
        self.tx_energy = self.tx_book.energies
        self.rx_energy = self.rx_book.energies
        self.prefilter = prefilter_k1(scenario, self.tx_book, cache) if prefilter else None
        comm_margin, comm_ok = [], []
        for uid, user in enumerate(scenario.users):
            margin = cache.user_snr(user) - user.snr_min
            ok = margin >= 0
            if self.prefilter is not None:
                ok &= self.prefilter.kept[uid]
            comm_margin.append(margin)
            comm_ok.append(ok)
        n_tx = len(self.tx_book)
        self.comm_margin = np.array(comm_margin, dtype=float).reshape(len(scenario.users), n_tx)
        self.comm_ok = np.array(comm_ok, dtype=bool).reshape(len(scenario.users), n_tx)
        sense_margin = [cache.sensing_margin(t) for t in scenario.targets]
        self.sense_margin = np.array(sense_margin, dtype=float).reshape(len(scenario.targets), len(self.rx_book), len(self.tx_book))
        self.sense_ok = self.sense_margin >= 0
        self._costs = {}

    # configuration lookup -------------------------------------------------
    def _pick(self, mask2d, with_rx, rule):
        if with_rx:
            ri, ti = np.nonzero(mask2d)
            if ri.size == 0:
                return None
            energy = np.round(self.rx_energy[ri] + self.tx_energy[ti], 12)
            keys = (self.rx_flat[ri], self.tx_flat[ti]) if rule == "index" else (self.rx_flat[ri], self.tx_flat[ti], energy)
            best = np.lexsort(keys)[0]
            r, t = ri[best], ti[best]
            return float(self.tx_energy[t] + self.rx_energy[r]), int(self.tx_flat[t]), int(self.rx_flat[r]), t, r
        (ti,) = np.nonzero(mask2d)
        if ti.size == 0:
            return None
        energy = np.round(self.tx_energy[ti], 12)
        keys = (self.tx_flat[ti],) if rule == "index" else (self.tx_flat[ti], energy)
        t = ti[np.lexsort(keys)[0]]
        return float(self.tx_energy[t]), int(self.tx_flat[t]), None, t, None

    def cost(self, kind, user=None, target=None, rule="energy") -> SlotConfigCost:
        key = (kind, user, target, rule)
        if key in self._costs:
            return self._costs[key]
        if kind == "joint":
            found = self._pick(self.comm_ok[user][None, :] & self.sense_ok[target], True, rule)
        elif kind == "user":
            found = self._pick(self.comm_ok[user], False, rule)
        elif kind == "target":
            found = self._pick(self.sense_ok[target], True, rule)
        else:
            raise ValueError(kind)
        if found is None:
            out = SlotConfigCost(kind, user, target, math.inf, None, None, False)
        else:
            energy, tx, rx, _, _ = found
            out = SlotConfigCost(kind, user, target, energy, tx, rx, True)
        self._costs[key] = out
        return out

    def energy_arrays(self, rule="energy"):
        sc = self.scenario
        n_u, n_t = sc.n_users, sc.n_targets
        e_joint = np.array([[self.cost("joint", u, t, rule).min_energy_w for t in range(n_t)] for u in range(n_u)]).reshape(n_u, n_t)
        e_user = np.array([self.cost("user", u, None, rule).min_energy_w for u in range(n_u)])
        e_target = np.array([self.cost("target", None, t, rule).min_energy_w for t in range(n_t)])
        return e_joint, e_user, e_target

    def all_costs(self, rule="energy"):
        sc = self.scenario
        out = [self.cost("joint", u, t, rule) for u in range(sc.n_users) for t in range(sc.n_targets)]
        out += [self.cost("user", u, None, rule) for u in range(sc.n_users)]
        out += [self.cost("target", None, t, rule) for t in range(sc.n_targets)]
        return out

    def restricted(self, tx_keep, rx_keep) -> "Tables":
        """Tables over codebook subsets given by flat indices."""
        return Tables(self.scenario, self.tx_book.subset(tx_keep), self.rx_book.subset(rx_keep), self.prefilter is not None)

    def position(self, side, flat):
        flats = self.tx_flat if side == "tx" else self.rx_flat
        pos = np.nonzero(flats == flat)[0]
        if pos.size == 0:
            raise KeyError(flat)
        return int(pos[0])


def build_tables(scenario, codebooks=None, prefilter=True, cache=None) -> Tables:
    tx_book, rx_book = codebooks if codebooks is not None else (None, None)
    return Tables(scenario, tx_book, rx_book, prefilter, cache)


# ------------------------------------------------------------ count search


@dataclass(frozen=True)
class CountsSolution:
    n_joint: np.ndarray
    n_user: np.ndarray
    n_target: np.ndarray
    objective: float
    energy_total_j: float
    time_cost: float
    active_slots: int


def _counts_objective(n_joint, e_joint, e_user, e_target, s_com, s_sen, horizon, eta1, eta2, cum_w, s_dur):
    n_user = s_com - n_joint.sum(axis=1)
    n_target = s_sen - n_joint.sum(axis=0)
    if np.any(n_user < 0) or np.any(n_target < 0):
        return None
    if np.any(n_joint[~np.isfinite(e_joint)] > 0) or np.any(n_user[~np.isfinite(e_user)] > 0) or np.any(
        n_target[~np.isfinite(e_target)] > 0
    ):
        return None
    active = int(n_joint.sum() + n_user.sum() + n_target.sum())
    if active > horizon:
        return None
    energy = (
        float(np.sum(n_joint * np.where(n_joint > 0, e_joint, 0.0)))
        + float(np.sum(n_user * np.where(n_user > 0, e_user, 0.0)))
        + float(np.sum(n_target * np.where(n_target > 0, e_target, 0.0)))
    )
    energy_j = s_dur * energy
    time_cost = s_dur * cum_w[active]
    objective = eta1 * energy_j + eta2 * time_cost
    return CountsSolution(n_joint.copy(), n_user, n_target, objective, energy_j, time_cost, active)


def search_counts(
    e_joint, e_user, e_target, s_com, s_sen, horizon, eta1, eta2, omega, s_dur, lower=None, upper=None
) -> CountsSolution | None:
    """Depth-first branch-and-bound over the joint-slot count matrix."""
    e_joint = np.asarray(e_joint, dtype=float)
    e_user = np.asarray(e_user, dtype=float)
    e_target = np.asarray(e_target, dtype=float)
    s_com = np.asarray(s_com, dtype=int)
    s_sen = np.asarray(s_sen, dtype=int)
    n_u, n_t = e_joint.shape
    cap = np.minimum.outer(s_com, s_sen).astype(int)
    cap[~np.isfinite(e_joint)] = 0
    if upper is not None:
        cap = np.minimum(cap, upper)
    low = np.zeros_like(cap) if lower is None else np.asarray(lower, dtype=int)
    if np.any(low > cap):
        return None
    omega = np.asarray(omega, dtype=float)
    total = int(s_com.sum() + s_sen.sum())
    if omega.size < total:
        raise ValueError("slot weight vector shorter than the worst-case active slot count")
    cum_w = np.concatenate([[0.0], np.cumsum(omega)])
    cells = [(u, t) for u in range(n_u) for t in range(n_t)]
    n_cells = len(cells)
    finite_u = np.isfinite(e_user)
    finite_t = np.isfinite(e_target)

    n_joint = np.zeros((n_u, n_t), dtype=int)
    row_rem = s_com.copy()
    col_rem = s_sen.copy()
    best: list = [None]

    @np.errstate(invalid="ignore")
    def lower_bound(idx, e_fixed, assigned):
        # rows still open: current row (of cells[idx]) and later; columns stay open
        first_row = cells[idx][0] if idx < n_cells else n_u
        open_rows = np.arange(n_u) >= first_row
        undecided = np.zeros((n_u, n_t), dtype=bool)
        for u, t in cells[idx:]:
            undecided[u, t] = cap[u, t] > 0
        r = np.where(open_rows, row_rem, 0)
        q = col_rem
        ej = np.where(undecided, e_joint, np.inf)
        # per-unit prices with a_u + b_t <= e_joint on every open cell
        bounds = []
        for mode in range(3):
            if mode == 0:
                a = np.minimum(e_user, ej.min(axis=1, initial=np.inf) / 2)
                b = np.minimum(e_target, ej.min(axis=0, initial=np.inf) / 2)
            elif mode == 1:
                b = np.minimum(e_target, ej.min(axis=0, initial=np.inf))
                with np.errstate(invalid="ignore"):
                    a = np.minimum(e_user, np.nan_to_num(ej - b[None, :], nan=np.inf).min(axis=1, initial=np.inf))
            else:
                a = np.minimum(e_user, ej.min(axis=1, initial=np.inf))
                with np.errstate(invalid="ignore"):
                    b = np.minimum(e_target, np.nan_to_num(ej - a[:, None], nan=np.inf).min(axis=0, initial=np.inf))
            if np.any((r > 0) & ~np.isfinite(a)) or np.any((q > 0) & ~np.isfinite(b)):
                return math.inf, 0
            bounds.append(float(np.sum(np.where(r > 0, r * a, 0.0)) + np.sum(np.where(q > 0, q * b, 0.0))))
        energy_lb = max(bounds)
        # most joint slots the undecided cells could still add
        capq = np.minimum(cap, q[None, :])
        per_row = np.minimum(r, np.where(undecided, capq, 0).sum(axis=1)).sum()
        per_col = np.minimum(q, np.where(undecided & open_rows[:, None], np.minimum(cap, r[:, None]), 0).sum(axis=0)).sum()
        k_max = int(min(per_row, per_col))
        n_lb = total - assigned - k_max
        return s_dur * (eta1 * (e_fixed + energy_lb) + eta2 * cum_w[min(n_lb, total)]), n_lb

    def dfs(idx, e_fixed, assigned):
        if idx == n_cells:
            sol = _counts_objective(
                n_joint, e_joint, e_user, e_target, s_com, s_sen, horizon, eta1, eta2, cum_w, s_dur
            )
            if sol is not None and (best[0] is None or sol.objective < best[0].objective):
                best[0] = sol
            return
        lb, n_lb = lower_bound(idx, e_fixed, assigned)
        if not math.isfinite(lb) or n_lb > horizon:
            return
        if best[0] is not None and lb >= best[0].objective:
            return
        u, t = cells[idx]
        top = min(cap[u, t], row_rem[u], col_rem[t])
        closes_row = t == n_t - 1
        for k in range(top, low[u, t] - 1, -1):
            n_joint[u, t] = k
            row_rem[u] -= k
            col_rem[t] -= k
            e_new = e_fixed + (k * e_joint[u, t] if k else 0.0)
            ok = True
            if closes_row and row_rem[u] > 0:
                if finite_u[u]:
                    e_new += row_rem[u] * e_user[u]
                else:
                    ok = False
            if ok and idx + 1 == n_cells:
                ok = all(col_rem[tt] == 0 or finite_t[tt] for tt in range(n_t))
            if ok:
                dfs(idx + 1, e_new, assigned + k)
            row_rem[u] += k
            col_rem[t] += k
        n_joint[u, t] = 0

    if n_cells == 0:
        return _counts_objective(n_joint, e_joint, e_user, e_target, s_com, s_sen, horizon, eta1, eta2, cum_w, s_dur)
    dfs(0, 0.0, 0)
    return best[0]


# ------------------------------------------------------------- allocations


@dataclass(frozen=True)
class SlotDecision:
    user: int | None = None
    target: int | None = None
    tx: int | None = None
    rx: int | None = None
    energy_w: float = 0.0

    @property
    def kappa(self):
        return int(self.user is not None)

    @property
    def zeta(self):
        return int(self.target is not None)

    @property
    def gamma(self):
        return int(self.kappa or self.zeta)


@dataclass(frozen=True)
class Allocation:
    slots: tuple
    n_joint: np.ndarray
    n_user: np.ndarray
    n_target: np.ndarray
    objective: float
    energy_total_j: float
    time_cost: float
    active_slots: int
    scheme: str = "OPT"
    fallback: bool = False
    eta1: float = 1.0
    eta2: float = 1.0
    omega: tuple = field(default=(), repr=False)
    slot_duration: float = 1e-3

    @property
    def time_ms(self):
        return 1e3 * self.active_slots * self.slot_duration

    @property
    def energy_mj(self):
        return 1e3 * self.energy_total_j

    def slot_energies(self):
        return np.array([s.energy_w for s in self.slots])


def materialize(scenario, tables, counts: CountsSolution, rule="energy", scheme="OPT", fallback=False,
                eta1=1.0, eta2=1.0, omega=(), configs=None) -> Allocation:
    """Expand counts into prefix-packed slots sorted by non-increasing energy."""
    active = []
    n_u, n_t = scenario.n_users, scenario.n_targets

    def lookup(kind, u, t):
        if configs is not None and (kind, u, t) in configs:
            return configs[(kind, u, t)]
        return tables.cost(kind, u, t, rule)

    for u in range(n_u):
        for t in range(n_t):
            c = lookup("joint", u, t)
            active += [SlotDecision(u, t, c.argmin_tx, c.argmin_rx, c.min_energy_w)] * int(counts.n_joint[u, t])
    for u in range(n_u):
        c = lookup("user", u, None)
        active += [SlotDecision(u, None, c.argmin_tx, None, c.min_energy_w)] * int(counts.n_user[u])
    for t in range(n_t):
        c = lookup("target", None, t)
        active += [SlotDecision(None, t, c.argmin_tx, c.argmin_rx, c.min_energy_w)] * int(counts.n_target[t])

    def order(s):
        return (-s.energy_w, s.tx, -1 if s.user is None else s.user, -1 if s.target is None else s.target)

    active.sort(key=order)
    horizon = max(scenario.horizon, len(active))
    slots = tuple(active) + (SlotDecision(),) * (horizon - len(active))
    energy_j = scenario.slot_duration * sum(s.energy_w for s in active)
    return Allocation(
        slots,
        counts.n_joint,
        counts.n_user,
        counts.n_target,
        eta1 * energy_j + eta2 * counts.time_cost,
        energy_j,
        counts.time_cost,
        len(active),
        scheme,
        fallback,
        eta1,
        eta2,
        tuple(omega),
        scenario.slot_duration,
    )


def resolve_eta2(scenario, eta1, eta2, tables=None):
    if eta2 != "auto":
        return float(eta2)
    tx = tables.tx_book if tables is not None else scenario.tx_codebook
    rx = tables.rx_book if tables is not None else scenario.rx_codebook
    return 1.01 * priority_eta2_threshold(eta1, scenario.horizon, tx.max_power, rx.max_power, scenario.delta0)


def _solve_counts(scenario, tables, eta1, eta2, omega, horizon, rule, lower=None, upper=None):
    e_joint, e_user, e_target = tables.energy_arrays(rule)
    s_com = np.array([u.s_com for u in scenario.users], dtype=int)
    s_sen = np.array([t.s_sen for t in scenario.targets], dtype=int)
    if scenario.min_horizon > horizon:
        raise HorizonTooSmall(
            f"{scenario.min_horizon} slots needed even with full pairing, horizon is {horizon}"
        )
    args = (e_joint, e_user, e_target, s_com, s_sen)
    sol = search_counts(*args, horizon, eta1, eta2, omega, scenario.slot_duration, lower, upper)
    if sol is None:
        relaxed = search_counts(*args, scenario.max_horizon, eta1, eta2, omega, scenario.slot_duration, lower, upper)
        if relaxed is not None and relaxed.active_slots > horizon:
            raise HorizonTooSmall(f"a feasible schedule needs {relaxed.active_slots} slots, horizon is {horizon}")
        raise Infeasible("no count assignment meets every demand with feasible configurations")
    return sol


def solve(scenario, tables=None, eta1=None, eta2=None, omega=None, horizon=None, scheme="OPT",
          lower=None, upper=None) -> Allocation:
    tables = tables if tables is not None else build_tables(scenario)
    eta1 = scenario.eta1 if eta1 is None else float(eta1)
    eta2 = resolve_eta2(scenario, eta1, scenario.eta2 if eta2 is None else eta2, tables)
    horizon = scenario.horizon if horizon is None else int(horizon)
    if omega is None:
        omega = scenario.omega(max(horizon, scenario.max_horizon))
    # with no energy weight every feasible codeword ties; break by lowest flat index
    rule = "index" if eta1 == 0 else "energy"
    counts = _solve_counts(scenario, tables, eta1, eta2, omega, horizon, rule, lower, upper)
    return materialize(scenario, tables, counts, rule, scheme, False, eta1, eta2, omega)


# --------------------------------------------------------------- baselines


def channel_similarity(scenario) -> np.ndarray:
    arr = scenario.array
    sim = np.zeros((scenario.n_users, scenario.n_targets))
    for u, user in enumerate(scenario.users):
        a_u = steering_vector(arr, "tx", user.beta_deg)
        for t, target in enumerate(scenario.targets):
            sim[u, t] = abs(np.vdot(a_u, steering_vector(arr, "tx", target.theta_deg)))
    return sim


def _nearest(grid_dirs, angle):
    return int(np.argmin(np.abs(np.asarray(grid_dirs) - angle)))


def _fallback(scenario, tables, eta1, eta2, omega):
    """Disjoint slots, maximum power, narrowest beam aimed at each LoS/AOD."""
    tx_grid = tables.tx_book.grid
    rx_grid = tables.rx_book.grid
    k_max = len(tx_grid.power_levels_w) - 1
    k_rx = len(rx_grid.power_levels_w) - 1
    configs = {}
    for u, user in enumerate(scenario.users):
        flat = tx_grid.flat_index(_nearest(tx_grid.directions_deg, user.beta_deg), 0, k_max)
        pos = tables.position("tx", flat)
        if user.s_com and not tables.comm_ok[u, pos]:
            raise Infeasible(f"fallback beam cannot serve user {u}")
        configs[("user", u, None)] = SlotConfigCost("user", u, None, float(tables.tx_energy[pos]), flat, None, True)
    for t, target in enumerate(scenario.targets):
        i = _nearest(tx_grid.directions_deg, target.theta_deg)
        flat_tx = tx_grid.flat_index(i, 0, k_max)
        flat_rx = rx_grid.flat_index(_nearest(rx_grid.directions_deg, target.theta_deg), 0, k_rx)
        p_tx, p_rx = tables.position("tx", flat_tx), tables.position("rx", flat_rx)
        if target.s_sen and not tables.sense_ok[t, p_rx, p_tx]:
            raise Infeasible(f"fallback beams cannot sense target {t}")
        energy = float(tables.tx_energy[p_tx] + tables.rx_energy[p_rx])
        configs[("target", None, t)] = SlotConfigCost("target", None, t, energy, flat_tx, flat_rx, True)
    if scenario.max_horizon > scenario.horizon:
        raise HorizonTooSmall("fallback needs one slot per demand unit")
    e_user = np.array([configs[("user", u, None)].min_energy_w for u in range(scenario.n_users)])
    e_target = np.array([configs[("target", None, t)].min_energy_w for t in range(scenario.n_targets)])
    e_joint = np.full((scenario.n_users, scenario.n_targets), np.inf)
    s_com = np.array([u.s_com for u in scenario.users], dtype=int)
    s_sen = np.array([t.s_sen for t in scenario.targets], dtype=int)
    sol = search_counts(e_joint, e_user, e_target, s_com, s_sen, scenario.horizon, eta1, eta2, omega,
                        scenario.slot_duration)
    if sol is None:
        raise Infeasible("fallback schedule does not fit")
    return materialize(scenario, tables, sol, "energy", "BL1", True, eta1, eta2, omega, configs)


def bl2_codebook_indices(tables):
    """Flat indices of maximum-power, narrowest-beam codewords on each side."""
    tx_grid, rx_grid = tables.tx_book.grid, tables.rx_book.grid
    kt, kr = len(tx_grid.power_levels_w) - 1, len(rx_grid.power_levels_w) - 1
    tx_keep = [tx_grid.flat_index(i, 0, kt) for i in range(len(tx_grid.directions_deg))]
    rx_keep = [rx_grid.flat_index(i, 0, kr) for i in range(len(rx_grid.directions_deg))]
    return tx_keep, rx_keep


def solve_baseline(kind: str, scenario, tables=None, eta1=None, eta2=None) -> Allocation:
    tables = tables if tables is not None else build_tables(scenario)
    kind = kind.upper()
    eta1 = scenario.eta1 if eta1 is None else float(eta1)
    eta2 = resolve_eta2(scenario, eta1, scenario.eta2 if eta2 is None else eta2, tables)
    omega = scenario.omega(scenario.max_horizon)
    if kind == "OPT":
        return solve(scenario, tables, eta1, eta2, omega)
    if kind == "TLB":
        return solve(scenario, tables, 0.0, eta2 if eta2 > 0 else 1.0, omega, scheme="TLB")
    if kind == "ELB":
        return solve(scenario, tables, eta1 if eta1 > 0 else 1.0, 0.0, omega, horizon=scenario.max_horizon, scheme="ELB")
    if kind == "BL2":
        tx_keep, rx_keep = bl2_codebook_indices(tables)
        sub = tables.restricted(tx_keep, rx_keep)
        return solve(scenario, sub, eta1, eta2, omega, scheme="BL2")
    if kind == "BL3":
        zeros = np.zeros((scenario.n_users, scenario.n_targets), dtype=int)
        return solve(scenario, tables, eta1, eta2, omega, scheme="BL3", upper=zeros)
    if kind == "BL1":
        sim = channel_similarity(scenario)
        rows, cols = linear_sum_assignment(sim, maximize=True)
        forced = np.zeros((scenario.n_users, scenario.n_targets), dtype=int)
        for u, t in zip(rows, cols):
            forced[u, t] = min(scenario.users[u].s_com, scenario.targets[t].s_sen)
        try:
            return solve(scenario, tables, eta1, eta2, omega, scheme="BL1", lower=forced, upper=forced)
        except Infeasible:
            return _fallback(scenario, tables, eta1, eta2, omega)
    raise ValueError(f"unknown scheme {kind!r}")
