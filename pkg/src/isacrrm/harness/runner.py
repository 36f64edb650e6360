"""Experiment drivers: realizations x schemes, (snr, sinr) grids, result files."""

from __future__ import annotations

import csv
import json
import math
from dataclasses import asdict, dataclass, field, replace
from pathlib import Path

import numpy as np

from ..solver import Infeasible, build_tables, solve, solve_baseline
from ..verify import check_allocation
from .config import ScenarioConfig, draw_scenario, realization_rng

RESULT_COLUMNS = (
    "scheme", "realization", "feasible", "fallback", "energy_mJ", "time_ms", "objective", "active_slots",
    "variant", "verified", "error",
)
SLOT_COLUMNS = (
    "variant", "scheme", "realization", "slot", "user", "target",
    "tx_direction_deg", "tx_beamwidth_deg", "tx_power_W",
    "rx_direction_deg", "rx_beamwidth_deg", "rx_power_W", "energy_W",
)


class UnverifiedResult(RuntimeError):
    """A feasible record without an all-pass verification report."""


@dataclass
class ResultRecord:
    scheme: str
    realization: int
    feasible: bool
    fallback: bool = False
    energy_mJ: float = math.nan
    time_ms: float = math.nan
    objective: float = math.nan
    active_slots: int = 0
    variant: str = "base"
    verified: bool = False
    error: str = ""
    slots: list = field(default_factory=list)


def _beam_spec(book, flat):
    if flat is None:
        return None
    cw = book[flat]
    grid = book.grid
    return (
        grid.directions_deg[cw.direction_index],
        grid.beamwidth_classes_deg[cw.beamwidth_index],
        grid.power_levels_w[cw.power_index],
    )


def _slot_rows(scenario, allocation):
    rows = []
    for s, slot in enumerate(allocation.slots):
        if not slot.gamma:
            continue
        rows.append({
            "slot": s,
            "user": slot.user,
            "target": slot.target,
            "tx": _beam_spec(scenario.tx_codebook, slot.tx),
            "rx": _beam_spec(scenario.rx_codebook, slot.rx),
            "energy_W": slot.energy_w,
        })
    return rows


def _verification_scenario(scheme, scenario):
    # the energy lower bound drops the horizon limit
    return scenario.with_(horizon=max(scenario.horizon, scenario.max_horizon)) if scheme == "elb" else scenario


def run_realization(scenario, schemes, realization=0, variant="base", verify=True, lmi=True):
    tables = build_tables(scenario)
    records = []
    for scheme in schemes:
        scheme = scheme.lower()
        try:
            alloc = solve_baseline(scheme, scenario, tables)
        except Infeasible as exc:
            records.append(ResultRecord(scheme.upper(), realization, False, variant=variant, error=f"infeasible: {exc}"))
            continue
        verified = False
        error = ""
        if verify:
            report = check_allocation(_verification_scenario(scheme, scenario), alloc, lmi=lmi)
            verified = report.passed
            if not verified:
                error = "verification failed: " + ",".join(report.failures())
        records.append(ResultRecord(
            scheme.upper(), realization, True, alloc.fallback, alloc.energy_mj, alloc.time_ms,
            float(alloc.objective), alloc.active_slots, variant, verified, error, _slot_rows(scenario, alloc),
        ))
    return records


def run_scenario(config: ScenarioConfig, schemes=None, realizations=None, variant="base", verify=True, lmi=True):
    """One record per realization x scheme; deterministic given the config seed."""
    schemes = schemes or config.schemes
    n = config.realizations if realizations is None else int(realizations)
    records = []
    for r in range(n):
        try:
            scenario = draw_scenario(config, realization_rng(config, r))
            records += run_realization(scenario, schemes, r, variant, verify, lmi)
        except Exception as exc:  # recorded, not fatal
            records += [ResultRecord(s.upper(), r, False, variant=variant, error=f"error: {type(exc).__name__}: {exc}")
                        for s in schemes]
    return records


def run_variants(config: ScenarioConfig, schemes=None, realizations=None, verify=True, lmi=True):
    records = []
    for label, overrides in config.variant_overrides():
        records += run_scenario(config.with_overrides(overrides), schemes, realizations, label, verify, lmi)
    return records


# -------------------------------------------------------------------- grids


@dataclass
class GridResult:
    axis_names: tuple
    axis_values: tuple
    horizons: tuple
    feasible: dict  # horizon -> bool matrix [first axis, second axis]
    energy_mJ: dict
    active_slots: dict

    def count(self, horizon):
        return int(self.feasible[horizon].sum())

    def ratio(self, small, large):
        n_small = self.count(small)
        return math.inf if n_small == 0 else self.count(large) / n_small

    def contains(self, small, large):
        """True when every feasible cell at `small` is feasible at `large`."""
        return bool(np.all(self.feasible[large][self.feasible[small]]))

    def rows(self):
        name_a, name_b = self.axis_names
        for h in self.horizons:
            for i, va in enumerate(self.axis_values[0]):
                for j, vb in enumerate(self.axis_values[1]):
                    yield {
                        "horizon": h, name_a: va, name_b: vb,
                        "feasible": bool(self.feasible[h][i, j]),
                        "energy_mJ": float(self.energy_mJ[h][i, j]),
                        "active_slots": int(self.active_slots[h][i, j]),
                    }


def _grid_cell_scenario(base, overrides):
    """Instance with replaced thresholds; geometry and channels are kept."""
    users, targets = list(base.users), list(base.targets)
    for key, value in overrides.items():
        head, _, name = key.partition(".")
        field_name = name if name in ("snr_min", "sinr_min", "theta_deg") else None
        if head == "users" and field_name:
            users = [replace(u, **{field_name: value}) for u in users]
        elif head == "targets" and field_name:
            targets = [replace(t, **{field_name: value}) for t in targets]
        else:
            return None
    return base.with_(users=users, targets=targets)


def sweep_grid(config: ScenarioConfig, axes=None, horizons=None, realization=0, eta1=None, eta2=None):
    """Feasibility, energy and active slots on a two-axis grid of dotted keys.

    axes maps two dotted keys to [start, stop, points]; horizons lists the
    slot budgets to compare.
    """
    grid = config.grid or {}
    axes = axes or grid.get("axes")
    if not axes or len(axes) != 2:
        raise ValueError("sweep_grid needs exactly two axes")
    horizons = tuple(horizons or grid.get("horizons") or (config.horizon,))
    names = tuple(axes)
    values = tuple(tuple(float(v) for v in np.linspace(*axes[k][:2], int(axes[k][2]))) for k in names)
    feasible, energy, active = {}, {}, {}
    base = draw_scenario(config, realization_rng(config, realization))
    base_tables = build_tables(base)
    for h in horizons:
        shape = (len(values[0]), len(values[1]))
        feasible[h] = np.zeros(shape, dtype=bool)
        energy[h] = np.full(shape, np.nan)
        active[h] = np.zeros(shape, dtype=int)
        for i, va in enumerate(values[0]):
            for j, vb in enumerate(values[1]):
                over = {names[0]: va, names[1]: vb}
                scen = _grid_cell_scenario(base, over)
                cache = base_tables.cache
                if scen is None:
                    scen = draw_scenario(config.with_overrides(over), realization_rng(config, realization))
                    cache = None
                scen = scen.with_(horizon=h)
                tables = build_tables(scen, cache=cache)
                try:
                    alloc = solve(scen, tables, eta1=eta1, eta2=eta2)
                except Infeasible:
                    continue
                feasible[h][i, j] = True
                energy[h][i, j] = alloc.energy_mj
                active[h][i, j] = alloc.active_slots
    return GridResult(names, values, horizons, feasible, energy, active)


def emit_grid(result: GridResult, path):
    rows = list(result.rows())
    path = Path(path)
    with path.open("w", newline="") as fh:
        cols = ["horizon", *result.axis_names, "feasible", "energy_mJ", "active_slots"]
        writer = csv.DictWriter(fh, fieldnames=cols)
        writer.writeheader()
        writer.writerows(rows)
    return path


# ------------------------------------------------------------------ output


def _check_verified(records):
    bad = [r for r in records if r.feasible and not r.verified]
    if bad:
        r = bad[0]
        raise UnverifiedResult(f"{r.scheme} realization {r.realization} ({r.variant}) is not verified")


def slots_path(path):
    path = Path(path)
    return path.with_name(path.stem + ".slots" + path.suffix)


def _fmt(x):
    if isinstance(x, float):
        return "" if math.isnan(x) else repr(x)
    if x is None:
        return ""
    return x


def emit_results(records, fmt, path):
    """Write records as CSV (plus a per-slot companion file) or JSON."""
    _check_verified(records)
    path = Path(path)
    if fmt == "json":
        data = {"units": {"energy_mJ": "mJ", "time_ms": "ms", "energy_W": "W", "angles": "degrees"},
                "records": [asdict(r) for r in records]}
        path.write_text(json.dumps(data, indent=1, allow_nan=True))
        return path
    if fmt != "csv":
        raise ValueError(f"unknown format {fmt!r}")
    with path.open("w", newline="") as fh:
        writer = csv.writer(fh)
        writer.writerow(RESULT_COLUMNS)
        for r in records:
            writer.writerow([_fmt(getattr(r, c)) for c in RESULT_COLUMNS])
    with slots_path(path).open("w", newline="") as fh:
        writer = csv.writer(fh)
        writer.writerow(SLOT_COLUMNS)
        for r in records:
            for row in r.slots:
                tx = row["tx"] or (None, None, None)
                rx = row["rx"] or (None, None, None)
                writer.writerow([_fmt(v) for v in (
                    r.variant, r.scheme, r.realization, row["slot"], row["user"], row["target"],
                    *tx, *rx, row["energy_W"],
                )])
    return path


def _parse_cell(col, text):
    if col in ("feasible", "fallback", "verified"):
        return text == "True"
    if col in ("realization", "active_slots"):
        return int(text)
    if col in ("energy_mJ", "time_ms", "objective"):
        return math.nan if text == "" else float(text)
    return text


def load_results(path):
    path = Path(path)
    if path.suffix == ".json":
        data = json.loads(path.read_text())
        out = []
        for d in data["records"]:
            d["slots"] = [{**row, "tx": None if row["tx"] is None else tuple(row["tx"]),
                           "rx": None if row["rx"] is None else tuple(row["rx"])} for row in d["slots"]]
            out.append(ResultRecord(**d))
        return out
    with path.open(newline="") as fh:
        records = [ResultRecord(**{c: _parse_cell(c, row[c]) for c in RESULT_COLUMNS}) for row in csv.DictReader(fh)]
    index = {(r.variant, r.scheme, r.realization): r for r in records}
    companion = slots_path(path)
    if companion.exists():
        num = lambda v: None if v == "" else float(v)  # noqa: E731
        with companion.open(newline="") as fh:
            for row in csv.DictReader(fh):
                rec = index[(row["variant"], row["scheme"], int(row["realization"]))]
                tx = tuple(num(row[k]) for k in ("tx_direction_deg", "tx_beamwidth_deg", "tx_power_W"))
                rx = tuple(num(row[k]) for k in ("rx_direction_deg", "rx_beamwidth_deg", "rx_power_W"))
                rec.slots.append({
                    "slot": int(row["slot"]),
                    "user": None if row["user"] == "" else int(row["user"]),
                    "target": None if row["target"] == "" else int(row["target"]),
                    "tx": None if tx[0] is None else tx,
                    "rx": None if rx[0] is None else rx,
                    "energy_W": float(row["energy_W"]),
                })
    return records


def summarize(records):
    """Per (variant, scheme): feasible count, mean energy and time over feasible realizations."""
    groups = {}
    for r in records:
        groups.setdefault((r.variant, r.scheme), []).append(r)
    out = []
    for (variant, scheme), recs in groups.items():
        ok = [r for r in recs if r.feasible]
        out.append({
            "variant": variant,
            "scheme": scheme,
            "realizations": len(recs),
            "feasible": len(ok),
            "fallback": sum(r.fallback for r in ok),
            "mean_energy_mJ": float(np.mean([r.energy_mJ for r in ok])) if ok else math.nan,
            "mean_time_ms": float(np.mean([r.time_ms for r in ok])) if ok else math.nan,
            "mean_active_slots": float(np.mean([r.active_slots for r in ok])) if ok else math.nan,
        })
    return out


def _flat_for(book, spec):
    grid = book.grid
    direction, width, power = spec
    try:
        i = grid.directions_deg.index(direction)
        j = grid.beamwidth_classes_deg.index(width)
        k = grid.power_levels_w.index(power)
    except ValueError:
        i = int(np.argmin(np.abs(np.array(grid.directions_deg) - direction)))
        j = int(np.argmin(np.abs(np.array(grid.beamwidth_classes_deg) - width)))
        k = int(np.argmin(np.abs(np.array(grid.power_levels_w) - power)))
        if (abs(grid.directions_deg[i] - direction) > 1e-9 or abs(grid.beamwidth_classes_deg[j] - width) > 1e-9
                or abs(grid.power_levels_w[k] - power) > 1e-12):
            raise ValueError(f"beam {spec} is not in the {book.side} codebook") from None
    return grid.flat_index(i, j, k)


def allocation_from_record(scenario, record: ResultRecord):
    """Rebuild the slot schedule of an emitted record on its drawn instance."""
    from ..solver import Allocation, SlotDecision

    n_slots = max([scenario.horizon] + [row["slot"] + 1 for row in record.slots])
    slots = [SlotDecision()] * n_slots
    for row in record.slots:
        tx = None if row["tx"] is None else _flat_for(scenario.tx_codebook, tuple(row["tx"]))
        rx = None if row["rx"] is None else _flat_for(scenario.rx_codebook, tuple(row["rx"]))
        slots[row["slot"]] = SlotDecision(row["user"], row["target"], tx, rx, float(row["energy_W"]))
    zeros = np.zeros((scenario.n_users, scenario.n_targets), dtype=int)
    energy_j = scenario.slot_duration * sum(s.energy_w for s in slots)
    return Allocation(tuple(slots), zeros, zeros.sum(axis=1), zeros.sum(axis=0), record.objective, energy_j,
                      math.nan, sum(s.gamma for s in slots), record.scheme, record.fallback,
                      slot_duration=scenario.slot_duration)
