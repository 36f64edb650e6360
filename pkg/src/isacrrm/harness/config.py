"""Declarative scenario documents (YAML) and per-realization instance draws.

A document looks like::

    schema_version: 1
    horizon: 1
    users: {count: 1, beta_deg: 90, distance_m: 50, snr_min: 80, s_com: 1}
    targets: {count: 1, theta_deg: [86, 134], psi_bar: 1.0e-3, sinr_min: 2, s_sen: 1}

Any per-user or per-target value may be a scalar or a two-element
``[low, high]`` range, sampled uniformly for each realization (integers for
slot demands).  ``users``/``targets`` may also be explicit lists.
"""

from __future__ import annotations

import copy
import itertools
import math
import re
import warnings
from dataclasses import dataclass, field
from importlib import resources
from pathlib import Path

import numpy as np
import yaml

from ..codebook import BeamGrid, TX_BEAMWIDTHS_DEG, RX_BEAMWIDTHS_DEG, build_codebook, default_active_sizes
from ..physmodel import CARRIER_HZ, SPEED_OF_LIGHT, ArrayConfig, dbm_to_watts, generate_user_channel, nominal_rsi
from ..scenario import Scenario, Target, UncertaintyConfig, User
from ..solver import priority_eta2_threshold

SCHEMA_VERSION = 1
REQUIRED = object()


class ConfigError(ValueError):
    """Schema or parse problem, located by field path and line."""

    def __init__(self, message, field_path="", line=None, source=None):
        where = source or "<config>"
        if line is not None:
            where += f":{line}"
        prefix = f"{where}: field '{field_path}': " if field_path else f"{where}: "
        super().__init__(prefix + message)
        self.field_path = field_path
        self.line = line


# key -> (kind, default)
SECTIONS = {
    "array": {
        "n_tx": ("int", 8),
        "n_rx": ("int", 16),
        "spacing_tx_wl": ("float", 0.5),
        "spacing_rx_wl": ("float", 0.5),
        "carrier_hz": ("float", CARRIER_HZ),
        "coupling_tx": ("float", 0.0),
        "coupling_rx": ("float", 0.0),
        "center_sep_m": ("float", 0.2),
    },
    "codebook": {
        "n_directions": ("int", 19),
        "direction_range_deg": ("pair", [45.0, 135.0]),
        "tx_beamwidths_deg": ("floats", list(TX_BEAMWIDTHS_DEG)),
        "rx_beamwidths_deg": ("floats", list(RX_BEAMWIDTHS_DEG)),
        "tx_power_levels_w": ("floats", [round(0.1 * k, 10) for k in range(1, 11)]),
        "rx_power_levels_w": ("floats", [0.1]),
    },
    "uncertainty": {
        "eps_csi_ratio": ("float", 0.0),  # relative to sigma_com (amplitude)
        "eps_aod_deg": ("float", 0.0),
        "eps_rc_ratio": ("float", 0.0),  # relative to |psi_bar| of each target
        "eps_rsi_ratio": ("float", 0.0),  # relative to ||R_bar||_F
        "upsilon": ("float", 0.0),
    },
    "objective": {
        "eta1": ("float", 1.0),
        "eta2": ("eta", 1.0),
        "delta0": ("float", 2.0),
        "delta_omega": ("float", 2.0),
    },
    "noise": {
        "sigma_com_dbm": ("float", -110.0),
        "sigma_sen_dbm": ("float", -70.0),
    },
}
USER_FIELDS = {
    "beta_deg": ("value", 90.0),
    "distance_m": ("value", 50.0),
    "rician_k": ("value", 100.0),
    "snr_min": ("value", REQUIRED),
    "s_com": ("ivalue", 1),
}
TARGET_FIELDS = {
    "theta_deg": ("value", REQUIRED),
    "psi_bar": ("value", 1e-3),
    "sinr_min": ("value", REQUIRED),
    "s_sen": ("ivalue", 1),
}
TOP_LEVEL = {
    "schema_version": ("int", REQUIRED),
    "name": ("str", ""),
    "description": ("str", ""),
    "horizon": ("int", REQUIRED),
    "slot_duration_s": ("float", 1e-3),
    "realizations": ("int", 1),
    "seed": ("int", 0),
    "schemes": ("strs", ["opt"]),
}
OPTIONAL_BLOCKS = ("sweeps", "variants", "grid", "desk")
SCHEMES = ("opt", "tlb", "elb", "bl1", "bl2", "bl3")


# ------------------------------------------------------------------ parsing


def _line_map(node, path=(), out=None):
    """Map key paths of a composed YAML tree to 1-based line numbers."""
    out = {} if out is None else out
    out[path] = node.start_mark.line + 1
    if isinstance(node, yaml.MappingNode):
        for key, value in node.value:
            _line_map(value, path + (str(key.value),), out)
    elif isinstance(node, yaml.SequenceNode):
        for i, value in enumerate(node.value):
            _line_map(value, path + (str(i),), out)
    return out


class _Ctx:
    def __init__(self, lines, source):
        self.lines = lines
        self.source = source

    def error(self, message, path):
        line = None
        for k in range(len(path), -1, -1):
            if tuple(path[:k]) in self.lines:
                line = self.lines[tuple(path[:k])]
                break
        raise ConfigError(message, ".".join(map(str, path)), line, self.source)


def _is_number(x):
    return isinstance(x, (int, float)) and not isinstance(x, bool)


def _coerce(kind, value, ctx, path):
    if kind == "int":
        if isinstance(value, bool) or not isinstance(value, int):
            ctx.error(f"expected an integer, got {value!r}", path)
        return value
    if kind == "float":
        if not _is_number(value):
            ctx.error(f"expected a number, got {value!r}", path)
        return float(value)
    if kind == "str":
        if not isinstance(value, str):
            ctx.error(f"expected text, got {value!r}", path)
        return value
    if kind == "eta":
        if value == "auto":
            return "auto"
        if not _is_number(value) or value < 0:
            ctx.error(f"expected a non-negative number or 'auto', got {value!r}", path)
        return float(value)
    if kind in ("floats", "pair"):
        if not isinstance(value, list) or not value or not all(_is_number(v) for v in value):
            ctx.error(f"expected a non-empty list of numbers, got {value!r}", path)
        if kind == "pair" and len(value) != 2:
            ctx.error("expected [low, high]", path)
        return [float(v) for v in value]
    if kind == "strs":
        if isinstance(value, str):
            value = [v.strip() for v in value.split(",") if v.strip()]
        if not isinstance(value, list) or not all(isinstance(v, str) for v in value):
            ctx.error(f"expected a list of names, got {value!r}", path)
        return value
    if kind in ("value", "ivalue"):
        integral = kind == "ivalue"
        ok = (lambda v: isinstance(v, int) and not isinstance(v, bool)) if integral else _is_number
        if ok(value):
            return value if integral else float(value)
        if isinstance(value, list) and len(value) == 2 and all(ok(v) for v in value):
            lo, hi = value
            if hi < lo:
                ctx.error(f"range [{lo}, {hi}] is reversed", path)
            return (lo, hi) if integral else (float(lo), float(hi))
        what = "an integer" if integral else "a number"
        ctx.error(f"expected {what} or a [low, high] range, got {value!r}", path)
    raise AssertionError(kind)


def _section(doc, name, schema, ctx, path=()):
    raw = doc.get(name, {}) if name else doc
    if raw is None:
        raw = {}
    if not isinstance(raw, dict):
        ctx.error("expected a mapping", path + ((name,) if name else ()))
    base = path + ((name,) if name else ())
    out = {}
    for key, (kind, default) in schema.items():
        if key in raw:
            out[key] = _coerce(kind, raw[key], ctx, base + (key,))
        elif default is REQUIRED:
            ctx.error("missing required field", base + (key,))
        else:
            out[key] = copy.deepcopy(default)
    unknown = set(raw) - set(schema)
    if name and unknown:
        key = sorted(unknown)[0]
        ctx.error("unknown field", base + (key,))
    return out


def _entities(doc, name, schema, ctx):
    raw = doc.get(name, REQUIRED)
    if raw is REQUIRED:
        ctx.error("missing required field", (name,))
    if raw is None:
        return []
    if isinstance(raw, dict):
        count = raw.get("count", 1)
        if isinstance(count, bool) or not isinstance(count, int) or count < 0:
            ctx.error(f"expected a non-negative integer, got {count!r}", (name, "count"))
        body = {k: v for k, v in raw.items() if k != "count"}
        spec = _section({name: body}, name, schema, ctx)
        return [dict(spec) for _ in range(count)]
    if isinstance(raw, list):
        return [_section({name: item}, name, schema, ctx, ()) if isinstance(item, dict)
                else ctx.error("expected a mapping", (name, i)) for i, item in enumerate(raw)]
    ctx.error("expected a mapping with 'count' or a list", (name,))


def apply_overrides(doc, overrides):
    """Set dotted keys on a raw document; 'users.x' applies to every user."""
    doc = copy.deepcopy(doc)
    for dotted, value in overrides.items():
        parts = dotted.split(".")
        head = parts[0]
        if head in ("users", "targets") and len(parts) == 2:
            block = doc.get(head)
            if isinstance(block, list):
                for item in block:
                    item[parts[1]] = value
            else:
                doc.setdefault(head, {})
                doc[head][parts[1]] = value
            continue
        node = doc
        for p in parts[:-1]:
            node = node.setdefault(p, {})
        node[parts[-1]] = value
    return doc


# ------------------------------------------------------------------- config


@dataclass
class ScenarioConfig:
    name: str
    document: dict
    array: ArrayConfig
    tx_grid: BeamGrid
    rx_grid: BeamGrid
    users: list
    targets: list
    uncertainty: dict
    eta1: float
    eta2: float | str
    eta2_resolved: float
    delta0: float
    delta_omega: float
    horizon: int
    slot_duration: float
    sigma_com_dbm: float
    sigma_sen_dbm: float
    realizations: int
    seed: int
    schemes: list
    sweeps: list = field(default_factory=list)
    variants: list = field(default_factory=list)
    grid: dict | None = None
    desk: dict = field(default_factory=dict)
    warnings: list = field(default_factory=list)
    source: str | None = None
    lines: dict = field(default_factory=dict, repr=False)

    @property
    def sigma_com2(self):
        return dbm_to_watts(self.sigma_com_dbm)

    @property
    def sigma_sen2(self):
        return dbm_to_watts(self.sigma_sen_dbm)

    def with_overrides(self, overrides) -> "ScenarioConfig":
        if not overrides:
            return self
        return parse_document(apply_overrides(self.document, overrides), self.source, self.lines, warn=False)

    def desk_scale(self) -> "ScenarioConfig":
        return self.with_overrides(self.desk)

    def variant_overrides(self):
        """(label, overrides) for every run of this preset, in a stable order.

        Named variants and sweep combinations multiply when both are given.
        """
        combos = []
        for block in self.sweeps:
            keys = sorted(block)
            for values in itertools.product(*(block[k] for k in keys)):
                over = dict(zip(keys, values))
                combos.append((",".join(f"{k}={v}" for k, v in over.items()), over))
        named = [(item["name"], dict(item.get("overrides") or {})) for item in self.variants]
        if named and combos:
            return [(f"{n}|{c}", {**no, **co}) for n, no in named for c, co in combos]
        return named or combos or [("base", {})]


def _codebook_grid(cb, array, side):
    lo, hi = cb["direction_range_deg"]
    dirs = tuple(np.linspace(lo, hi, cb["n_directions"])) if cb["n_directions"] > 1 else ((lo + hi) / 2,)
    widths = cb[f"{side}_beamwidths_deg"]
    sizes = default_active_sizes(array, side)
    if len(widths) > len(sizes):
        raise ValueError(f"at most {len(sizes)} {side} beamwidth classes are supported")
    return BeamGrid(dirs, tuple(widths), tuple(cb[f"{side}_power_levels_w"]), sizes[: len(widths)])


def _check_blocks(doc, ctx):
    out = {}
    sweeps = doc.get("sweeps") or []
    if not isinstance(sweeps, list):
        ctx.error("expected a list of {dotted.key: [values]} blocks", ("sweeps",))
    for i, block in enumerate(sweeps):
        if not isinstance(block, dict) or not all(isinstance(v, list) and v for v in block.values()):
            ctx.error("each sweep maps dotted keys to non-empty value lists", ("sweeps", str(i)))
    out["sweeps"] = sweeps
    variants = doc.get("variants") or []
    if not isinstance(variants, list):
        ctx.error("expected a list of {name, overrides}", ("variants",))
    for i, item in enumerate(variants):
        if not isinstance(item, dict) or "name" not in item:
            ctx.error("each variant needs a name", ("variants", str(i)))
    out["variants"] = variants
    grid = doc.get("grid")
    if grid is not None:
        if not isinstance(grid, dict) or "axes" not in grid:
            ctx.error("grid needs an 'axes' mapping", ("grid",))
        axes = grid["axes"]
        if not isinstance(axes, dict) or len(axes) != 2:
            ctx.error("grid needs exactly two axes", ("grid", "axes"))
        for k, v in axes.items():
            if not (isinstance(v, list) and len(v) == 3 and _is_number(v[0]) and _is_number(v[1])
                    and isinstance(v[2], int) and v[2] >= 1):
                ctx.error("axis must be [start, stop, points]", ("grid", "axes", k))
        horizons = grid.get("horizons", [doc.get("horizon")])
        if not isinstance(horizons, list) or not all(isinstance(h, int) and h >= 1 for h in horizons):
            ctx.error("horizons must be a list of positive integers", ("grid", "horizons"))
    out["grid"] = grid
    desk = doc.get("desk") or {}
    if not isinstance(desk, dict):
        ctx.error("expected a mapping of dotted keys", ("desk",))
    out["desk"] = desk
    return out


def parse_document(doc, source=None, lines=None, warn=True) -> ScenarioConfig:
    ctx = _Ctx(lines or {}, source)
    if not isinstance(doc, dict):
        ctx.error("top level must be a mapping", ())
    allowed = set(TOP_LEVEL) | set(SECTIONS) | {"users", "targets"} | set(OPTIONAL_BLOCKS)
    unknown = sorted(set(doc) - allowed)
    if unknown:
        ctx.error("unknown field", (unknown[0],))
    top = _section(doc, None, TOP_LEVEL, ctx)
    if top["schema_version"] != SCHEMA_VERSION:
        ctx.error(f"schema version {top['schema_version']} is not supported (expected {SCHEMA_VERSION})",
                  ("schema_version",))
    sec = {name: _section(doc, name, schema, ctx) for name, schema in SECTIONS.items()}
    users = _entities(doc, "users", USER_FIELDS, ctx)
    targets = _entities(doc, "targets", TARGET_FIELDS, ctx)
    if not users and not targets:
        ctx.error("at least one user or target is required", ("users",))
    if top["horizon"] < 1:
        ctx.error("must be at least 1", ("horizon",))
    if top["realizations"] < 1:
        ctx.error("must be at least 1", ("realizations",))
    for i, scheme in enumerate(top["schemes"]):
        if scheme.lower() not in SCHEMES:
            ctx.error(f"unknown scheme {scheme!r}; choose from {', '.join(SCHEMES)}", ("schemes", str(i)))
    blocks = _check_blocks(doc, ctx)

    a = sec["array"]
    try:
        array = ArrayConfig(
            a["n_tx"], a["n_rx"], a["spacing_tx_wl"], a["spacing_rx_wl"], SPEED_OF_LIGHT / a["carrier_hz"],
            a["coupling_tx"], a["coupling_rx"], a["center_sep_m"],
        )
    except ValueError as exc:
        ctx.error(str(exc), ("array",))
    try:
        tx_grid = _codebook_grid(sec["codebook"], array, "tx")
        rx_grid = _codebook_grid(sec["codebook"], array, "rx")
    except ValueError as exc:
        ctx.error(str(exc), ("codebook",))
    unc = sec["uncertainty"]
    for key, value in unc.items():
        if value < 0:
            ctx.error("must be non-negative", ("uncertainty", key))
    if unc["upsilon"] > 1:
        ctx.error("must lie in [0, 1]", ("uncertainty", "upsilon"))
    for kind, items, positive in (("users", users, ("snr_min",)), ("targets", targets, ("sinr_min", "psi_bar"))):
        for i, item in enumerate(items):
            for key in positive:
                lo = item[key][0] if isinstance(item[key], tuple) else item[key]
                if lo <= 0:
                    ctx.error("must be positive", (kind, key))
    obj = sec["objective"]
    if obj["delta0"] <= 0 or obj["delta_omega"] <= 0:
        ctx.error("slot weight parameters must be positive", ("objective",))

    horizon = top["horizon"]
    eta2_resolved = obj["eta2"]
    if obj["eta2"] == "auto":
        eta2_resolved = 1.01 * priority_eta2_threshold(
            obj["eta1"], horizon, max(tx_grid.power_levels_w), max(rx_grid.power_levels_w), obj["delta0"]
        )

    notes = []
    low = lambda v: v[0] if isinstance(v, tuple) else v  # noqa: E731
    high = lambda v: v[1] if isinstance(v, tuple) else v  # noqa: E731
    s_bar = max(sum(low(u["s_com"]) for u in users), sum(low(t["s_sen"]) for t in targets))
    s_tilde = sum(high(u["s_com"]) for u in users) + sum(high(t["s_sen"]) for t in targets)
    if horizon < s_bar:
        notes.append(f"horizon {horizon} is below the {s_bar} slots every schedule needs")
    elif horizon > s_tilde:
        notes.append(f"horizon {horizon} exceeds the {s_tilde} slots any schedule can use")
    if warn:
        for note in notes:
            warnings.warn(note, stacklevel=3)

    return ScenarioConfig(
        name=top["name"],
        document=doc,
        array=array,
        tx_grid=tx_grid,
        rx_grid=rx_grid,
        users=users,
        targets=targets,
        uncertainty=unc,
        eta1=obj["eta1"],
        eta2=obj["eta2"],
        eta2_resolved=float(eta2_resolved),
        delta0=obj["delta0"],
        delta_omega=obj["delta_omega"],
        horizon=horizon,
        slot_duration=top["slot_duration_s"],
        sigma_com_dbm=sec["noise"]["sigma_com_dbm"],
        sigma_sen_dbm=sec["noise"]["sigma_sen_dbm"],
        realizations=top["realizations"],
        seed=top["seed"],
        schemes=[s.lower() for s in top["schemes"]],
        warnings=notes,
        source=source,
        lines=lines or {},
        **blocks,
    )


class _Loader(yaml.SafeLoader):
    """Safe loader that also reads 1e9 and 1.0e9 as floats, as YAML 1.2 does."""


_Loader.add_implicit_resolver(
    "tag:yaml.org,2002:float",
    re.compile(
        r"""^(?:[-+]?(?:[0-9][0-9_]*)\.[0-9_]*(?:[eE][-+]?[0-9]+)?
        |[-+]?(?:[0-9][0-9_]*)(?:[eE][-+]?[0-9]+)
        |\.[0-9_]+(?:[eE][-+]?[0-9]+)?
        |[-+]?\.(?:inf|Inf|INF)
        |\.(?:nan|NaN|NAN))$""",
        re.X,
    ),
    list("-+0123456789."),
)


def parse_text(text, source=None, warn=True) -> ScenarioConfig:
    try:
        node = yaml.compose(text, Loader=_Loader)
        doc = yaml.load(text, Loader=_Loader)
    except yaml.YAMLError as exc:
        mark = getattr(exc, "problem_mark", None)
        raise ConfigError(f"parse error: {getattr(exc, 'problem', exc)}", line=mark.line + 1 if mark else None,
                          source=source) from exc
    lines = _line_map(node) if node is not None else {}
    return parse_document(doc if doc is not None else {}, source, lines, warn)


def load_scenario(path, warn=True) -> ScenarioConfig:
    path = Path(path)
    if not path.exists():
        raise FileNotFoundError(f"no scenario file at {path}")
    return parse_text(path.read_text(), str(path), warn)


def bundled_names():
    return ("I", "II", "III", "IV", "V", "VI", "VII", "VIII")


def bundled_path(name):
    name = name.upper()
    if name not in bundled_names():
        raise ValueError(f"no bundled scenario {name!r}")
    return resources.files("isacrrm.harness") / "scenarios" / f"scenario_{name}.cfg"


def bundled_scenario(name, warn=True) -> ScenarioConfig:
    path = bundled_path(name)
    return parse_text(path.read_text(), f"scenario_{name.upper()}.cfg", warn)


# -------------------------------------------------------------------- draws

_CODEBOOKS = {}


def codebooks_for(config: ScenarioConfig):
    key = (config.array, config.tx_grid, config.rx_grid)
    if key not in _CODEBOOKS:
        _CODEBOOKS[key] = (
            build_codebook(config.array, "tx", config.tx_grid),
            build_codebook(config.array, "rx", config.rx_grid),
        )
    return _CODEBOOKS[key]


def _sample(rng, value):
    if isinstance(value, tuple):
        lo, hi = value
        if isinstance(lo, int):
            return int(rng.integers(lo, hi + 1))
        return float(rng.uniform(lo, hi))
    return value


def realization_rng(config: ScenarioConfig, realization: int):
    return np.random.default_rng(np.random.SeedSequence([config.seed, realization]))


def draw_scenario(config: ScenarioConfig, rng) -> Scenario:
    """One problem instance; ranges are sampled uniformly from `rng`."""
    tx_book, rx_book = codebooks_for(config)
    arr = config.array
    users = []
    for spec in config.users:
        beta = _sample(rng, spec["beta_deg"])
        dist = _sample(rng, spec["distance_m"])
        k = _sample(rng, spec["rician_k"])
        channel = generate_user_channel(rng, arr, beta, dist, k)
        users.append(User(channel.h, _sample(rng, spec["snr_min"]), _sample(rng, spec["s_com"]), beta, dist))
    unc = config.uncertainty
    targets = []
    for spec in config.targets:
        psi = _sample(rng, spec["psi_bar"])
        targets.append(Target(
            _sample(rng, spec["theta_deg"]), complex(psi), _sample(rng, spec["sinr_min"]),
            _sample(rng, spec["s_sen"]), unc["eps_rc_ratio"] * abs(psi),
        ))
    sigma_com2 = config.sigma_com2
    eps_rsi = 0.0
    if unc["eps_rsi_ratio"]:
        eps_rsi = unc["eps_rsi_ratio"] * float(np.linalg.norm(nominal_rsi(arr).r_bar_matrix))
    uncertainty = UncertaintyConfig(
        eps_csi=unc["eps_csi_ratio"] * math.sqrt(sigma_com2),
        eps_aod_rad=math.radians(unc["eps_aod_deg"]),
        eps_rc=0.0,
        eps_rsi=eps_rsi,
        upsilon=unc["upsilon"],
    )
    return Scenario(
        arr, tx_book, rx_book, users, targets, config.horizon, uncertainty, sigma_com2, config.sigma_sen2,
        config.slot_duration, config.eta1, config.eta2_resolved, config.delta0, config.delta_omega,
    )
