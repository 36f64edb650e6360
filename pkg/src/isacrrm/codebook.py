"""Discrete analog beam menus over direction x beamwidth x power grids."""

from __future__ import annotations

import json
from dataclasses import dataclass
from functools import cached_property

import numpy as np

from .physmodel import ArrayConfig, steering_vector, _pick

# Nominal half-power widths (deg) and the active-subarray size realizing each.
TX_BEAMWIDTHS_DEG = (13.0, 26.0, 60.0)
RX_BEAMWIDTHS_DEG = (6.0, 13.0, 26.0)


def default_active_sizes(config: ArrayConfig, side: str) -> tuple:
    n = config.size(side)
    return (n, max(n // 2, 1), max(n // 4, 1))


@dataclass(frozen=True)
class BeamGrid:
    directions_deg: tuple
    beamwidth_classes_deg: tuple
    power_levels_w: tuple
    active_sizes: tuple

    def __post_init__(self):
        dirs = tuple(float(x) for x in self.directions_deg)
        widths = tuple(float(x) for x in self.beamwidth_classes_deg)
        powers = tuple(float(x) for x in self.power_levels_w)
        sizes = tuple(int(x) for x in self.active_sizes)
        if not dirs or not widths or not powers:
            raise ValueError("beam grid lists must be non-empty")
        if any(b <= a for a, b in zip(dirs, dirs[1:])):
            raise ValueError("directions must be strictly increasing")
        if any(b <= a for a, b in zip(powers, powers[1:])):
            raise ValueError("power levels must be strictly increasing")
        if powers[0] <= 0:
            raise ValueError("power levels must be positive")
        if len(sizes) != len(widths):
            raise ValueError("one active-subarray size is needed per beamwidth class")
        object.__setattr__(self, "directions_deg", dirs)
        object.__setattr__(self, "beamwidth_classes_deg", widths)
        object.__setattr__(self, "power_levels_w", powers)
        object.__setattr__(self, "active_sizes", sizes)

    @property
    def shape(self):
        return len(self.directions_deg), len(self.beamwidth_classes_deg), len(self.power_levels_w)

    def __len__(self):
        d, b, p = self.shape
        return d * b * p

    def flat_index(self, i: int, j: int, k: int) -> int:
        d, b, p = self.shape
        if not (0 <= i < d and 0 <= j < b and 0 <= k < p):
            raise IndexError((i, j, k))
        return (i * b + j) * p + k

    def unflatten(self, flat: int):
        d, b, p = self.shape
        if not 0 <= flat < d * b * p:
            raise IndexError(flat)
        ij, k = divmod(flat, p)
        i, j = divmod(ij, b)
        return i, j, k


def default_grid(config: ArrayConfig, side: str, n_directions: int = 19) -> BeamGrid:
    """Direction grid over 45..135 deg; tx powers 0.1..1 W, rx fixed at 0.1 W."""
    directions = tuple(np.linspace(45.0, 135.0, n_directions))
    widths = _pick(side, TX_BEAMWIDTHS_DEG, RX_BEAMWIDTHS_DEG)
    powers = tuple(np.round(np.arange(1, 11) * 0.1, 10)) if side == "tx" else (0.1,)
    return BeamGrid(directions, widths, powers, default_active_sizes(config, side))


@dataclass(frozen=True)
class Codeword:
    vector: np.ndarray
    energy_w: float
    side: str
    direction_index: int
    beamwidth_index: int
    power_index: int
    flat_index: int

    @property
    def spec(self):
        return (self.side, self.direction_index, self.beamwidth_index, self.power_index)


def synthesize_beam(
    config: ArrayConfig,
    side: str,
    direction_deg: float,
    beamwidth_class_index: int,
    power_w: float,
    active_sizes=None,
) -> np.ndarray:
    """Center-aligned contiguous subarray steered to direction_deg, energy power_w."""
    n = config.size(side)
    sizes = active_sizes if active_sizes is not None else default_active_sizes(config, side)
    if not 0 <= beamwidth_class_index < len(sizes):
        raise ValueError(f"invalid beamwidth class index {beamwidth_class_index}")
    if power_w <= 0:
        raise ValueError("power must be positive")
    n_act = sizes[beamwidth_class_index]
    if not 1 <= n_act <= n:
        raise ValueError(f"active subarray size {n_act} does not fit {n} elements")
    start = (n - n_act) // 2
    full = steering_vector(config, side, direction_deg) * np.sqrt(n)
    v = np.zeros(n, dtype=complex)
    v[start : start + n_act] = full[start : start + n_act]
    v /= np.linalg.norm(v)
    return v * np.sqrt(power_w)


@dataclass(frozen=True)
class Codebook:
    side: str
    grid: BeamGrid
    codewords: tuple

    def __len__(self):
        return len(self.codewords)

    def __getitem__(self, flat):
        return self.codewords[flat]

    @cached_property
    def matrix(self) -> np.ndarray:
        """Codewords as columns (N_side x L)."""
        return np.column_stack([cw.vector for cw in self.codewords])

    @cached_property
    def energies(self) -> np.ndarray:
        return np.array([cw.energy_w for cw in self.codewords])

    @property
    def max_power(self) -> float:
        return max(self.grid.power_levels_w)

    def subset(self, keep) -> "Codebook":
        """Codebook restricted to flat indices in `keep`; flat indices are preserved."""
        keep = set(keep)
        return _SubCodebook(self, tuple(cw for cw in self.codewords if cw.flat_index in keep))

    def dump(self, path) -> None:
        rows = [
            {
                "flat_index": cw.flat_index,
                "side": cw.side,
                "direction_deg": self.grid.directions_deg[cw.direction_index],
                "beamwidth_deg": self.grid.beamwidth_classes_deg[cw.beamwidth_index],
                "power_w": self.grid.power_levels_w[cw.power_index],
                "energy_w": cw.energy_w,
                "vector": [[float(z.real), float(z.imag)] for z in cw.vector],
            }
            for cw in self.codewords
        ]
        with open(path, "w") as fh:
            json.dump({"side": self.side, "codewords": rows}, fh, indent=1)


class _SubCodebook(Codebook):
    def __init__(self, parent: Codebook, codewords: tuple):
        object.__setattr__(self, "side", parent.side)
        object.__setattr__(self, "grid", parent.grid)
        object.__setattr__(self, "codewords", codewords)

    def __getitem__(self, flat):
        for cw in self.codewords:
            if cw.flat_index == flat:
                return cw
        raise KeyError(flat)


def build_codebook(config: ArrayConfig, side: str, grid: BeamGrid) -> Codebook:
    words = []
    for i, direction in enumerate(grid.directions_deg):
        for j in range(len(grid.beamwidth_classes_deg)):
            unit = synthesize_beam(config, side, direction, j, 1.0, grid.active_sizes)
            for k, power in enumerate(grid.power_levels_w):
                vec = unit * np.sqrt(power)
                vec.setflags(write=False)
                words.append(Codeword(vec, float(power), side, i, j, k, grid.flat_index(i, j, k)))
    return Codebook(side, grid, tuple(words))


def beamwidth_of(vector: np.ndarray, config: ArrayConfig, side: str, resolution_deg: float = 0.05) -> float:
    """Half-power width (deg) of the main lobe of |a(theta)^H v|^2."""
    v = np.asarray(vector)
    if not np.any(v):
        raise ValueError("zero codeword has no main lobe")
    thetas = np.arange(resolution_deg, 180.0, resolution_deg)
    phi = _pick(side, config.steering.phi_tx, config.steering.phi_rx)
    steer = np.exp(1j * np.outer(np.cos(np.deg2rad(thetas)), phi)) / np.sqrt(phi.size)
    pattern = np.abs(steer.conj() @ v) ** 2
    peak = int(np.argmax(pattern))
    if pattern.max() - pattern.min() <= 1e-12 * pattern.max():
        raise ValueError("flat pattern: main lobe undefined")
    half = pattern[peak] / 2.0
    lo = peak
    while lo > 0 and pattern[lo - 1] >= half:
        lo -= 1
    hi = peak
    while hi < pattern.size - 1 and pattern[hi + 1] >= half:
        hi += 1
    return float((hi - lo + 1) * resolution_deg)
