"""Problem instance: users, targets, uncertainty budgets, weights and beam menus."""

from __future__ import annotations

from dataclasses import dataclass, field, replace
from functools import cached_property

import numpy as np

from .codebook import Codebook
from .physmodel import ArrayConfig, NominalRsi, nominal_rsi


@dataclass(frozen=True)
class User:
    h_bar: np.ndarray
    snr_min: float
    s_com: int
    beta_deg: float = 90.0
    distance_m: float = 50.0


@dataclass(frozen=True)
class Target:
    theta_deg: float
    psi_bar: complex
    sinr_min: float
    s_sen: int
    eps_rc: float | None = None  # overrides the shared reflection-coefficient radius

    def rc_radius(self, uncertainty) -> float:
        return uncertainty.eps_rc if self.eps_rc is None else self.eps_rc


@dataclass(frozen=True)
class UncertaintyConfig:
    eps_csi: float = 0.0
    eps_aod_rad: float = 0.0
    eps_rc: float = 0.0
    eps_rsi: float = 0.0
    upsilon: float = 0.0

    def __post_init__(self):
        for name in ("eps_csi", "eps_aod_rad", "eps_rc", "eps_rsi", "upsilon"):
            if getattr(self, name) < 0:
                raise ValueError(f"{name} must be non-negative")
        if self.upsilon > 1:
            raise ValueError("upsilon must lie in [0, 1]")


@dataclass(frozen=True)
class Scenario:
    array: ArrayConfig
    tx_codebook: Codebook
    rx_codebook: Codebook
    users: tuple
    targets: tuple
    horizon: int
    uncertainty: UncertaintyConfig = field(default_factory=UncertaintyConfig)
    sigma_com2: float = 1e-14
    sigma_sen2: float = 1e-10
    slot_duration: float = 1e-3
    eta1: float = 1.0
    eta2: float = 1.0
    delta0: float = 2.0
    delta_omega: float = 2.0

    def __post_init__(self):
        object.__setattr__(self, "users", tuple(self.users))
        object.__setattr__(self, "targets", tuple(self.targets))
        if self.horizon < 1:
            raise ValueError("horizon must be at least one slot")
        if self.sigma_com2 <= 0 or self.sigma_sen2 <= 0:
            raise ValueError("noise powers must be positive")
        if self.delta0 <= 0 or self.delta_omega <= 0:
            raise ValueError("slot weight parameters must be positive")

    def with_(self, **changes) -> "Scenario":
        return replace(self, **changes)

    @property
    def n_users(self):
        return len(self.users)

    @property
    def n_targets(self):
        return len(self.targets)

    @property
    def total_com(self):
        return sum(u.s_com for u in self.users)

    @property
    def total_sen(self):
        return sum(t.s_sen for t in self.targets)

    @property
    def min_horizon(self):
        """Fewest slots that can hold all demands (full pairing)."""
        return max(self.total_com, self.total_sen)

    @property
    def max_horizon(self):
        """Slots needed when nothing is paired."""
        return self.total_com + self.total_sen

    @cached_property
    def rsi(self):
        if self.uncertainty.upsilon == 0:
            n = self.array.n_rx * self.array.n_tx
            zeros = np.zeros((self.array.n_rx, self.array.n_tx), dtype=complex)
            return NominalRsi(zeros, np.zeros(n, dtype=complex))
        return nominal_rsi(self.array)

    def omega(self, length=None):
        from .solver import design_weights

        return design_weights(length or self.max_horizon, self.delta0, self.delta_omega)
