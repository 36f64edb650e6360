"""Array and channel mathematics: steering vectors, response matrices,
mutual coupling, nominal residual self-interference and user channels."""

from __future__ import annotations

from dataclasses import dataclass, field
from functools import cached_property

import numpy as np

SPEED_OF_LIGHT = 299_792_458.0
CARRIER_HZ = 41e9


class GeometryError(ValueError):
    """Array placement that puts a receive element on a transmit element."""


@dataclass(frozen=True)
class ArrayConfig:
    n_tx: int = 8
    n_rx: int = 16
    spacing_tx: float = 0.5  # in wavelengths
    spacing_rx: float = 0.5
    wavelength: float = SPEED_OF_LIGHT / CARRIER_HZ
    coupling_tx: float = 0.0
    coupling_rx: float = 0.0
    array_center_sep: float = 0.2  # meters

    def __post_init__(self):
        if int(self.n_tx) < 1 or int(self.n_rx) < 1:
            raise ValueError("array sizes must be positive")
        if self.spacing_tx <= 0 or self.spacing_rx <= 0:
            raise ValueError("antenna spacing must be positive")
        if abs(self.coupling_tx) >= 1 or abs(self.coupling_rx) >= 1:
            raise ValueError("coupling strength must satisfy |delta| < 1")
        if self.wavelength <= 0:
            raise ValueError("wavelength must be positive")
        if self.array_center_sep < 0:
            raise ValueError("array separation must be non-negative")

    def size(self, side: str) -> int:
        return _pick(side, self.n_tx, self.n_rx)

    @cached_property
    def steering(self) -> "SteeringContext":
        return SteeringContext.from_config(self)

    @cached_property
    def z_tx(self) -> np.ndarray:
        return coupling_matrix(self.n_tx, self.coupling_tx)

    @cached_property
    def z_rx(self) -> np.ndarray:
        return coupling_matrix(self.n_rx, self.coupling_rx)


def _pick(side, tx_value, rx_value):
    if side == "tx":
        return tx_value
    if side == "rx":
        return rx_value
    raise ValueError(f"side must be 'tx' or 'rx', got {side!r}")


def element_phases(n: int, spacing_wl: float) -> np.ndarray:
    """Per-element phase progression 2*pi*d/lambda * [-(n-1)/2 .. (n-1)/2]."""
    return 2.0 * np.pi * spacing_wl * (np.arange(n) - (n - 1) / 2.0)


@dataclass(frozen=True)
class SteeringContext:
    phi_tx: np.ndarray
    phi_rx: np.ndarray
    phi_matrix: np.ndarray = field(repr=False)

    @classmethod
    def from_config(cls, config: ArrayConfig) -> "SteeringContext":
        phi_tx = element_phases(config.n_tx, config.spacing_tx)
        phi_rx = element_phases(config.n_rx, config.spacing_rx)
        # phi_matrix[m, n] = phi_rx[m] - phi_tx[n]
        phi_matrix = np.kron(np.ones((1, config.n_tx)), phi_rx[:, None]) - np.kron(
            np.ones((config.n_rx, 1)), phi_tx[None, :]
        )
        for arr in (phi_tx, phi_rx, phi_matrix):
            arr.setflags(write=False)
        return cls(phi_tx, phi_rx, phi_matrix)


def steering_vector(config: ArrayConfig, side: str, theta_deg: float) -> np.ndarray:
    phi = _pick(side, config.steering.phi_tx, config.steering.phi_rx)
    theta = np.deg2rad(theta_deg)
    return np.exp(1j * phi * np.cos(theta)) / np.sqrt(phi.size)


def steering_matrix(config: ArrayConfig, side: str, thetas_deg) -> np.ndarray:
    """Steering vectors stacked as columns, one per angle."""
    phi = _pick(side, config.steering.phi_tx, config.steering.phi_rx)
    cos_t = np.cos(np.deg2rad(np.asarray(thetas_deg, dtype=float)))
    return np.exp(1j * np.outer(phi, cos_t)) / np.sqrt(phi.size)


def response_matrix(config: ArrayConfig, theta_deg: float) -> np.ndarray:
    a_rx = steering_vector(config, "rx", theta_deg)
    a_tx = steering_vector(config, "tx", theta_deg)
    return np.outer(a_rx, a_tx.conj())


def linearized_response(config: ArrayConfig, theta_bar_deg: float):
    """Return (A, A_tilde) with A(theta + d) ~= A + A_tilde * d, d in radians."""
    phi = config.steering.phi_matrix
    theta = np.deg2rad(theta_bar_deg)
    a = np.exp(1j * phi * np.cos(theta)) / np.sqrt(config.n_rx * config.n_tx)
    a_tilde = a * (-1j * phi * np.sin(theta))
    return a, a_tilde


def coupling_matrix(n: int, delta: float) -> np.ndarray:
    if n < 1:
        raise ValueError("coupling matrix size must be positive")
    z = np.eye(n, dtype=complex)
    idx = np.arange(n - 1)
    z[idx, idx + 1] = delta
    z[idx + 1, idx] = delta
    return z


@dataclass(frozen=True)
class NominalRsi:
    r_bar_matrix: np.ndarray
    r_bar_vec: np.ndarray


def element_positions(config: ArrayConfig):
    """Axial positions (m) of tx and rx elements; both arrays on one line."""
    lam = config.wavelength
    tx = (np.arange(config.n_tx) - (config.n_tx - 1) / 2.0) * config.spacing_tx * lam
    rx = (np.arange(config.n_rx) - (config.n_rx - 1) / 2.0) * config.spacing_rx * lam
    return tx, rx + config.array_center_sep


def nominal_rsi(config: ArrayConfig) -> NominalRsi:
    lam = config.wavelength
    tx_pos, rx_pos = element_positions(config)
    dist = np.abs(rx_pos[:, None] - tx_pos[None, :])
    if np.any(dist <= 1e-12 * lam):
        raise GeometryError(
            f"array separation {config.array_center_sep} m makes a receive element "
            "coincide with a transmit element"
        )
    scale = 1.0 / np.sqrt(config.n_rx * config.n_tx)
    r_bar = lam / (4 * np.pi * dist) * scale * np.exp(-2j * np.pi * dist / lam)
    return NominalRsi(r_bar, r_bar.reshape(-1, order="F"))


def pathloss_db(r_m: float, fc_ghz: float) -> float:
    if r_m <= 0 or fc_ghz <= 0:
        raise ValueError("distance and carrier frequency must be positive")
    return 28.0 + 22.0 * np.log10(r_m) + 20.0 * np.log10(fc_ghz)


@dataclass(frozen=True)
class ChannelRealization:
    h: np.ndarray
    pathloss_db: float
    los_angle_deg: float
    rician_k: float
    distance_m: float


def generate_user_channel(
    rng: np.random.Generator,
    config: ArrayConfig,
    beta_deg: float,
    r_m: float,
    k_factor: float = 100.0,
) -> ChannelRealization:
    fc_ghz = SPEED_OF_LIGHT / config.wavelength / 1e9
    pl = pathloss_db(r_m, fc_ghz)
    amplitude = 10.0 ** (-pl / 20.0)
    los = steering_vector(config, "tx", beta_deg)
    nlos = (rng.standard_normal(config.n_tx) + 1j * rng.standard_normal(config.n_tx)) / np.sqrt(2)
    h = amplitude * (np.sqrt(k_factor / (k_factor + 1)) * los + np.sqrt(1 / (k_factor + 1)) * nlos)
    return ChannelRealization(h, pl, beta_deg, k_factor, r_m)


def dbm_to_watts(dbm: float) -> float:
    return 10.0 ** ((dbm - 30.0) / 10.0)
