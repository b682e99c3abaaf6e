"""Closed-form initial conditions used by the scenarios and tests."""
from __future__ import annotations

import numpy as np

from .field_core import Grid, WaveField


def periodic_offset(grid: Grid, center: float) -> np.ndarray:
    """Minimal-image displacement x - center on the periodic box."""
    L = grid.length
    return (grid.x - center + 0.5 * L) % L - 0.5 * L


def gaussian_packet(grid: Grid, center=0.0, sigma=1.0, k=0.0, time=0.0) -> WaveField:
    """Normalized Gaussian whose density has standard deviation ``sigma``."""
    xi = periodic_offset(grid, center)
    amp = (2 * np.pi * sigma ** 2) ** -0.25 * np.exp(-(xi ** 2) / (4 * sigma ** 2))
    return WaveField(grid, amp * np.exp(1j * k * grid.x), time)


def harmonic_ground(grid: Grid, omega: float, center=0.0) -> WaveField:
    sigma = np.sqrt(grid.hbar / (2 * grid.mass * omega))
    return gaussian_packet(grid, center, sigma)


def coherent_state(grid: Grid, omega: float, shift: float, momentum=0.0) -> WaveField:
    """Ground-state Gaussian displaced by ``shift`` and boosted by ``momentum``."""
    sigma = np.sqrt(grid.hbar / (2 * grid.mass * omega))
    return gaussian_packet(grid, shift, sigma, momentum / grid.hbar)


def plane_wave(grid: Grid, mode: int, time=0.0) -> WaveField:
    """Normalized exp(i k x) with k = 2*pi*mode/L (a grid wavenumber)."""
    k = 2 * np.pi * mode / grid.length
    return WaveField(grid, np.exp(1j * k * (grid.x - grid.x0)) / np.sqrt(grid.length), time)


def gausson(grid: Grid, b: float, k=0.0, center=0.0, time=0.0) -> WaveField:
    """Normalized Gaussian soliton of the logarithmic equation.

    |psi|^2 = sqrt(m a / pi) exp(-a m xi^2) with a = 2b/hbar^2, i.e. the
    amplitude decays as exp(-(B/4) xi^2) with B = 4 m b / hbar^2.
    """
    m, hbar = grid.mass, grid.hbar
    B = 4 * m * b / hbar ** 2
    a = 2 * b / hbar ** 2
    xi = periodic_offset(grid, center)
    amp = (m * a / np.pi) ** 0.25 * np.exp(-(B / 4) * xi ** 2)
    return WaveField(grid, amp * np.exp(1j * k * grid.x), time)


def gausson_density(grid: Grid, b: float, center: float) -> np.ndarray:
    a = 2 * b / grid.hbar ** 2
    m = grid.mass
    return np.sqrt(m * a / np.pi) * np.exp(-a * m * periodic_offset(grid, center) ** 2)


def superposition(*fields: WaveField) -> WaveField:
    total = sum(f.values for f in fields)
    return WaveField(fields[0].grid, total, fields[0].time).normalized()
