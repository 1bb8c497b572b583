"""Closed-form cooperative decay rates used as validation oracles.

Covers two parallel dipoles in vacuum, two z-oriented dipoles between ideal
conductor plates (including the R = 0 local-rate special case), and an exact
Lorentzian Hilbert-transform pair for testing the principal-value module.

Frequencies are quoted in cycles per reference length (the unit
2*pi*c/L); angular quantities are formed internally where needed.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np
from scipy.special import j0

from .errors import InvalidArgumentError


@dataclass(frozen=True)
class PlanarConfig:
    """Two dipoles between conductor plates: gap, heights, in-plane separation,
    and the evaluation wavelength."""

    plate_gap: float
    z1: float
    z2: float
    separation: float
    wavelength: float

    def __post_init__(self):
        if self.wavelength <= 0:
            raise InvalidArgumentError("wavelength must be positive")
        if not (0 < self.z1 < self.plate_gap and 0 < self.z2 < self.plate_gap):
            raise InvalidArgumentError("dipole heights must lie strictly between the plates")
        if self.separation < 0:
            raise InvalidArgumentError("separation must be non-negative")


def _vacuum_bracket(x):
    """sin x / x + cos x / x^2 - sin x / x^3, with its x -> 0 series limit."""
    x = np.asarray(x, dtype=float)
    small = np.abs(x) < 1e-3
    xs = np.where(small, 1.0, x)
    direct = np.sin(xs) / xs + np.cos(xs) / xs**2 - np.sin(xs) / xs**3
    series = 2.0 / 3.0 - x**2 / 15.0 + x**4 / 280.0
    return np.where(small, series, direct)


def vacuum_gamma(separation, freq, gamma0, freq0=1.0):
    """Cross decay rate of two parallel dipoles in vacuum, oriented
    perpendicular to their separation axis.

    ``freq`` and ``freq0`` are in cycles per reference length, so the phase
    argument is x = 2*pi*freq*R.  At R = 0 this returns gamma0 * freq/freq0
    scaled by the bracket limit 2/3.
    """
    if np.any(np.asarray(separation) < 0):
        raise InvalidArgumentError("separation must be non-negative")
    x = 2.0 * math.pi * np.asarray(freq, dtype=float) * np.asarray(separation, dtype=float)
    out = 1.5 * (np.asarray(freq, dtype=float) / freq0) * gamma0 * _vacuum_bracket(x)
    return out if out.shape else float(out)


def planar_gamma(cfg: PlanarConfig, gamma0, lambda0=None):
    """Cross decay rate of two z-oriented dipoles between conductor plates.

    Sum of the TEM-like channel and the guided modes up to n = floor(2L/lam);
    each channel carries its own in-plane Bessel factor J0(k_par * R).  The
    grouping is fixed by exact reduction to :func:`planar_gamma_z` at R = 0.
    """
    L = cfg.plate_gap
    lam = cfg.wavelength
    lam0 = lambda0 if lambda0 is not None else lam
    R = cfg.separation
    total = j0(2.0 * math.pi * R / lam)
    n_max = math.floor(2.0 * L / lam)
    if 2.0 * L / lam == n_max:  # half-open cutoff: strictly less than 2L/lam
        n_max -= 1
    for n in range(1, n_max + 1):
        weight = 2.0 * (1.0 - (n * lam / (2 * L)) ** 2)
        kpar = 2.0 * math.pi * math.sqrt(max(1.0 / lam**2 - (n / (2 * L)) ** 2, 0.0))
        total += (
            weight
            * math.cos(n * math.pi * cfg.z1 / L)
            * math.cos(n * math.pi * cfg.z2 / L)
            * j0(kpar * R)
        )
    return gamma0 * (3.0 * lam0 / (4.0 * L)) * total


def planar_gamma_z(plate_gap, lambda0, gamma0):
    """Midplane local decay rate between conductor plates (R = 0 limit)."""
    if plate_gap <= 0 or lambda0 <= 0:
        raise InvalidArgumentError("plate gap and wavelength must be positive")
    L = plate_gap
    n_max = math.floor(2.0 * L / lambda0)
    if 2.0 * L / lambda0 == n_max:
        n_max -= 1
    total = 1.0
    for n in range(1, n_max + 1):
        total += (
            2.0
            * (1.0 - (n * lambda0 / (2 * L)) ** 2)
            * math.cos(n * math.pi / 2) ** 2
        )
    return gamma0 * (3.0 * lambda0 / (4.0 * L)) * total


def lorentzian_pair(center, halfwidth, peak, freq):
    """A Lorentzian decay spectrum and its exact half-line principal-value
    transform (valid for center >> halfwidth).

    Returns (gamma_value, delta_value) at ``freq``.
    """
    if halfwidth <= 0:
        raise InvalidArgumentError("halfwidth must be positive")
    w = np.asarray(freq, dtype=float) - center
    gamma = peak * halfwidth**2 / (w**2 + halfwidth**2)
    delta = 0.5 * peak * halfwidth * w / (w**2 + halfwidth**2)
    if gamma.shape:
        return gamma, delta
    return float(gamma), float(delta)
