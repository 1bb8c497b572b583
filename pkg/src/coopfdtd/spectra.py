"""Shared spectrum value types and the two-level atom parameter record.

All frequency grids are strictly increasing and in cycles per reference
length (the 2*pi*c/L convention).  Decay and shift spectra are stored
in units of alpha_ij * (2*pi*c/L), matching the normalized reporting of the
cooperative spectra.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np

from .errors import InvalidArgumentError


def _as_grid(frequencies):
    f = np.asarray(frequencies, dtype=float)
    if f.ndim != 1 or f.size < 2:
        raise InvalidArgumentError("frequency grid must be a 1-D array of >= 2 points")
    if not np.all(np.diff(f) > 0):
        raise InvalidArgumentError("frequency grid must be strictly increasing")
    if not np.all(np.isfinite(f)):
        raise InvalidArgumentError("frequency grid must be finite")
    return f


def _check_finite(name, values):
    if not np.all(np.isfinite(values)):
        raise InvalidArgumentError(f"{name} contains non-finite values")


def same_grid(a, b, rtol=0.0):
    return a.shape == b.shape and np.allclose(a, b, rtol=rtol, atol=0.0)


@dataclass(frozen=True)
class BandWindow:
    """A closed frequency sub-band [lo, hi]."""

    lo: float
    hi: float

    def __post_init__(self):
        if not self.lo < self.hi:
            raise InvalidArgumentError(f"window must satisfy lo < hi, got [{self.lo}, {self.hi}]")

    def mask(self, frequencies):
        f = np.asarray(frequencies)
        return (f >= self.lo) & (f <= self.hi)


@dataclass(frozen=True)
class AtomSpec:
    """Two-level atom: transition frequency, dipole magnitude, and the derived
    strength alpha = u^2 * (2*pi*f)^2 / (3*pi) in natural units."""

    transition_frequency: float
    dipole_magnitude: float = 1.0
    alpha: float | None = None

    def __post_init__(self):
        if self.transition_frequency <= 0:
            raise InvalidArgumentError("transition frequency must be positive")
        if self.dipole_magnitude <= 0:
            raise InvalidArgumentError("dipole magnitude must be positive")
        expected = self._alpha_from_parts()
        if self.alpha is None:
            object.__setattr__(self, "alpha", expected)
        elif abs(self.alpha - expected) > 1e-12 * expected:
            raise InvalidArgumentError(
                f"alpha={self.alpha} inconsistent with (u, f): expected {expected}"
            )

    def _alpha_from_parts(self):
        omega = 2.0 * math.pi * self.transition_frequency
        return self.dipole_magnitude**2 * omega**2 / (3.0 * math.pi)


@dataclass(frozen=True)
class PowerSpectrum:
    """Drive-normalized emission power on a frequency grid."""

    frequencies: np.ndarray
    power: np.ndarray
    label: str = ""

    def __post_init__(self):
        object.__setattr__(self, "frequencies", _as_grid(self.frequencies))
        p = np.asarray(self.power, dtype=float)
        if p.shape != self.frequencies.shape:
            raise InvalidArgumentError("power and frequency grids differ in shape")
        _check_finite("power", p)
        object.__setattr__(self, "power", p)


@dataclass(frozen=True)
class EtaSpectrum:
    """Dimensionless cooperative ratio eta = P_co / (2 P0_vac)."""

    frequencies: np.ndarray
    eta: np.ndarray

    def __post_init__(self):
        object.__setattr__(self, "frequencies", _as_grid(self.frequencies))
        e = np.asarray(self.eta, dtype=float)
        if e.shape != self.frequencies.shape:
            raise InvalidArgumentError("eta and frequency grids differ in shape")
        _check_finite("eta", e)
        object.__setattr__(self, "eta", e)


@dataclass(frozen=True)
class GammaSpectrum:
    """Cooperative decay spectrum in units alpha_ij * (2*pi*c/L)."""

    frequencies: np.ndarray
    gamma: np.ndarray
    pair_labels: tuple[str, str] = ("A", "B")

    def __post_init__(self):
        object.__setattr__(self, "frequencies", _as_grid(self.frequencies))
        g = np.asarray(self.gamma, dtype=float)
        if g.shape != self.frequencies.shape:
            raise InvalidArgumentError("gamma and frequency grids differ in shape")
        _check_finite("gamma", g)
        object.__setattr__(self, "gamma", g)


@dataclass(frozen=True)
class DeltaSpectrum:
    """Interaction-potential spectrum, same units as :class:`GammaSpectrum`."""

    frequencies: np.ndarray
    delta: np.ndarray
    pair_labels: tuple[str, str] = ("A", "B")
    provenance: dict = field(default_factory=dict)

    def __post_init__(self):
        object.__setattr__(self, "frequencies", _as_grid(self.frequencies))
        d = np.asarray(self.delta, dtype=float)
        if d.shape != self.frequencies.shape:
            raise InvalidArgumentError("delta and frequency grids differ in shape")
        _check_finite("delta", d)
        object.__setattr__(self, "delta", d)
