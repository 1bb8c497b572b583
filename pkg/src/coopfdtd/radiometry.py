"""Emission powers and normalized cooperative spectra from DFT records.

The power is the work done by the drive at the dipole node,
P(w) = -Re[E(w) . J*(w)] / 2, normalized by |source_spectrum|^2 so every
spectrum is per unit drive.  Combining the three-run protocol (A alone, B
alone, A+B) with a matched vacuum reference run yields the dimensionless
ratio eta(w) = P_co / (2 P0_vac) and the cooperative decay spectra."""

from __future__ import annotations

import math

import numpy as np

from .errors import IllConditionedBandError, InvalidArgumentError, InvalidReferenceError
from .fdtd import DftRecord
from .spectra import AtomSpec, EtaSpectrum, GammaSpectrum, PowerSpectrum, same_grid

SOURCE_FLOOR = 1e-3


def _check_conditioning(record: DftRecord):
    mag = np.abs(record.source_spectrum)
    floor = SOURCE_FLOOR * float(mag.max())
    bad = mag < floor
    if np.any(bad):
        raise IllConditionedBandError(record.frequencies[bad])


def emission_power(record: DftRecord, label) -> PowerSpectrum:
    """Drive-normalized emission power of the labelled dipole.

    In a multi-dipole record this is the partial power fed through that
    dipole's node; summing the labels gives the total.
    """
    if label not in record.e_at_dipole:
        raise InvalidArgumentError(f"record has no dipole labelled {label!r}")
    _check_conditioning(record)
    e = record.e_at_dipole[label]
    s = record.source_spectrum
    p = -0.5 * np.real(e * np.conj(s)) / np.abs(s) ** 2
    return PowerSpectrum(frequencies=record.frequencies, power=p, label=str(label))


def total_power(record: DftRecord) -> PowerSpectrum:
    """Sum of the per-dipole partial powers of one run."""
    _check_conditioning(record)
    s = record.source_spectrum
    p = np.zeros(record.frequencies.shape)
    for e in record.e_at_dipole.values():
        p += -0.5 * np.real(e * np.conj(s)) / np.abs(s) ** 2
    return PowerSpectrum(frequencies=record.frequencies, power=p, label="total")


def analytic_vacuum_power(freq):
    """Radiated power of a unit point current dipole in free space,
    omega^2 / (12 pi) with omega = 2 pi freq (continuum limit)."""
    omega = 2.0 * math.pi * np.asarray(freq, dtype=float)
    out = omega**2 / (12.0 * math.pi)
    return out if out.shape else float(out)


def cooperative_power(p_ab: PowerSpectrum, p_a: PowerSpectrum, p_b: PowerSpectrum):
    """P_co = P_AB - P_A - P_B; negative values mean destructive
    interference and are legitimate."""
    if not (same_grid(p_ab.frequencies, p_a.frequencies)
            and same_grid(p_ab.frequencies, p_b.frequencies)):
        raise InvalidArgumentError("power spectra are on different frequency grids")
    return PowerSpectrum(
        frequencies=p_ab.frequencies,
        power=p_ab.power - p_a.power - p_b.power,
        label="cooperative",
    )


def eta(p_co: PowerSpectrum, p0_vac: PowerSpectrum) -> EtaSpectrum:
    """eta(w) = P_co(w) / (2 P0_vac(w)) against the matched vacuum
    reference run."""
    if not same_grid(p_co.frequencies, p0_vac.frequencies):
        raise InvalidArgumentError("cooperative and reference spectra grids differ")
    if np.any(p0_vac.power <= 0):
        raise InvalidReferenceError("vacuum reference power must be positive in band")
    return EtaSpectrum(
        frequencies=p_co.frequencies,
        eta=p_co.power / (2.0 * p0_vac.power),
    )


def gamma_ij(eta_spec: EtaSpectrum, atoms) -> GammaSpectrum:
    """Cross decay spectrum sqrt(alpha_i alpha_j) * eta(w) * w, in units
    alpha_ij * (2 pi c / L)."""
    atom_a, atom_b = atoms
    root = math.sqrt(atom_a.alpha * atom_b.alpha)
    return GammaSpectrum(
        frequencies=eta_spec.frequencies,
        gamma=root * eta_spec.eta * eta_spec.frequencies,
        pair_labels=("A", "B"),
    )


def gamma_local(p_i: PowerSpectrum, p0_vac: PowerSpectrum, atom: AtomSpec,
                label="A") -> GammaSpectrum:
    """Local (Purcell-modified) decay spectrum alpha_i * w * P_i / P0_vac."""
    if not same_grid(p_i.frequencies, p0_vac.frequencies):
        raise InvalidArgumentError("power and reference spectra grids differ")
    if np.any(p0_vac.power <= 0):
        raise InvalidReferenceError("vacuum reference power must be positive in band")
    return GammaSpectrum(
        frequencies=p_i.frequencies,
        gamma=atom.alpha * p_i.frequencies * p_i.power / p0_vac.power,
        pair_labels=(label, label),
    )


def gamma0(atom: AtomSpec) -> float:
    """Free-space decay rate alpha * f0 at the transition frequency, in the
    same alpha * (2 pi c / L) unit as the spectra."""
    return atom.alpha * atom.transition_frequency
