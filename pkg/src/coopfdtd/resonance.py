"""Resonance extraction: Lorentzian fits of power spectra for the cavity
center frequency and quality factor."""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np
from scipy.optimize import least_squares
from scipy.signal import find_peaks

from .errors import AmbiguousPeakError, InvalidArgumentError, PoorFitError
from .spectra import BandWindow, PowerSpectrum


@dataclass(frozen=True)
class ResonanceFit:
    """Fitted resonance: center frequency, quality factor, drive-normalized
    peak power, and the relative RMS residual of the fit."""

    omega_c: float
    q_factor: float
    peak_power: float
    background: float
    fit_residual: float
    q_lower_bound: bool = False


def _lorentzian(f, background, peak, f_c, q):
    return background + peak / (1.0 + 4.0 * q * q * (f / f_c - 1.0) ** 2)


def fit_resonance(spectrum: PowerSpectrum, window: BandWindow, q_lower_bound=False):
    """Least-squares Lorentzian fit inside ``window``.

    The window must contain exactly one local maximum (after prominence
    filtering); fits with relative RMS residual above 0.1 are rejected.
    ``q_lower_bound`` marks fits from runs truncated before full decay.
    """
    mask = window.mask(spectrum.frequencies)
    f = spectrum.frequencies[mask]
    p = spectrum.power[mask]
    if f.size < 8:
        raise InvalidArgumentError("window selects fewer than 8 samples")

    span = float(np.max(p) - np.min(p))
    if span <= 0:
        raise AmbiguousPeakError("spectrum is flat inside the window")
    peaks, _ = find_peaks(p, prominence=0.05 * span)
    interior_max = 0 < int(np.argmax(p)) < f.size - 1
    if len(peaks) == 0 and not interior_max:
        raise AmbiguousPeakError("no interior local maximum inside the window")
    if len(peaks) > 1:
        raise AmbiguousPeakError(f"{len(peaks)} local maxima inside the window")

    i_pk = int(peaks[0]) if len(peaks) else int(np.argmax(p))
    f_c0 = float(f[i_pk])
    bg0 = float(np.min(p))
    pk0 = float(p[i_pk] - bg0)
    half = bg0 + pk0 / 2.0
    above = p >= half
    width = float(f[above][-1] - f[above][0]) if np.count_nonzero(above) > 1 else 4 * (f[1] - f[0])
    q0 = max(f_c0 / max(width, 1e-12), 1.0)

    scale = max(abs(pk0), 1e-300)

    def resid(params):
        bg, pk, fc, q = params
        return (_lorentzian(f, bg, pk, fc, q) - p) / scale

    sol = least_squares(
        resid,
        x0=[bg0, pk0, f_c0, q0],
        bounds=([-np.inf, 0.0, f[0], 0.1], [np.inf, np.inf, f[-1], 1e9]),
    )
    bg, pk, f_c, q = sol.x
    rms = float(np.sqrt(np.mean(sol.fun**2)))
    if rms > 0.1:
        raise PoorFitError(rms, {"window": (window.lo, window.hi), "params": list(sol.x)})
    return ResonanceFit(
        omega_c=float(f_c),
        q_factor=float(q),
        peak_power=float(pk),
        background=float(bg),
        fit_residual=rms,
        q_lower_bound=q_lower_bound,
    )
