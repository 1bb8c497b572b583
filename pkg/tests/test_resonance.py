"""Lorentzian resonance fitting."""

import numpy as np
import pytest

from coopfdtd.errors import AmbiguousPeakError, InvalidArgumentError, PoorFitError
from coopfdtd.resonance import fit_resonance
from coopfdtd.spectra import BandWindow, PowerSpectrum


def lorentzian(f, bg, pk, fc, q):
    return bg + pk / (1.0 + 4.0 * q**2 * (f / fc - 1.0) ** 2)


def spectrum(f, p):
    return PowerSpectrum(frequencies=f, power=p, label="A")


class TestFit:
    def test_recovers_parameters(self):
        f = np.linspace(0.28, 0.35, 701)
        p = lorentzian(f, 0.02, 5.0, 0.3133, 800.0)
        fit = fit_resonance(spectrum(f, p), BandWindow(0.29, 0.34))
        assert fit.omega_c == pytest.approx(0.3133, rel=1e-6)
        assert fit.q_factor == pytest.approx(800.0, rel=1e-3)
        assert fit.peak_power == pytest.approx(5.0, rel=1e-3)
        assert fit.fit_residual < 1e-6

    def test_tolerates_noise(self):
        rng = np.random.default_rng(3)
        f = np.linspace(0.28, 0.35, 701)
        p = lorentzian(f, 0.1, 4.0, 0.315, 300.0)
        p = p * (1.0 + 0.02 * rng.standard_normal(f.size))
        fit = fit_resonance(spectrum(f, p), BandWindow(0.29, 0.34))
        assert fit.omega_c == pytest.approx(0.315, rel=1e-3)
        assert fit.q_factor == pytest.approx(300.0, rel=0.1)

    def test_q_lower_bound_flag_propagates(self):
        f = np.linspace(0.28, 0.35, 701)
        p = lorentzian(f, 0.0, 1.0, 0.31, 200.0)
        fit = fit_resonance(spectrum(f, p), BandWindow(0.29, 0.34),
                            q_lower_bound=True)
        assert fit.q_lower_bound is True

    def test_two_peaks_rejected(self):
        f = np.linspace(0.28, 0.35, 701)
        p = lorentzian(f, 0.0, 1.0, 0.30, 400.0) + \
            lorentzian(f, 0.0, 1.0, 0.33, 400.0)
        with pytest.raises(AmbiguousPeakError):
            fit_resonance(spectrum(f, p), BandWindow(0.29, 0.34))

    def test_flat_spectrum_rejected(self):
        f = np.linspace(0.28, 0.35, 701)
        with pytest.raises(AmbiguousPeakError):
            fit_resonance(spectrum(f, np.full(f.size, 2.0)),
                          BandWindow(0.29, 0.34))

    def test_monotone_edge_rise_rejected(self):
        # a maximum at the window edge is not a resonance
        f = np.linspace(0.28, 0.35, 701)
        with pytest.raises(AmbiguousPeakError):
            fit_resonance(spectrum(f, f**2), BandWindow(0.29, 0.34))

    def test_poor_fit_rejected(self):
        # strongly non-Lorentzian shape with a single interior maximum
        f = np.linspace(0.28, 0.35, 701)
        p = np.where(np.abs(f - 0.31) < 0.01, 1.0, 0.0)
        with pytest.raises(PoorFitError) as err:
            fit_resonance(spectrum(f, p), BandWindow(0.29, 0.34))
        assert err.value.residual > 0.1

    def test_narrow_window_rejected(self):
        f = np.linspace(0.28, 0.35, 30)
        p = lorentzian(f, 0.0, 1.0, 0.31, 100.0)
        with pytest.raises(InvalidArgumentError):
            fit_resonance(spectrum(f, p), BandWindow(0.3099, 0.3101))
