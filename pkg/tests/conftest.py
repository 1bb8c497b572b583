"""Shared fixtures: small reusable FDTD runs so the suite pays for each
solve once."""

import numpy as np
import pytest

import coopfdtd as cf


@pytest.fixture(scope="session")
def band_freqs():
    return np.linspace(0.85, 1.15, 61)


@pytest.fixture(scope="session")
def waveform():
    return cf.SourceWaveform(center_frequency=1.0, fractional_bandwidth=0.5)


@pytest.fixture(scope="session")
def grid20():
    return cf.GridParams(resolution=20)


@pytest.fixture(scope="session")
def atom():
    return cf.AtomSpec(transition_frequency=1.0)


@pytest.fixture(scope="session")
def vacuum_reference(band_freqs, waveform, grid20):
    """Single x-oriented dipole at the center of a vacuum cube."""
    scene = cf.place_dipoles(
        cf.build_vacuum((1.6, 1.6, 1.6)),
        [cf.DipoleSpec((0.0, 0.0, 0.0), (1.0, 0.0, 0.0), "A")],
    )
    return cf.run(scene, grid20, waveform, band_freqs)


@pytest.fixture(scope="session")
def vacuum_pair_records(band_freqs, waveform, grid20):
    """A, B and joint runs for an x-oriented pair separated by 0.5 along z."""
    base = cf.build_vacuum((1.6, 1.6, 1.8))
    d_a = cf.DipoleSpec((0.0, 0.0, -0.25), (1.0, 0.0, 0.0), "A")
    d_b = cf.DipoleSpec((0.0, 0.0, 0.25), (1.0, 0.0, 0.0), "B")
    return {
        tag: cf.run(cf.place_dipoles(base, dips), grid20, waveform, band_freqs)
        for tag, dips in (("A", [d_a]), ("B", [d_b]), ("AB", [d_a, d_b]))
    }
