"""FDTD toolkit for cooperative decay spectra and dipole-dipole interaction
potentials of point emitters in vacuum, planar conductor cavities, and
photonic-crystal slab nanocavities."""

from .scene import (
    DipoleSpec,
    LatticeSpec,
    Scene,
    build_phc_cavity,
    build_planar_cavity,
    build_vacuum,
    place_dipoles,
)
from .fdtd import (
    DftRecord,
    GridParams,
    SimulationState,
    SourceWaveform,
    StopCriterion,
    discretize,
    inject_dipole_current,
    run,
    step,
)
from .spectra import (
    AtomSpec,
    BandWindow,
    DeltaSpectrum,
    EtaSpectrum,
    GammaSpectrum,
    PowerSpectrum,
)
from .radiometry import (
    cooperative_power,
    emission_power,
    eta,
    gamma0,
    gamma_ij,
    gamma_local,
    total_power,
)
from .kramers_kronig import kramers_kronig
from .oracles import (
    PlanarConfig,
    lorentzian_pair,
    planar_gamma,
    planar_gamma_z,
    vacuum_gamma,
)
from .dynamics import (
    AmplitudeTrace,
    CouplingFunction,
    PoleSet,
    amplitudes,
    coupling_w,
    find_poles,
    markov_poles,
    merge_couplings,
    xi,
)
from .resonance import ResonanceFit, fit_resonance

__version__ = "0.1.0"
