"""Time-domain Maxwell solver on a staggered grid with CPML absorbing
boundaries, broadband point-dipole current sources, and running-DFT monitors
at the dipole locations.

Natural units: the scene's reference length and the speed of light are 1
(and eps0 = mu0 = 1).  Frequencies are quoted in cycles per reference length
(the 2*pi*c/L convention); angular factors of 2*pi appear only in the
phase bookkeeping here.

Emission powers are extracted downstream from the work done by the source at
the dipole node (one DFT point per dipole), not from a flux box; see the
radiometry module.
"""

from __future__ import annotations

import hashlib
import json
import math
from dataclasses import dataclass, field, replace

import numpy as np

from . import _kernels
from .errors import (
    InvalidArgumentError,
    NumericalInstabilityError,
    RunTimeoutError,
)
from .scene import ABSORBING, CONDUCTOR, Scene, UniformPermittivity

_AXES = "xyz"
_COMPONENT_OFFSETS = {
    # staggering of each E component in units of dx, per axis
    "x": (0.5, 0.0, 0.0),
    "y": (0.0, 0.5, 0.0),
    "z": (0.0, 0.0, 0.5),
}


@dataclass(frozen=True)
class GridParams:
    """Discretization parameters: cells per reference length, Courant factor,
    and the CPML profile."""

    resolution: int = 20
    courant_factor: float = 0.5
    pml_cells: int = 10
    pml_order: int = 3
    pml_sigma_scale: float = 0.8
    pml_alpha_max: float = 0.05
    subpixel_samples: int = 3

    def __post_init__(self):
        if self.resolution < 10:
            raise InvalidArgumentError("resolution must be >= 10 cells per reference length")
        if not 0 < self.courant_factor <= 1:
            raise InvalidArgumentError("courant factor must be in (0, 1]")
        if self.pml_cells < 8:
            raise InvalidArgumentError("pml_cells must be >= 8")
        if self.pml_order < 1 or self.pml_sigma_scale <= 0:
            raise InvalidArgumentError("invalid CPML profile parameters")

    @property
    def dx(self):
        return 1.0 / self.resolution

    @property
    def dt(self):
        return self.courant_factor * self.dx / math.sqrt(3.0)


@dataclass(frozen=True)
class SourceWaveform:
    """Gaussian-modulated current pulse with zero net impulse.

    s(t) is the (normalized) time derivative of a Gaussian-enveloped carrier,
    so the injected current integrates to zero and no static dipole field is
    left behind after the pulse.  ``center_frequency`` is in cycles per
    reference length; the spectral standard deviation is
    fractional_bandwidth * w_center / 2.
    """

    center_frequency: float
    fractional_bandwidth: float = 0.5
    amplitude: float = 1.0

    def __post_init__(self):
        if self.center_frequency <= 0:
            raise InvalidArgumentError("center frequency must be positive")
        if not 0 < self.fractional_bandwidth < 2:
            raise InvalidArgumentError("fractional bandwidth must be in (0, 2)")

    @property
    def omega(self):
        return 2.0 * math.pi * self.center_frequency

    @property
    def sigma_omega(self):
        return self.fractional_bandwidth * self.omega / 2.0

    @property
    def sigma_t(self):
        return 1.0 / self.sigma_omega

    @property
    def start_delay(self):
        return 6.0 * self.sigma_t

    @property
    def duration(self):
        """Time after which the pulse is identically zero."""
        return 2.0 * self.start_delay

    def __call__(self, t):
        t = np.asarray(t, dtype=float)
        tau = t - self.start_delay
        env = np.exp(-(tau**2) / (2.0 * self.sigma_t**2))
        # -(1/w) d/dt [env * cos(w tau)]
        out = self.amplitude * env * (
            np.sin(self.omega * tau)
            + tau / (self.omega * self.sigma_t**2) * np.cos(self.omega * tau)
        )
        out = np.where((t < 0) | (t > self.duration), 0.0, out)
        return out if out.shape else float(out)

    def valid_band(self, floor=1e-3):
        """Frequency band where |spectrum| >= floor * peak."""
        half = self.sigma_omega * math.sqrt(2.0 * math.log(1.0 / floor))
        return (
            (self.omega - half) / (2 * math.pi),
            (self.omega + half) / (2 * math.pi),
        )


@dataclass(frozen=True)
class StopCriterion:
    """Run termination: fixed step count, or decay of the monitored field
    energy below ``decay_threshold`` of its peak (with a step cap)."""

    kind: str = "decay"
    decay_threshold: float = 1e-5
    max_steps: int | None = None
    fixed_steps: int | None = None

    def __post_init__(self):
        if self.kind not in ("decay", "fixed"):
            raise InvalidArgumentError("stop criterion kind must be 'decay' or 'fixed'")
        if self.kind == "fixed" and not self.fixed_steps:
            raise InvalidArgumentError("fixed stop criterion requires fixed_steps")


@dataclass
class MonitorPoint:
    """One E-component monitor colocated with an injected current."""

    label: str
    axis: int
    index: tuple[int, int, int]
    weight: float  # orientation component along this axis
    snap_distance: float


@dataclass
class SimulationState:
    """Mutable solver state for one run.  Confined to a single run; the
    Scene and GridParams it references are shared and immutable."""

    scene: Scene
    grid: GridParams
    shape: tuple[int, int, int]
    origin: tuple[float, float, float]
    fields: dict
    coeffs: dict
    psi: dict
    cpml: dict
    monitors: list
    dt: float
    dx: float
    step_index: int = 0

    def component_position(self, axis, index):
        off = _COMPONENT_OFFSETS[_AXES[axis]]
        return tuple(self.origin[a] + (index[a] + off[a]) * self.dx for a in range(3))


def _sigma_profile(n_nodes, pml_lo, pml_hi, pml_cells, order, sigma_max, alpha_max, dt,
                  half_shift):
    """CPML b, c, 1/kappa along one axis.  ``half_shift`` selects the
    staggered (H) positions."""
    b = np.zeros(n_nodes)
    c = np.zeros(n_nodes)
    ki = np.ones(n_nodes)
    pos = np.arange(n_nodes) + (0.5 if half_shift else 0.0)
    depth = np.zeros(n_nodes)
    if pml_lo:
        d = (pml_lo - pos) / pml_cells
        depth = np.maximum(depth, d)
    if pml_hi:
        d = (pos - (n_nodes - 1 - pml_hi)) / pml_cells
        depth = np.maximum(depth, d)
    inside = depth > 0
    dcl = np.clip(depth, 0.0, 1.0)
    sigma = sigma_max * dcl**order
    alpha = alpha_max * (1.0 - dcl)
    kappa = np.ones(n_nodes)  # no coordinate stretching; sigma grading only
    with np.errstate(divide="ignore", invalid="ignore"):
        b_in = np.exp(-(sigma / kappa + alpha) * dt)
        denom = sigma * kappa + kappa**2 * alpha
        c_in = np.where(denom > 0, sigma * (b_in - 1.0) / np.where(denom > 0, denom, 1.0), 0.0)
    b[inside] = b_in[inside]
    c[inside] = c_in[inside]
    ki[inside] = 1.0 / kappa[inside]
    return b, c, ki


_MATERIAL_CACHE: dict = {}


def _material_key(scene, grid, dtype):
    bare = replace(scene, dipoles=())
    return (repr(bare), repr(grid), np.dtype(dtype).str)


def _extrude_into_pml(arr, pml):
    """Replicate the last interior material plane through each absorbing
    layer.  CPML assumes the medium is invariant along its normal; material
    structure running into the layer (for example a hole lattice) otherwise
    destabilizes the convolization recursion."""
    for axis in range(3):
        n_lo, n_hi = pml[axis]
        n = arr.shape[axis]
        idx = [slice(None)] * 3
        if n_lo:
            src, dst = idx.copy(), idx.copy()
            src[axis] = slice(n_lo, n_lo + 1)
            dst[axis] = slice(0, n_lo)
            arr[tuple(dst)] = arr[tuple(src)]
        if n_hi:
            src, dst = idx.copy(), idx.copy()
            src[axis] = slice(n - 1 - n_hi, n - n_hi)
            dst[axis] = slice(n - n_hi, None)
            arr[tuple(dst)] = arr[tuple(src)]


def _bake_materials(scene, grid, shape, origin, pml, dtype):
    """1/eps coefficient factor arrays at the three E-component nodes, with
    per-cell volume-fraction averaging of eps (subpixel smoothing)."""
    key = _material_key(scene, grid, dtype)
    if key in _MATERIAL_CACHE:
        return _MATERIAL_CACHE[key]
    dx = grid.dx
    coords = [origin[a] + dx * np.arange(shape[a]) for a in range(3)]
    out = {}
    if isinstance(scene.permittivity, UniformPermittivity):
        inv = 1.0 / scene.permittivity.value
        for axis in range(3):
            out[axis] = np.full(shape, inv, dtype=dtype)
        _MATERIAL_CACHE[key] = out
        return out
    s = grid.subpixel_samples
    sub = (np.arange(s) + 0.5) / s - 0.5
    for axis in range(3):
        off = _COMPONENT_OFFSETS[_AXES[axis]]
        acc = np.zeros(shape)
        pts = np.empty(shape + (3,))
        for ox in sub:
            for oy in sub:
                for oz in sub:
                    pts[..., 0] = (coords[0] + (off[0] + ox) * dx)[:, None, None]
                    pts[..., 1] = (coords[1] + (off[1] + oy) * dx)[None, :, None]
                    pts[..., 2] = (coords[2] + (off[2] + oz) * dx)[None, None, :]
                    acc += scene.permittivity(pts)
        acc /= s**3
        inv = (1.0 / acc).astype(dtype)
        _extrude_into_pml(inv, pml)
        out[axis] = inv
    _MATERIAL_CACHE[key] = out
    return out


def discretize(scene: Scene, grid: GridParams, dtype=np.float64) -> SimulationState:
    """Build the staggered-grid state: zeroed fields, baked material
    coefficients, CPML profiles, and snapped dipole monitors."""
    dx = grid.dx
    if scene.min_feature is not None and scene.min_feature / dx < 3:
        raise InvalidArgumentError(
            f"resolution {grid.resolution} under-resolves the smallest feature "
            f"(radius {scene.min_feature}: {scene.min_feature / dx:.1f} cells, need >= 3)"
        )
    pml = []
    for axis in range(3):
        lo = grid.pml_cells if scene.boundary[2 * axis] == ABSORBING else 0
        hi = grid.pml_cells if scene.boundary[2 * axis + 1] == ABSORBING else 0
        pml.append((lo, hi))
    n_cells = [round(scene.extent[a] / dx) for a in range(3)]
    for a in range(3):
        if n_cells[a] < 4:
            raise InvalidArgumentError(f"domain extent along {_AXES[a]} spans < 4 cells")
    shape = tuple(n_cells[a] + pml[a][0] + pml[a][1] + 1 for a in range(3))
    origin = tuple(scene.bounds_lo[a] - pml[a][0] * dx for a in range(3))

    dt = grid.dt
    sigma_max = grid.pml_sigma_scale * (grid.pml_order + 1) / dx
    cpml = {}
    for axis in range(3):
        lo, hi = pml[axis]
        for half, tag in ((False, "e"), (True, "h")):
            b, c, ki = _sigma_profile(
                shape[axis], lo, hi, grid.pml_cells, grid.pml_order,
                sigma_max, grid.pml_alpha_max, dt, half)
            cpml[(tag, axis)] = (b, c, ki)

    inv_eps = _bake_materials(scene, grid, shape, origin, pml, dtype)
    coeffs = {axis: (dt / dx) * inv_eps[axis] for axis in range(3)}

    fields = {name: np.zeros(shape, dtype=dtype) for name in
              ("ex", "ey", "ez", "hx", "hy", "hz")}
    psi = {name: np.zeros(shape, dtype=dtype) for name in
           ("p_exy", "p_exz", "p_eyz", "p_eyx", "p_ezx", "p_ezy",
            "p_hxy", "p_hxz", "p_hyz", "p_hyx", "p_hzx", "p_hzy")}

    monitors = []
    for d in scene.dipoles:
        for axis in range(3):
            w = d.orientation[axis]
            if abs(w) < 1e-12:
                continue
            off = _COMPONENT_OFFSETS[_AXES[axis]]
            idx = []
            for a in range(3):
                fi = (d.position[a] - origin[a]) / dx - off[a]
                idx.append(int(round(fi)))
            idx = tuple(idx)
            pos = tuple(origin[a] + (idx[a] + off[a]) * dx for a in range(3))
            snap = math.sqrt(sum((pos[a] - d.position[a]) ** 2 for a in range(3)))
            for a in range(3):
                lo_margin = idx[a] - (pml[a][0] + (2 if pml[a][0] else 1))
                hi_margin = (shape[a] - 2 - (pml[a][1] + (2 if pml[a][1] else 0))) - idx[a]
                if lo_margin < 0 or hi_margin < 0:
                    raise InvalidArgumentError(
                        f"dipole {d.label} snaps within 2 cells of an absorbing layer "
                        f"along {_AXES[a]}"
                    )
            monitors.append(MonitorPoint(
                label=d.label, axis=axis, index=idx, weight=w, snap_distance=snap))

    return SimulationState(
        scene=scene, grid=grid, shape=shape, origin=origin,
        fields=fields, coeffs=coeffs, psi=psi, cpml=cpml,
        monitors=monitors, dt=dt, dx=dx,
    )


def _kernel_args_h(state):
    f = state.fields
    p = state.psi
    c = state.cpml
    return (f["ex"], f["ey"], f["ez"], f["hx"], f["hy"], f["hz"],
            p["p_hxy"], p["p_hxz"], p["p_hyz"], p["p_hyx"], p["p_hzx"], p["p_hzy"],
            *c[("h", 0)], *c[("h", 1)], *c[("h", 2)],
            state.dt / state.dx)


def _kernel_args_e(state):
    f = state.fields
    p = state.psi
    c = state.cpml
    return (f["ex"], f["ey"], f["ez"], f["hx"], f["hy"], f["hz"],
            state.coeffs[0], state.coeffs[1], state.coeffs[2],
            p["p_exy"], p["p_exz"], p["p_eyz"], p["p_eyx"], p["p_ezx"], p["p_ezy"],
            *c[("e", 0)], *c[("e", 1)], *c[("e", 2)])


def inject_dipole_current(state: SimulationState, waveform: SourceWaveform, t):
    """Add the soft current J = orientation * s(t) at every monitor node.

    Both dipoles receive the identical waveform in phase.  Follows the E
    update for the same half-step time level.
    """
    s = waveform(t)
    if s == 0.0:
        return
    names = ("ex", "ey", "ez")
    for m in state.monitors:
        arr = state.fields[names[m.axis]]
        ce = state.coeffs[m.axis][m.index]
        # current density s/dx^3; coeff array already carries dt/(eps*dx)
        arr[m.index] -= ce * m.weight * s / state.dx**2


def step(state: SimulationState, waveform: SourceWaveform | None = None):
    """Advance the fields by one time step (H half-step then E half-step),
    injecting the dipole current when a waveform is given."""
    _kernels.update_h(*_kernel_args_h(state))
    _kernels.update_e(*_kernel_args_e(state))
    if waveform is not None:
        inject_dipole_current(state, waveform, (state.step_index + 0.5) * state.dt)
    state.step_index += 1
    return state


@dataclass(frozen=True)
class DftRecord:
    """Complex field and source-current spectra at the dipole locations from
    one run.  ``e_at_dipole`` maps label -> orientation-projected E(omega)."""

    frequencies: np.ndarray
    e_at_dipole: dict
    source_spectrum: np.ndarray
    run_metadata: dict

    def __post_init__(self):
        f = np.asarray(self.frequencies, dtype=float)
        if not np.all(np.diff(f) > 0):
            raise InvalidArgumentError("frequency grid must be strictly increasing")
        s = np.asarray(self.source_spectrum)
        if not np.all(np.isfinite(s.view(float))):
            raise InvalidArgumentError("source spectrum contains non-finite values")
        if np.any(np.abs(s) == 0.0):
            raise InvalidArgumentError("source spectrum vanishes on the grid")
        for label, e in self.e_at_dipole.items():
            if not np.all(np.isfinite(np.asarray(e).view(float))):
                raise InvalidArgumentError(f"field spectrum for {label} is non-finite")


def scene_hash(scene: Scene, grid: GridParams) -> str:
    payload = json.dumps([repr(scene), repr(grid)]).encode()
    return hashlib.sha256(payload).hexdigest()[:16]


def run(scene: Scene, grid: GridParams, waveform: SourceWaveform, freq_grid,
        stop: StopCriterion | None = None, dtype=np.float64,
        check_interval=200) -> DftRecord:
    """Time-step the scene and return running-DFT spectra at the dipoles.

    The run stops on the criterion (default: monitored |E|^2 decayed to 1e-5
    of its peak, capped at 20x the pulse duration) and accumulates the DFT of
    the orientation-projected E at every dipole and of the source series.
    """
    freq_grid = np.asarray(freq_grid, dtype=float)
    if freq_grid.ndim != 1 or freq_grid.size == 0 or not np.all(np.diff(freq_grid) > 0):
        raise InvalidArgumentError("analysis frequency grid must be 1-D increasing")
    lo, hi = waveform.valid_band()
    if freq_grid[0] < lo or freq_grid[-1] > hi:
        raise InvalidArgumentError(
            f"analysis band [{freq_grid[0]:.4g}, {freq_grid[-1]:.4g}] exceeds the "
            f"source's well-conditioned band [{lo:.4g}, {hi:.4g}]"
        )
    if not scene.dipoles:
        raise InvalidArgumentError("scene has no dipoles to drive")

    stop = stop or StopCriterion()
    state = discretize(scene, grid, dtype=dtype)
    dt = state.dt
    omega = 2.0 * math.pi * freq_grid
    pulse_steps = int(math.ceil(waveform.duration / dt))
    if stop.kind == "fixed":
        max_steps = stop.fixed_steps
    else:
        max_steps = stop.max_steps or 20 * pulse_steps

    # running DFT accumulators; phases advanced by recurrence
    labels = sorted({m.label for m in state.monitors})
    acc = {label: np.zeros(freq_grid.size, dtype=complex) for label in labels}
    acc_src = np.zeros(freq_grid.size, dtype=complex)
    rot = np.exp(1j * omega * dt)
    phase_e = np.exp(1j * omega * dt)          # E sampled at t = (n+1) dt
    phase_s = np.exp(1j * omega * 0.5 * dt)    # s sampled at t = (n+1/2) dt

    names = ("ex", "ey", "ez")
    peak = 0.0
    block_max = 0.0
    steps_done = 0
    decay_ratio = 1.0
    period_steps = max(int(round(1.0 / (waveform.center_frequency * dt))), 1)
    check_every = max(check_interval, period_steps)

    for n in range(max_steps):
        t_half = (n + 0.5) * dt
        _kernels.update_h(*_kernel_args_h(state))
        _kernels.update_e(*_kernel_args_e(state))
        inject_dipole_current(state, waveform, t_half)
        state.step_index = n + 1

        e_sq = 0.0
        for m in state.monitors:
            val = float(state.fields[names[m.axis]][m.index])
            acc[m.label] += (m.weight * val) * phase_e
            e_sq += val * val
        if not math.isfinite(e_sq):
            raise NumericalInstabilityError(n + 1)
        acc_src += float(waveform(t_half)) * phase_s
        phase_e = phase_e * rot
        phase_s = phase_s * rot

        peak = max(peak, e_sq)
        block_max = max(block_max, e_sq)
        steps_done = n + 1
        if (n + 1) % check_every == 0:
            if stop.kind == "decay" and (n + 1) * dt > waveform.duration and peak > 0:
                decay_ratio = block_max / peak
                if decay_ratio <= stop.decay_threshold:
                    break
            block_max = 0.0
    else:
        if stop.kind == "decay":
            decay_ratio = block_max / peak if peak > 0 else 1.0
            if decay_ratio > stop.decay_threshold:
                raise RunTimeoutError(decay_ratio, max_steps)

    for name, arr in state.fields.items():
        if not np.all(np.isfinite(arr)):
            raise NumericalInstabilityError(steps_done, f"non-finite {name} at run end")

    e_at_dipole = {label: acc[label] * dt for label in labels}
    source_spectrum = acc_src * dt
    metadata = {
        "scene_hash": scene_hash(scene, grid),
        "grid": {
            "resolution": grid.resolution,
            "courant_factor": grid.courant_factor,
            "pml_cells": grid.pml_cells,
            "dx": state.dx,
            "dt": dt,
            "shape": list(state.shape),
        },
        "steps": steps_done,
        "decay_ratio": decay_ratio,
        "dtype": np.dtype(dtype).str,
        "snap": {
            f"{m.label}/{_AXES[m.axis]}": {
                "index": list(m.index),
                "position": list(state.component_position(m.axis, m.index)),
                "distance": m.snap_distance,
            }
            for m in state.monitors
        },
    }
    return DftRecord(
        frequencies=freq_grid,
        e_at_dipole=e_at_dipole,
        source_spectrum=source_spectrum,
        run_metadata=metadata,
    )


def save_checkpoint(state: SimulationState, path):
    """Binary field-state checkpoint (versioned, implementation-defined)."""
    np.savez_compressed(
        path,
        __version__=np.array([1]),
        step_index=np.array([state.step_index]),
        **state.fields,
        **state.psi,
    )


def load_checkpoint(state: SimulationState, path):
    """Restore fields saved by :func:`save_checkpoint` into ``state``."""
    data = np.load(path)
    if int(data["__version__"][0]) != 1:
        raise InvalidArgumentError("unknown checkpoint version")
    for name in state.fields:
        state.fields[name][:] = data[name]
    for name in state.psi:
        state.psi[name][:] = data[name]
    state.step_index = int(data["step_index"][0])
    return state
