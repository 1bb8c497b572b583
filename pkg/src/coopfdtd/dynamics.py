"""Two-atom resolvent layer.

Builds the complex coupling tables W_ij(w) = Delta_ij(w) - i*Gamma_ij(w)/2
(retarded branch, hbar = 1), locates the complex zeros of the characteristic
function

    Xi(z) = [z - w_A - W_AA][z - w_B - W_BB] - W_AB * W_BA

whose real parts give the split energy levels and imaginary parts the
lifetimes, and evolves the excited-state amplitudes a(t), b(t) by Fourier
inversion of the resolvent matrix elements along the real axis.

W is tabulated on the real axis only; off-axis evaluation uses W(Re z).
Frequencies and energies share the table's unit (cycles per reference
length).
"""

from __future__ import annotations

import cmath
import math
from dataclasses import dataclass, field

import numpy as np
from scipy.interpolate import CubicSpline

_trapz = getattr(np, "trapezoid", np.trapz)

from .errors import (
    BandCoverageError,
    ConvergenceFailureError,
    InvalidArgumentError,
    MissedRootError,
    OutOfBandError,
)
from .spectra import AtomSpec, DeltaSpectrum, GammaSpectrum, same_grid

PAIRS = (("A", "A"), ("A", "B"), ("B", "A"), ("B", "B"))


@dataclass
class CouplingFunction:
    """Tabulated coupling W_ij(w) for pairs in {A,B}^2, cubic in-band.

    ``branch`` selects the sign of the damping term: -1 (retarded, default)
    gives W = Delta - i*Gamma/2.
    """

    frequencies: np.ndarray
    tables: dict = field(default_factory=dict)
    branch: int = -1
    _splines: dict = field(default_factory=dict, repr=False)

    def __post_init__(self):
        self.frequencies = np.asarray(self.frequencies, dtype=float)
        if self.branch not in (-1, +1):
            raise InvalidArgumentError("branch must be -1 (retarded) or +1 (advanced)")
        for pair, w in self.tables.items():
            w = np.asarray(w, dtype=complex)
            if w.shape != self.frequencies.shape:
                raise InvalidArgumentError(f"table for pair {pair} does not match the grid")
            self.tables[pair] = w
        self._rebuild_splines()

    def _rebuild_splines(self):
        self._splines = {
            pair: CubicSpline(self.frequencies, w) for pair, w in self.tables.items()
        }

    @property
    def band(self):
        return float(self.frequencies[0]), float(self.frequencies[-1])

    def has_pair(self, i, j):
        return (i, j) in self.tables or (j, i) in self.tables

    def evaluate(self, i, j, freq):
        """W_ij at real frequency ``freq`` (scalar or array)."""
        lo, hi = self.band
        freq_arr = np.asarray(freq, dtype=float)
        if np.any(freq_arr < lo) or np.any(freq_arr > hi):
            raise OutOfBandError(f"frequency outside tabulated band [{lo}, {hi}]")
        pair = (i, j) if (i, j) in self.tables else (j, i)
        if pair not in self.tables:
            raise InvalidArgumentError(f"no coupling table for pair ({i}, {j})")
        out = self._splines[pair](freq_arr)
        return out if out.shape else complex(out)

    def conjugate_branch(self):
        """The opposite-branch coupling (damping sign flipped)."""
        return CouplingFunction(
            frequencies=self.frequencies.copy(),
            tables={pair: np.conj(w) for pair, w in self.tables.items()},
            branch=-self.branch,
        )

    @classmethod
    def constant(cls, values, band, n_points=4001, branch=-1):
        """Frequency-independent coupling over ``band`` (Markov limit)."""
        f = np.linspace(band[0], band[1], n_points)
        tables = {pair: np.full(f.shape, complex(v)) for pair, v in values.items()}
        return cls(frequencies=f, tables=tables, branch=branch)


def coupling_w(delta: DeltaSpectrum, gamma: GammaSpectrum, branch=-1):
    """Tabulate W = Delta - i*branch_sign*Gamma/2 for one pair.

    ``delta`` and ``gamma`` must share the frequency grid and pair labels.
    Combine per-pair results with :func:`merge_couplings`.
    """
    if not same_grid(delta.frequencies, gamma.frequencies):
        raise InvalidArgumentError("delta and gamma are on different frequency grids")
    if delta.pair_labels != gamma.pair_labels:
        raise InvalidArgumentError("delta and gamma carry different pair labels")
    w = delta.delta + 1j * branch * gamma.gamma / 2.0
    return CouplingFunction(
        frequencies=gamma.frequencies.copy(),
        tables={tuple(gamma.pair_labels): w},
        branch=branch,
    )


def merge_couplings(*couplings):
    """Merge single-pair tables into one CouplingFunction on a common grid."""
    if not couplings:
        raise InvalidArgumentError("nothing to merge")
    base = couplings[0]
    tables = {}
    for c in couplings:
        if c.branch != base.branch:
            raise InvalidArgumentError("cannot merge tables from different branches")
        if not same_grid(c.frequencies, base.frequencies):
            raise InvalidArgumentError("coupling tables are on different frequency grids")
        tables.update(c.tables)
    return CouplingFunction(frequencies=base.frequencies.copy(), tables=tables, branch=base.branch)


def xi(z, atoms, coupling: CouplingFunction):
    """The characteristic function at complex energy z (hbar = 1).

    W is evaluated at Re z; Re z must lie inside the tabulated band.
    """
    atom_a, atom_b = atoms
    x = np.real(z)
    waa = coupling.evaluate("A", "A", x)
    wbb = coupling.evaluate("B", "B", x)
    wab = coupling.evaluate("A", "B", x)
    wba = coupling.evaluate("B", "A", x)
    fa = atom_a.transition_frequency
    fb = atom_b.transition_frequency
    return (z - fa - waa) * (z - fb - wbb) - wab * wba


@dataclass(frozen=True)
class PoleSet:
    """Complex zeros of Xi: level splitting (real parts) and lifetimes
    (imaginary parts), with symmetric/antisymmetric labels when known."""

    roots: tuple
    labels: tuple = ()
    residuals: tuple = ()


def markov_poles(freq0, gamma_ii, gamma_ij, delta_ii, delta_ij):
    """Closed-form pole pair for identical atoms with constant coupling:
    z = (freq0 + delta_ii +- delta_ij) - i*(gamma_ii +- gamma_ij)/2."""
    z_sym = (freq0 + delta_ii + delta_ij) - 0.5j * (gamma_ii + gamma_ij)
    z_anti = (freq0 + delta_ii - delta_ij) - 0.5j * (gamma_ii - gamma_ij)
    return PoleSet(roots=(z_sym, z_anti), labels=("symmetric", "antisymmetric"))


def _newton_2d(func, z0, tol, max_iter=100):
    """Newton iteration treating func: C -> C as a 2-D real map (the
    characteristic function is not analytic off the real axis)."""
    z = complex(z0)
    scale = max(abs(z0), 1.0)
    for _ in range(max_iter):
        fz = func(z)
        if abs(fz) <= tol:
            return z
        h = 1e-7 * scale
        dfx = (func(z + h) - func(z - h)) / (2 * h)
        dfy = (func(z + 1j * h) - func(z - 1j * h)) / (2 * h)
        # solve J * (dx, dy) = -f for the real 2x2 system
        a, b = dfx.real, dfy.real
        c, d = dfx.imag, dfy.imag
        det = a * d - b * c
        if det == 0.0:
            break
        dx = (-fz.real * d + fz.imag * b) / det
        dy = (-fz.imag * a + fz.real * c) / det
        z = z + dx + 1j * dy
    fz = func(z)
    if abs(fz) <= tol:
        return z
    raise ConvergenceFailureError(z)


def _winding_number(func, box, n_samples=4000):
    """Winding count of func around the rectangle box = (re_lo, re_hi,
    im_lo, im_hi), by accumulated phase along the boundary."""
    re_lo, re_hi, im_lo, im_hi = box
    per_edge = n_samples // 4
    corners = [
        complex(re_lo, im_lo),
        complex(re_hi, im_lo),
        complex(re_hi, im_hi),
        complex(re_lo, im_hi),
        complex(re_lo, im_lo),
    ]
    pts = []
    for a, b in zip(corners[:-1], corners[1:]):
        t = np.linspace(0.0, 1.0, per_edge, endpoint=False)
        pts.append(a + (b - a) * t)
    pts = np.concatenate(pts)
    vals = np.array([func(z) for z in pts])
    phases = np.angle(vals)
    dphi = np.diff(np.concatenate([phases, phases[:1]]))
    dphi = (dphi + math.pi) % (2 * math.pi) - math.pi
    return int(round(dphi.sum() / (2 * math.pi)))


def find_poles(atoms, coupling: CouplingFunction, search_box, residual_scale=1e-10):
    """All zeros of Xi inside ``search_box`` = (re_lo, re_hi, im_lo, im_hi).

    Newton iterations are seeded from the constant-coupling closed form
    evaluated at the bare transition frequencies; a winding-number count over
    the box boundary verifies that no root was missed.
    """
    atom_a, atom_b = atoms
    fa = atom_a.transition_frequency
    fb = atom_b.transition_frequency
    tol = residual_scale * fa * fa

    def f(z):
        return xi(z, atoms, coupling)

    # Markov seeds: constant-W quadratic with W frozen at the bare frequencies
    fmid = 0.5 * (fa + fb)
    waa = coupling.evaluate("A", "A", fa)
    wbb = coupling.evaluate("B", "B", fb)
    wab = coupling.evaluate("A", "B", fmid)
    wba = coupling.evaluate("B", "A", fmid)
    ea = fa + waa
    eb = fb + wbb
    disc = cmath.sqrt((ea - eb) ** 2 + 4.0 * wab * wba)
    seeds = [0.5 * (ea + eb + disc), 0.5 * (ea + eb - disc)]

    re_lo, re_hi, im_lo, im_hi = search_box
    roots = []
    for seed in seeds:
        seed = complex(
            min(max(seed.real, re_lo), re_hi), min(max(seed.imag, im_lo), im_hi)
        )
        z = _newton_2d(f, seed, tol)
        if not (re_lo <= z.real <= re_hi and im_lo <= z.imag <= im_hi):
            continue
        if all(abs(z - r) > 1e-8 * max(abs(z), 1.0) for r in roots):
            roots.append(z)

    count = _winding_number(f, search_box)
    if count != len(roots):
        raise MissedRootError(
            f"winding count {count} but {len(roots)} roots located in {search_box}"
        )

    labels = ()
    if abs(fa - fb) < 1e-12 and len(roots) == 2:
        # symmetric branch carries the larger damping for positive Gamma_ij
        roots = sorted(roots, key=lambda z: z.imag)
        labels = ("symmetric", "antisymmetric")
    residuals = tuple(abs(f(z)) for z in roots)
    return PoleSet(roots=tuple(roots), labels=labels, residuals=residuals)


@dataclass(frozen=True)
class AmplitudeTrace:
    """Excited-state amplitudes a(t), b(t) for the initial state 'A excited'."""

    times: np.ndarray
    a_t: np.ndarray
    b_t: np.ndarray


def _taper(n, margin_fraction=0.05):
    m = max(2, int(n * margin_fraction))
    win = np.ones(n)
    ramp = 0.5 * (1.0 - np.cos(np.linspace(0.0, math.pi, m)))
    win[:m] = ramp
    win[-m:] = ramp[::-1]
    return win


def amplitudes(atoms, coupling: CouplingFunction, t_grid, oversample=4, eta_reg=1e-9):
    """Evolve a(t), b(t) by inverting the resolvent along the real axis.

    Integrates [G^-(w) - G^+(w)] exp(-i w t) / (2 pi i) over the tabulated
    band with endpoint tapering; raises :class:`BandCoverageError` when the
    band misses spectral weight (|a(0) - 1| > 1e-3).
    """
    t_grid = np.asarray(t_grid, dtype=float)
    atom_a, atom_b = atoms
    fa = atom_a.transition_frequency
    fb = atom_b.transition_frequency
    lo, hi = coupling.band
    if not (lo < fa < hi and lo < fb < hi):
        raise BandCoverageError("bare transition frequencies outside the coupling band")

    t_max = float(np.max(np.abs(t_grid))) if t_grid.size else 0.0
    df_table = float(np.min(np.diff(coupling.frequencies)))
    df = df_table / oversample
    if t_max > 0:
        df = min(df, 2.0 * math.pi / (40.0 * t_max))
    n_f = int(math.ceil((hi - lo) / df)) + 1
    f = np.linspace(lo, hi, n_f)

    ret = coupling if coupling.branch == -1 else coupling.conjugate_branch()
    adv = ret.conjugate_branch()
    eta = eta_reg * max(1.0, abs(fa))

    def resolvent_elements(tab, sign):
        waa = tab.evaluate("A", "A", f)
        wbb = tab.evaluate("B", "B", f)
        wab = tab.evaluate("A", "B", f)
        wba = tab.evaluate("B", "A", f)
        z = f + 1j * sign * eta
        xi_vals = (z - fa - waa) * (z - fb - wbb) - wab * wba
        g_aa = (z - fb - wbb) / xi_vals
        g_ba = wba / xi_vals
        return g_aa, g_ba

    g_aa_p, g_ba_p = resolvent_elements(ret, +1)  # G^+ from the retarded branch
    g_aa_m, g_ba_m = resolvent_elements(adv, -1)
    rho_aa = (g_aa_m - g_aa_p) / (2j * math.pi) * _taper(n_f)
    rho_ba = (g_ba_m - g_ba_p) / (2j * math.pi) * _taper(n_f)

    df_actual = f[1] - f[0]
    a_t = np.empty(t_grid.shape, dtype=complex)
    b_t = np.empty(t_grid.shape, dtype=complex)
    chunk = max(1, int(4e6 // n_f))
    for start in range(0, t_grid.size, chunk):
        ts = t_grid[start : start + chunk]
        phase = np.exp(-1j * np.outer(ts, f))
        a_t[start : start + chunk] = _trapz(phase * rho_aa[None, :], dx=df_actual, axis=1)
        b_t[start : start + chunk] = _trapz(phase * rho_ba[None, :], dx=df_actual, axis=1)

    a0 = _trapz(rho_aa, dx=df_actual)
    if abs(a0 - 1.0) > 1e-3:
        raise BandCoverageError(
            f"|a(0) - 1| = {abs(a0 - 1.0):.3e}; coupling band too narrow"
        )
    return AmplitudeTrace(times=t_grid, a_t=a_t, b_t=b_t)
