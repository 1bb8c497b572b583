"""Immutable simulation scenes: vacuum, parallel-plate conductor cavity, and
a photonic-crystal slab nanocavity with a filled central hole.

All lengths are in natural units where the reference length (the lattice
constant for the nanocavity, the transition wavelength otherwise) and the
speed of light are 1.  Scenes are value types: two builds from equal
parameters compare equal and their permittivity samplers agree exactly.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field, replace

import numpy as np

from .errors import InvalidArgumentError

ABSORBING = "absorbing"
CONDUCTOR = "conductor"

# face order used throughout: (x-, x+, y-, y+, z-, z+)
FACES = ("x-", "x+", "y-", "y+", "z-", "z+")


@dataclass(frozen=True)
class DipoleSpec:
    """A point dipole: position, unit orientation vector, and label A or B."""

    position: tuple[float, float, float]
    orientation: tuple[float, float, float]
    label: str

    def __post_init__(self):
        if self.label not in ("A", "B"):
            raise InvalidArgumentError(f"dipole label must be 'A' or 'B', got {self.label!r}")
        norm = math.sqrt(sum(c * c for c in self.orientation))
        if abs(norm - 1.0) > 1e-12:
            raise InvalidArgumentError(
                f"dipole orientation must be a unit vector (|u| = {norm:.15g})"
            )


@dataclass(frozen=True)
class LatticeSpec:
    """Triangular-lattice slab parameters for the nanocavity."""

    lattice_constant: float = 1.0
    hole_radius: float = 0.3
    slab_thickness: float = 0.6
    slab_index: float = 3.4
    defect_index: float = 2.4
    periods: int = 6

    def __post_init__(self):
        a = self.lattice_constant
        if a <= 0:
            raise InvalidArgumentError("lattice constant must be positive")
        if not 0 < self.hole_radius < a / 2:
            raise InvalidArgumentError("hole radius must lie in (0, a/2)")
        if self.slab_thickness <= 0:
            raise InvalidArgumentError("slab thickness must be positive")
        if self.slab_index < 1 or self.defect_index < 1:
            raise InvalidArgumentError("refractive indices must be >= 1")
        if self.periods < 3:
            raise InvalidArgumentError("periods < 3 does not confine the cavity mode")


@dataclass(frozen=True)
class UniformPermittivity:
    """Constant relative permittivity everywhere."""

    value: float = 1.0

    def __call__(self, points):
        points = np.asarray(points, dtype=float)
        return np.full(points.shape[:-1], self.value)


@dataclass(frozen=True)
class PhcSlabPermittivity:
    """Triangular lattice of air holes through a dielectric slab.

    The slab (|z| <= thickness/2) has permittivity ``eps_slab``; holes of
    radius ``hole_radius`` at the triangular lattice sites are air, except the
    site at the origin which is filled with ``eps_defect``.  Air above and
    below the slab.

    ``hole_footprint`` gives half-extents (hx, hy); lattice sites centered
    outside it stay unpatterned slab.  The absorbing layers must not contain
    periodic structure (its backward-wave bands destabilize them), so the
    finite hole pattern is surrounded by plain slab running into the
    absorber.
    """

    lattice_constant: float
    hole_radius: float
    slab_thickness: float
    eps_slab: float
    eps_defect: float
    hole_footprint: tuple[float, float] | None = None

    def __call__(self, points):
        points = np.asarray(points, dtype=float)
        x = points[..., 0]
        y = points[..., 1]
        z = points[..., 2]
        a = self.lattice_constant

        eps = np.ones(points.shape[:-1])
        in_slab = np.abs(z) <= self.slab_thickness / 2
        if not np.any(in_slab):
            return eps

        # nearest lattice site of {n1*(a,0) + n2*(a/2, a*sqrt(3)/2)}:
        # check the four integer corners of the fractional coordinates.
        ry = 0.5 * math.sqrt(3.0) * a
        f2 = y / ry
        f1 = x / a - 0.5 * f2
        d2min = np.full(x.shape, np.inf)
        at_origin = np.zeros(x.shape, dtype=bool)
        cx_sel = np.zeros(x.shape)
        cy_sel = np.zeros(x.shape)
        for df1 in (0.0, 1.0):
            for df2 in (0.0, 1.0):
                n1 = np.floor(f1) + df1
                n2 = np.floor(f2) + df2
                cx = n1 * a + 0.5 * n2 * a
                cy = n2 * ry
                d2 = (x - cx) ** 2 + (y - cy) ** 2
                closer = d2 < d2min
                d2min = np.where(closer, d2, d2min)
                at_origin = np.where(closer, (n1 == 0) & (n2 == 0), at_origin)
                cx_sel = np.where(closer, cx, cx_sel)
                cy_sel = np.where(closer, cy, cy_sel)

        in_hole = d2min <= self.hole_radius**2
        if self.hole_footprint is not None:
            fx, fy = self.hole_footprint
            in_hole &= (np.abs(cx_sel) <= fx) & (np.abs(cy_sel) <= fy)
        eps = np.where(in_slab, self.eps_slab, 1.0)
        eps = np.where(in_slab & in_hole, 1.0, eps)
        eps = np.where(in_slab & in_hole & at_origin, self.eps_defect, eps)
        return eps


@dataclass(frozen=True)
class Scene:
    """Geometry, materials, boundaries, and dipole placements.

    ``bounds_lo``/``bounds_hi`` delimit the PML-free interior in scene
    coordinates; absorbing layers are added strictly outside the bounds when
    the scene is discretized.
    """

    bounds_lo: tuple[float, float, float]
    bounds_hi: tuple[float, float, float]
    permittivity: UniformPermittivity | PhcSlabPermittivity
    boundary: tuple[str, str, str, str, str, str]
    dipoles: tuple[DipoleSpec, ...] = ()
    reference_length: float = 1.0
    min_feature: float | None = None
    lattice: LatticeSpec | None = None

    @property
    def extent(self):
        return tuple(hi - lo for lo, hi in zip(self.bounds_lo, self.bounds_hi))

    def dipole(self, label):
        for d in self.dipoles:
            if d.label == label:
                return d
        raise InvalidArgumentError(f"no dipole labelled {label!r} in scene")


def _check_extent(extent):
    if len(extent) != 3 or any(e <= 0 for e in extent):
        raise InvalidArgumentError(f"domain extent must be positive per axis, got {extent}")


def build_vacuum(extent):
    """Uniform vacuum box, all faces absorbing, centered at the origin."""
    _check_extent(extent)
    half = tuple(e / 2 for e in extent)
    return Scene(
        bounds_lo=tuple(-h for h in half),
        bounds_hi=half,
        permittivity=UniformPermittivity(1.0),
        boundary=(ABSORBING,) * 6,
    )


def build_planar_cavity(plate_gap, lateral_extent):
    """Vacuum between two perfect-conductor plates normal to z.

    The bottom conductor is at z = 0, the top at z = plate_gap; x and y are
    centered at the origin with absorbing lateral faces.
    """
    if plate_gap <= 0:
        raise InvalidArgumentError(f"plate gap must be positive, got {plate_gap}")
    if len(lateral_extent) != 2 or any(e <= 0 for e in lateral_extent):
        raise InvalidArgumentError(f"lateral extent must be positive, got {lateral_extent}")
    lx, ly = lateral_extent
    return Scene(
        bounds_lo=(-lx / 2, -ly / 2, 0.0),
        bounds_hi=(lx / 2, ly / 2, plate_gap),
        permittivity=UniformPermittivity(1.0),
        boundary=(ABSORBING, ABSORBING, ABSORBING, ABSORBING, CONDUCTOR, CONDUCTOR),
    )


def build_phc_cavity(lattice=None, air_margin_xy=1.0, air_margin_z=1.2):
    """Photonic-crystal slab nanocavity centered at the origin.

    The hole pattern spans ``periods`` lattice rows on each side of the
    defect; beyond that the unpatterned slab continues through the air
    margin and the absorber, so the absorbing layers see no periodic
    structure.
    """
    lattice = lattice or LatticeSpec()
    a = lattice.lattice_constant
    ry = math.sqrt(3.0) / 2 * a
    half_x = lattice.periods * a + air_margin_xy * a
    half_y = lattice.periods * ry + air_margin_xy * a
    half_z = lattice.slab_thickness / 2 + air_margin_z * a
    sampler = PhcSlabPermittivity(
        lattice_constant=a,
        hole_radius=lattice.hole_radius,
        slab_thickness=lattice.slab_thickness,
        eps_slab=lattice.slab_index**2,
        eps_defect=lattice.defect_index**2,
        hole_footprint=(lattice.periods * a + 1e-9 * a,
                        lattice.periods * ry + 1e-9 * a),
    )
    return Scene(
        bounds_lo=(-half_x, -half_y, -half_z),
        bounds_hi=(half_x, half_y, half_z),
        permittivity=sampler,
        boundary=(ABSORBING,) * 6,
        reference_length=a,
        min_feature=lattice.hole_radius,
        lattice=lattice,
    )


def place_dipoles(scene, specs):
    """Return a new Scene with the given dipoles attached.

    Positions must be strictly inside the PML-free interior; labels must be
    unique.  The original scene is unchanged.
    """
    specs = tuple(specs)
    if not 1 <= len(specs) <= 2:
        raise InvalidArgumentError(f"expected 1 or 2 dipoles, got {len(specs)}")
    labels = [d.label for d in specs]
    if len(set(labels)) != len(labels):
        raise InvalidArgumentError(f"duplicate dipole labels: {labels}")
    for d in specs:
        for c, lo, hi in zip(d.position, scene.bounds_lo, scene.bounds_hi):
            if not lo < c < hi:
                raise InvalidArgumentError(
                    f"dipole {d.label} at {d.position} lies outside the "
                    f"interior [{scene.bounds_lo}, {scene.bounds_hi}]"
                )
    specs = tuple(sorted(specs, key=lambda d: d.label))
    return replace(scene, dipoles=specs)
