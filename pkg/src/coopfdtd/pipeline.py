"""Config-driven orchestration of the measurement protocol.

A run consists of four solves on the identical grid: a vacuum reference with
a single dipole, the two individual-dipole runs, and the joint run.  The
partial powers combine into the cooperative fraction eta(w), the decay
spectra Gamma(w), and (through the principal-value transform) the interaction
potential Delta(w).  Everything is driven by a YAML config validated up
front, and results land in a fixed-schema CSV table plus a JSON manifest.
"""

from __future__ import annotations

import dataclasses
import hashlib
import json
import os
from dataclasses import dataclass, field

import numpy as np
import yaml

from . import __version__
from .errors import ConfigError, InvalidArgumentError, NonBandlimitedError
from .fdtd import DftRecord, GridParams, SourceWaveform, StopCriterion, run
from .kramers_kronig import kramers_kronig
from .radiometry import (
    cooperative_power,
    eta,
    gamma0,
    gamma_ij,
    gamma_local,
    total_power,
)
from .scene import (
    DipoleSpec,
    LatticeSpec,
    Scene,
    build_phc_cavity,
    build_planar_cavity,
    build_vacuum,
    place_dipoles,
)
from .spectra import AtomSpec, BandWindow, GammaSpectrum, PowerSpectrum

TABLE_COLUMNS = (
    "omega", "P_A", "P_B", "P_AB", "P_co", "eta",
    "gamma_ij", "gamma_AA", "gamma_BB", "delta_ij",
)


# ---------------------------------------------------------------------------
# config schema


_SCENE_KEYS = {
    "vacuum": {"kind", "extent", "dipoles"},
    "planar": {"kind", "plate_gap", "lateral_extent", "dipoles"},
    "phc": {"kind", "lattice", "air_margin_xy", "air_margin_z", "dipoles"},
}
_LATTICE_KEYS = {"lattice_constant", "hole_radius", "slab_thickness",
                 "slab_index", "defect_index", "periods"}
_GRID_KEYS = {"resolution", "courant_factor", "pml_cells", "pml_order",
              "pml_sigma_scale", "pml_alpha_max", "subpixel_samples"}
_SOURCE_KEYS = {"center_frequency", "fractional_bandwidth", "amplitude"}
_ANALYSIS_KEYS = {"frequency", "kk_window", "resonance_window", "time"}
_ATOM_KEYS = {"frequency_a", "frequency_b", "dipole_a", "dipole_b"}
_SWEEP_KEYS = {"parameter", "values"}
_OUTPUT_KEYS = {"directory", "formats"}
_TOP_KEYS = {"scene", "grid", "source", "analysis", "atoms", "sweep", "output"}


def _require_keys(section, mapping, allowed, required):
    if not isinstance(mapping, dict):
        raise ConfigError(f"section '{section}' must be a mapping")
    unknown = set(mapping) - allowed
    if unknown:
        raise ConfigError(f"unknown keys in '{section}': {sorted(unknown)}")
    missing = required - set(mapping)
    if missing:
        raise ConfigError(f"missing keys in '{section}': {sorted(missing)}")


def _vector(section, value, n):
    try:
        out = tuple(float(v) for v in value)
    except (TypeError, ValueError) as exc:
        raise ConfigError(f"'{section}' must be a list of {n} numbers") from exc
    if len(out) != n:
        raise ConfigError(f"'{section}' must have exactly {n} entries")
    return out


@dataclass(frozen=True)
class RunConfig:
    """Fully validated run description: scene, grid, source, analysis
    windows, atomic parameters, and optional sweep/output sections."""

    scene: Scene
    grid: GridParams
    source: SourceWaveform
    freq_grid: np.ndarray
    kk_window: BandWindow
    resonance_window: BandWindow | None
    atoms: tuple[AtomSpec, ...]
    time_grid: np.ndarray | None
    sweep_parameter: str | None
    sweep_values: tuple[float, ...] | None
    output_dir: str
    output_formats: tuple[str, ...]
    raw: dict = field(repr=False)

    @property
    def config_hash(self):
        text = json.dumps(self.raw, sort_keys=True, default=str)
        return hashlib.sha256(text.encode()).hexdigest()[:16]


def _parse_dipoles(items):
    if not isinstance(items, list) or not items:
        raise ConfigError("'scene.dipoles' must be a non-empty list")
    specs = []
    for i, item in enumerate(items):
        _require_keys(f"scene.dipoles[{i}]", item,
                      {"label", "position", "orientation"},
                      {"label", "position", "orientation"})
        specs.append(DipoleSpec(
            position=_vector(f"scene.dipoles[{i}].position", item["position"], 3),
            orientation=_vector(f"scene.dipoles[{i}].orientation",
                                item["orientation"], 3),
            label=str(item["label"]),
        ))
    return specs


def _parse_scene(cfg):
    kind = cfg.get("kind")
    if kind not in _SCENE_KEYS:
        raise ConfigError(f"scene.kind must be one of {sorted(_SCENE_KEYS)}, "
                          f"got {kind!r}")
    _require_keys("scene", cfg, _SCENE_KEYS[kind], {"kind", "dipoles"})
    dipoles = _parse_dipoles(cfg["dipoles"])
    if kind == "vacuum":
        if "extent" not in cfg:
            raise ConfigError("vacuum scene needs 'extent'")
        base = build_vacuum(_vector("scene.extent", cfg["extent"], 3))
    elif kind == "planar":
        for key in ("plate_gap", "lateral_extent"):
            if key not in cfg:
                raise ConfigError(f"planar scene needs '{key}'")
        base = build_planar_cavity(
            float(cfg["plate_gap"]),
            _vector("scene.lateral_extent", cfg["lateral_extent"], 2),
        )
    else:
        lat_cfg = cfg.get("lattice", {})
        _require_keys("scene.lattice", lat_cfg, _LATTICE_KEYS, set())
        lattice = LatticeSpec(**{k: lat_cfg[k] for k in lat_cfg})
        kwargs = {}
        if "air_margin_xy" in cfg:
            kwargs["air_margin_xy"] = float(cfg["air_margin_xy"])
        if "air_margin_z" in cfg:
            kwargs["air_margin_z"] = float(cfg["air_margin_z"])
        base = build_phc_cavity(lattice, **kwargs)
    return place_dipoles(base, dipoles)


def parse_config(data: dict) -> RunConfig:
    """Validate a config mapping and build the typed RunConfig.

    Every module precondition that can be checked without running is
    checked here; unknown keys anywhere are rejected.
    """
    _require_keys("<top>", data, _TOP_KEYS, {"scene", "grid", "source",
                                             "analysis", "atoms"})
    try:
        scene = _parse_scene(data["scene"])

        grid_cfg = dict(data["grid"])
        _require_keys("grid", grid_cfg, _GRID_KEYS, {"resolution"})
        grid = GridParams(**grid_cfg)

        src_cfg = dict(data["source"])
        _require_keys("source", src_cfg, _SOURCE_KEYS, {"center_frequency"})
        source = SourceWaveform(**src_cfg)

        ana = data["analysis"]
        _require_keys("analysis", ana, _ANALYSIS_KEYS, {"frequency",
                                                        "kk_window"})
        fr = ana["frequency"]
        _require_keys("analysis.frequency", fr, {"min", "max", "count"},
                      {"min", "max"})
        count = int(fr.get("count", 401))
        if count < 8:
            raise ConfigError("analysis.frequency.count must be >= 8")
        lo, hi = float(fr["min"]), float(fr["max"])
        if not lo < hi:
            raise ConfigError("analysis.frequency requires min < max")
        freq_grid = np.linspace(lo, hi, count)

        kk_lo, kk_hi = _vector("analysis.kk_window", ana["kk_window"], 2)
        kk_window = BandWindow(kk_lo, kk_hi)
        res_window = None
        if "resonance_window" in ana:
            r_lo, r_hi = _vector("analysis.resonance_window",
                                 ana["resonance_window"], 2)
            res_window = BandWindow(r_lo, r_hi)
        time_grid = None
        if "time" in ana:
            _require_keys("analysis.time", ana["time"], {"max", "count"},
                          {"max"})
            t_max = float(ana["time"]["max"])
            if t_max <= 0:
                raise ConfigError("analysis.time.max must be positive")
            time_grid = np.linspace(0.0, t_max,
                                    int(ana["time"].get("count", 201)))

        atoms_cfg = data["atoms"]
        _require_keys("atoms", atoms_cfg, _ATOM_KEYS,
                      {"frequency_a", "frequency_b"})
        atoms = (
            AtomSpec(transition_frequency=float(atoms_cfg["frequency_a"]),
                     dipole_magnitude=float(atoms_cfg.get("dipole_a", 1.0))),
            AtomSpec(transition_frequency=float(atoms_cfg["frequency_b"]),
                     dipole_magnitude=float(atoms_cfg.get("dipole_b", 1.0))),
        )

        sweep_parameter = sweep_values = None
        if "sweep" in data:
            _require_keys("sweep", data["sweep"], _SWEEP_KEYS, _SWEEP_KEYS)
            sweep_parameter = str(data["sweep"]["parameter"])
            raw_vals = data["sweep"]["values"]
            if not isinstance(raw_vals, list) or not raw_vals:
                raise ConfigError("sweep.values must be a non-empty list")
            sweep_values = tuple(float(v) for v in raw_vals)
            _resolve_sweep_path(data, sweep_parameter)  # path must exist

        out_cfg = data.get("output", {})
        _require_keys("output", out_cfg, _OUTPUT_KEYS, set())
        formats = tuple(out_cfg.get("formats", ["csv", "json"]))
        for fmt in formats:
            if fmt not in ("csv", "json"):
                raise ConfigError(f"unknown output format {fmt!r}")
    except (InvalidArgumentError, TypeError, ValueError) as exc:
        raise ConfigError(str(exc)) from exc

    return RunConfig(
        scene=scene, grid=grid, source=source, freq_grid=freq_grid,
        kk_window=kk_window, resonance_window=res_window, atoms=atoms,
        time_grid=time_grid, sweep_parameter=sweep_parameter,
        sweep_values=sweep_values,
        output_dir=str(out_cfg.get("directory", "out")),
        output_formats=formats, raw=data,
    )


def load_config(path) -> RunConfig:
    """Read and validate a YAML config file."""
    try:
        with open(path) as fh:
            data = yaml.safe_load(fh)
    except (OSError, yaml.YAMLError) as exc:
        raise ConfigError(f"cannot read config {path}: {exc}") from exc
    if not isinstance(data, dict):
        raise ConfigError("config root must be a mapping")
    return parse_config(data)


def _resolve_sweep_path(data, dotted):
    """Walk a dotted path like scene.dipoles.1.position.1 through the raw
    config tree, returning (parent_container, final_key)."""
    parts = dotted.split(".")
    node = data
    for part in parts[:-1]:
        if isinstance(node, list):
            node = node[int(part)]
        elif isinstance(node, dict) and part in node:
            node = node[part]
        else:
            raise ConfigError(f"sweep parameter path '{dotted}' not found")
    last = parts[-1]
    if isinstance(node, list):
        idx = int(last)
        if not 0 <= idx < len(node):
            raise ConfigError(f"sweep parameter path '{dotted}' out of range")
        return node, idx
    if isinstance(node, dict) and last in node:
        if not isinstance(node[last], (int, float)):
            raise ConfigError(f"sweep parameter '{dotted}' is not a scalar")
        return node, last
    raise ConfigError(f"sweep parameter path '{dotted}' not found")


def apply_sweep_value(raw: dict, dotted: str, value: float) -> dict:
    """Deep-copy the raw config with one scalar leaf replaced."""
    copy = json.loads(json.dumps(raw))
    node, key = _resolve_sweep_path(copy, dotted)
    node[key] = value
    return copy


# ---------------------------------------------------------------------------
# protocol


@dataclass(frozen=True)
class ProtocolResult:
    """All spectra produced by one four-run measurement."""

    frequencies: np.ndarray
    columns: dict[str, np.ndarray]
    records: dict[str, DftRecord]
    gamma_cross: GammaSpectrum | None
    gamma_aa: GammaSpectrum
    gamma_bb: GammaSpectrum | None
    notes: dict[str, str]


def reference_scene(config: RunConfig) -> Scene:
    """Matched vacuum reference: a single dipole with atom A's orientation
    in a cube, run on the same grid settings as the main scene."""
    dip = config.scene.dipoles[0]
    base = build_vacuum((1.6, 1.6, 1.6))
    return place_dipoles(base, [dataclasses.replace(
        dip, position=(0.0, 0.0, 0.0), label="A")])


def run_reference(config: RunConfig, max_steps=None) -> DftRecord:
    stop = StopCriterion(max_steps=max_steps) if max_steps else None
    return run(reference_scene(config), config.grid, config.source,
               config.freq_grid, stop=stop)


def run_protocol(config: RunConfig, reference: DftRecord | None = None,
                 max_steps=None) -> ProtocolResult:
    """Execute reference, A, B and AB runs and assemble the output table.

    With a single dipole in the scene the cooperative columns are zero and
    only the local rate gamma_AA is meaningful.
    """
    stop = StopCriterion(max_steps=max_steps) if max_steps else None
    if reference is None:
        reference = run_reference(config, max_steps=max_steps)
    p0 = total_power(reference)

    dipoles = config.scene.dipoles
    base = dataclasses.replace(config.scene, dipoles=())
    records = {"reference": reference}

    def solo(dip):
        return run(place_dipoles(base, [dip]), config.grid, config.source,
                   config.freq_grid, stop=stop)

    rec_a = solo(dipoles[0])
    records["A"] = rec_a
    p_a = total_power(rec_a)
    atom_a, atom_b = config.atoms
    g_aa = gamma_local(p_a, p0, atom_a, label=dipoles[0].label)
    g0_a = gamma0(atom_a)

    freqs = config.freq_grid
    zeros = np.zeros_like(freqs)
    cols = {
        "omega": freqs, "P_A": p_a.power, "P_B": zeros,
        "P_AB": zeros, "P_co": zeros, "eta": zeros,
        "gamma_ij": zeros, "gamma_AA": g_aa.gamma, "gamma_BB": zeros,
        "delta_ij": zeros,
    }
    g_cross = g_bb = None
    notes = {}
    if len(dipoles) == 2:
        rec_b = solo(dipoles[1])
        rec_ab = run(place_dipoles(base, list(dipoles)), config.grid,
                     config.source, config.freq_grid, stop=stop)
        records["B"] = rec_b
        records["AB"] = rec_ab
        p_b = total_power(rec_b)
        p_ab = total_power(rec_ab)
        p_co = cooperative_power(p_ab, p_a, p_b)
        eta_spec = eta(p_co, p0)
        g_cross = gamma_ij(eta_spec, (atom_a, atom_b))
        g_bb = gamma_local(p_b, p0, atom_b, label=dipoles[1].label)
        cols.update(
            P_B=p_b.power, P_AB=p_ab.power, P_co=p_co.power,
            eta=eta_spec.eta, gamma_ij=g_cross.gamma, gamma_BB=g_bb.gamma,
        )
        try:
            delta = kramers_kronig(g_cross, config.kk_window)
        except NonBandlimitedError as exc:
            # open-space spectra do not decay inside any finite band; the
            # table keeps delta_ij at zero and the metadata records why
            notes["delta_ij"] = f"omitted: {exc}"
        else:
            # table rows live on the run grid; the half-shifted transform
            # grid is interpolated back, clamped flat outside the window
            cols["delta_ij"] = np.interp(freqs, delta.frequencies,
                                         delta.delta)
    return ProtocolResult(frequencies=freqs, columns=cols, records=records,
                          gamma_cross=g_cross, gamma_aa=g_aa, gamma_bb=g_bb,
                          notes=notes)


# ---------------------------------------------------------------------------
# table and manifest I/O


class SpectrumTable:
    """Fixed-schema results table with '#'-prefixed metadata header lines."""

    def __init__(self, columns: dict, metadata: dict):
        missing = set(TABLE_COLUMNS) - set(columns)
        if missing:
            raise InvalidArgumentError(f"table missing columns {sorted(missing)}")
        extra = set(columns) - set(TABLE_COLUMNS)
        if extra:
            raise InvalidArgumentError(f"table has unknown columns {sorted(extra)}")
        arrays = {k: np.asarray(columns[k], dtype=float) for k in TABLE_COLUMNS}
        n = arrays["omega"].size
        for name, arr in arrays.items():
            if arr.shape != (n,):
                raise InvalidArgumentError(f"column {name} has wrong length")
            if not np.all(np.isfinite(arr)):
                raise InvalidArgumentError(f"column {name} has non-finite entries")
        if n < 2 or np.any(np.diff(arrays["omega"]) <= 0):
            raise InvalidArgumentError("omega must be strictly increasing")
        self.columns = arrays
        self.metadata = dict(metadata)

    def write_csv(self, path):
        lines = [f"# {key} = {self.metadata[key]}" for key in sorted(self.metadata)]
        lines.append(",".join(TABLE_COLUMNS))
        data = np.column_stack([self.columns[k] for k in TABLE_COLUMNS])
        for row in data:
            lines.append(",".join(repr(float(v)) for v in row))
        _atomic_write(path, "\n".join(lines) + "\n")

    @classmethod
    def read_csv(cls, path):
        metadata = {}
        rows = []
        header = None
        with open(path) as fh:
            for ln, line in enumerate(fh, start=1):
                line = line.strip()
                if not line:
                    continue
                if line.startswith("#"):
                    body = line.lstrip("#").strip()
                    if "=" in body:
                        key, _, val = body.partition("=")
                        metadata[key.strip()] = val.strip()
                    continue
                parts = line.split(",")
                if header is None:
                    header = tuple(p.strip() for p in parts)
                    if header != TABLE_COLUMNS:
                        raise InvalidArgumentError(
                            f"line {ln}: header {header} does not match schema")
                    continue
                if len(parts) != len(TABLE_COLUMNS):
                    raise InvalidArgumentError(
                        f"line {ln}: expected {len(TABLE_COLUMNS)} fields, "
                        f"got {len(parts)}")
                try:
                    rows.append([float(p) for p in parts])
                except ValueError as exc:
                    raise InvalidArgumentError(f"line {ln}: {exc}") from exc
        if header is None or not rows:
            raise InvalidArgumentError(f"{path}: no data rows")
        data = np.asarray(rows)
        columns = {name: data[:, i] for i, name in enumerate(TABLE_COLUMNS)}
        return cls(columns, metadata)


def _atomic_write(path, text):
    tmp = f"{path}.tmp"
    with open(tmp, "w") as fh:
        fh.write(text)
    os.replace(tmp, path)


def write_manifest(path, config: RunConfig, records, extra=None):
    """JSON manifest: config hash, code version, per-run metadata."""
    payload = {
        "version": __version__,
        "config_hash": config.config_hash,
        "config": config.raw,
        "runs": {name: rec.run_metadata for name, rec in records.items()},
    }
    if extra:
        payload.update(extra)
    _atomic_write(path, json.dumps(payload, indent=2, sort_keys=True,
                                   default=str) + "\n")


def build_table(config: RunConfig, result: ProtocolResult) -> SpectrumTable:
    metadata = {
        "config_hash": config.config_hash,
        "version": __version__,
        "frequency_unit": "2*pi*c/reference_length",
        "rate_unit": "alpha_ij*(2*pi*c/reference_length)",
        "kk_window": f"{config.kk_window.lo} {config.kk_window.hi}",
    }
    for key, note in result.notes.items():
        metadata[f"note_{key}"] = note
    return SpectrumTable(result.columns, metadata)
