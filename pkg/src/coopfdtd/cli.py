"""Batch command-line front end.

Three verbs: ``run`` executes the four-run measurement protocol for one
config and writes a results table plus manifest; ``sweep`` repeats it over a
list of values for one scalar config leaf, reusing the vacuum reference;
``analyze`` post-processes an existing table (resonance fit, resolvent
poles, or amplitude dynamics).

Exit codes: 0 success, 2 config error, 3 numerical failure, 4 partial sweep.
"""

from __future__ import annotations

import json
import os
import sys
import traceback

import click
import numpy as np

from . import __version__
from .dynamics import CouplingFunction, amplitudes, find_poles, markov_poles
from .errors import ConfigError, CoopFdtdError, InvalidArgumentError
from .pipeline import (
    RunConfig,
    SpectrumTable,
    _atomic_write,
    apply_sweep_value,
    build_table,
    load_config,
    parse_config,
    run_protocol,
    run_reference,
    write_manifest,
)
from .resonance import fit_resonance
from .spectra import BandWindow, PowerSpectrum

EXIT_CONFIG = 2
EXIT_NUMERICAL = 3
EXIT_PARTIAL = 4


def _fail(code, message):
    click.echo(f"error: {message}", err=True)
    sys.exit(code)


def _prepare(config_path, out, threads, seed_check):
    if seed_check:
        ok = run_seed_check()
        sys.exit(0 if ok else EXIT_NUMERICAL)
    if config_path is None:
        _fail(EXIT_CONFIG, "--config is required")
    try:
        config = load_config(config_path)
    except ConfigError as exc:
        _fail(EXIT_CONFIG, f"config: {exc}")
    out_dir = out or config.output_dir
    os.makedirs(out_dir, exist_ok=True)
    if threads < 1:
        _fail(EXIT_CONFIG, "--threads must be >= 1")
    return config, out_dir


def _quarantine(out_dir, config, records, exc):
    qdir = os.path.join(out_dir, "quarantine")
    os.makedirs(qdir, exist_ok=True)
    note = {
        "error": f"{type(exc).__name__}: {exc}",
        "traceback": traceback.format_exc(),
        "completed_runs": sorted(records),
    }
    _atomic_write(os.path.join(qdir, "failure.json"),
                  json.dumps(note, indent=2) + "\n")
    if records:
        write_manifest(os.path.join(qdir, "manifest.json"), config, records)


common_options = [
    click.option("--config", "config_path", type=click.Path(), default=None,
                 help="YAML run configuration."),
    click.option("--out", type=click.Path(), default=None,
                 help="Output directory (overrides config)."),
    click.option("--threads", type=int, default=1, show_default=True,
                 help="Worker threads (kernels are serial; recorded in the "
                      "manifest)."),
    click.option("--max-steps", type=int, default=None,
                 help="Hard cap on FDTD steps per run."),
    click.option("--seed-check", is_flag=True,
                 help="Run the fast invariant suite and exit."),
]


def _with_common(fn):
    for opt in reversed(common_options):
        fn = opt(fn)
    return fn


@click.group()
@click.version_option(__version__)
def main():
    """Cooperative decay spectra from FDTD runs."""


@main.command("run")
@_with_common
def cmd_run(config_path, out, threads, max_steps, seed_check):
    """Execute the reference/A/B/AB protocol for one config."""
    config, out_dir = _prepare(config_path, out, threads, seed_check)
    records = {}
    try:
        result = run_protocol(config, max_steps=max_steps)
        records = result.records
        table = build_table(config, result)
    except CoopFdtdError as exc:
        _quarantine(out_dir, config, records, exc)
        _fail(EXIT_NUMERICAL, f"protocol failed: {exc}")
    if "csv" in config.output_formats:
        table.write_csv(os.path.join(out_dir, "spectra.csv"))
    if "json" in config.output_formats:
        write_manifest(os.path.join(out_dir, "manifest.json"), config,
                       result.records, extra={"threads": threads})
    click.echo(f"wrote {out_dir}/spectra.csv")


@main.command("sweep")
@_with_common
def cmd_sweep(config_path, out, threads, max_steps, seed_check):
    """Repeat the protocol over sweep.values, reusing the vacuum reference."""
    config, out_dir = _prepare(config_path, out, threads, seed_check)
    if config.sweep_parameter is None:
        _fail(EXIT_CONFIG, "config has no sweep section")

    try:
        reference = run_reference(config, max_steps=max_steps)
    except CoopFdtdError as exc:
        _fail(EXIT_NUMERICAL, f"vacuum reference failed: {exc}")

    agg_rows = []
    failures = 0
    all_records = {"reference": reference}
    for i, value in enumerate(config.sweep_values):
        tag = f"point_{i:03d}"
        try:
            raw = apply_sweep_value(config.raw, config.sweep_parameter, value)
            raw.pop("sweep", None)
            point_cfg = parse_config(raw)
            result = run_protocol(point_cfg, reference=reference,
                                  max_steps=max_steps)
            table = build_table(point_cfg, result)
            table.write_csv(os.path.join(out_dir, f"{tag}.csv"))
            for name, rec in result.records.items():
                if name != "reference":
                    all_records[f"{tag}/{name}"] = rec
            agg_rows.append(_aggregate_row(value, point_cfg, result))
        except CoopFdtdError as exc:
            failures += 1
            click.echo(f"{tag} (value {value}) failed: {exc}", err=True)
            agg_rows.append((value, *([float("nan")] * 4)))
    _write_aggregate(os.path.join(out_dir, "aggregate.csv"), agg_rows)
    write_manifest(os.path.join(out_dir, "manifest.json"), config,
                   all_records,
                   extra={"threads": threads, "failed_points": failures,
                          "reference_runs": 1})
    click.echo(f"wrote {out_dir}/aggregate.csv ({failures} failed points)")
    if failures:
        sys.exit(EXIT_PARTIAL)


def _aggregate_row(value, config: RunConfig, result):
    g = result.columns["gamma_ij"]
    d = result.columns["delta_ij"]
    i_pk = int(np.argmax(np.abs(g)))
    omega_c = q = float("nan")
    if config.resonance_window is not None:
        try:
            fit = fit_resonance(
                PowerSpectrum(frequencies=result.frequencies,
                              power=result.columns["gamma_AA"], label="A"),
                config.resonance_window)
            omega_c, q = fit.omega_c, fit.q_factor
        except CoopFdtdError:
            pass
    return (value, float(g[i_pk]), float(np.max(np.abs(d))), omega_c, q)


def _write_aggregate(path, rows):
    lines = ["sweep_value,gamma_ij_at_peak,delta_ij_max_abs,omega_c,Q"]
    for row in rows:
        lines.append(",".join(repr(float(v)) for v in row))
    _atomic_write(path, "\n".join(lines) + "\n")


@main.command("analyze")
@click.argument("table_path", type=click.Path(exists=True))
@click.option("--mode", type=click.Choice(["resonance", "poles", "dynamics"]),
              required=True)
@click.option("--config", "config_path", type=click.Path(), default=None,
              help="Config supplying atoms/windows (required for poles and "
                   "dynamics).")
@click.option("--out", type=click.Path(), default=None,
              help="Output file (default: stdout for JSON).")
def cmd_analyze(table_path, mode, config_path, out):
    """Post-process an existing results table."""
    try:
        table = SpectrumTable.read_csv(table_path)
    except (InvalidArgumentError, OSError) as exc:
        _fail(EXIT_CONFIG, f"table: {exc}")

    config = None
    if config_path is not None:
        try:
            config = load_config(config_path)
        except ConfigError as exc:
            _fail(EXIT_CONFIG, f"config: {exc}")

    freqs = table.columns["omega"]
    try:
        if mode == "resonance":
            window = (config.resonance_window if config is not None
                      and config.resonance_window is not None
                      else BandWindow(float(freqs[0]), float(freqs[-1])))
            fit = fit_resonance(
                PowerSpectrum(frequencies=freqs,
                              power=table.columns["gamma_AA"], label="A"),
                window)
            report = {
                "mode": "resonance", "omega_c": fit.omega_c,
                "q_factor": fit.q_factor, "peak_power": fit.peak_power,
                "background": fit.background,
                "fit_residual": fit.fit_residual,
                "q_lower_bound": fit.q_lower_bound,
            }
        else:
            if config is None:
                _fail(EXIT_CONFIG, f"mode {mode} needs --config for atoms")
            report = _analyze_dynamics(table, config, mode, out)
    except CoopFdtdError as exc:
        _fail(EXIT_NUMERICAL, f"analysis failed: {exc}")

    text = json.dumps(report, indent=2) + "\n"
    if out and mode != "dynamics":
        _atomic_write(out, text)
    else:
        click.echo(text, nl=False)
    sys.exit(0)


def _coupling_from_table(table) -> CouplingFunction:
    freqs = table.columns["omega"]
    # the table carries no diagonal level shifts; they renormalize the bare
    # transition frequencies and enter here as zero
    cross = table.columns["delta_ij"] - 0.5j * table.columns["gamma_ij"]
    tables = {
        ("A", "A"): -0.5j * table.columns["gamma_AA"],
        ("B", "B"): -0.5j * table.columns["gamma_BB"],
        ("A", "B"): cross,
        ("B", "A"): cross,
    }
    return CouplingFunction(frequencies=freqs, tables=tables)


def _analyze_dynamics(table, config: RunConfig, mode, out):
    coupling = _coupling_from_table(table)
    atom_a, atom_b = config.atoms
    if mode == "poles":
        fa = atom_a.transition_frequency
        g_aa = float(coupling.evaluate("A", "A", fa).imag * -2)
        g_ij = float(coupling.evaluate("A", "B", fa).imag * -2)
        d_ij = float(coupling.evaluate("A", "B", fa).real)
        markov = markov_poles(fa, g_aa, g_ij, 0.0, d_ij)
        lo, hi = coupling.band
        span = hi - lo
        box = (lo, hi, -span, 0.0)
        roots = find_poles((atom_a, atom_b), coupling, box)
        return {
            "mode": "poles",
            "roots": [[z.real, z.imag] for z in roots.roots],
            "labels": list(roots.labels),
            "markov_roots": [[z.real, z.imag] for z in markov.roots],
        }
    t_grid = (config.time_grid if config.time_grid is not None
              else np.linspace(0.0, 50.0, 201))
    trace = amplitudes((atom_a, atom_b), coupling, t_grid)
    lines = ["t,re_a,im_a,re_b,im_b,population"]
    pop = np.abs(trace.a_t) ** 2 + np.abs(trace.b_t) ** 2
    for i, t in enumerate(trace.times):
        lines.append(",".join(repr(float(v)) for v in (
            t, trace.a_t[i].real, trace.a_t[i].imag,
            trace.b_t[i].real, trace.b_t[i].imag, pop[i])))
    target = out or "dynamics.csv"
    _atomic_write(target, "\n".join(lines) + "\n")
    return {"mode": "dynamics", "written": target, "points": len(t_grid)}


def run_seed_check() -> bool:
    """Fast invariant suite: oracle identities, transform antisymmetry on a
    Lorentzian, resolvent closed form, and FDTD determinism on a tiny run."""
    import numpy.random as npr

    from .fdtd import GridParams, SourceWaveform, run
    from .kramers_kronig import kramers_kronig
    from .oracles import PlanarConfig, lorentzian_pair, planar_gamma, planar_gamma_z
    from .scene import DipoleSpec, build_vacuum, place_dipoles
    from .spectra import AtomSpec, BandWindow, GammaSpectrum

    ok = True

    def check(name, cond):
        nonlocal ok
        click.echo(f"  {'ok' if cond else 'FAIL'}  {name}")
        ok = ok and bool(cond)

    rng = npr.default_rng(7)
    worst = 0.0
    for _ in range(20):
        gap = float(rng.uniform(0.3, 3.0))
        lam = float(rng.uniform(0.3, 3.0))
        cfg = PlanarConfig(gap, gap / 2, gap / 2, 0.0, lam)
        worst = max(worst, abs(planar_gamma(cfg, 1.0, lambda0=lam)
                               - planar_gamma_z(gap, lam, 1.0)))
    check("planar oracle R=0 identity", worst < 1e-10)

    f = np.linspace(0.2, 1.8, 4001)
    g, d = lorentzian_pair(1.0, 0.02, 1.0, f)
    spec = GammaSpectrum(frequencies=f, gamma=g, pair_labels=("A", "B"))
    delta = kramers_kronig(spec, BandWindow(0.7, 1.3))
    d_exact = lorentzian_pair(1.0, 0.02, 1.0, delta.frequencies)[1]
    check("principal-value transform on Lorentzian",
          float(np.max(np.abs(delta.delta - d_exact))) < 1e-3)

    markov = markov_poles(1.0, 0.1, 0.05, 0.0, 0.02)
    z_plus = complex(1.02, -0.075)
    check("resolvent closed form",
          abs(markov.roots[1] - z_plus) < 1e-12 or
          abs(markov.roots[0] - z_plus) < 1e-12)

    scene = place_dipoles(build_vacuum((0.8, 0.8, 0.8)),
                          [DipoleSpec((0, 0, 0), (1, 0, 0), "A")])
    grid = GridParams(resolution=12, pml_cells=8)
    wf = SourceWaveform(center_frequency=1.0)
    freqs = np.linspace(0.9, 1.1, 5)
    rec1 = run(scene, grid, wf, freqs)
    rec2 = run(scene, grid, wf, freqs)
    check("FDTD determinism",
          np.array_equal(rec1.e_at_dipole["A"], rec2.e_at_dipole["A"]))

    click.echo("seed-check " + ("passed" if ok else "FAILED"))
    return ok


if __name__ == "__main__":
    main()
