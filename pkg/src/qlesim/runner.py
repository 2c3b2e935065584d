"""Config-driven scenario runner.

Each scenario composes the state, sequence, noise and analysis modules into a
desk-scale version of one experiment, writes tidy long-format tables plus a
JSON manifest, and is bit-reproducible for a fixed (config, seed) regardless
of the worker count.
"""

import hashlib
import json
import math
import os
import time
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass
from pathlib import Path

import numpy as np

from . import __version__
from .analysis import (EnhancementMap, ReadoutSeries, TimingBudget, ac_sensitivity,
                       dominant_peaks, eta_map, exponential_snr_curve,
                       matched_reference_count, optimal_snr, periodogram,
                       snr_enhancement)
from .config import ExperimentConfig
from .errors import ConfigError, DomainError
from .fitting import fit_power_function, fit_stretched_exponential
from .noise import (electron_t2, nuclear_t1_vs_field, nuclear_t1_vs_laser,
                    project_t2_for_density, stretched_exp)
from .output import emit_csv, emit_json_table, file_sha256, write_json, write_json_atomic
from .params import SensorEnsembleParams
from .rng import rng_stream
from .sequences import (ACSignal, DROID60, XY8, accumulated_phase, build_droid60,
                        build_xy8, toggling_function)
from .state import (apply_cnot_e_given_n, apply_optical_pulse, apply_sensing_phase,
                    apply_swap, from_populations, initial_state)

DEFAULT_OUT_DIR_ENV = "QLESIM_OUT_DIR"

# default three-tone test signal: amplitudes chosen for ~0.4 rad of phase per
# tone through an XY8:6 window, spacing resolvable over a 1.5 ms record
DEFAULT_THREE_TONE = ACSignal(tuple(
    (0.15e-6, f, math.pi / 2) for f in (0.998e6, 1.0e6, 1.002e6)))


@dataclass
class RunManifest:
    scenario: str
    seed: int
    toolkit_version: str
    config_sha256: str
    config: dict
    files: list
    wall_clock_s: float
    extras: dict

    def to_dict(self) -> dict:
        return {
            "scenario": self.scenario,
            "seed": self.seed,
            "toolkit_version": self.toolkit_version,
            "config_sha256": self.config_sha256,
            "config": self.config,
            "files": self.files,
            "wall_clock_s": self.wall_clock_s,
            "extras": self.extras,
        }


class _OutputWriter:
    """Writes tables in the configured format and tracks files for cleanup."""

    def __init__(self, out_dir: Path, file_format: str):
        self.out_dir = out_dir
        self.file_format = file_format
        self.paths = []

    def table(self, name: str, table: dict) -> Path:
        if self.file_format == "json":
            path = emit_json_table(table, self.out_dir / f"{name}.json")
        else:
            path = emit_csv(table, self.out_dir / f"{name}.csv")
        self.paths.append(path)
        return path

    def json(self, name: str, payload: dict) -> Path:
        path = write_json(payload, self.out_dir / f"{name}.json")
        self.paths.append(path)
        return path

    def describe(self) -> list:
        return [{"name": p.name, "sha256": file_sha256(p), "bytes": p.stat().st_size}
                for p in self.paths]

    def cleanup(self):
        for p in self.paths:
            try:
                p.unlink()
            except OSError:
                pass


def _map_indexed(fn, items, threads):
    """Order-stable map over (index, item); parallel when threads > 1."""
    if threads <= 1:
        return [fn(i, item) for i, item in enumerate(items)]
    with ThreadPoolExecutor(max_workers=threads) as pool:
        return list(pool.map(fn, range(len(items)), items))


def _readout_sigma(sensor: SensorEnsembleParams) -> float:
    return sensor.contrast_c0 / math.sqrt(sensor.photons_per_readout)


# ----------------------------------------------------------------- scenarios

def _run_odmr_swap(config, writer, threads):
    sensor = config.sensor
    opts = config.options
    detuning = np.linspace(-opts["freq_span"] / 2, opts["freq_span"] / 2, opts["n_freq"])
    hwhm = 1.0 / (2.0 * math.pi * sensor.t2_star)
    lines = (-0.5 * sensor.hyperfine_splitting, +0.5 * sensor.hyperfine_splitting)
    swapped = apply_swap(initial_state(), sensor)
    states = {"no_swap": initial_state(), "swap": swapped}
    sigma = _readout_sigma(sensor)
    cols = {"detuning_hz": [], "series": [], "contrast": []}
    for name, state in states.items():
        p = state.populations()
        # each hyperfine line dips by the drivable population difference of
        # its nuclear manifold, with a T2*-limited Lorentzian profile
        depth = (p[0] - p[2], p[1] - p[3])
        profile = sum(d * hwhm ** 2 / ((detuning - f) ** 2 + hwhm ** 2)
                      for d, f in zip(depth, lines))
        rng = rng_stream(config.seed, "odmr_swap", name)
        sample = (sensor.contrast_c0 * profile
                  + sigma / math.sqrt(opts["averages"]) * rng.standard_normal(len(detuning)))
        cols["detuning_hz"].extend(detuning)
        cols["series"].extend([name] * len(detuning))
        cols["contrast"].extend(sample)
    writer.table("odmr_swap", cols)
    return {"nuclear_polarization_with_swap": swapped.nuclear_polarization()}


def _decay_curve(config, t1, durations, rng, averages):
    """Measured memory-decay curve: polarize, encode, reset the electron,
    illuminate for a variable time, map the memory back, read out.  Returns
    baseline-subtracted contrast samples."""
    sensor = config.sensor
    beta = config.nuclear_t1.stretch_beta
    gate = math.sqrt(sensor.swap_fidelity)
    # 5 t_op of reset light leaves <0.1% residual electron polarization
    prepared = apply_optical_pulse(apply_swap(initial_state(), sensor),
                                   5.0 * sensor.t_op, sensor, t1, beta)
    baseline_state = apply_cnot_e_given_n(
        apply_optical_pulse(prepared, 60.0 * t1, sensor, t1, beta), gate)
    baseline = sensor.contrast_c0 * baseline_state.electron_excess()
    means = np.empty(len(durations))
    for i, duration in enumerate(durations):
        probed = apply_cnot_e_given_n(
            apply_optical_pulse(prepared, duration, sensor, t1, beta), gate)
        means[i] = sensor.contrast_c0 * probed.electron_excess()
    noise = _readout_sigma(sensor) / math.sqrt(averages)
    return means - baseline + noise * rng.standard_normal(len(durations))


def _run_t1_sweep(config, writer, threads, axis_name, axis_values, t1_of):
    opts = config.options
    n_durations = opts["n_durations"]
    span = opts["duration_span_t1"]
    averages = opts["averages"]

    def one_point(i, value):
        t1 = t1_of(value)
        durations = np.linspace(0.0, span * t1, n_durations)
        rng = rng_stream(config.seed, config.scenario, i)
        contrast = _decay_curve(config, t1, durations, rng, averages)
        fit = fit_stretched_exponential(durations, contrast)
        return t1, durations, contrast, fit

    results = _map_indexed(one_point, axis_values, threads)

    curve_cols = {axis_name: [], "duration_s": [], "contrast": []}
    fit_cols = {axis_name: [], "t1_model_s": [], "t1_fit_s": [], "t1_err_s": [],
                "beta_fit": [], "beta_err": [], "iterations": []}
    for value, (t1, durations, contrast, fit) in zip(axis_values, results):
        curve_cols[axis_name].extend([value] * len(durations))
        curve_cols["duration_s"].extend(durations)
        curve_cols["contrast"].extend(contrast)
        fit_cols[axis_name].append(value)
        fit_cols["t1_model_s"].append(t1)
        fit_cols["t1_fit_s"].append(fit.params[1])
        fit_cols["t1_err_s"].append(fit.uncertainties[1])
        fit_cols["beta_fit"].append(fit.params[2])
        fit_cols["beta_err"].append(fit.uncertainties[2])
        fit_cols["iterations"].append(fit.iterations)
    writer.table(f"{config.scenario}_curves", curve_cols)
    writer.table(f"{config.scenario}_fits", fit_cols)
    return results, fit_cols


def _run_nuclear_t1_field_sweep(config, writer, threads):
    fields = config.options["fields"]
    _, fit_cols = _run_t1_sweep(
        config, writer, threads, "field_gauss", fields,
        lambda b: nuclear_t1_vs_field(config.nuclear_t1, b))
    power_fit = fit_power_function(np.asarray(fields), np.asarray(fit_cols["t1_fit_s"]))
    exponent = -float(power_fit.params[1])
    writer.json("nuclear_t1_field_power_law", {
        "field_exponent": exponent,
        "field_exponent_err": float(power_fit.uncertainties[1]),
        "configured_exponent": config.nuclear_t1.field_exponent,
        "fit": power_fit.to_dict(),
    })
    return {"field_exponent_fit": exponent,
            "configured_exponent": config.nuclear_t1.field_exponent}


def _run_nuclear_t1_laser_sweep(config, writer, threads):
    powers = config.options["powers"]
    _, fit_cols = _run_t1_sweep(
        config, writer, threads, "power_mw", powers,
        lambda p: nuclear_t1_vs_laser(config.nuclear_t1, p))
    # fit on the native us/mW scale of the power-function parameters
    t1_us = np.asarray(fit_cols["t1_fit_s"]) * 1e6
    power_fit = fit_power_function(np.asarray(powers), t1_us)
    a, b, c = (float(v) for v in power_fit.params)
    writer.json("nuclear_t1_laser_power_function", {
        "a": a, "b": b, "c": c,
        "uncertainties": [float(u) for u in power_fit.uncertainties],
        "configured": {"a": config.nuclear_t1.laser_a,
                       "b": config.nuclear_t1.laser_b,
                       "c": config.nuclear_t1.laser_c},
        "fit": power_fit.to_dict(),
    })
    return {"laser_b_fit": b, "configured_b": config.nuclear_t1.laser_b}


def _run_qle_snr_vs_n(config, writer, threads):
    sensor = config.sensor
    opts = config.options
    n_max = opts["n_readouts"]
    t1 = nuclear_t1_vs_field(config.nuclear_t1, sensor.bias_field)
    decay = sensor.t_qlr / t1
    n = np.arange(1, n_max + 1)
    ref_amplitude = sensor.contrast_c0 * opts["amplitude_scale"]
    sigma = _readout_sigma(sensor)
    amplitudes = ref_amplitude * np.exp(-n * decay)
    series = ReadoutSeries(amplitudes, np.full(n_max, sigma), ref_amplitude, sigma)
    snr = np.array([optimal_snr(series, k) for k in n])
    enhancement = np.array([snr_enhancement(series, k) for k in n])
    writer.table("qle_snr_vs_n", {
        "n": n, "a_n": amplitudes, "sigma_n": np.full(n_max, sigma),
        "snr": snr, "enhancement": enhancement,
    })
    return {"t1_s": t1, "enhancement_final": float(enhancement[-1])}


def _cycle_maps(config, t1):
    """Population transfer matrices of one readout cycle, extracted from the
    state operations themselves (the cycle is linear in the populations)."""
    sensor = config.sensor
    beta = config.nuclear_t1.stretch_beta
    gate = math.sqrt(sensor.swap_fidelity)
    basis = [from_populations(np.eye(4)[j]) for j in range(4)]
    cnot = np.column_stack([apply_cnot_e_given_n(b, gate).populations() for b in basis])
    optical = np.column_stack([
        apply_optical_pulse(b, sensor.t_op, sensor, t1, beta).populations()
        for b in basis])
    return cnot, optical


def _qlr_means(config, start_populations, n_cycles, t1):
    """Per-cycle readout means for a batch of start states (rows)."""
    sensor = config.sensor
    cnot, optical = _cycle_maps(config, t1)
    sign = np.array([1.0, 1.0, -1.0, -1.0])
    populations = np.array(start_populations, dtype=float)
    means = np.empty((len(populations), n_cycles))
    for k in range(n_cycles):
        after_gate = populations @ cnot.T
        means[:, k] = sensor.contrast_c0 * (after_gate @ sign)
        populations = after_gate @ optical.T
    return means


def _run_correlation_threetone(config, writer, threads):
    sensor = config.sensor
    opts = config.options
    block = build_xy8(opts["repetitions"], opts["tau"])
    tf = toggling_function(block)
    signal = config.signal if config.signal is not None else DEFAULT_THREE_TONE

    n_points = opts["n_points"]
    dt = opts["t_corr_max"] / n_points
    t_corr = np.arange(n_points) * dt

    t2 = electron_t2(config.electron_t2, block.family, block.pi_pulse_count)
    weight = stretched_exp(block.total_duration, t2, config.electron_t2.decay_stretch)
    phi1 = accumulated_phase(tf, signal, config.constants)
    phi2 = np.array([
        accumulated_phase(tf.shifted(block.total_duration + tc), signal, config.constants)
        for tc in t_corr])
    # correlated readout: first block stored along z, second block read out
    excess = weight ** 2 * math.sin(phi1) * np.sin(phi2)

    starts = [apply_swap(apply_sensing_phase(initial_state(),
                                             0.0 if e >= 0 else math.pi, abs(e)),
                         sensor).populations()
              for e in excess]
    # two reference orbits (stored excess 0 and 1) pin the per-cycle offset
    # and signal amplitude of the readout train
    for reference_excess in (0.0, 1.0):
        starts.append(apply_swap(apply_sensing_phase(
            initial_state(), math.acos(reference_excess), 1.0), sensor).populations())

    t1 = nuclear_t1_vs_field(config.nuclear_t1, sensor.bias_field)
    n_cycles = opts["n_readouts"]
    means = _qlr_means(config, starts, n_cycles, t1)
    offsets, cycle_amplitude = means[-2], means[-1] - means[-2]
    means = means[:-2]

    sigma = _readout_sigma(sensor)
    rng = rng_stream(config.seed, "correlation_threetone", "qle")
    samples = means + sigma * rng.standard_normal(means.shape)
    weights = cycle_amplitude / sigma ** 2
    qle_trace = (samples - offsets) @ weights / np.sum(weights)

    rng_ref = rng_stream(config.seed, "correlation_threetone", "reference")
    ref_trace = sensor.contrast_c0 * excess + sigma * rng_ref.standard_normal(n_points)

    writer.table("correlation_trace", {
        "t_corr_s": np.concatenate([t_corr, t_corr]),
        "readout": ["qle"] * n_points + ["conventional"] * n_points,
        "signal": np.concatenate([qle_trace, ref_trace]),
    })
    qle_spec = periodogram(qle_trace, dt)
    ref_spec = periodogram(ref_trace, dt)
    writer.table("correlation_spectrum", {
        "frequency_hz": np.concatenate([qle_spec.frequencies, ref_spec.frequencies]),
        "readout": ["qle"] * len(qle_spec.power) + ["conventional"] * len(ref_spec.power),
        "power": np.concatenate([qle_spec.power, ref_spec.power]),
    })
    peak_freqs, peak_powers = dominant_peaks(qle_spec, 3)
    return {
        "tone_frequencies_hz": [t[1] for t in signal.tones],
        "peak_frequencies_hz": sorted(float(f) for f in peak_freqs),
        "min_peak_power": float(np.min(peak_powers)),
        "median_noise_power": float(np.median(qle_spec.power[1:])),
        "frequency_resolution_hz": qle_spec.df,
    }


def _run_sensitivity_vs_duration(config, writer, threads):
    sensor = config.sensor
    opts = config.options
    tau = opts["tau"]
    f0 = 1.0 / (2.0 * tau)
    sigma = _readout_sigma(sensor)
    builders = {"XY8": build_xy8, "DROID60": build_droid60}
    cols = {"family": [], "repetitions": [], "n_pulses": [], "t_sense_s": [],
            "t2_s": [], "sensitivity_t_per_sqrt_hz": []}
    for family in opts["families"]:
        if family not in builders:
            raise ConfigError(f"unknown sequence family {family!r} "
                              f"(choose from {sorted(builders)})")
        for repetitions in range(1, opts["max_repetitions"] + 1):
            seq = builders[family](repetitions, tau)
            t2 = electron_t2(config.electron_t2, seq.family, seq.pi_pulse_count)
            coherence = stretched_exp(seq.total_duration, t2,
                                      config.electron_t2.decay_stretch)
            # contrast slope at the zero crossing of the fringe
            slope = (sensor.contrast_c0 * coherence * config.constants.gamma_e
                     * seq.pi_pulse_count / (math.pi * f0))
            sigma_1s = sigma * math.sqrt(seq.total_duration + sensor.t_qlr)
            cols["family"].append(family)
            cols["repetitions"].append(repetitions)
            cols["n_pulses"].append(seq.pi_pulse_count)
            cols["t_sense_s"].append(seq.total_duration)
            cols["t2_s"].append(t2)
            cols["sensitivity_t_per_sqrt_hz"].append(ac_sensitivity(sigma_1s, slope))
    writer.table("sensitivity_vs_duration", cols)
    best = {}
    for family in opts["families"]:
        rows = [i for i, f in enumerate(cols["family"]) if f == family]
        i_best = min(rows, key=lambda i: cols["sensitivity_t_per_sqrt_hz"][i])
        best[family] = {"t_sense_s": cols["t_sense_s"][i_best],
                        "sensitivity_t_per_sqrt_hz": cols["sensitivity_t_per_sqrt_hz"][i_best]}
    return {"optimal": best}


def _run_eta_map(config, writer, threads):
    sensor = config.sensor
    opts = config.options
    n_axis = np.unique(np.rint(np.linspace(opts["n_min"], opts["n_max"],
                                           opts["n_points"])).astype(int))
    t_axis = np.linspace(opts["t_sense_min"], opts["t_sense_max"], opts["t_points"])
    t1 = nuclear_t1_vs_field(config.nuclear_t1, sensor.bias_field)
    curve = exponential_snr_curve(t1, sensor.t_qlr, opts["base_ratio"])
    grid = eta_map(n_axis, t_axis, sensor.t_swap, sensor.t_qlr, snr_curve=curve)
    cols = {"t_sense_s": [], "n_readouts": [], "eta": []}
    for i, t_sense in enumerate(grid.t_sense_axis):
        for j, n in enumerate(grid.n_axis):
            cols["t_sense_s"].append(t_sense)
            cols["n_readouts"].append(n)
            cols["eta"].append(grid.eta[i, j])
    writer.table("eta_map", cols)
    i, j = np.unravel_index(int(np.argmax(grid.eta)), grid.eta.shape)
    return {"eta_max": float(grid.eta[i, j]),
            "eta_max_at": {"t_sense_s": grid.t_sense_axis[i], "n_readouts": grid.n_axis[j]},
            "t1_s": t1}


def _run_density_projection(config, writer, threads):
    sensor = config.sensor
    opts = config.options
    ref_density = sensor.n_density_ppm
    cols = {"n_density_ppm": [], "t2_scale": [], "t2_hahn_s": [], "t2_xy8_sat_s": [],
            "optimal_xy8_t_sense_s": []}
    for density in opts["densities_ppm"]:
        t2_hahn = project_t2_for_density(sensor.t2_hahn, ref_density, density)
        t2_sat = project_t2_for_density(sensor.t2_xy8_sat, ref_density, density)
        scale = t2_sat / sensor.t2_xy8_sat
        cols["n_density_ppm"].append(density)
        cols["t2_scale"].append(scale)
        cols["t2_hahn_s"].append(t2_hahn)
        cols["t2_xy8_sat_s"].append(t2_sat)
        cols["optimal_xy8_t_sense_s"].append(opts["xy8_optimal_ref"] * scale)
    writer.table("density_projection", cols)
    return {"reference_density_ppm": ref_density}


SCENARIO_RUNNERS = {
    "odmr_swap": _run_odmr_swap,
    "nuclear_t1_field_sweep": _run_nuclear_t1_field_sweep,
    "nuclear_t1_laser_sweep": _run_nuclear_t1_laser_sweep,
    "qle_snr_vs_n": _run_qle_snr_vs_n,
    "correlation_threetone": _run_correlation_threetone,
    "sensitivity_vs_duration": _run_sensitivity_vs_duration,
    "eta_map": _run_eta_map,
    "density_projection": _run_density_projection,
}


def run_scenario(config: ExperimentConfig, out_dir=None, threads: int = 1) -> RunManifest:
    """Execute a configured scenario, write its outputs, and return the manifest.

    Output data files are bit-identical for identical (config, seed), whatever
    the worker count; partial outputs are removed if the run fails.  The
    manifest is written atomically after all outputs and records their hashes
    (its own wall-clock field varies run to run by nature).
    """
    start = time.perf_counter()
    if config.scenario not in SCENARIO_RUNNERS:
        raise ConfigError(f"unknown scenario {config.scenario!r}")
    target = Path(out_dir if out_dir is not None
                  else config.out_dir if config.out_dir is not None
                  else os.environ.get(DEFAULT_OUT_DIR_ENV, "qlesim-out"))
    target.mkdir(parents=True, exist_ok=True)
    writer = _OutputWriter(target, config.file_format)
    try:
        extras = SCENARIO_RUNNERS[config.scenario](config, writer, max(1, int(threads)))
    except BaseException:
        writer.cleanup()
        raise
    config_dict = config.to_dict()
    config_hash = hashlib.sha256(
        json.dumps(config_dict, sort_keys=True).encode()).hexdigest()
    manifest = RunManifest(
        scenario=config.scenario,
        seed=config.seed,
        toolkit_version=__version__,
        config_sha256=config_hash,
        config=config_dict,
        files=writer.describe(),
        wall_clock_s=time.perf_counter() - start,
        extras=extras,
    )
    write_json_atomic(manifest.to_dict(), target / f"{config.scenario}_manifest.json")
    return manifest
