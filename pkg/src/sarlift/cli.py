"""Command-line experiment runner.

Subcommands wire the library into the standard pipelines:

    simulate          write correlated measurements for a configuration
    reconstruct       simulate, solve, and report error metrics
    analyze bound     resolution-bound report
    analyze kernels   brute-force vs asymptotic kernel comparison CSV
    analyze ric       empirical restricted-isometry report
    reproduce-table2  run the four (frequency x correlation-mode) cells

`--threads` pins the BLAS thread count; it must act before numpy loads,
so the heavy imports happen inside the handlers.
"""

import argparse
import json
import os
import sys

TABLE2_CELLS = (
    (760e6, "cross"),
    (760e6, "auto"),
    (2e9, "cross"),
    (2e9, "auto"),
)


def _cell_dirname(fc_hz, mode):
    return f"fc{int(round(fc_hz / 1e6)):04d}MHz_{mode}"


def _provenance(config, threads):
    from . import __version__
    return {
        "package_version": __version__,
        "seed": config["seed"],
        "threads": threads if threads else "default",
    }


def build_experiment(config):
    """Instantiate grid, phantom, geometry, sampling, and operator."""
    from . import config as cfg
    from . import forward

    grid = cfg.build_scene_grid(config)
    phantom = cfg.build_phantom(config, grid)
    geometry = cfg.build_geometry(config)
    sampling = cfg.build_sampling(config)
    model = config["model"]
    operator = forward.assemble_forward(
        grid, geometry, sampling,
        amplitude_mode=model["amplitude_mode"],
        normalize=model["normalize_operator"],
        memory_budget=cfg.memory_budget(),
    )
    return grid, phantom, geometry, sampling, operator


def simulate_measurement(config, phantom, geometry, sampling):
    """Simulate both received signals and correlate them."""
    from . import forward

    model = config["model"]
    mode = config["mode"]
    common = dict(amplitude_mode=model["amplitude_mode"],
                  transmitter_model=model["transmitter_model"])
    f1 = forward.received_signal(phantom, sampling, geometry, 1, **common)
    f2 = f1 if mode == "auto" else forward.received_signal(
        phantom, sampling, geometry, 2, **common)
    measurement = forward.correlate(f1, f2, sampling, mode)
    if model["noise_std"] > 0:
        measurement = forward.add_measurement_noise(
            measurement, model["noise_std"], config["seed"])
    return measurement


def run_simulation(config, output_dir, threads=None):
    """Pipeline front half: simulate and write the measurement CSV."""
    from . import config as cfg
    from . import io_formats

    grid = cfg.build_scene_grid(config)
    phantom = cfg.build_phantom(config, grid)
    geometry = cfg.build_geometry(config)
    sampling = cfg.build_sampling(config)
    measurement = simulate_measurement(config, phantom, geometry, sampling)
    chash = cfg.config_hash(config)
    os.makedirs(output_dir, exist_ok=True)
    path = os.path.join(output_dir, "measurements.csv")
    io_formats.save_measurement_csv(path, measurement, chash)
    return {"measurements": path}


def run_reconstruction(config, output_dir, threads=None):
    """Full pipeline: simulate, reconstruct, extract, and report.

    Returns (MetricsReport, artifact paths, history records).
    """
    from . import config as cfg
    from . import io_formats, metrics, scene, solver

    grid, phantom, geometry, sampling, operator = build_experiment(config)
    measurement = simulate_measurement(config, phantom, geometry, sampling)
    solver_config = cfg.build_solver_config(config)
    kron, history = solver.solve(operator, measurement.values, solver_config,
                                 grid=grid)
    reflectivity = solver.extract_reflectivity(kron, grid)
    reference = scene.kronecker_scene(phantom)
    report = metrics.error_metrics(kron, reference, reflectivity, phantom,
                                   operator, measurement.values,
                                   solver_config.rank_threshold)

    chash = cfg.config_hash(config)
    os.makedirs(output_dir, exist_ok=True)
    out = config["output"]
    paths = {}

    def _p(name):
        paths[name.split(".")[0]] = os.path.join(output_dir, name)
        return paths[name.split(".")[0]]

    io_formats.save_measurement_csv(_p("measurements.csv"), measurement, chash)
    io_formats.save_history_csv(_p("history.csv"), history, chash)
    io_formats.save_reflectivity_csv(_p("reflectivity.csv"), reflectivity, chash)
    if out["write_binary"]:
        io_formats.save_matrix_binary(_p("kron_scene.bin"), kron.entries, chash)
    if out["write_pgm"]:
        n = grid.pixels_per_side
        io_formats.save_pgm(_p("kron_scene.pgm"), kron.entries,
                            kron.entries.shape, chash)
        io_formats.save_pgm(_p("reflectivity.pgm"), reflectivity.values,
                            (n, n), chash)
    payload = report.to_dict()
    payload.update({
        "fc_hz": config["waveform"]["center_frequency_hz"],
        "mode": config["mode"],
        "iterations_run": history[-1].iteration,
        "provenance": _provenance(config, threads),
    })
    io_formats.save_json_report(_p("metrics.json"), payload, chash)
    return report, paths, history


def run_analysis(config, subcommand, output_dir, threads=None,
                 ric_overrides=None, kernel_quads=None):
    """Analysis front-ends; returns the path of the written report."""
    import numpy as np

    from . import analysis, forward
    from . import config as cfg
    from . import io_formats

    chash = cfg.config_hash(config)
    os.makedirs(output_dir, exist_ok=True)
    grid = cfg.build_scene_grid(config)
    geometry = cfg.build_geometry(config)
    blk = config["analysis"]

    if subcommand == "bound":
        omega_c = 2 * np.pi * config["waveform"]["center_frequency_hz"]
        report = analysis.check_resolution_condition(
            grid, geometry.transmitter, omega_c, blk["resolution_margin"])
        payload = report.to_dict()
        payload["center_frequency_hz"] = config["waveform"]["center_frequency_hz"]
        path = os.path.join(output_dir, "resolution_report.json")
        io_formats.save_json_report(path, payload, chash)
        return path

    if subcommand == "kernels":
        sampling = cfg.build_sampling(config,
                                      num_frequencies=blk["kernel_num_frequencies"],
                                      num_slow_times=blk["kernel_num_slow_times"])
        kcfg = analysis.KernelConfig(
            grid, geometry, sampling,
            mode="phaseless" if config["mode"] == "auto" else "cross")
        rng = np.random.default_rng(config["seed"])
        count = kernel_quads or blk["kernel_quads"]
        quads = analysis.sample_quads(grid.npix, count // 2, rng, "I1")
        i2_class = "I2-tilde" if kcfg.mode == "phaseless" else "I2"
        quads += analysis.sample_quads(grid.npix, count - count // 2, rng,
                                       i2_class, kcfg.mode)
        estimates = analysis.compare_kernels(quads, kcfg)
        rows = []
        for est in estimates:
            bf, asym = est.brute_force, est.asymptotic
            rel = (abs(bf - asym) / abs(bf)) if bf and abs(bf) > 0 else float("nan")
            rows.append((*est.quad, est.classification, bf.real, bf.imag,
                         asym.real, asym.imag, rel, len(est.stationary_points)))
        path = os.path.join(output_dir, "kernel_comparison.csv")
        io_formats._write_csv(
            path, io_formats._hash_comment(chash),
            ["k", "kp", "l", "lp", "class", "bruteforce_re", "bruteforce_im",
             "asymptotic_re", "asymptotic_im", "rel_error", "num_stationary"],
            rows)
        return path

    if subcommand == "ric":
        over = ric_overrides or {}
        sampling = cfg.build_sampling(
            config, num_frequencies=blk["ric_num_frequencies"],
            num_slow_times=blk["ric_num_slow_times"])
        operator = forward.assemble_forward(
            grid, geometry, sampling,
            amplitude_mode=config["model"]["amplitude_mode"],
            memory_budget=cfg.memory_budget())
        rank = over.get("rank", blk["ric_rank"])
        samples = over.get("samples", blk["ric_samples"])
        seed = over.get("seed", config["seed"])
        probe = analysis.empirical_ric(operator, rank, samples, seed)
        envelope = analysis.trace_envelope_inflation(operator, samples, seed,
                                                     rank)
        payload = probe.to_dict()
        payload.update({
            "mode": config["mode"],
            "center_frequency_hz": config["waveform"]["center_frequency_hz"],
            "envelope_inflation": envelope["inflation"],
            "envelope_expected_psd_level": envelope["expected_psd_level"],
        })
        path = os.path.join(output_dir, "ric_report.json")
        io_formats.save_json_report(path, payload, chash)
        return path

    raise ValueError(f"unknown analysis subcommand: {subcommand}")


def run_table2(config, output_dir, threads=None):
    """Run the four frequency/mode cells and collect the results table."""
    import copy

    from . import config as cfg
    from . import io_formats

    os.makedirs(output_dir, exist_ok=True)
    rows = []
    reports = {}
    for fc_hz, mode in TABLE2_CELLS:
        cell = copy.deepcopy(config)
        cell["waveform"]["center_frequency_hz"] = fc_hz
        cell["mode"] = mode
        cell_dir = os.path.join(output_dir, _cell_dirname(fc_hz, mode))
        report, _, _ = run_reconstruction(cell, cell_dir, threads)
        rows.append((fc_hz, mode, report.trace, report.numerical_rank,
                     report.data_error, report.kron_error,
                     report.reflectivity_error))
        reports[(fc_hz, mode)] = report
    path = os.path.join(output_dir, "table2_results.csv")
    io_formats.save_table_csv(path, rows, cfg.config_hash(config))
    return reports, path


def _add_common(parser):
    parser.add_argument("--config", help="path to a JSON config (default: built-in)")
    parser.add_argument("--output-dir", help="output directory override")
    parser.add_argument("--threads", type=int, help="BLAS thread count")
    parser.add_argument("--seed", type=int, help="seed override")
    parser.add_argument("--mode", choices=["cross", "auto"], help="mode override")
    parser.add_argument("--fc", type=float, help="center frequency override [Hz]")


def _apply_threads(threads):
    if threads:
        for var in ("OMP_NUM_THREADS", "OPENBLAS_NUM_THREADS",
                    "MKL_NUM_THREADS"):
            os.environ[var] = str(threads)


def _resolve(args):
    from . import config as cfg

    overrides = {"fc_hz": args.fc, "mode": args.mode, "seed": args.seed,
                 "output_dir": args.output_dir}
    config = cfg.load_config(args.config, overrides)
    output_dir = config["output"]["directory"]
    return config, output_dir


def main(argv=None):
    parser = argparse.ArgumentParser(
        prog="sarlift",
        description="Passive-radar imaging by low-rank lifted reconstruction")
    sub = parser.add_subparsers(dest="command", required=True)

    p_sim = sub.add_parser("simulate", help="write correlated measurements")
    _add_common(p_sim)

    p_rec = sub.add_parser("reconstruct", help="simulate + solve + report")
    _add_common(p_rec)
    p_rec.add_argument("--expect-success", action="store_true",
                       help="exit 1 unless the success criterion is met")

    p_ana = sub.add_parser("analyze", help="theory validation reports")
    p_ana.add_argument("what", choices=["bound", "kernels", "ric"])
    _add_common(p_ana)
    p_ana.add_argument("--rank", type=int, help="RIC probe rank")
    p_ana.add_argument("--samples", type=int, help="RIC probe count")
    p_ana.add_argument("--quads", type=int, help="kernel quad count")

    p_tab = sub.add_parser("reproduce-table2",
                           help="run the four frequency/mode cells")
    _add_common(p_tab)

    args = parser.parse_args(argv)
    _apply_threads(args.threads)
    config, output_dir = _resolve(args)

    if args.command == "simulate":
        paths = run_simulation(config, output_dir, args.threads)
        print(f"wrote {paths['measurements']}")
        return 0

    if args.command == "reconstruct":
        report, paths, _ = run_reconstruction(config, output_dir, args.threads)
        print(json.dumps(report.to_dict(), indent=2, sort_keys=True))
        print(f"artifacts in {output_dir}")
        if args.expect_success and not report.success:
            return 1
        return 0

    if args.command == "analyze":
        ric_overrides = {}
        if args.rank is not None:
            ric_overrides["rank"] = args.rank
        if args.samples is not None:
            ric_overrides["samples"] = args.samples
        if args.seed is not None:
            ric_overrides["seed"] = args.seed
        path = run_analysis(config, args.what, output_dir, args.threads,
                            ric_overrides=ric_overrides,
                            kernel_quads=args.quads)
        print(f"wrote {path}")
        return 0

    if args.command == "reproduce-table2":
        reports, path = run_table2(config, output_dir, args.threads)
        for (fc_hz, mode), report in reports.items():
            print(f"fc={fc_hz:.3g} Hz mode={mode}: trace={report.trace:.4f} "
                  f"rank={report.numerical_rank} E_d={report.data_error:.3e} "
                  f"success={report.success}")
        print(f"wrote {path}")
        return 0

    return 2


if __name__ == "__main__":
    sys.exit(main())
