#!/usr/bin/env python3
"""Kernel-estimate study at a far-standoff geometry.

Compares brute-force kernel quadrature against the closed-form /
stationary-phase estimates and prints summary statistics, mirroring the
`sarlift analyze kernels` subcommand but with the receiver standoff
scaled to ~130x the scene extent, where the estimates are valid.
"""

import argparse

import numpy as np

from sarlift import (
    CircularArcTrajectory,
    ImagingGeometry,
    SamplingGrid,
    TransmitterModel,
    build_scene_grid,
)
from sarlift.analysis import KernelConfig, compare_kernels, sample_quads


def main():
    parser = argparse.ArgumentParser()
    parser.add_argument("--quads", type=int, default=100)
    parser.add_argument("--fc", type=float, default=760e6)
    parser.add_argument("--seed", type=int, default=7)
    args = parser.parse_args()

    grid = build_scene_grid(11, 10.0)
    rx1 = CircularArcTrajectory(18e3, 10e3, (0.0, np.pi / 2))
    rx2 = CircularArcTrajectory(18e3, 10e3, (0.0, np.pi / 2), offset=np.pi / 4)
    geometry = ImagingGeometry(rx1, rx2, TransmitterModel([120e3, 120e3, 50e3]))
    sampling = SamplingGrid(2 * np.pi * args.fc, 2 * np.pi * 8e6, 33,
                            rx1.interval, 4097)
    config = KernelConfig(grid, geometry, sampling)

    rng = np.random.default_rng(args.seed)
    quads = sample_quads(grid.npix, args.quads // 2, rng, "I1")
    quads += sample_quads(grid.npix, args.quads - len(quads), rng, "I2")
    estimates = compare_kernels(quads, config)

    for label in ("I1", "I2"):
        errs = [abs(e.brute_force - e.asymptotic) / abs(e.brute_force)
                for e in estimates
                if e.classification == label and abs(e.brute_force) > 0]
        if errs:
            print(f"{label}: n={len(errs)} relative deviation "
                  f"median={np.median(errs):.3f} max={np.max(errs):.3f}")


if __name__ == "__main__":
    main()
