"""
Command-line interface.

Each subcommand reads and writes the shared file formats (binary arrays,
trajectory/weights/result CSVs, 16-bit PGM images) under ``--out``::

    spiralrecon phantom --out run
    spiralrecon traj --out run --arms 6 --samples 512
    spiralrecon simulate --out run --snr 30
    spiralrecon precompute --out run
    spiralrecon recon-reg --out run
    spiralrecon recon-grid --out run
    spiralrecon metrics --out run --recon run/recon_reg.bin --method regularized
    spiralrecon psf --out run
    spiralrecon sweep --config sweep.ini
    spiralrecon sensitivity --config sweep.ini
"""

import argparse
import csv
import logging
import sys
from dataclasses import replace
from pathlib import Path
from typing import Callable, Optional, Sequence

import numpy as np

from spiralrecon import __version__
from spiralrecon.arrayio import load_array, save_array
from spiralrecon.choices import Method
from spiralrecon.config import (
    EnvSettings,
    ExperimentConfig,
    TrajectorySettings,
    load_config,
    load_env_settings,
)
from spiralrecon.errors import InvalidArgumentError, ReconError
from spiralrecon.experiment import (
    RESULT_COLUMNS,
    ResultRow,
    build_trajectory,
    run_sensitivity,
    run_sweep,
    score,
    simulate,
    write_results,
    write_sensitivity,
)
from spiralrecon.forward import ComplexImage, KSpaceSamples
from spiralrecon.gridding import grid_reconstruct, save_weights
from spiralrecon.kernels import (
    KernelCache,
    PrecomputedKernels,
    alias_ring_radius,
    compute_d,
    export_psf,
    load_kernel,
    save_kernel,
)
from spiralrecon.objective import make_context
from spiralrecon.optimizer import minimize, save_trace
from spiralrecon.pgm import save_difference, save_magnitude, save_phase
from spiralrecon.phantom import make_phantom
from spiralrecon.trajectory import Trajectory, load_trajectory, save_trajectory

logger = logging.getLogger(__name__)

PHANTOM_FILE = "phantom.bin"
TRAJ_FILE = "traj.csv"
SAMPLES_FILE = "samples.bin"
G_FILE = "g.bin"
G_HASH_FILE = "g.sha256"
D_FILE = "d.bin"
REG_FILE = "recon_reg.bin"
GRID_FILE = "recon_grid.bin"
RESULTS_FILE = "results.csv"
SENSITIVITY_FILE = "sensitivity.csv"


class Context:
    """Parsed arguments with the resolved config and environment."""

    def __init__(self, args: argparse.Namespace, config: ExperimentConfig, env: EnvSettings):
        self.args = args
        self.config = config
        self.env = env

    @property
    def out(self) -> Path:
        return self.config.output

    def path(self, override: Optional[str], default_name: str) -> Path:
        return Path(override) if override else self.out / default_name

    def cache(self) -> KernelCache:
        directory = self.env.cache_dir or self.out / "cache"
        return KernelCache(directory)

    def trajectory(self) -> Trajectory:
        given = getattr(self.args, "traj", None)
        if given:
            return load_trajectory(given)
        stored = self.out / TRAJ_FILE
        if stored.exists():
            return load_trajectory(stored)
        return build_trajectory(self.config)

    def reference(self) -> ComplexImage:
        given = getattr(self.args, "phantom", None) or getattr(self.args, "reference", None)
        if given:
            return ComplexImage(load_array(given))
        stored = self.out / PHANTOM_FILE
        if stored.exists():
            return ComplexImage(load_array(stored))
        image, _, _ = make_phantom(self.config.phantom_spec)
        return image

    def samples(self, traj: Trajectory) -> KSpaceSamples:
        samples = KSpaceSamples(load_array(self.path(self.args.data, SAMPLES_FILE)))
        if samples.size != traj.size:
            raise InvalidArgumentError(
                f"data has {samples.size} samples but the trajectory has {traj.size}"
            )
        return samples


def _export_image(ctx: Context, stem: str, image: ComplexImage) -> None:
    save_magnitude(ctx.out / f"{stem}_mag.pgm", image.values)
    save_phase(ctx.out / f"{stem}_phase.pgm", image.values)


def cmd_phantom(ctx: Context) -> int:
    image, roi1, roi2 = make_phantom(ctx.config.phantom_spec)
    save_array(ctx.out / PHANTOM_FILE, image.values)
    save_array(ctx.out / "roi1.bin", roi1.mask.astype(np.complex128))
    save_array(ctx.out / "roi2.bin", roi2.mask.astype(np.complex128))
    _export_image(ctx, "phantom", image)
    print(f"phantom N={image.n_grid}: roi1 {roi1.size} px, roi2 {roi2.size} px")
    return 0


def cmd_traj(ctx: Context) -> int:
    traj = build_trajectory(ctx.config)
    path = save_trajectory(traj, ctx.out / TRAJ_FILE)
    print(f"wrote {traj.size} points to {path}")
    return 0


def cmd_simulate(ctx: Context) -> int:
    traj = ctx.trajectory()
    samples = simulate(ctx.reference(), traj, ctx.config.noise)
    path = save_array(ctx.out / SAMPLES_FILE, samples.values)
    print(f"wrote {samples.size} samples to {path}")
    return 0


def cmd_precompute(ctx: Context) -> int:
    traj = ctx.trajectory()
    samples = ctx.samples(traj)
    n = ctx.config.n_grid
    g = ctx.cache().get_or_compute(traj, n)
    save_kernel(g, traj.fingerprint(), ctx.out / G_FILE, ctx.out / G_HASH_FILE)
    save_array(ctx.out / D_FILE, compute_d(samples, traj, n))
    print(f"wrote G {g.shape} and D for N={n}")
    return 0


def _kernels(ctx: Context, traj: Trajectory, samples: KSpaceSamples) -> PrecomputedKernels:
    n = ctx.config.n_grid
    fingerprint = traj.fingerprint()
    g_path = ctx.path(ctx.args.kernel, G_FILE)
    if g_path.exists():
        g = load_kernel(g_path, g_path.with_suffix(".sha256"), fingerprint, n)
    else:
        g = ctx.cache().get_or_compute(traj, n)
    return PrecomputedKernels(g, compute_d(samples, traj, n), n, fingerprint)


def cmd_recon_reg(ctx: Context) -> int:
    traj = ctx.trajectory()
    samples = ctx.samples(traj)
    kernels = _kernels(ctx, traj, samples)
    image, report = minimize(
        make_context(kernels, samples, ctx.config.hyper), ctx.config.optimizer
    )
    save_array(ctx.out / REG_FILE, image.values)
    save_trace(report, ctx.out / "trace.csv")
    _export_image(ctx, "recon_reg", image)
    print(
        f"regularized: {report.iterations} iterations, stop={report.stop_reason}, "
        f"J={report.criterion_trace[-1]:.6g}"
    )
    return 0


def cmd_recon_grid(ctx: Context) -> int:
    traj = ctx.trajectory()
    samples = ctx.samples(traj)
    weights = ctx.config.gridding.density_weights(traj)
    save_weights(weights, ctx.out / "weights.csv")
    image = grid_reconstruct(samples, traj, ctx.config.n_grid, ctx.config.gridding, weights)
    save_array(ctx.out / GRID_FILE, image.values)
    _export_image(ctx, "recon_grid", image)
    print(f"gridding: density={ctx.config.gridding.density}")
    return 0


def cmd_metrics(ctx: Context) -> int:
    args = ctx.args
    image = ComplexImage(load_array(args.recon))
    reference = ctx.reference()
    _, roi1, roi2 = make_phantom(ctx.config.phantom_spec)
    t = ctx.config.trajectory
    method = Method.from_string(args.method)
    save_difference(ctx.out / f"diff_{method}.pgm", image.values, reference.values)

    rows = [
        ResultRow(args.run_id, t.arms, t.samples, ctx.config.noise.snr_db, method, *scored)
        for scored in score(image, reference, (roi1, roi2))
    ]
    path = ctx.out / RESULTS_FILE
    new_file = not path.exists()
    path.parent.mkdir(parents=True, exist_ok=True)
    with path.open("a", encoding="utf-8", newline="") as fh:
        writer = csv.writer(fh, lineterminator="\n")
        if new_file:
            writer.writerow(RESULT_COLUMNS)
        for row in rows:
            writer.writerow(row.as_csv())
            print(f"{row.method} {row.roi}: absolute={row.absolute:.6g} variance={row.variance:.6g}")
    return 0


def cmd_psf(ctx: Context) -> int:
    traj = ctx.trajectory()
    g = ctx.cache().get_or_compute(traj, ctx.config.n_grid)
    export_psf(g, ctx.out / "psf.pgm", log_scale=ctx.args.log)
    ring = alias_ring_radius(g)
    print(f"first alias ring at u={ring}" if ring is not None else "no alias ring found")
    return 0


def cmd_sweep(ctx: Context) -> int:
    rows = run_sweep(
        ctx.config,
        workers=ctx.env.workers,
        cache=ctx.cache(),
        image_dir=ctx.out / "images",
    )
    path = write_results(rows, ctx.out / RESULTS_FILE)
    print(f"wrote {len(rows)} rows to {path}")
    return 0


def cmd_sensitivity(ctx: Context) -> int:
    rows = run_sensitivity(ctx.config, cache=ctx.cache())
    path = write_sensitivity(rows, ctx.out / SENSITIVITY_FILE)
    print(f"wrote {len(rows)} rows to {path}")
    return 0


def _common_options() -> argparse.ArgumentParser:
    common = argparse.ArgumentParser(add_help=False)
    common.add_argument("--config", help="Experiment INI file")
    common.add_argument("--out", help="Output directory (overrides [output])")
    common.add_argument("--seed", type=int, help="Top-level random seed")
    common.add_argument("--log-level", help="Logging level (default: $SPIRALRECON_LOG_LEVEL or INFO)")
    return common


def build_parser() -> argparse.ArgumentParser:
    common = _common_options()
    parser = argparse.ArgumentParser(
        prog="spiralrecon",
        description="Regularized and gridding reconstruction of spiral k-space data.",
    )
    parser.add_argument("--version", action="version", version=f"%(prog)s {__version__}")
    sub = parser.add_subparsers(dest="command", required=True)

    def add(name: str, func: Callable[[Context], int], help_text: str) -> argparse.ArgumentParser:
        p = sub.add_parser(name, parents=[common], help=help_text)
        p.set_defaults(func=func)
        return p

    p = add("phantom", cmd_phantom, "Build the phantom and its ROIs")

    p = add("traj", cmd_traj, "Generate the spiral trajectory")
    p.add_argument("--arms", type=int)
    p.add_argument("--samples", type=int)
    p.add_argument("--turns", type=float)

    p = add("simulate", cmd_simulate, "Simulate k-space samples")
    p.add_argument("--traj")
    p.add_argument("--phantom")
    p.add_argument("--snr", type=float, help="SNR in dB (default: config)")

    p = add("precompute", cmd_precompute, "Compute kernels G and D")
    p.add_argument("--traj")
    p.add_argument("--data", help="k-space samples file")

    p = add("recon-reg", cmd_recon_reg, "Regularized reconstruction")
    p.add_argument("--traj")
    p.add_argument("--data", help="k-space samples file")
    p.add_argument("--kernel", help="Precomputed G (with .sha256 sidecar)")

    p = add("recon-grid", cmd_recon_grid, "Gridding reconstruction")
    p.add_argument("--traj")
    p.add_argument("--data", help="k-space samples file")

    p = add("metrics", cmd_metrics, "Score a reconstruction against the reference")
    p.add_argument("--recon", required=True)
    p.add_argument("--reference")
    p.add_argument("--method", default="regularized")
    p.add_argument("--run-id", default="run")
    p.add_argument("--snr", type=float, help="SNR recorded in the results rows (default: config)")

    p = add("psf", cmd_psf, "Export |G| as the point spread function")
    p.add_argument("--traj")
    p.add_argument("--log", action="store_true", help="Log-scaled image")

    add("sweep", cmd_sweep, "Run the sweep matrix for both methods")
    add("sensitivity", cmd_sensitivity, "Vary one hyperparameter at a time")
    return parser


def _resolve_config(args: argparse.Namespace) -> ExperimentConfig:
    config = load_config(args.config)
    if args.out:
        config = config.with_output(args.out)
    if args.seed is not None:
        config = config.with_seed(args.seed)
    if getattr(args, "snr", None) is not None:
        config = replace(config, noise=replace(config.noise, snr_db=args.snr))
    overrides = {
        name: getattr(args, name)
        for name in ("arms", "samples", "turns")
        if getattr(args, name, None) is not None
    }
    if overrides:
        trajectory: TrajectorySettings = replace(config.trajectory, file=None, **overrides)
        config = replace(config, trajectory=trajectory)
    return config


def main(argv: Optional[Sequence[str]] = None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        env = load_env_settings()
        logging.basicConfig(
            level=(args.log_level or env.log_level).upper(),
            format="%(asctime)s %(levelname)s %(name)s: %(message)s",
        )
        config = _resolve_config(args)
        config.output.mkdir(parents=True, exist_ok=True)
        return int(args.func(Context(args, config, env)))
    except (ReconError, OSError, ValueError) as e:
        print(f"error: {e}", file=sys.stderr)
        return 1


if __name__ == "__main__":
    sys.exit(main())
