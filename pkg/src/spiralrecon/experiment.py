"""
End-to-end runs: phantom, trajectory, simulated data, both reconstructions
and their metrics, plus the sweep and hyperparameter-sensitivity drivers.
"""

import csv
import itertools
import logging
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, replace
from pathlib import Path
from typing import Optional, Union

import numpy as np

from spiralrecon.choices import Method
from spiralrecon.config import ExperimentConfig
from spiralrecon.forward import (
    ComplexImage,
    ImageLike,
    KSpaceSamples,
    NoiseSpec,
    add_noise,
    nudft_forward,
)
from spiralrecon.gridding import GriddingConfig, grid_reconstruct
from spiralrecon.kernels import KernelCache, precompute
from spiralrecon.metrics import quad_error, roi_variance
from spiralrecon.objective import Hyperparameters, make_context
from spiralrecon.optimizer import OptimConfig, OptimReport, minimize
from spiralrecon.pgm import save_difference, save_magnitude, save_phase
from spiralrecon.phantom import ROI, make_phantom
from spiralrecon.trajectory import Trajectory, generate_spiral, load_trajectory

logger = logging.getLogger(__name__)

PathLike = Union[str, Path]

RESULT_COLUMNS = (
    "run-id",
    "arms",
    "samples",
    "snr_db",
    "method",
    "roi",
    "absolute",
    "normalized",
    "variance",
)
SENSITIVITY_COLUMNS = ("parameter", "value", "absolute", "normalized")
HYPER_FIELDS = ("lambda1", "alpha1", "lambda0", "alpha0")


def _fmt(value: Optional[float]) -> str:
    return "none" if value is None else f"{value:.17g}"


def build_trajectory(config: ExperimentConfig) -> Trajectory:
    """Stored trajectory when configured, otherwise the configured spiral."""
    t = config.trajectory
    if t.file is not None:
        return load_trajectory(t.file)
    return generate_spiral(t.arms, t.samples, turns=t.turns, n_grid=config.n_grid)


def simulate(image: ImageLike, traj: Trajectory, noise: NoiseSpec) -> KSpaceSamples:
    """Forward model followed by optional noise."""
    return add_noise(nudft_forward(image, traj), noise)


def reconstruct_regularized(
    samples: KSpaceSamples,
    traj: Trajectory,
    n_grid: int,
    hyper: Hyperparameters,
    optimizer: OptimConfig,
    cache: Optional[KernelCache] = None,
) -> tuple[ComplexImage, OptimReport]:
    """Precompute the kernels and run the conjugate gradient."""
    kernels = precompute(samples, traj, n_grid, cache=cache)
    return minimize(make_context(kernels, samples, hyper), optimizer)


def reconstruct_gridding(
    samples: KSpaceSamples, traj: Trajectory, n_grid: int, config: GriddingConfig
) -> ComplexImage:
    return grid_reconstruct(samples, traj, n_grid, config)


@dataclass(frozen=True, order=True)
class SweepCell:
    """One acquisition of the experiment grid."""

    index: int
    arms: int
    samples: int
    snr_db: Optional[float]

    @property
    def run_id(self) -> str:
        snr = "none" if self.snr_db is None else f"{self.snr_db:g}"
        return f"a{self.arms}-s{self.samples}-snr{snr}"


@dataclass(frozen=True)
class ResultRow:
    """One (cell, method, ROI) line of the results table."""

    run_id: str
    arms: int
    samples: int
    snr_db: Optional[float]
    method: Method
    roi: str
    absolute: float
    normalized: Optional[float]
    variance: float

    def as_csv(self) -> tuple[str, ...]:
        return (
            self.run_id,
            str(self.arms),
            str(self.samples),
            _fmt(self.snr_db),
            str(self.method),
            self.roi,
            _fmt(self.absolute),
            _fmt(self.normalized),
            _fmt(self.variance),
        )


def sweep_cells(config: ExperimentConfig) -> list[SweepCell]:
    """Cells of ``arms × samples × snr_db`` in a fixed order."""
    s = config.sweep
    return [
        SweepCell(i, arms, samples, snr)
        for i, (arms, samples, snr) in enumerate(
            itertools.product(s.arms, s.samples, s.snr_db)
        )
    ]


def cell_seed(seed: int, index: int) -> int:
    """Independent 64-bit noise seed for one cell, split from the run seed."""
    sequence = np.random.SeedSequence(seed, spawn_key=(index,))
    return int(sequence.generate_state(1, dtype=np.uint64)[0])


def score(
    image: ComplexImage, reference: ComplexImage, rois: tuple[ROI, ...]
) -> list[tuple[str, float, Optional[float], float]]:
    """``(roi, absolute, normalized, variance)`` per ROI."""
    rows = []
    for roi in rois:
        error = quad_error(image, reference, roi)
        rows.append((roi.name, error.absolute, error.normalized, roi_variance(image, roi)))
    return rows


def run_cell(
    config: ExperimentConfig,
    cell: SweepCell,
    cache: Optional[KernelCache] = None,
    image_dir: Optional[Path] = None,
) -> list[ResultRow]:
    """Simulate one acquisition and score every configured method on it."""
    reference, roi1, roi2 = make_phantom(config.phantom_spec)
    n = config.n_grid
    traj = generate_spiral(cell.arms, cell.samples, turns=config.trajectory.turns, n_grid=n)
    noise = NoiseSpec(snr_db=cell.snr_db, seed=cell_seed(config.seed, cell.index))
    samples = simulate(reference, traj, noise)

    rows: list[ResultRow] = []
    for method in config.sweep.methods:
        if method == Method.REGULARIZED:
            image, report = reconstruct_regularized(
                samples, traj, n, config.hyper, config.optimizer, cache
            )
            logger.debug("%s: stop=%s", cell.run_id, report.stop_reason)
        else:
            gridding = replace(config.gridding, arms=cell.arms)
            image = reconstruct_gridding(samples, traj, n, gridding)
        if image_dir is not None:
            stem = image_dir / f"{cell.run_id}_{method}"
            save_magnitude(stem.with_name(stem.name + "_mag.pgm"), image.values)
            save_phase(stem.with_name(stem.name + "_phase.pgm"), image.values)
            save_difference(
                stem.with_name(stem.name + "_diff.pgm"), image.values, reference.values
            )
        for roi, absolute, normalized, variance in score(image, reference, (roi1, roi2)):
            rows.append(
                ResultRow(
                    cell.run_id,
                    cell.arms,
                    cell.samples,
                    cell.snr_db,
                    method,
                    roi,
                    absolute,
                    normalized,
                    variance,
                )
            )
    logger.info("finished cell %s", cell.run_id)
    return rows


def run_sweep(
    config: ExperimentConfig,
    workers: int = 1,
    cache: Optional[KernelCache] = None,
    image_dir: Optional[Path] = None,
) -> list[ResultRow]:
    """
    Run every cell, possibly on several threads.

    Rows come back ordered by cell index, then method order, then ROI, so the
    results do not depend on scheduling.
    """
    cells = sweep_cells(config)
    logger.info("sweep: %d cells on %d worker(s)", len(cells), workers)
    if workers <= 1:
        per_cell = [run_cell(config, cell, cache, image_dir) for cell in cells]
    else:
        with ThreadPoolExecutor(max_workers=workers) as pool:
            per_cell = list(
                pool.map(lambda cell: run_cell(config, cell, cache, image_dir), cells)
            )
    return [row for rows in per_cell for row in rows]


def write_results(rows: list[ResultRow], path: PathLike) -> Path:
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    with path.open("w", encoding="utf-8", newline="") as fh:
        writer = csv.writer(fh, lineterminator="\n")
        writer.writerow(RESULT_COLUMNS)
        for row in rows:
            writer.writerow(row.as_csv())
    return path


@dataclass(frozen=True)
class SensitivityRow:
    parameter: str
    value: float
    absolute: float
    normalized: Optional[float]


def run_sensitivity(
    config: ExperimentConfig, cache: Optional[KernelCache] = None
) -> list[SensitivityRow]:
    """
    Vary one hyperparameter at a time around the configured values.

    The acquisition is the configured trajectory and noise; each of
    λ1, α1, λ0, α0 is scaled by every factor of ``sweep.sensitivity_factors``
    while the others keep their configured values. The ROI1 quadratic error of
    the regularized reconstruction is recorded.
    """
    reference, roi1, _ = make_phantom(config.phantom_spec)
    traj = build_trajectory(config)
    samples = simulate(reference, traj, config.noise)
    kernels = precompute(samples, traj, config.n_grid, cache=cache)

    rows: list[SensitivityRow] = []
    for name in HYPER_FIELDS:
        for factor in config.sweep.sensitivity_factors:
            value = getattr(config.hyper, name) * factor
            hyper = replace(config.hyper, **{name: value})
            image, _ = minimize(make_context(kernels, samples, hyper), config.optimizer)
            error = quad_error(image, reference, roi1)
            rows.append(SensitivityRow(name, value, error.absolute, error.normalized))
            logger.info("sensitivity %s=%g: error %.6g", name, value, error.absolute)
    return rows


def write_sensitivity(rows: list[SensitivityRow], path: PathLike) -> Path:
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    with path.open("w", encoding="utf-8", newline="") as fh:
        writer = csv.writer(fh, lineterminator="\n")
        writer.writerow(SENSITIVITY_COLUMNS)
        for row in rows:
            writer.writerow(
                (row.parameter, _fmt(row.value), _fmt(row.absolute), _fmt(row.normalized))
            )
    return path


def load_results(path: PathLike) -> list[dict[str, str]]:
    """Rows of a results or sensitivity CSV as string dictionaries."""
    with Path(path).open("r", encoding="utf-8", newline="") as fh:
        return list(csv.DictReader(fh))
