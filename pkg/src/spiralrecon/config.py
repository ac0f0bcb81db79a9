"""
Experiment configuration.

One INI file drives a whole experiment. Every key is optional::

    [grid]
    n = 128

    [trajectory]
    arms = 6
    samples = 512
    turns = 10.67          ; default: n / (2 * arms)
    file = traj.csv        ; use a stored trajectory instead of a spiral

    [noise]
    snr_db = 30            ; "none" for noise-free data
    seed = 0

    [hyper]
    lambda1 = 0.1
    alpha1 = 20
    lambda0 = 0.5
    alpha0 = 10

    [optimizer]
    max_iters = 50
    rel_tol = 1e-6
    grad_tol = 0
    ls_max_evals = 3
    init = zero            ; zero | adjoint | user
    init_file = f0.bin     ; required for init = user

    [gridding]
    kernel_width = 7
    oversampling = 2.0
    beta = auto
    density = voronoi      ; voronoi | radial-spiral | uniform | user-weights
    weights_file = w.csv

    [phantom]
    spec_file = phantom.ini

    [sweep]
    arms = 4, 6, 8, 10
    samples = 512
    snr_db = none
    methods = regularized, gridding
    sensitivity_factors = 0.25, 0.5, 1, 2, 4

    [output]
    directory = out

Relative paths are resolved against the directory of the config file.
Environment-level settings come from ``SPIRALRECON_*`` variables, which may be
placed in a ``.env`` file.
"""

import configparser
import logging
import os
from dataclasses import dataclass, field, replace
from pathlib import Path
from typing import Optional, Union

from dotenv import find_dotenv, load_dotenv

from spiralrecon.arrayio import load_array
from spiralrecon.choices import DensityMethod, InitMode, Method
from spiralrecon.errors import ConfigError, ReconError
from spiralrecon.forward import NoiseSpec
from spiralrecon.gridding import GriddingConfig, load_weights
from spiralrecon.objective import Hyperparameters
from spiralrecon.optimizer import OptimConfig
from spiralrecon.phantom import PhantomSpec, default_phantom_spec, load_phantom_spec

logger = logging.getLogger(__name__)

PathLike = Union[str, Path]

ENV_LOG_LEVEL = "SPIRALRECON_LOG_LEVEL"
ENV_CACHE_DIR = "SPIRALRECON_CACHE_DIR"
ENV_WORKERS = "SPIRALRECON_WORKERS"


@dataclass(frozen=True)
class TrajectorySettings:
    """Spiral parameters, or a trajectory file that replaces them."""

    arms: int = 6
    samples: int = 512
    turns: Optional[float] = None
    file: Optional[Path] = None


@dataclass(frozen=True)
class SweepSettings:
    """
    Experiment grid.

    Cells are the product ``arms × samples × snr_db``; a single-valued list
    fixes that axis, so each of the three classic sweeps is one config.
    """

    arms: tuple[int, ...] = (4, 6, 8, 10)
    samples: tuple[int, ...] = (512,)
    snr_db: tuple[Optional[float], ...] = (None,)
    methods: tuple[Method, ...] = (Method.REGULARIZED, Method.GRIDDING)
    sensitivity_factors: tuple[float, ...] = (0.25, 0.5, 1.0, 2.0, 4.0)

    def __post_init__(self) -> None:
        for name in ("arms", "samples", "snr_db", "methods", "sensitivity_factors"):
            if not getattr(self, name):
                raise ConfigError(f"sweep list '{name}' must not be empty")
        if any(a < 1 for a in self.arms) or any(s < 2 for s in self.samples):
            raise ConfigError("sweep arms must be >= 1 and samples >= 2")
        if any(not f > 0 for f in self.sensitivity_factors):
            raise ConfigError("sensitivity factors must be positive")


@dataclass(frozen=True)
class ExperimentConfig:
    """Everything one run or sweep needs."""

    n_grid: int = 128
    trajectory: TrajectorySettings = field(default_factory=TrajectorySettings)
    noise: NoiseSpec = field(default_factory=NoiseSpec)
    hyper: Hyperparameters = field(default_factory=Hyperparameters)
    optimizer: OptimConfig = field(default_factory=OptimConfig)
    gridding: GriddingConfig = field(default_factory=GriddingConfig)
    phantom: Optional[PhantomSpec] = None
    sweep: SweepSettings = field(default_factory=SweepSettings)
    output: Path = Path("out")

    @property
    def seed(self) -> int:
        return self.noise.seed

    @property
    def phantom_spec(self) -> PhantomSpec:
        return self.phantom if self.phantom is not None else default_phantom_spec(self.n_grid)

    def with_seed(self, seed: int) -> "ExperimentConfig":
        return replace(self, noise=replace(self.noise, seed=seed))

    def with_output(self, output: PathLike) -> "ExperimentConfig":
        return replace(self, output=Path(output))


@dataclass(frozen=True)
class EnvSettings:
    """Settings read from the environment."""

    log_level: str = "INFO"
    cache_dir: Optional[Path] = None
    workers: int = 1


def load_env_settings(dotenv: bool = True) -> EnvSettings:
    """
    Read ``SPIRALRECON_*`` variables after loading the nearest ``.env`` file
    above the working directory.

    Raises:
        ConfigError: A variable holds an unusable value
    """
    if dotenv:
        load_dotenv(find_dotenv(usecwd=True))
    workers_text = os.getenv(ENV_WORKERS, "1")
    try:
        workers = int(workers_text)
    except ValueError as e:
        raise ConfigError(f"{ENV_WORKERS} must be an integer, got '{workers_text}'") from e
    if workers < 1:
        raise ConfigError(f"{ENV_WORKERS} must be >= 1")
    cache_dir = os.getenv(ENV_CACHE_DIR)
    return EnvSettings(
        log_level=os.getenv(ENV_LOG_LEVEL, "INFO").upper(),
        cache_dir=Path(cache_dir) if cache_dir else None,
        workers=workers,
    )


def _optional_float(text: str) -> Optional[float]:
    text = text.strip().lower()
    if text in ("", "none", "auto"):
        return None
    return float(text)


def _list(text: str) -> list[str]:
    return [item.strip() for item in text.split(",") if item.strip()]


def _existing(base: Path, text: str) -> Path:
    path = Path(text)
    if not path.is_absolute():
        path = base / path
    if not path.exists():
        raise ConfigError(f"referenced file does not exist: {path}")
    return path


def load_config(path: Optional[PathLike] = None) -> ExperimentConfig:
    """
    Parse an experiment config; ``None`` returns the defaults.

    Raises:
        ConfigError: Unreadable file, bad value, missing referenced file or
            empty sweep list
    """
    if path is None:
        return ExperimentConfig()
    path = Path(path)
    parser = configparser.ConfigParser(inline_comment_prefixes=(";", "#"))
    try:
        with path.open(encoding="utf-8") as fh:
            parser.read_file(fh)
    except (OSError, configparser.Error) as e:
        raise ConfigError(f"cannot read config {path}: {e}") from e
    base = path.parent

    def section(name: str) -> configparser.SectionProxy:
        if not parser.has_section(name):
            parser.add_section(name)
        return parser[name]

    try:
        n_grid = section("grid").getint("n", 128)

        t = section("trajectory")
        trajectory = TrajectorySettings(
            arms=t.getint("arms", 6),
            samples=t.getint("samples", 512),
            turns=_optional_float(t.get("turns", "auto")),
            file=_existing(base, t["file"]) if "file" in t else None,
        )

        ns = section("noise")
        noise = NoiseSpec(
            snr_db=_optional_float(ns.get("snr_db", "none")),
            seed=ns.getint("seed", 0),
        )

        h = section("hyper")
        hyper = Hyperparameters(
            lambda1=h.getfloat("lambda1", 0.1),
            alpha1=h.getfloat("alpha1", 20.0),
            lambda0=h.getfloat("lambda0", 0.5),
            alpha0=h.getfloat("alpha0", 10.0),
        )

        o = section("optimizer")
        init = InitMode.from_string(o.get("init", "zero"))
        init_image = load_array(_existing(base, o["init_file"])) if "init_file" in o else None
        optimizer = OptimConfig(
            max_iters=o.getint("max_iters", 50),
            rel_tol=o.getfloat("rel_tol", 1e-6),
            grad_tol=o.getfloat("grad_tol", 0.0),
            ls_max_evals=o.getint("ls_max_evals", 3),
            init=init,
            init_image=init_image,
        )

        g = section("gridding")
        density = DensityMethod.from_string(g.get("density", "voronoi"))
        weights = (
            tuple(load_weights(_existing(base, g["weights_file"])).weights)
            if "weights_file" in g
            else None
        )
        gridding = GriddingConfig(
            kernel_width=g.getint("kernel_width", 7),
            oversampling=g.getfloat("oversampling", 2.0),
            beta=_optional_float(g.get("beta", "auto")),
            density=density,
            arms=trajectory.arms,
            weights=weights,
        )

        p = section("phantom")
        phantom = load_phantom_spec(_existing(base, p["spec_file"])) if "spec_file" in p else None

        s = section("sweep")
        sweep = SweepSettings(
            arms=tuple(int(v) for v in _list(s.get("arms", "4, 6, 8, 10"))),
            samples=tuple(int(v) for v in _list(s.get("samples", "512"))),
            snr_db=tuple(_optional_float(v) for v in _list(s.get("snr_db", "none"))),
            methods=tuple(
                Method.from_string(v) for v in _list(s.get("methods", "regularized, gridding"))
            ),
            sensitivity_factors=tuple(
                float(v) for v in _list(s.get("sensitivity_factors", "0.25, 0.5, 1, 2, 4"))
            ),
        )

        output = Path(section("output").get("directory", "out"))
        if not output.is_absolute():
            output = base / output
    except ConfigError:
        raise
    except (ValueError, KeyError, ReconError) as e:
        raise ConfigError(f"{path}: {e}") from e

    if phantom is not None and phantom.n_grid != n_grid:
        raise ConfigError(
            f"phantom grid {phantom.n_grid} does not match [grid] n = {n_grid}"
        )
    logger.debug("loaded config %s", path)
    return ExperimentConfig(
        n_grid=n_grid,
        trajectory=trajectory,
        noise=noise,
        hyper=hyper,
        optimizer=optimizer,
        gridding=gridding,
        phantom=phantom,
        sweep=sweep,
        output=output,
    )
