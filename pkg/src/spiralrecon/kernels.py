"""
Trajectory and data kernels of the rewritten criterion.

G depends only on the trajectory and is computed once; D depends on the data
and is recomputed for every acquisition. Both arrays use the image axis
convention: the first axis is the ky / row shift ``v``, the second the
kx / column shift ``u``. For G, array index ``i`` stores shift ``i - (N - 1)``.
"""

import logging
import threading
from dataclasses import dataclass
from pathlib import Path
from typing import Optional, Union

import numpy as np

from spiralrecon.arrayio import load_array, save_array
from spiralrecon.errors import CacheMismatchError, InvalidArgumentError
from spiralrecon.forward import SamplesLike, nudft_adjoint
from spiralrecon.pgm import save_pgm, save_profile
from spiralrecon.trajectory import Trajectory, require_valid

logger = logging.getLogger(__name__)

PSF_EPSILON = 1e-12
BLOCK = 4096

PathLike = Union[str, Path]


@dataclass(frozen=True)
class PrecomputedKernels:
    """G ((2N-1)×(2N-1)), D (N×N) and the fingerprint of their trajectory."""

    g: np.ndarray
    d: np.ndarray
    n_grid: int
    fingerprint: str

    def __post_init__(self) -> None:
        size = 2 * self.n_grid - 1
        if self.g.shape != (size, size):
            raise InvalidArgumentError(
                f"G must be {size}×{size} for N={self.n_grid}, got {self.g.shape}"
            )
        if self.d.shape != (self.n_grid, self.n_grid):
            raise InvalidArgumentError(
                f"D must be {self.n_grid}×{self.n_grid}, got {self.d.shape}"
            )


def compute_g(traj: Trajectory, n_grid: int) -> np.ndarray:
    """
    ``G[v, u] = (1/N^2) * sum_l exp(i*2*pi*(kx_l*u + ky_l*v))`` for
    ``u, v`` in ``[1-N, N-1]``.

    Rows with ``v >= 0`` are summed directly; the others follow from
    ``G[-v, -u] = conj(G[v, u])``.
    """
    require_valid(traj)
    if n_grid < 1:
        raise InvalidArgumentError("n_grid must be positive")
    n = n_grid
    shifts = np.arange(1 - n, n, dtype=np.float64)
    rows = np.arange(0, n, dtype=np.float64)

    half = np.zeros((n, 2 * n - 1), dtype=np.complex128)
    for start in range(0, traj.size, BLOCK):
        stop = min(start + BLOCK, traj.size)
        ey = np.exp(2j * np.pi * np.outer(traj.ky[start:stop], rows))
        ex = np.exp(2j * np.pi * np.outer(traj.kx[start:stop], shifts))
        half += ey.T @ ex

    g = np.empty((2 * n - 1, 2 * n - 1), dtype=np.complex128)
    g[n - 1 :] = half / n**2
    g[: n - 1] = np.conj(g[::-1, ::-1][: n - 1])
    return g


def compute_d(samples: SamplesLike, traj: Trajectory, n_grid: int) -> np.ndarray:
    """Data kernel D; identical to the adjoint NUDFT of the samples."""
    return np.array(nudft_adjoint(samples, traj, n_grid).values)


class KernelCache:
    """
    Thread-safe store of trajectory kernels keyed by (fingerprint, N).

    Entries live in memory and, when ``directory`` is set, on disk as a
    binary G file plus a ``.sha256`` sidecar holding the trajectory hash.
    """

    def __init__(self, directory: Optional[PathLike] = None) -> None:
        self._entries: dict[tuple[str, int], np.ndarray] = {}
        self._lock = threading.RLock()
        self._building: dict[tuple[str, int], threading.Lock] = {}
        self.directory = Path(directory) if directory is not None else None

    def _paths(self, fingerprint: str, n_grid: int) -> tuple[Path, Path]:
        assert self.directory is not None
        stem = f"g_n{n_grid}_{fingerprint[:16]}"
        return (
            self.directory / f"{stem}.bin",
            self.directory / f"{stem}.sha256",
        )

    def get(self, traj: Trajectory, n_grid: int) -> Optional[np.ndarray]:
        """Cached G for a trajectory, or None."""
        key = (traj.fingerprint(), n_grid)
        with self._lock:
            if key in self._entries:
                return self._entries[key]
            if self.directory is None:
                return None
            data_path, hash_path = self._paths(*key)
            if not data_path.exists() or not hash_path.exists():
                return None
            g = load_kernel(data_path, hash_path, key[0], n_grid)
            self._entries[key] = g
            return g

    def put(self, traj: Trajectory, n_grid: int, g: np.ndarray) -> None:
        key = (traj.fingerprint(), n_grid)
        with self._lock:
            self._entries[key] = g
            if self.directory is not None:
                save_kernel(g, key[0], *self._paths(*key))

    def get_or_compute(self, traj: Trajectory, n_grid: int) -> np.ndarray:
        """
        Return G from the cache, building and storing it on a miss.

        Builds for different keys run concurrently; one key is built once.
        """
        key = (traj.fingerprint(), n_grid)
        with self._lock:
            key_lock = self._building.setdefault(key, threading.Lock())
        try:
            with key_lock:
                g = self.get(traj, n_grid)
                if g is not None:
                    logger.info("kernel cache hit for %r at N=%d", traj, n_grid)
                    return g
                logger.info("building G for %r at N=%d", traj, n_grid)
                g = compute_g(traj, n_grid)
                self.put(traj, n_grid, g)
                return g
        finally:
            with self._lock:
                if self._building.get(key) is key_lock:
                    del self._building[key]

    def clear(self) -> None:
        """Forget in-memory entries (files on disk are kept)."""
        with self._lock:
            self._entries.clear()

    def __len__(self) -> int:
        with self._lock:
            return len(self._entries)

    def __contains__(self, key: tuple[str, int]) -> bool:
        with self._lock:
            return key in self._entries

    def __repr__(self) -> str:
        with self._lock:
            return f"KernelCache(entries={len(self._entries)}, directory={self.directory})"


def save_kernel(
    g: np.ndarray, fingerprint: str, data_path: PathLike, hash_path: PathLike
) -> None:
    """Write G and its sidecar trajectory hash."""
    save_array(data_path, g)
    Path(hash_path).write_text(fingerprint + "\n", encoding="utf-8")


def load_kernel(
    data_path: PathLike,
    hash_path: PathLike,
    fingerprint: str,
    n_grid: Optional[int] = None,
) -> np.ndarray:
    """
    Read a cached G, requiring its sidecar hash to equal ``fingerprint``.

    Raises:
        CacheMismatchError: Hash or size mismatch
    """
    stored = Path(hash_path).read_text(encoding="utf-8").strip()
    if stored != fingerprint:
        raise CacheMismatchError(
            f"{data_path}: cached kernel belongs to trajectory {stored[:12]}, "
            f"not {fingerprint[:12]}"
        )
    g = load_array(data_path)
    if n_grid is not None and g.shape != (2 * n_grid - 1, 2 * n_grid - 1):
        raise CacheMismatchError(
            f"{data_path}: cached kernel has shape {g.shape}, expected N={n_grid}"
        )
    return g


_kernel_cache = KernelCache()


def get_kernel_cache() -> KernelCache:
    """Process-wide kernel cache."""
    return _kernel_cache


def set_kernel_cache_directory(directory: Optional[PathLike]) -> KernelCache:
    """Point the process-wide cache at a directory (None keeps it in memory)."""
    with _kernel_cache._lock:
        _kernel_cache.directory = Path(directory) if directory is not None else None
    return _kernel_cache


def clear_kernel_cache() -> None:
    _kernel_cache.clear()


def precompute(
    samples: SamplesLike,
    traj: Trajectory,
    n_grid: int,
    cache: Optional[KernelCache] = None,
) -> PrecomputedKernels:
    """
    Build both kernels for one acquisition.

    Args:
        samples: Acquired data aligned with ``traj``
        traj: Sampling trajectory
        n_grid: Reconstruction grid size N
        cache: Kernel cache to consult; defaults to the process-wide cache
    """
    cache = cache if cache is not None else _kernel_cache
    g = cache.get_or_compute(traj, n_grid)
    d = compute_d(samples, traj, n_grid)
    return PrecomputedKernels(g=g, d=d, n_grid=n_grid, fingerprint=traj.fingerprint())


def psf_profiles(g: np.ndarray) -> tuple[np.ndarray, np.ndarray]:
    """Central row and central column of |G| (shift ``1-N .. N-1``)."""
    center = g.shape[0] // 2
    mag = np.abs(g)
    return mag[center, :].copy(), mag[:, center].copy()


def alias_ring_radius(
    g: np.ndarray, min_radius: int = 3, rel_height: float = 0.5
) -> Optional[int]:
    """
    Distance of the first off-centre ring of |G| along the central row.

    The row is weighted by the shift, ``u * |G[0, u]|``, which flattens the
    roughly ``1/u`` decay of the central lobe. Among shifts
    ``u >= min_radius`` the first local maximum whose weighted height is at
    least ``rel_height`` times the largest weighted value in that range is
    returned, or None when the profile has no interior maximum.
    """
    row, _ = psf_profiles(g)
    center = g.shape[0] // 2
    profile = row[center:] * np.arange(row.size - center)
    if min_radius < 1 or profile.size < min_radius + 2:
        return None
    tail = profile[min_radius:]
    threshold = rel_height * float(tail.max())
    for u in range(min_radius, profile.size - 1):
        value = profile[u]
        if value >= profile[u - 1] and value >= profile[u + 1] and value >= threshold:
            return u
    return None


def export_psf(g: np.ndarray, path: PathLike, log_scale: bool = False) -> list[Path]:
    """
    Write |G| as a 16-bit PGM plus its central row/column CSV profiles.

    Args:
        g: Trajectory kernel
        path: PGM destination; profiles go next to it as ``<stem>_row.csv``
            and ``<stem>_col.csv``
        log_scale: Write ``log10(|G| + 1e-12)`` instead of |G|

    Returns:
        Paths of the three files written
    """
    path = Path(path)
    mag = np.abs(g)
    if log_scale:
        written = save_pgm(path, np.log10(mag + PSF_EPSILON))
    else:
        written = save_pgm(path, mag, vmin=0.0, vmax=float(mag.max()))

    n = (g.shape[0] + 1) // 2
    offsets = np.arange(1 - n, n)
    row, col = psf_profiles(g)
    row_path = save_profile(path.with_name(f"{path.stem}_row.csv"), offsets, row)
    col_path = save_profile(path.with_name(f"{path.stem}_col.csv"), offsets, col)
    logger.info("exported PSF to %s", path)
    return [written, row_path, col_path]
