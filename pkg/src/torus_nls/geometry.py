"""Torus geometry, frequency lattice, dispersion relation, dyadic shells.

The spatial domain is the rectangular 4-torus R^4 / (prod_i lambda_i Z) with
side lengths lambda_i > 0 (rational or irrational ratios -- nothing here
depends on rationality).  Plane waves are e^{i omega(n).x} with
omega_i(n) = 2 pi n_i / lambda_i for integer mode vectors n, and the free
Schrodinger dispersion is |omega(n)|^2.

Dyadic shells partition the integer lattice by Euclidean norm: shell 1 holds
|n| <= 1 and shell N (a power of two) holds N/2 < |n| <= N.
"""

from __future__ import annotations

from dataclasses import dataclass
from functools import lru_cache

import numpy as np

TWO_PI = 2.0 * np.pi


class GeometryError(ValueError):
    """Invalid torus geometry or out-of-range mode."""


@dataclass(frozen=True)
class TorusGeometry:
    """Side lengths and grid resolution of the sampled 4-torus.

    lam : four positive side lengths (lambda_1..lambda_4)
    grid: four even integers >= 8, samples per axis
    """

    lam: tuple[float, float, float, float]
    grid: tuple[int, int, int, int]

    def __post_init__(self):
        if len(self.lam) != 4 or len(self.grid) != 4:
            raise GeometryError("geometry needs 4 side lengths and 4 grid sizes")
        object.__setattr__(self, "lam", tuple(float(l) for l in self.lam))
        object.__setattr__(self, "grid", tuple(int(g) for g in self.grid))
        for l in self.lam:
            if not (l > 0) or not np.isfinite(l):
                raise GeometryError(f"side lengths must be positive, got {self.lam}")
        for g in self.grid:
            if g < 8 or g % 2 != 0:
                raise GeometryError(f"grid sizes must be even and >= 8, got {self.grid}")

    @property
    def volume(self) -> float:
        return float(np.prod(self.lam))

    @property
    def num_points(self) -> int:
        return int(np.prod(self.grid))

    @property
    def shape(self) -> tuple[int, int, int, int]:
        return self.grid

    def axis_modes(self, axis: int) -> np.ndarray:
        """Integer mode indices along one axis, in FFT layout (0..g/2-1, -g/2..-1)."""
        g = self.grid[axis]
        return np.fft.fftfreq(g, d=1.0 / g).astype(np.int64)

    def axis_coordinates(self, axis: int) -> np.ndarray:
        g = self.grid[axis]
        return np.arange(g) * (self.lam[axis] / g)

    # Cached full-grid arrays.  Geometries are tiny immutable values; the 4D
    # grids derived from them are large, so cache per instance via lru_cache
    # on module-level helpers keyed by the (hashable) geometry.

    def mode_grids(self) -> tuple[np.ndarray, ...]:
        """Four broadcastable 1D integer-mode arrays (FFT layout)."""
        return _mode_grids(self)

    def dispersion_grid(self) -> np.ndarray:
        """|omega(n)|^2 = sum_i (2 pi n_i / lambda_i)^2 over the full grid."""
        return _dispersion_grid(self)

    def mode_norm_sq_grid(self) -> np.ndarray:
        """Integer |n|^2 over the full grid (used for shells and <n> weights)."""
        return _mode_norm_sq_grid(self)

    def omega_grids(self) -> tuple[np.ndarray, ...]:
        """Broadcastable frequency arrays omega_i = 2 pi n_i / lambda_i."""
        return _omega_grids(self)

    def max_shell(self) -> "DyadicShell":
        """Largest shell containing any representable mode (corner of the lattice)."""
        corner = np.sqrt(sum((g / 2) ** 2 for g in self.grid))
        return shell_of_norm(corner)


@dataclass(frozen=True)
class Mode:
    """Integer frequency index n in Z^4, within Nyquist range of its geometry."""

    n: tuple[int, int, int, int]

    def __post_init__(self):
        object.__setattr__(self, "n", tuple(int(v) for v in self.n))
        if len(self.n) != 4:
            raise GeometryError("mode index needs 4 components")

    @property
    def norm(self) -> float:
        return float(np.sqrt(sum(v * v for v in self.n)))

    def check_range(self, geometry: TorusGeometry) -> None:
        for v, g in zip(self.n, geometry.grid):
            if abs(v) > g // 2:
                raise GeometryError(f"mode {self.n} outside Nyquist range of grid {geometry.grid}")


@dataclass(frozen=True)
class DyadicShell:
    """Dyadic scale N in {1, 2, 4, ...}; shell N holds modes with N/2 < |n| <= N
    (shell 1 also holds n = 0)."""

    N: int

    def __post_init__(self):
        object.__setattr__(self, "N", int(self.N))
        if self.N < 1 or (self.N & (self.N - 1)) != 0:
            raise GeometryError(f"shell scale must be a power of two >= 1, got {self.N}")

    def half_open_bounds(self) -> tuple[float, float]:
        lo = 0.0 if self.N == 1 else self.N / 2.0
        return lo, float(self.N)


def frequency(geometry: TorusGeometry, mode: Mode) -> np.ndarray:
    """omega(n) with omega_i = 2 pi n_i / lambda_i."""
    mode.check_range(geometry)
    return np.array([TWO_PI * v / l for v, l in zip(mode.n, geometry.lam)])


def dispersion(geometry: TorusGeometry, mode: Mode) -> float:
    """|omega(n)|^2, the free evolution phase rate of mode n."""
    w = frequency(geometry, mode)
    return float(np.dot(w, w))


def shell_of_norm(norm: float) -> DyadicShell:
    if norm <= 1.0:
        return DyadicShell(1)
    return DyadicShell(int(2 ** np.ceil(np.log2(norm) - 1e-12)))


def shell_of(mode: Mode) -> DyadicShell:
    """The unique dyadic shell containing the mode: N=1 for |n| <= 1, else
    the power of two with N/2 < |n| <= N."""
    return shell_of_norm(mode.norm)


def shells_up_to(geometry: TorusGeometry) -> list[DyadicShell]:
    """All shells intersecting the representable mode lattice, ascending."""
    top = geometry.max_shell().N
    out, N = [], 1
    while N <= top:
        out.append(DyadicShell(N))
        N *= 2
    return out


def shell_mask(geometry: TorusGeometry, shell: DyadicShell) -> np.ndarray:
    """Boolean grid mask selecting the modes of one shell (sharp indicator)."""
    return _shell_mask(geometry, shell.N)


@lru_cache(maxsize=32)
def _mode_grids(geometry: TorusGeometry) -> tuple[np.ndarray, ...]:
    out = []
    for ax in range(4):
        shape = [1, 1, 1, 1]
        shape[ax] = geometry.grid[ax]
        out.append(geometry.axis_modes(ax).reshape(shape))
    return tuple(out)


@lru_cache(maxsize=32)
def _omega_grids(geometry: TorusGeometry) -> tuple[np.ndarray, ...]:
    return tuple(TWO_PI * m / l for m, l in zip(_mode_grids(geometry), geometry.lam))


@lru_cache(maxsize=32)
def _dispersion_grid(geometry: TorusGeometry) -> np.ndarray:
    d = np.zeros(geometry.grid)
    for w in _omega_grids(geometry):
        d = d + w.astype(float) ** 2
    return d


@lru_cache(maxsize=32)
def _mode_norm_sq_grid(geometry: TorusGeometry) -> np.ndarray:
    s = np.zeros(geometry.grid, dtype=np.int64)
    for m in _mode_grids(geometry):
        s = s + m * m
    return s


@lru_cache(maxsize=256)
def _shell_mask(geometry: TorusGeometry, N: int) -> np.ndarray:
    nsq = _mode_norm_sq_grid(geometry)
    lo, hi = DyadicShell(N).half_open_bounds()
    # integer arithmetic keeps the boundary |n| = N exact
    mask = nsq <= hi * hi
    if N > 1:
        mask &= nsq > lo * lo
    return mask
