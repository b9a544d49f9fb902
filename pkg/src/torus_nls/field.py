"""Complex fields on the sampled torus: physical and spectral representations,
transforms, Sobolev/Lebesgue norms, and sharp frequency projections.

Normalization: coefficients are mean-type, u(x) = sum_n uhat(n) e^{i omega(n).x},
so a single plane wave has unit coefficient and Plancherel reads
||u||_{L2}^2 = volume * sum_n |uhat(n)|^2.
"""

from __future__ import annotations

import struct
from dataclasses import dataclass

import numpy as np
import scipy.fft as _fft

from .geometry import (
    DyadicShell,
    GeometryError,
    Mode,
    TorusGeometry,
    shell_mask,
    shells_up_to,
)

SNAPSHOT_MAGIC = b"TNLS"
SNAPSHOT_VERSION = 1


class FieldDataError(ValueError):
    """Non-finite samples or mismatched geometry."""


@dataclass
class PhysicalField:
    """Grid samples of u : T^4 -> C."""

    geometry: TorusGeometry
    samples: np.ndarray

    def __post_init__(self):
        self.samples = np.asarray(self.samples, dtype=np.complex128)
        if self.samples.shape != self.geometry.shape:
            raise FieldDataError(
                f"sample shape {self.samples.shape} != grid {self.geometry.shape}"
            )

    def copy(self) -> "PhysicalField":
        return PhysicalField(self.geometry, self.samples.copy())


@dataclass
class SpectralField:
    """Fourier coefficients uhat(n), FFT layout, mean-type normalization."""

    geometry: TorusGeometry
    coefficients: np.ndarray

    def __post_init__(self):
        self.coefficients = np.asarray(self.coefficients, dtype=np.complex128)
        if self.coefficients.shape != self.geometry.shape:
            raise FieldDataError(
                f"coefficient shape {self.coefficients.shape} != grid {self.geometry.shape}"
            )

    def copy(self) -> "SpectralField":
        return SpectralField(self.geometry, self.coefficients.copy())


Field = PhysicalField | SpectralField


def forward_transform(field: PhysicalField) -> SpectralField:
    """uhat(n) = (1/volume) int u e^{-i omega.x} dx via the exact lattice DFT."""
    if not np.all(np.isfinite(field.samples)):
        raise FieldDataError("non-finite samples")
    coeff = _fft.fftn(field.samples) / field.geometry.num_points
    return SpectralField(field.geometry, coeff)


def inverse_transform(spec: SpectralField) -> PhysicalField:
    """u(x) = sum_n uhat(n) e^{i omega(n).x} on the grid."""
    samples = _fft.ifftn(spec.coefficients) * spec.geometry.num_points
    return PhysicalField(spec.geometry, samples)


def as_spectral(field: Field) -> SpectralField:
    return field if isinstance(field, SpectralField) else forward_transform(field)


def as_physical(field: Field) -> PhysicalField:
    return field if isinstance(field, PhysicalField) else inverse_transform(field)


# ---------------------------------------------------------------------------
# norms


def l2_norm(field: Field) -> float:
    g = field.geometry
    if isinstance(field, SpectralField):
        return float(np.sqrt(g.volume * np.sum(np.abs(field.coefficients) ** 2)))
    return float(np.sqrt(g.volume / g.num_points * np.sum(np.abs(field.samples) ** 2)))


def lp_norm(field: Field, p: float) -> float:
    """L^p by plain grid quadrature (exact only up to aliasing of |u|^p)."""
    if p < 1:
        raise ValueError(f"p must be >= 1, got {p}")
    g = field.geometry
    u = as_physical(field).samples
    return float((g.volume / g.num_points * np.sum(np.abs(u) ** p)) ** (1.0 / p))


def l4_norm(field: Field) -> float:
    return lp_norm(field, 4)


def hdot1_norm(field: Field) -> float:
    """Homogeneous H^1: ||u||^2 = volume * sum |omega(n)|^2 |uhat(n)|^2."""
    spec = as_spectral(field)
    d = spec.geometry.dispersion_grid()
    return float(np.sqrt(spec.geometry.volume * np.sum(d * np.abs(spec.coefficients) ** 2)))


def h1_norm(field: Field) -> float:
    spec = as_spectral(field)
    d = spec.geometry.dispersion_grid()
    s = np.sum((1.0 + d) * np.abs(spec.coefficients) ** 2)
    return float(np.sqrt(spec.geometry.volume * s))


def h1_star_norm(field: Field, c_star: float) -> float:
    """Modified inhomogeneous norm: ||u||^2 = ||u||_{Hdot1}^2 + c_* ||u||_{L2}^2."""
    if not c_star > 0:
        raise ValueError(f"c_star must be positive, got {c_star}")
    spec = as_spectral(field)
    d = spec.geometry.dispersion_grid()
    s = np.sum((c_star + d) * np.abs(spec.coefficients) ** 2)
    return float(np.sqrt(spec.geometry.volume * s))


def norm_bundle(field: Field, c_star: float, p: float | None = None) -> dict:
    """All standard norms of one field in a single dict."""
    spec = as_spectral(field)
    phys = as_physical(field)
    out = {
        "l2": l2_norm(spec),
        "l4": l4_norm(phys),
        "hdot1": hdot1_norm(spec),
        "h1": h1_norm(spec),
        "h1_star": h1_star_norm(spec, c_star),
    }
    if p is not None:
        out[f"l{p}"] = lp_norm(phys, p)
    return out


def h1_inner(f: Field, g: Field) -> complex:
    """H^1 pairing volume * sum (1 + |omega|^2) fhat conj(ghat)."""
    fs, gs = as_spectral(f), as_spectral(g)
    if fs.geometry != gs.geometry:
        raise FieldDataError("geometry mismatch in inner product")
    d = fs.geometry.dispersion_grid()
    return complex(fs.geometry.volume * np.sum((1.0 + d) * fs.coefficients * np.conj(gs.coefficients)))


def hdot1_inner(f: Field, g: Field) -> complex:
    fs, gs = as_spectral(f), as_spectral(g)
    if fs.geometry != gs.geometry:
        raise FieldDataError("geometry mismatch in inner product")
    d = fs.geometry.dispersion_grid()
    return complex(fs.geometry.volume * np.sum(d * fs.coefficients * np.conj(gs.coefficients)))


# ---------------------------------------------------------------------------
# projections


def lp_project(field: Field, shell: DyadicShell) -> Field:
    """Littlewood-Paley piece P_N u: sharp indicator of the dyadic shell.

    Exactly idempotent; the shells partition the lattice so sum_N P_N = id.
    Returns the same representation it was given.
    """
    spec = as_spectral(field)
    mask = shell_mask(spec.geometry, shell)
    out = SpectralField(spec.geometry, np.where(mask, spec.coefficients, 0.0))
    return out if isinstance(field, SpectralField) else inverse_transform(out)


def cube_project(field: Field, center: Mode, side: DyadicShell) -> Field:
    """P_C u for the axis-aligned integer cube of side N centered at `center`
    (half-open intervals [c_i - N/2, c_i + N/2) per axis)."""
    spec = as_spectral(field)
    g = spec.geometry
    if side.N > min(g.grid):
        raise GeometryError(f"cube side {side.N} exceeds Nyquist span of grid {g.grid}")
    half = side.N / 2.0
    mask = np.ones(g.shape, dtype=bool)
    for m, c in zip(g.mode_grids(), center.n):
        mask &= (m >= c - half) & (m < c + half)
    out = SpectralField(g, np.where(mask, spec.coefficients, 0.0))
    return out if isinstance(field, SpectralField) else inverse_transform(out)


def shell_decompose(field: Field) -> dict[int, SpectralField]:
    """All nonvanishing Littlewood-Paley pieces, keyed by shell scale."""
    spec = as_spectral(field)
    out = {}
    for sh in shells_up_to(spec.geometry):
        piece = lp_project(spec, sh)
        if np.any(piece.coefficients):
            out[sh.N] = piece
    return out


# ---------------------------------------------------------------------------
# smooth radial cutoff


@dataclass(frozen=True)
class CutoffProfile:
    """Smooth radial bump eta: 1 on |x| <= radius1, 0 beyond radius2.

    Between the radii eta(s) = exp(1 - 1/(1 - ((s-r1)/(r2-r1))^2)), the
    standard C^infty bump, fixed here for reproducibility.
    """

    radius1: float = 1.0
    radius2: float = 2.0

    def __post_init__(self):
        if not (0 < self.radius1 < self.radius2):
            raise ValueError("need 0 < radius1 < radius2")

    def __call__(self, r):
        r = np.abs(np.asarray(r, dtype=float))
        scalar = r.ndim == 0
        r = np.atleast_1d(r)
        out = np.zeros_like(r)
        out[r <= self.radius1] = 1.0
        mid = (r > self.radius1) & (r < self.radius2)
        if np.any(mid):
            s = (r[mid] - self.radius1) / (self.radius2 - self.radius1)
            out[mid] = np.exp(1.0 - 1.0 / (1.0 - s * s))
        return float(out[0]) if scalar else out


def cutoff_eval(profile: CutoffProfile, x) -> float:
    """eta(x) for a point x in R^4 (radial evaluation)."""
    x = np.asarray(x, dtype=float)
    return float(profile(np.sqrt(np.sum(x * x))))


# ---------------------------------------------------------------------------
# binary snapshot format
#
# header: magic "TNLS", u32 version, 4 x u32 grid, 4 x f64 lambda, then
# row-major complex samples as interleaved little-endian f64 (re, im).


def save_field(field: PhysicalField, path) -> None:
    g = field.geometry
    with open(path, "wb") as fh:
        fh.write(SNAPSHOT_MAGIC)
        fh.write(struct.pack("<I", SNAPSHOT_VERSION))
        fh.write(struct.pack("<4I", *g.grid))
        fh.write(struct.pack("<4d", *g.lam))
        fh.write(np.ascontiguousarray(field.samples).astype("<c16").tobytes())


def load_field(path) -> PhysicalField:
    with open(path, "rb") as fh:
        magic = fh.read(4)
        if magic != SNAPSHOT_MAGIC:
            raise FieldDataError(f"bad snapshot magic {magic!r}")
        (version,) = struct.unpack("<I", fh.read(4))
        if version != SNAPSHOT_VERSION:
            raise FieldDataError(f"unsupported snapshot version {version}")
        grid = struct.unpack("<4I", fh.read(16))
        lam = struct.unpack("<4d", fh.read(32))
        geom = TorusGeometry(lam=lam, grid=grid)
        raw = fh.read(16 * geom.num_points)
        samples = np.frombuffer(raw, dtype="<c16").reshape(geom.shape)
    return PhysicalField(geom, samples.astype(np.complex128))
