"""Initial-data catalog.

Every scenario names its datum from this closed set: constant, single_mode,
random_h1 (seeded, spectrally weighted <n>^{-3} and H^1-normalized),
torus_bubble (a transplanted Euclidean profile), sum_of_bubbles, and
shell_focus (a coherent shell-localized bump at a seeded random center, the
datum that saturates the dispersive L^p estimates).
"""

from __future__ import annotations

import numpy as np

from ..field import SpectralField, h1_norm, h1_star_norm, hdot1_norm, l2_norm
from ..geometry import DyadicShell, Mode, TorusGeometry, shell_mask
from ..invariants import SobolevConstants
from ..profiles import PROFILE_CATALOG, forward_transform, make_profile_on_torus
from .config import ConfigError


def constant_field(geometry: TorusGeometry, value: complex) -> SpectralField:
    coeff = np.zeros(geometry.shape, dtype=np.complex128)
    coeff[0, 0, 0, 0] = value
    return SpectralField(geometry, coeff)


def single_mode_field(geometry: TorusGeometry, n, amplitude: complex) -> SpectralField:
    mode = Mode(tuple(n))
    mode.check_range(geometry)
    coeff = np.zeros(geometry.shape, dtype=np.complex128)
    idx = tuple(v % g for v, g in zip(mode.n, geometry.grid))
    coeff[idx] = amplitude
    return SpectralField(geometry, coeff)


def random_h1_field(
    geometry: TorusGeometry, seed: int, amplitude: float = 1.0, weight_power: float = 3.0
) -> SpectralField:
    """Seeded complex Gaussian coefficients with <n>^{-weight_power} decay,
    normalized to ||u||_{H1} = amplitude."""
    rng = np.random.default_rng(seed)
    shape = geometry.shape
    raw = rng.standard_normal(shape) + 1j * rng.standard_normal(shape)
    weight = (1.0 + geometry.mode_norm_sq_grid().astype(float)) ** (-weight_power / 2.0)
    spec = SpectralField(geometry, raw * weight)
    norm = h1_norm(spec)
    return SpectralField(geometry, spec.coefficients * (amplitude / norm))


def smooth_random_field(
    geometry: TorusGeometry, seed: int, amplitude: float = 1.0, envelope: float = 2.0
) -> SpectralField:
    """Seeded random data with a Gaussian spectral envelope (smooth in every
    Sobolev norm); the datum of choice for convergence-order studies."""
    rng = np.random.default_rng(seed)
    shape = geometry.shape
    raw = rng.standard_normal(shape) + 1j * rng.standard_normal(shape)
    weight = np.exp(-0.5 * geometry.mode_norm_sq_grid().astype(float) / envelope**2)
    spec = SpectralField(geometry, raw * weight)
    return SpectralField(geometry, spec.coefficients * (amplitude / h1_norm(spec)))


def shell_focus_field(geometry: TorusGeometry, shell: int, seed: int) -> SpectralField:
    """Unit-L^2 data supported on one dyadic shell, phase-coherent at a seeded
    random center (amplitude-jittered): the concentrating datum whose free
    evolution saturates the shell Strichartz bounds."""
    rng = np.random.default_rng(seed)
    mask = shell_mask(geometry, DyadicShell(shell))
    x0 = np.array([rng.uniform(0, l) for l in geometry.lam])
    phase = np.zeros(geometry.shape)
    for w, c in zip(geometry.omega_grids(), x0):
        phase = phase + w * c
    jitter = 1.0 + 0.25 * rng.standard_normal(geometry.shape)
    coeff = np.where(mask, jitter * np.exp(-1j * phase), 0.0).astype(np.complex128)
    coeff *= np.exp(1j * rng.uniform(0, 2 * np.pi))
    spec = SpectralField(geometry, coeff)
    return SpectralField(geometry, coeff / l2_norm(spec))


def torus_bubble_field(
    geometry: TorusGeometry,
    profile: str,
    scale_n: float,
    center,
    constants: SobolevConstants | None = None,
    normalize: str = "none",
    target: float | None = None,
    fraction_of_threshold: float | None = None,
    amplitude: float = 1.0,
) -> SpectralField:
    """Transplanted Euclidean bubble, optionally rescaled to a norm target.

    fraction_of_threshold rescales so the chosen norm equals that fraction of
    ||W||_{Hdot1(R^4)} (the focusing threshold)."""
    if profile not in PROFILE_CATALOG:
        raise ConfigError(f"unknown profile {profile!r}; catalog: {sorted(PROFILE_CATALOG)}")
    phi = PROFILE_CATALOG[profile]()
    phys = make_profile_on_torus(phi, scale_n, geometry, center=tuple(center))
    spec = forward_transform(phys)
    coeff = spec.coefficients * amplitude
    spec = SpectralField(geometry, coeff)
    if normalize == "none":
        return spec
    if normalize == "h1":
        cur = h1_norm(spec)
    elif normalize == "hdot1":
        cur = hdot1_norm(spec)
    elif normalize == "l2":
        cur = l2_norm(spec)
    elif normalize == "h1_star":
        if constants is None:
            raise ConfigError("h1_star normalization needs Sobolev constants")
        cur = h1_star_norm(spec, constants.c_star)
    else:
        raise ConfigError(f"unknown normalization {normalize!r}")
    if fraction_of_threshold is not None:
        if constants is None:
            raise ConfigError("fraction_of_threshold needs Sobolev constants")
        target = fraction_of_threshold * constants.W_threshold
    if target is None:
        raise ConfigError("normalization requested without a target")
    return SpectralField(geometry, spec.coefficients * (float(target) / cur))


def build_initial_data(
    cfg_data: dict,
    geometry: TorusGeometry,
    seed: int,
    constants: SobolevConstants | None = None,
) -> SpectralField:
    """Construct the configured datum (the [initial_data] section)."""
    kind = cfg_data["kind"]
    if kind == "constant":
        return constant_field(geometry, complex(cfg_data["value"]))
    if kind == "single_mode":
        return single_mode_field(geometry, cfg_data["n"], complex(cfg_data["amplitude"]))
    if kind == "random_h1":
        return random_h1_field(
            geometry, seed, float(cfg_data["amplitude"]), float(cfg_data["weight_power"])
        )
    if kind == "shell_focus":
        return shell_focus_field(geometry, int(cfg_data["scale_n"]), seed)
    if kind == "torus_bubble":
        return torus_bubble_field(
            geometry,
            cfg_data["profile"],
            float(cfg_data["scale_n"]),
            cfg_data["center"],
            constants=constants,
            normalize=cfg_data["normalize"],
            target=cfg_data["target"],
            fraction_of_threshold=cfg_data["fraction_of_threshold"],
            amplitude=float(np.real(cfg_data["amplitude"])),
        )
    if kind == "sum_of_bubbles":
        bubbles = cfg_data["bubbles"]
        if not bubbles:
            raise ConfigError("sum_of_bubbles needs a 'bubbles' list of dicts")
        total = None
        for b in bubbles:
            spec = torus_bubble_field(
                geometry,
                b.get("profile", "w_bubble"),
                float(b["n"]),
                b.get("center", (0.0, 0.0, 0.0, 0.0)),
                constants=constants,
                normalize=b.get("normalize", "none"),
                target=b.get("target"),
                fraction_of_threshold=b.get("fraction_of_threshold"),
                amplitude=float(b.get("amplitude", 1.0)),
            )
            total = spec if total is None else SpectralField(
                geometry, total.coefficients + spec.coefficients
            )
        return total
    raise ConfigError(f"unknown initial data kind {kind!r}")
