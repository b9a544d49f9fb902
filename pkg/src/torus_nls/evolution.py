"""Time evolution of (i d_t + Delta) u = mu u |u|^2 on the sampled torus.

Strang splitting with exact sub-flows: the free propagator is an exact phase
multiply in Fourier space, and the cubic sub-flow i d_t u = mu |u|^2 u is
exactly solvable pointwise (|u| is invariant), u -> u e^{-i mu |u|^2 dt}.
The only time-stepping error is the O(dt^2) splitting commutator.

With the pad3_2 policy the nonlinear phase is applied on a 3/2 zero-padded
grid and truncated back, which keeps the Galerkin cubic of band-limited
fields alias-free in the retained band.

Duhamel quadrature and Picard iteration implement the fixed-point map
Phi(v)(t) = e^{it Delta} u0 - i mu int_0^t e^{i(t-s) Delta} v|v|^2 ds
on stored sample grids, for the local well-posedness contraction experiment.
"""

from __future__ import annotations

import json
import os
from dataclasses import dataclass, field as dc_field

import numpy as np
import scipy.fft as _fft

from .field import (
    Field,
    FieldDataError,
    PhysicalField,
    SpectralField,
    as_spectral,
    inverse_transform,
    load_field,
    save_field,
)
from .geometry import TorusGeometry
from .invariants import (
    SobolevConstants,
    conserved_star_combination,
    conserved_star_star_combination,
)

DIAGNOSTIC_KEYS = ("mass", "energy", "e_star", "e_star_star", "hdot1", "h1_star")


@dataclass(frozen=True)
class EvolutionParams:
    """Solver knobs.  blowup_threshold is the Hdot1 halt level; pass None to
    use 10x the initial Hdot1 norm (falling back to 10(1+H1) for gradient-free
    data)."""

    mu: int
    dt: float
    t_end: float
    snapshot_stride: int = 1
    dealias: str = "pad3_2"
    blowup_threshold: float | None = None

    def __post_init__(self):
        if self.mu not in (-1, 0, 1):
            raise ValueError(f"mu must be -1, 0 or +1, got {self.mu}")
        if not (self.dt > 0 and self.t_end > 0 and self.dt <= self.t_end + 1e-15):
            raise ValueError("need 0 < dt <= t_end")
        if self.snapshot_stride < 1:
            raise ValueError("snapshot_stride must be >= 1")
        if self.dealias not in ("pad3_2", "none"):
            raise ValueError(f"unknown dealias policy {self.dealias!r}")
        if self.blowup_threshold is not None and not self.blowup_threshold > 0:
            raise ValueError("blowup_threshold must be positive")


@dataclass
class TrajectoryRecord:
    """Stride-sampled snapshots plus per-sample diagnostics of one run."""

    geometry: TorusGeometry
    times: list = dc_field(default_factory=list)
    snapshots: list = dc_field(default_factory=list)  # SpectralField
    diagnostics: dict = dc_field(default_factory=lambda: {k: [] for k in DIAGNOSTIC_KEYS})
    halt_reason: str = "completed"
    c_star: float = 1.0

    def save(self, directory) -> None:
        os.makedirs(directory, exist_ok=True)
        snapdir = os.path.join(directory, "snapshots")
        os.makedirs(snapdir, exist_ok=True)
        for i, snap in enumerate(self.snapshots):
            save_field(inverse_transform(snap), os.path.join(snapdir, f"snap_{i:06d}.tnls"))
        manifest = {
            "times": list(map(float, self.times)),
            "halt_reason": self.halt_reason,
            "c_star": self.c_star,
            "lambda": list(self.geometry.lam),
            "grid": list(self.geometry.grid),
            "n_snapshots": len(self.snapshots),
        }
        with open(os.path.join(directory, "trajectory.json"), "w") as fh:
            json.dump(manifest, fh, indent=2, sort_keys=True)
        write_diagnostics_csv(self, os.path.join(directory, "diagnostics.csv"))

    @classmethod
    def load(cls, directory) -> "TrajectoryRecord":
        with open(os.path.join(directory, "trajectory.json")) as fh:
            manifest = json.load(fh)
        geom = TorusGeometry(lam=tuple(manifest["lambda"]), grid=tuple(manifest["grid"]))
        rec = cls(geometry=geom, halt_reason=manifest["halt_reason"], c_star=manifest["c_star"])
        rec.times = list(manifest["times"])
        for i in range(manifest["n_snapshots"]):
            phys = load_field(os.path.join(directory, "snapshots", f"snap_{i:06d}.tnls"))
            rec.snapshots.append(as_spectral(phys))
        return rec


def write_diagnostics_csv(record: TrajectoryRecord, path) -> None:
    """CSV with shortest round-trip float encoding, for bit-stable reruns."""
    with open(path, "w") as fh:
        fh.write("t," + ",".join(DIAGNOSTIC_KEYS) + "\n")
        for i, t in enumerate(record.times):
            row = [repr(float(t))]
            row += [repr(float(record.diagnostics[k][i])) for k in DIAGNOSTIC_KEYS]
            fh.write(",".join(row) + "\n")


# ---------------------------------------------------------------------------
# exact sub-flows


def free_propagate(spec: SpectralField, t: float) -> SpectralField:
    """e^{it Delta}: uhat(n) -> e^{-i |omega(n)|^2 t} uhat(n)."""
    phase = np.exp(-1j * spec.geometry.dispersion_grid() * t)
    return SpectralField(spec.geometry, spec.coefficients * phase)


def nonlinear_phase_step(field: PhysicalField, dt: float, mu: int) -> PhysicalField:
    """Exact cubic sub-flow u -> u e^{-i mu |u|^2 dt}; pointwise modulus preserved."""
    if not np.all(np.isfinite(field.samples)):
        raise FieldDataError("non-finite samples in nonlinear step")
    if mu == 0:
        return field.copy()
    u = field.samples
    return PhysicalField(field.geometry, u * np.exp((-1j * mu * dt) * np.abs(u) ** 2))


# ---------------------------------------------------------------------------
# dealiased cubic machinery


class _PadPlan:
    """Index bookkeeping for 3/2 zero-padding of the spectral grid."""

    def __init__(self, geometry: TorusGeometry):
        self.coarse = geometry.grid
        self.fine = tuple(3 * g // 2 for g in geometry.grid)
        self.n_coarse = int(np.prod(self.coarse))
        self.n_fine = int(np.prod(self.fine))
        # per-axis index maps: coarse FFT slot -> fine FFT slot
        self.slices = []
        for g, m in zip(self.coarse, self.fine):
            idx = np.concatenate([np.arange(0, g // 2), np.arange(m - g // 2, m)])
            self.slices.append(idx)

    def pad(self, coeff: np.ndarray) -> np.ndarray:
        out = np.zeros(self.fine, dtype=np.complex128)
        out[np.ix_(*self.slices)] = coeff
        return out

    def truncate(self, fine_coeff: np.ndarray) -> np.ndarray:
        return fine_coeff[np.ix_(*self.slices)].copy()


class _StrangWorkspace:
    """Precomputed phases and pad plan for one (geometry, dt, mu, dealias)."""

    def __init__(self, geometry: TorusGeometry, dt: float, mu: int, dealias: str):
        self.geometry = geometry
        self.dt = dt
        self.mu = mu
        self.dealias = dealias
        disp = geometry.dispersion_grid()
        self.half_phase = np.exp(-0.5j * dt * disp)
        self.full_phase = np.exp(-1j * dt * disp)
        self.plan = _PadPlan(geometry) if dealias == "pad3_2" else None

    def nonlinear(self, coeff: np.ndarray) -> np.ndarray:
        # clobbers its argument (callers always pass a working temporary)
        if self.mu == 0:
            return coeff
        if self.plan is None:
            u = _fft.ifftn(coeff, overwrite_x=True)
            u *= self.geometry.num_points
            u *= np.exp((-1j * self.mu * self.dt) * (u.real**2 + u.imag**2))
            out = _fft.fftn(u, overwrite_x=True)
            out /= self.geometry.num_points
            return out
        u = _fft.ifftn(self.plan.pad(coeff), overwrite_x=True)
        u *= self.plan.n_fine
        u *= np.exp((-1j * self.mu * self.dt) * (u.real**2 + u.imag**2))
        out = self.plan.truncate(_fft.fftn(u, overwrite_x=True))
        out /= self.plan.n_fine
        return out

    def step(self, coeff: np.ndarray) -> np.ndarray:
        c = coeff * self.half_phase
        c = self.nonlinear(c)
        c *= self.half_phase
        return c


def strang_step(state: Field, dt: float, params: EvolutionParams) -> SpectralField:
    """One symmetric step: half free flow, exact cubic phase (with the dealias
    policy applied to its evaluation), half free flow."""
    spec = as_spectral(state)
    ws = _StrangWorkspace(spec.geometry, dt, params.mu, params.dealias)
    return SpectralField(spec.geometry, ws.step(spec.coefficients))


def _diagnostics(geometry, coeff, disp, c_star, mu, constants: SobolevConstants | None):
    vol, n = geometry.volume, geometry.num_points
    a2 = np.abs(coeff) ** 2
    m = vol * float(np.sum(a2))
    hdot1_sq = vol * float(np.sum(disp * a2))
    h1_star_sq = hdot1_sq + c_star * m
    u = _fft.ifftn(coeff) * n
    l4p4 = vol / n * float(np.sum(np.abs(u) ** 4))
    e = 0.5 * hdot1_sq + 0.25 * mu * l4p4
    if constants is not None:
        e_star = conserved_star_combination(m, e, constants)
        e_star_star = conserved_star_star_combination(m, e, constants)
    else:
        e_star = e + 0.5 * c_star * m
        e_star_star = float("nan")
    return {
        "mass": m,
        "energy": e,
        "e_star": e_star,
        "e_star_star": e_star_star,
        "hdot1": float(np.sqrt(hdot1_sq)),
        "h1_star": float(np.sqrt(h1_star_sq)),
    }


def evolve(
    u0: Field,
    params: EvolutionParams,
    constants: SobolevConstants | None = None,
) -> TrajectoryRecord:
    """Iterate Strang steps to t_end, recording stride-sampled snapshots and
    diagnostics; halts early on the Hdot1 threshold or non-finite data.

    The e_star / e_star_star diagnostics are the conserved combinations
    E + (c_*/2) M (+ (c_*^2 C4^4/4) M^2), which coincide with the focusing
    modified energies when mu = -1 and stay conserved for every mu.
    """
    spec = as_spectral(u0)
    geometry = spec.geometry
    disp = geometry.dispersion_grid()
    c_star = constants.c_star if constants is not None else 1.0

    coeff = spec.coefficients.copy()
    a2 = np.abs(coeff) ** 2
    hdot1_0 = float(np.sqrt(geometry.volume * np.sum(disp * a2)))
    h1_0 = float(np.sqrt(geometry.volume * np.sum((1.0 + disp) * a2)))
    if not np.isfinite(hdot1_0):
        raise FieldDataError("non-finite initial data")
    threshold = params.blowup_threshold
    if threshold is None:
        threshold = 10.0 * hdot1_0 if hdot1_0 > 0 else 10.0 * (1.0 + h1_0)
    if hdot1_0 >= threshold:
        raise ValueError(
            f"initial Hdot1 norm {hdot1_0} already at blow-up threshold {threshold}"
        )

    record = TrajectoryRecord(geometry=geometry, c_star=c_star)
    ws = _StrangWorkspace(geometry, params.dt, params.mu, params.dealias)
    thr_sq_over_vol = threshold**2 / geometry.volume

    def sample(t, c):
        record.times.append(float(t))
        record.snapshots.append(SpectralField(geometry, c.copy()))
        d = _diagnostics(geometry, c, disp, c_star, params.mu, constants)
        for k in DIAGNOSTIC_KEYS:
            record.diagnostics[k].append(d[k])

    n_steps = int(round(params.t_end / params.dt))
    if abs(n_steps * params.dt - params.t_end) > 1e-9 * params.t_end:
        n_steps = int(np.ceil(params.t_end / params.dt - 1e-12))

    sample(0.0, coeff)
    # staggered frame: adjacent half free steps fold into one full phase;
    # |coeff| is free-flow invariant, so the Hdot1 monitor works unfolded
    c = coeff * ws.half_phase
    for k in range(1, n_steps + 1):
        c = ws.nonlinear(c)
        t = k * params.dt
        hdot1_sq = float(np.sum(disp * (c.real**2 + c.imag**2)))
        if not np.isfinite(hdot1_sq):
            record.halt_reason = "non_finite"
            record.times.append(float(t))
            record.snapshots.append(SpectralField(geometry, c * ws.half_phase))
            for key in DIAGNOSTIC_KEYS:
                record.diagnostics[key].append(float("nan"))
            return record
        if hdot1_sq >= thr_sq_over_vol:
            sample(t, c * ws.half_phase)
            record.halt_reason = "blowup_threshold"
            return record
        if k == n_steps or k % params.snapshot_stride == 0:
            c = c * ws.half_phase
            sample(t, c)
            if k < n_steps:
                c = c * ws.half_phase
        else:
            c = c * ws.full_phase
    record.halt_reason = "completed"
    return record


# ---------------------------------------------------------------------------
# Duhamel quadrature and Picard iteration


def _cubic_spectrum(coeff: np.ndarray, geometry: TorusGeometry, plan: _PadPlan | None) -> np.ndarray:
    """Spectrum of u|u|^2, evaluated with the requested dealias policy."""
    if plan is None:
        u = _fft.ifftn(coeff) * geometry.num_points
        return _fft.fftn(u * np.abs(u) ** 2) / geometry.num_points
    u = _fft.ifftn(plan.pad(coeff)) * plan.n_fine
    return plan.truncate(_fft.fftn(u * np.abs(u) ** 2) / plan.n_fine)


def duhamel_integral(trajectory, window, dealias: str = "pad3_2") -> SpectralField:
    """int_{t0}^{t1} e^{i(t1-s) Delta} (u|u|^2)(s) ds by composite trapezoid
    over the trajectory samples inside the window.

    The caller applies the -i mu factor of the Duhamel formula.
    """
    t0, t1 = float(window[0]), float(window[1])
    if t1 <= t0:
        raise ValueError(f"empty Duhamel window [{t0}, {t1}]")
    geometry = trajectory.geometry
    times = np.asarray(trajectory.times, dtype=float)
    sel = np.nonzero((times >= t0 - 1e-12) & (times <= t1 + 1e-12))[0]
    if sel.size < 2:
        raise ValueError("window must contain at least two trajectory samples")
    plan = _PadPlan(geometry) if dealias == "pad3_2" else None
    disp = geometry.dispersion_grid()
    s = times[sel]
    acc = np.zeros(geometry.shape, dtype=np.complex128)
    prev = None
    for j, i in enumerate(sel):
        f_hat = _cubic_spectrum(trajectory.snapshots[i].coefficients, geometry, plan)
        b = f_hat * np.exp(1j * disp * s[j])  # phase-corrected integrand
        if prev is not None:
            acc += 0.5 * (s[j] - s[j - 1]) * (prev + b)
        prev = b
    return SpectralField(geometry, acc * np.exp(-1j * disp * t1))


def picard_iterate(
    u0: Field,
    window,
    iters: int,
    mu: int,
    n_samples: int = 17,
    dealias: str = "pad3_2",
) -> list[list[SpectralField]]:
    """Successive iterates of the Duhamel fixed-point map, starting from the
    free solution.  Each iterate is the list of fields at the uniform sample
    times of the window; the first list is the free solution itself.

    Windows are restricted to length <= 1, matching the local theory's
    interval convention.
    """
    t0, t1 = float(window[0]), float(window[1])
    if not 0 < t1 - t0 <= 1.0 + 1e-12:
        raise ValueError("Picard window must have positive length <= 1")
    if iters < 1:
        raise ValueError("need iters >= 1")
    if n_samples < 2:
        raise ValueError("need at least two sample times")
    spec0 = as_spectral(u0)
    geometry = spec0.geometry
    disp = geometry.dispersion_grid()
    plan = _PadPlan(geometry) if dealias == "pad3_2" else None
    times = np.linspace(t0, t1, n_samples)
    free = [
        SpectralField(geometry, spec0.coefficients * np.exp(-1j * disp * (t - t0)))
        for t in times
    ]
    iterates = [free]
    current = free
    for _ in range(iters):
        # phase-corrected cubic spectra at all samples
        bs = []
        for j, t in enumerate(times):
            f_hat = _cubic_spectrum(current[j].coefficients, geometry, plan)
            bs.append(f_hat * np.exp(1j * disp * (t - t0)))
        new = []
        acc = np.zeros(geometry.shape, dtype=np.complex128)
        for j, t in enumerate(times):
            if j > 0:
                acc = acc + 0.5 * (times[j] - times[j - 1]) * (bs[j - 1] + bs[j])
            duh = acc * np.exp(-1j * disp * (t - t0))
            coeff = free[j].coefficients - 1j * mu * duh
            new.append(SpectralField(geometry, coeff))
        iterates.append(new)
        current = new
    return iterates


def trajectory_from_free(spec0: SpectralField, times) -> TrajectoryRecord:
    """Free-evolution trajectory sampled at the given times (no diagnostics)."""
    geometry = spec0.geometry
    disp = geometry.dispersion_grid()
    rec = TrajectoryRecord(geometry=geometry)
    for t in times:
        rec.times.append(float(t))
        rec.snapshots.append(
            SpectralField(geometry, spec0.coefficients * np.exp(-1j * disp * float(t)))
        )
    for k in DIAGNOSTIC_KEYS:
        rec.diagnostics[k] = [float("nan")] * len(rec.times)
    return rec
