"""Computable space-time norms: Z, Z', space-time L^p, discrete V^2 variation,
and the declared X^1/Y^1 proxies.

The Z norm is sup over subwindows J of length <= 1 of
(sum_N N^2 ||P_N u||_{L4(T^4 x J)}^4)^{1/4}; here the sup runs over all
maximal sample-aligned subwindows and time integrals are composite trapezoid
over the stored samples.

The V^2 variation of a sampled track is the maximum over increasing
subsequences of the l^2 sum of squared increments -- a lower bound for the
continuum V^2 norm, exact on the information available.  y1_proxy applies it
to each phase-corrected coefficient track e^{i |omega(n)|^2 t} uhat(t)(n)
with weight <n>^2 = 1 + |n|^2; x1_proxy = max(sup_t H1, y1_proxy) is an
upper-flavored computable stand-in for the atomic X^1 norm, never claimed
equal to it.
"""

from __future__ import annotations

from dataclasses import dataclass, field as dc_field

import numpy as np
import scipy.fft as _fft

from .field import l2_norm
from .geometry import shell_mask, shells_up_to


class WindowError(ValueError):
    """Window not covered by the sampled trajectory."""


@dataclass(frozen=True)
class TimeWindow:
    t_start: float
    t_end: float

    def __post_init__(self):
        if self.t_end < self.t_start:
            raise WindowError(f"window end {self.t_end} before start {self.t_start}")

    @property
    def length(self) -> float:
        return self.t_end - self.t_start


@dataclass
class NormReport:
    value: float
    per_shell: dict = dc_field(default_factory=dict)
    window: tuple = (0.0, 0.0)


def _as_window(window) -> TimeWindow:
    if isinstance(window, TimeWindow):
        return window
    return TimeWindow(float(window[0]), float(window[1]))


def _select_samples(trajectory, window: TimeWindow, tol: float = 1e-9):
    times = np.asarray(trajectory.times, dtype=float)
    if times.size == 0:
        raise WindowError("trajectory has no samples")
    if window.t_start < times[0] - tol or window.t_end > times[-1] + tol:
        raise WindowError(
            f"window [{window.t_start}, {window.t_end}] outside sampled range "
            f"[{times[0]}, {times[-1]}]"
        )
    sel = np.nonzero((times >= window.t_start - tol) & (times <= window.t_end + tol))[0]
    if sel.size == 0:
        raise WindowError("no trajectory samples inside window")
    return sel, times[sel]


def spacetime_lp(trajectory, p: float, window) -> float:
    """||u||_{L^p_{t,x}}: trapezoid in time of the spatial L^p norms."""
    if p < 1:
        raise ValueError(f"p must be >= 1, got {p}")
    window = _as_window(window)
    sel, times = _select_samples(trajectory, window)
    if times.size == 1:
        return 0.0  # zero time measure
    g = trajectory.geometry
    vals = np.empty(times.size)
    for j, i in enumerate(sel):
        u = _fft.ifftn(trajectory.snapshots[i].coefficients) * g.num_points
        vals[j] = g.volume / g.num_points * np.sum(np.abs(u) ** p)
    return float(np.trapezoid(vals, times) ** (1.0 / p))


def _shell_l4_integrands(trajectory, sel, active_shells):
    """s_N(t_i) = ||P_N u(t_i)||_{L4}^4 for the selected samples."""
    g = trajectory.geometry
    out = {}
    for N, mask in active_shells:
        vals = np.empty(sel.size)
        for j, i in enumerate(sel):
            piece = np.where(mask, trajectory.snapshots[i].coefficients, 0.0)
            u = _fft.ifftn(piece) * g.num_points
            vals[j] = g.volume / g.num_points * np.sum(np.abs(u) ** 4)
        out[N] = vals
    return out


def _active_shells(trajectory, sel):
    """Shells with any spectral content in the selected samples (skips empty
    shells to avoid useless transforms)."""
    g = trajectory.geometry
    shells = []
    for sh in shells_up_to(g):
        mask = shell_mask(g, sh)
        present = any(
            np.any(np.abs(trajectory.snapshots[i].coefficients[mask]) > 0.0) for i in sel
        )
        if present:
            shells.append((sh.N, mask))
    return shells


def _maximal_subwindows(times: np.ndarray, max_len: float = 1.0, tol: float = 1e-9):
    """Index pairs (i, j) of all maximal sample-aligned subwindows of length
    <= max_len.  A single pair covers everything when the range is short."""
    m = times.size
    out = []
    prev_j = -1
    for i in range(m):
        j = i
        while j + 1 < m and times[j + 1] - times[i] <= max_len + tol:
            j += 1
        if j > prev_j or i == 0:
            out.append((i, j))
            prev_j = j
        if j == m - 1:
            break
    return out


def z_norm(trajectory, window) -> NormReport:
    """Z norm over the window: sup over maximal sample-aligned subwindows of
    length <= 1 of (sum_N N^2 ||P_N u||^4_{L4(T^4 x J)})^{1/4}."""
    window = _as_window(window)
    sel, times = _select_samples(trajectory, window)
    shells = _active_shells(trajectory, sel)
    if not shells or times.size == 1:
        return NormReport(value=0.0, per_shell={}, window=(window.t_start, window.t_end))
    integrands = _shell_l4_integrands(trajectory, sel, shells)
    # cumulative trapezoid per shell for O(1) window sums
    cums = {}
    for N, vals in integrands.items():
        c = np.zeros(times.size)
        c[1:] = np.cumsum(0.5 * (vals[1:] + vals[:-1]) * np.diff(times))
        cums[N] = c
    best_val4, best_pair = -1.0, None
    for i, j in _maximal_subwindows(times):
        total = sum(N**2 * (cums[N][j] - cums[N][i]) for N in cums)
        if total > best_val4:
            best_val4, best_pair = total, (i, j)
    i, j = best_pair
    per_shell = {N: float(N**2 * (cums[N][j] - cums[N][i])) for N in cums}
    return NormReport(
        value=float(max(best_val4, 0.0) ** 0.25),
        per_shell=per_shell,
        window=(float(times[i]), float(times[j])),
    )


def z_prime(trajectory, window) -> float:
    """||u||_{Z'} = ||u||_Z^{3/4} ||u||_{X1 proxy}^{1/4}."""
    z = z_norm(trajectory, window).value
    x1 = x1_proxy(trajectory)
    return float(z**0.75 * x1**0.25)


# ---------------------------------------------------------------------------
# discrete V^2 variation


def discrete_v2_norm(values) -> float:
    """Max over increasing subsequences of the l^2 increment sum, O(L^2) DP:
    best[j] = max_{i<j}(best[i] + |v_j - v_i|^2)."""
    v = np.asarray(values, dtype=np.complex128).ravel()
    if v.size == 0:
        raise ValueError("empty sequence")
    if v.size == 1:
        return 0.0
    best = np.zeros(v.size)
    for j in range(1, v.size):
        best[j] = np.max(best[:j] + np.abs(v[j] - v[:j]) ** 2)
    return float(np.sqrt(np.max(best)))


def v2_norm_batch(tracks: np.ndarray) -> np.ndarray:
    """Vectorized discrete V^2 over rows of a (batch, L) complex array."""
    tracks = np.asarray(tracks, dtype=np.complex128)
    if tracks.ndim != 2 or tracks.shape[1] == 0:
        raise ValueError("need a (batch, L) array with L >= 1")
    b, L = tracks.shape
    if L == 1:
        return np.zeros(b)
    best = np.zeros((b, L))
    for j in range(1, L):
        cand = best[:, :j] + np.abs(tracks[:, j : j + 1] - tracks[:, :j]) ** 2
        best[:, j] = cand.max(axis=1)
    return np.sqrt(best.max(axis=1))


# ---------------------------------------------------------------------------
# X^1 / Y^1 proxies


def y1_proxy(trajectory, chunk: int = 1 << 19) -> float:
    """(sum_n <n>^2 V2(e^{i |omega(n)|^2 t} uhat(t)(n))^2)^{1/2} on the sampled
    times; identically zero for free trajectories."""
    times = np.asarray(trajectory.times, dtype=float)
    if times.size < 8:
        raise ValueError(f"need >= 8 samples for the variation proxy, got {times.size}")
    g = trajectory.geometry
    disp = g.dispersion_grid().ravel()
    wgt = (1.0 + g.mode_norm_sq_grid().ravel()).astype(float)
    flats = [snap.coefficients.ravel() for snap in trajectory.snapshots]
    total = 0.0
    n = disp.size
    for lo in range(0, n, chunk):
        hi = min(lo + chunk, n)
        tracks = np.empty((hi - lo, times.size), dtype=np.complex128)
        d = disp[lo:hi]
        for j, t in enumerate(times):
            tracks[:, j] = flats[j][lo:hi] * np.exp(1j * d * t)
        v2 = v2_norm_batch(tracks)
        total += float(np.sum(wgt[lo:hi] * v2**2))
    return float(np.sqrt(total))


def sup_h1(trajectory) -> float:
    g = trajectory.geometry
    disp = g.dispersion_grid()
    best = 0.0
    for snap in trajectory.snapshots:
        val = g.volume * np.sum((1.0 + disp) * np.abs(snap.coefficients) ** 2)
        best = max(best, float(val))
    return float(np.sqrt(best))


def x1_proxy(trajectory) -> float:
    """max(sup_t ||u(t)||_{H1}, y1_proxy): an upper-flavored computable
    stand-in for the atomic X^1 norm."""
    return max(sup_h1(trajectory), y1_proxy(trajectory))


def trajectory_l2_track(trajectory) -> np.ndarray:
    """Convenience: L2 norm at each sample (diagnostic plots)."""
    return np.array([l2_norm(s) for s in trajectory.snapshots])
