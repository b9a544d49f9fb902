"""Conserved quantities, the Euclidean ground state, best Sobolev constants,
and the energy-trapping inequality checks.

The ground state W(x) = (1 + |x|^2/8)^{-1} solves Delta W + W^3 = 0 on R^4 and
carries the focusing thresholds:

    ||W||_{Hdot1(R^4)}^2 = ||W||_{L4(R^4)}^4 = 1/C4^4,   E_{R4}(W) = 1/(4 C4^4),

with C4 the best constant of ||f||_{L4}^2 <= C4^2 ||f||_{Hdot1}^2.  On the
torus the embedding needs an L^2 correction with a constant c_*, and the
modified energies

    E_*(u)  = (||u||_{Hdot1}^2 + c_* ||u||_{L2}^2)/2 - ||u||_{L4}^4/4
    E_**(u) = E_*(u) + (c_*^2 C4^4 / 4) ||u||_{L2}^4

drive the trapping argument: below the W threshold they control the H^1 norm
uniformly in time, with a certified margin delta_bar extracted from the
quadratic g1(y) = y/2 - (C4^4/4) y^2.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field as dc_field

import numpy as np
from scipy.integrate import quad

from .field import (
    Field,
    h1_star_norm,
    hdot1_norm,
    l2_norm,
    l4_norm,
)
from .geometry import TorusGeometry

SURFACE_S3 = 2.0 * math.pi**2  # surface measure of the unit 3-sphere in R^4


class QuadratureError(RuntimeError):
    """Radial quadrature failed to converge to the requested tolerance."""


class PreconditionError(ValueError):
    """Energy-trapping hypotheses violated; carries the failed conditions."""

    def __init__(self, failed: list[str]):
        super().__init__("trapping preconditions failed: " + ", ".join(failed))
        self.failed = failed


# ---------------------------------------------------------------------------
# mass / energy


def mass(f: Field) -> float:
    """M(u) = int |u|^2 dx."""
    return l2_norm(f) ** 2


def energy(f: Field, mu: int) -> float:
    """E(u) = 1/2 int |grad u|^2 + mu/4 int |u|^4."""
    return 0.5 * hdot1_norm(f) ** 2 + 0.25 * mu * l4_norm(f) ** 4


# ---------------------------------------------------------------------------
# ground state and Sobolev constants


def ground_state_value(x) -> float:
    """W(x) = 1/(1 + |x|^2 / 8) on R^4."""
    x = np.asarray(x, dtype=float)
    return float(1.0 / (1.0 + np.dot(x, x) / 8.0))


def ground_state_radial(r):
    r = np.asarray(r, dtype=float)
    return 1.0 / (1.0 + r * r / 8.0)


def _w_radial_derivatives(r):
    """Analytic W'(r) and W''(r) for W = (1 + r^2/8)^{-1}."""
    r = np.asarray(r, dtype=float)
    sig = 1.0 + r * r / 8.0
    wp = -(r / 4.0) / sig**2
    wpp = -(1.0 / 4.0) / sig**2 + (r * r / 8.0) / sig**3
    return wp, wpp


def verify_ground_state_equation(radial_grid) -> dict:
    """Evaluate Delta W + W^3 on a radial grid with the exact 4D radial
    Laplacian f'' + 3 f'/r (4 f'' at r=0) and report the worst residual."""
    r = np.asarray(radial_grid, dtype=float)
    w = ground_state_radial(r)
    wp, wpp = _w_radial_derivatives(r)
    lap = np.where(r > 0, wpp + 3.0 * np.divide(wp, r, out=np.zeros_like(r), where=r > 0), 4.0 * wpp)
    residual = lap + w**3
    i = int(np.argmax(np.abs(residual)))
    return {
        "max_abs_residual": float(np.max(np.abs(residual))),
        "worst_r": float(r[i]),
        "n_points": int(r.size),
    }


@dataclass(frozen=True)
class SobolevConstants:
    """Ground-state quantities shared by every threshold check.

    W_hdot1_sq : ||W||_{Hdot1(R^4)}^2
    C4         : best Sobolev embedding constant, C4 = W_hdot1_sq^{-1/4}
    E_W        : Euclidean energy of W
    c_star     : torus embedding correction in use (configured or estimated)
    """

    W_hdot1_sq: float
    C4: float
    E_W: float
    c_star: float

    @property
    def C4_pow4(self) -> float:
        return self.C4**4

    @property
    def W_threshold(self) -> float:
        """||W||_{Hdot1(R^4)}, the focusing GWP threshold."""
        return math.sqrt(self.W_hdot1_sq)

    def with_c_star(self, c_star: float) -> "SobolevConstants":
        return SobolevConstants(self.W_hdot1_sq, self.C4, self.E_W, float(c_star))


def compute_sobolev_constants(quadrature_tolerance: float = 1e-12, c_star: float = 1.0) -> SobolevConstants:
    """Radial quadrature of the ground-state integrals.

    ||W||_{Hdot1}^2 = 2 pi^2 int_0^inf (r^2/16)(1+r^2/8)^{-4} r^3 dr, and the
    L^4 integral is computed independently; the relation E_W * 4 C4^4 = 1 is
    cross-checked to the requested tolerance.
    """
    if not quadrature_tolerance > 0:
        raise ValueError("tolerance must be positive")

    def grad_sq(r):
        sig = 1.0 + r * r / 8.0
        return (r * r / 16.0) / sig**4 * r**3

    def w4(r):
        sig = 1.0 + r * r / 8.0
        return r**3 / sig**4

    tol = quadrature_tolerance
    # substitute r = tan(theta) style infinite-range handling via quad's
    # built-in support for infinite upper limits
    h1_val, h1_err = quad(grad_sq, 0.0, np.inf, epsabs=tol, epsrel=tol, limit=400)
    l4_val, l4_err = quad(w4, 0.0, np.inf, epsabs=tol, epsrel=tol, limit=400)
    if not (np.isfinite(h1_val) and np.isfinite(l4_val)):
        raise QuadratureError("ground-state quadrature diverged")
    if h1_err > 100 * tol * max(1.0, abs(h1_val)) or l4_err > 100 * tol * max(1.0, abs(l4_val)):
        raise QuadratureError(
            f"ground-state quadrature did not reach tolerance: errs {h1_err}, {l4_err}"
        )
    W_hdot1_sq = SURFACE_S3 * h1_val
    W_l4_4 = SURFACE_S3 * l4_val
    C4 = W_hdot1_sq ** (-0.25)
    E_W = 0.5 * W_hdot1_sq - 0.25 * W_l4_4
    check = E_W * 4.0 * C4**4
    if abs(check - 1.0) > 1e-8:
        raise QuadratureError(f"relation E_W * 4 C4^4 = 1 violated: got {check}")
    return SobolevConstants(W_hdot1_sq=W_hdot1_sq, C4=C4, E_W=E_W, c_star=float(c_star))


def c_star_lower_bound(geometry: TorusGeometry, constants: SobolevConstants) -> float:
    """1/(C4^2 sqrt(Vol)), obtained from the constant trial function."""
    return 1.0 / (constants.C4**2 * math.sqrt(geometry.volume))


def default_c_star(geometry: TorusGeometry, constants: SobolevConstants, safety: float = 1.05) -> float:
    """Configured default: the constant-function lower bound times a safety factor."""
    return safety * c_star_lower_bound(geometry, constants)


def estimate_c_star(geometry: TorusGeometry, constants: SobolevConstants, trial_family) -> float:
    """Smallest c such that ||f||_{L4}^2 <= C4^2 (||f||_{Hdot1}^2 + c ||f||_{L2}^2)
    holds for every trial field, floored at the analytic lower bound."""
    best = c_star_lower_bound(geometry, constants)
    used = 0
    for f in trial_family:
        l2 = l2_norm(f)
        if l2 == 0.0:
            continue  # degenerate trial, skipped
        used += 1
        need = (l4_norm(f) ** 2 / constants.C4**2 - hdot1_norm(f) ** 2) / l2**2
        best = max(best, need)
    if used == 0:
        raise ValueError("trial family is empty after skipping degenerate entries")
    return best


# ---------------------------------------------------------------------------
# modified energies (focusing sign convention of the trapping argument)


def modified_energy_star(f: Field, constants: SobolevConstants) -> float:
    """E_*(f) = (||f||_{Hdot1}^2 + c_* ||f||_{L2}^2)/2 - ||f||_{L4}^4/4."""
    return (
        0.5 * (hdot1_norm(f) ** 2 + constants.c_star * l2_norm(f) ** 2)
        - 0.25 * l4_norm(f) ** 4
    )


def modified_energy_star_star(f: Field, constants: SobolevConstants) -> float:
    """E_**(f) = E_*(f) + (c_*^2 C4^4 / 4) ||f||_{L2}^4."""
    return modified_energy_star(f, constants) + (
        constants.c_star**2 * constants.C4_pow4 / 4.0
    ) * l2_norm(f) ** 4


def conserved_star_combination(mass_val: float, energy_val: float, constants: SobolevConstants) -> float:
    """E + (c_*/2) M: the conserved L2-augmented energy.  For the focusing
    flow (mu = -1) this equals E_* identically."""
    return energy_val + 0.5 * constants.c_star * mass_val


def conserved_star_star_combination(mass_val: float, energy_val: float, constants: SobolevConstants) -> float:
    """E + (c_*/2) M + (c_*^2 C4^4/4) M^2; equals E_** for mu = -1."""
    return (
        conserved_star_combination(mass_val, energy_val, constants)
        + (constants.c_star**2 * constants.C4_pow4 / 4.0) * mass_val**2
    )


# ---------------------------------------------------------------------------
# energy trapping

DELTA_BAR_CEILING = 1.0 - 1e-9


def bisect_delta_bar(delta0: float, constants: SobolevConstants, tol: float = 1e-12) -> float:
    """Largest delta_bar with g1((1-delta_bar) Q) >= (1-delta0) E_W, where
    g1(y) = y/2 - (C4^4/4) y^2 and Q = ||W||_{Hdot1}^2.

    g1 increases on [0, Q] with vertex exactly at Q and g1(Q) = E_W, so the
    sub-level condition of the trapping lemma pins the certified norm margin.
    Capped at a ceiling just below 1 (reached for delta0 >= 1).
    """
    if not delta0 > 0:
        raise ValueError("delta0 must be positive")
    Q = constants.W_hdot1_sq
    target = (1.0 - delta0) * constants.E_W

    def g1(y):
        return 0.5 * y - 0.25 * constants.C4_pow4 * y * y

    if g1((1.0 - DELTA_BAR_CEILING) * Q) >= target:
        return DELTA_BAR_CEILING
    lo, hi = 0.0, DELTA_BAR_CEILING  # g1((1-lo)Q) = E_W >= target always
    while hi - lo > tol:
        mid = 0.5 * (lo + hi)
        if g1((1.0 - mid) * Q) >= target:
            lo = mid
        else:
            hi = mid
    return lo


@dataclass
class TrappingReport:
    """Per-sample verdicts of the trapping inequalities with certified margin."""

    variant: str
    delta0: float
    delta_bar: float
    c_star: float
    times: list = dc_field(default_factory=list)
    norm_below: list = dc_field(default_factory=list)      # ||.||^2 < (1-db) Q
    coercive: list = dc_field(default_factory=list)        # quartic coercivity
    energy_above: list = dc_field(default_factory=list)    # E >= (1+db)/4 ||.||^2
    margins: dict = dc_field(default_factory=dict)
    first_failure_time: float | None = None
    preconditions_ok: bool = True
    failed_preconditions: list = dc_field(default_factory=list)

    @property
    def all_passed(self) -> bool:
        return (
            self.preconditions_ok
            and all(self.norm_below)
            and all(self.coercive)
            and all(self.energy_above)
        )


def _trapping_sample(f: Field, constants: SobolevConstants, variant: str, delta_bar: float):
    """The three Theorem-2.5-style inequalities for one field sample."""
    Q = constants.W_hdot1_sq
    cs = constants.c_star
    l2sq = l2_norm(f) ** 2
    l4p4 = l4_norm(f) ** 4
    hd = hdot1_norm(f) ** 2
    if variant == "star":
        nsq = hd + cs * l2sq
        coercive_lhs = nsq - l4p4
        e_val = 0.5 * nsq - 0.25 * l4p4
    elif variant == "star_star":
        nsq = hd
        coercive_lhs = nsq - l4p4 + 2.0 * cs * l2sq + cs**2 * constants.C4_pow4 * l2sq**2
        e_val = 0.5 * (hd + cs * l2sq) - 0.25 * l4p4 + 0.25 * cs**2 * constants.C4_pow4 * l2sq**2
    else:
        raise ValueError(f"unknown trapping variant {variant!r}")
    checks = (
        nsq < (1.0 - delta_bar) * Q,
        coercive_lhs >= delta_bar * nsq,
        e_val >= 0.25 * (1.0 + delta_bar) * nsq,
    )
    margins = (
        (1.0 - delta_bar) * Q - nsq,
        coercive_lhs - delta_bar * nsq,
        e_val - 0.25 * (1.0 + delta_bar) * nsq,
    )
    return checks, margins, nsq, e_val


def _check_preconditions(f: Field, constants: SobolevConstants, variant: str, delta0: float) -> list[str]:
    failed = []
    thr = constants.W_threshold
    if variant == "star":
        if not h1_star_norm(f, constants.c_star) < thr:
            failed.append("||f||_{H1*} < ||W||_{Hdot1}")
        if not modified_energy_star(f, constants) < (1.0 - delta0) * constants.E_W:
            failed.append("E_*(f) < (1-delta0) E_W")
    else:
        if not hdot1_norm(f) < thr:
            failed.append("||f||_{Hdot1} < ||W||_{Hdot1}")
        if not modified_energy_star_star(f, constants) < (1.0 - delta0) * constants.E_W:
            failed.append("E_**(f) < (1-delta0) E_W")
    return failed


def check_energy_trapping(
    f: Field, constants: SobolevConstants, variant: str, delta0: float
) -> TrappingReport:
    """Single-field trapping check: verify hypotheses, bisect delta_bar, and
    test the three conclusion inequalities.  Raises PreconditionError naming
    the violated hypothesis when (2.2)/(2.6)-style conditions fail."""
    failed = _check_preconditions(f, constants, variant, delta0)
    if failed:
        raise PreconditionError(failed)
    delta_bar = bisect_delta_bar(delta0, constants)
    report = TrappingReport(variant=variant, delta0=delta0, delta_bar=delta_bar, c_star=constants.c_star)
    checks, margins, _, _ = _trapping_sample(f, constants, variant, delta_bar)
    report.times.append(0.0)
    report.norm_below.append(bool(checks[0]))
    report.coercive.append(bool(checks[1]))
    report.energy_above.append(bool(checks[2]))
    report.margins = {
        "norm_below": [margins[0]],
        "coercive": [margins[1]],
        "energy_above": [margins[2]],
    }
    if not all(checks):
        report.first_failure_time = 0.0
    return report


def trapping_along_flow(
    trajectory, constants: SobolevConstants, variant: str, delta0: float
) -> TrappingReport:
    """Run the trapping checks at every stored snapshot of a trajectory.

    Hypotheses are enforced on the initial sample; failures downstream are
    recorded with the first failing time rather than raised.
    """
    snaps = trajectory.snapshots
    if not snaps:
        raise ValueError("trajectory has no snapshots")
    failed = _check_preconditions(snaps[0], constants, variant, delta0)
    if failed:
        raise PreconditionError(failed)
    delta_bar = bisect_delta_bar(delta0, constants)
    report = TrappingReport(variant=variant, delta0=delta0, delta_bar=delta_bar, c_star=constants.c_star)
    report.margins = {"norm_below": [], "coercive": [], "energy_above": []}
    for t, snap in zip(trajectory.times, snaps):
        checks, margins, _, _ = _trapping_sample(snap, constants, variant, delta_bar)
        report.times.append(float(t))
        report.norm_below.append(bool(checks[0]))
        report.coercive.append(bool(checks[1]))
        report.energy_above.append(bool(checks[2]))
        report.margins["norm_below"].append(margins[0])
        report.margins["coercive"].append(margins[1])
        report.margins["energy_above"].append(margins[2])
        if not all(checks) and report.first_failure_time is None:
            report.first_failure_time = float(t)
    return report
