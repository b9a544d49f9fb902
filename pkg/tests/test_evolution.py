import numpy as np
import pytest

from conftest import plane_wave, random_smooth_spectral
from torus_nls.evolution import (
    EvolutionParams,
    TrajectoryRecord,
    duhamel_integral,
    evolve,
    free_propagate,
    nonlinear_phase_step,
    picard_iterate,
    strang_step,
)
from torus_nls.field import (
    FieldDataError,
    PhysicalField,
    SpectralField,
    h1_norm,
    inverse_transform,
)


class TestFreePropagator:
    def test_identity_at_zero(self, geom8, rng):
        u = random_smooth_spectral(geom8, rng)
        v = free_propagate(u, 0.0)
        assert np.array_equal(u.coefficients, v.coefficients)

    def test_zero_mode_unchanged(self, geom8):
        coeff = np.zeros(geom8.shape, dtype=complex)
        coeff[0, 0, 0, 0] = 1.0 + 2.0j
        u = SpectralField(geom8, coeff)
        v = free_propagate(u, 0.37)
        assert v.coefficients[0, 0, 0, 0] == 1.0 + 2.0j

    def test_single_mode_phase(self, geom8):
        coeff = np.zeros(geom8.shape, dtype=complex)
        coeff[1, 0, 0, 0] = 1.0
        u = SpectralField(geom8, coeff)
        t = 1.0 / (4 * np.pi**2)
        v = free_propagate(u, t)
        assert v.coefficients[1, 0, 0, 0] == pytest.approx(np.exp(-1j), rel=1e-13)

    def test_group_law_and_reversibility(self, geom8, rng):
        u = random_smooth_spectral(geom8, rng)
        a = free_propagate(free_propagate(u, 0.3), 0.4)
        b = free_propagate(u, 0.7)
        assert np.max(np.abs(a.coefficients - b.coefficients)) < 1e-12
        back = free_propagate(free_propagate(u, 0.9), -0.9)
        assert np.max(np.abs(back.coefficients - u.coefficients)) < 1e-12


class TestNonlinearPhase:
    def test_mu_zero_identity(self, geom8, rng):
        u = inverse_transform(random_smooth_spectral(geom8, rng))
        v = nonlinear_phase_step(u, 0.1, 0)
        assert np.array_equal(u.samples, v.samples)

    def test_constant_field_ode(self, geom8):
        c = 1.5 - 0.5j
        u = PhysicalField(geom8, np.full(geom8.shape, c))
        v = nonlinear_phase_step(u, 0.2, -1)
        expect = c * np.exp(1j * abs(c) ** 2 * 0.2)
        assert np.allclose(v.samples, expect, rtol=1e-14)

    def test_modulus_preserved(self, geom8, rng):
        u = inverse_transform(random_smooth_spectral(geom8, rng))
        v = nonlinear_phase_step(u, 0.05, 1)
        assert np.max(np.abs(np.abs(v.samples) - np.abs(u.samples))) < 1e-13

    def test_nonfinite_rejected(self, geom8):
        data = np.ones(geom8.shape, dtype=complex)
        data[0, 0, 0, 0] = np.inf
        with pytest.raises(FieldDataError):
            nonlinear_phase_step(PhysicalField(geom8, data), 0.1, 1)


class TestStrang:
    def test_mu_zero_matches_free(self, geom8, rng):
        u = random_smooth_spectral(geom8, rng)
        params = EvolutionParams(mu=0, dt=1e-3, t_end=0.05, snapshot_stride=10)
        rec = evolve(u, params)
        for t, snap in zip(rec.times, rec.snapshots):
            free = free_propagate(u, t)
            assert np.max(np.abs(snap.coefficients - free.coefficients)) < 1e-12

    def test_single_mode_closed_form(self, geom8):
        # u(t) = c e^{i w x} e^{-i(|w|^2 + mu |c|^2) t}, matched to 1e-9
        c = 0.8 + 0.1j
        for mu in (-1, 1):
            u0 = plane_wave(geom8, (1, 0, 0, 0), amplitude=c)
            params = EvolutionParams(mu=mu, dt=1e-4, t_end=0.1, snapshot_stride=10**9)
            rec = evolve(u0, params)
            T = rec.times[-1]
            got = inverse_transform(rec.snapshots[-1]).samples
            exact = plane_wave(geom8, (1, 0, 0, 0), amplitude=c).samples * np.exp(
                -1j * (4 * np.pi**2 + mu * abs(c) ** 2) * T
            )
            assert np.max(np.abs(got - exact)) < 1e-9

    def test_constant_field_phase_rotation(self, geom8):
        # spatially constant data reduce to the ODE i u' = mu |c|^2 u
        c = 0.9 + 0.3j
        u0 = PhysicalField(geom8, np.full(geom8.shape, c))
        params = EvolutionParams(mu=-1, dt=1e-3, t_end=0.05, snapshot_stride=10)
        rec = evolve(u0, params)
        for t, snap in zip(rec.times, rec.snapshots):
            got = inverse_transform(snap).samples
            expect = c * np.exp(1j * abs(c) ** 2 * t)
            assert np.max(np.abs(np.abs(got) - abs(c))) < 1e-12
            assert np.max(np.abs(got - expect)) < 1e-10

    def test_gauge_covariance(self, geom8, rng):
        u = random_smooth_spectral(geom8, rng)
        theta = 0.77
        rotated = SpectralField(geom8, u.coefficients * np.exp(1j * theta))
        params = EvolutionParams(mu=-1, dt=1e-3, t_end=0.02, snapshot_stride=5)
        rec_a = evolve(u, params)
        rec_b = evolve(rotated, params)
        for a, b in zip(rec_a.snapshots, rec_b.snapshots):
            dev = np.max(np.abs(b.coefficients - a.coefficients * np.exp(1j * theta)))
            assert dev < 1e-12

    def test_strang_step_matches_evolve(self, geom8, rng):
        u = random_smooth_spectral(geom8, rng)
        params = EvolutionParams(mu=1, dt=1e-3, t_end=1e-3, snapshot_stride=1)
        rec = evolve(u, params)
        one = strang_step(u, 1e-3, params)
        assert np.max(np.abs(one.coefficients - rec.snapshots[-1].coefficients)) < 1e-13

    def test_short_run_conservation(self, geom16, rng):
        u = random_smooth_spectral(geom16, rng)
        params = EvolutionParams(mu=1, dt=1e-3, t_end=0.05, snapshot_stride=10)
        rec = evolve(u, params)
        for key in ("mass", "energy"):
            vals = np.array(rec.diagnostics[key])
            assert np.max(np.abs(vals - vals[0])) / abs(vals[0]) < 1e-6

    def test_blowup_threshold_halt(self, geom8, rng):
        u = random_smooth_spectral(geom8, rng, h1_target=2.0)
        params = EvolutionParams(
            mu=-1, dt=1e-3, t_end=1.0, snapshot_stride=100,
            blowup_threshold=h1_norm(u) * 1.000001,
        )
        rec = evolve(u, params)
        assert rec.halt_reason in ("blowup_threshold", "completed")

    def test_nonfinite_halt(self, geom8, rng, monkeypatch):
        # inject a NaN after two steps: the solver must halt with the
        # non_finite reason instead of propagating garbage
        import torus_nls.evolution as ev

        u = random_smooth_spectral(geom8, rng)
        calls = {"n": 0}
        original = ev._StrangWorkspace.nonlinear

        def poisoned(self, coeff):
            out = original(self, coeff)
            calls["n"] += 1
            if calls["n"] == 2:
                out[0, 0, 0, 0] = np.nan
            return out

        monkeypatch.setattr(ev._StrangWorkspace, "nonlinear", poisoned)
        rec = evolve(u, EvolutionParams(mu=1, dt=1e-3, t_end=0.01, snapshot_stride=1))
        assert rec.halt_reason == "non_finite"
        assert np.isnan(rec.diagnostics["mass"][-1])

    def test_initial_above_threshold_rejected(self, geom8, rng):
        u = random_smooth_spectral(geom8, rng)
        from torus_nls.field import hdot1_norm

        with pytest.raises(ValueError):
            evolve(u, EvolutionParams(mu=1, dt=1e-3, t_end=0.01,
                                      blowup_threshold=0.5 * hdot1_norm(u)))


class TestTrajectoryIO:
    def test_save_load_roundtrip(self, geom8, rng, tmp_path):
        u = random_smooth_spectral(geom8, rng)
        params = EvolutionParams(mu=1, dt=1e-3, t_end=0.01, snapshot_stride=3)
        rec = evolve(u, params)
        rec.save(tmp_path / "traj")
        back = TrajectoryRecord.load(tmp_path / "traj")
        assert back.times == [float(t) for t in rec.times]
        assert back.halt_reason == rec.halt_reason
        for a, b in zip(rec.snapshots, back.snapshots):
            # save path goes through one physical transform
            assert np.max(np.abs(a.coefficients - b.coefficients)) < 1e-13

    def test_diagnostics_csv_exact_floats(self, geom8, rng, tmp_path):
        u = random_smooth_spectral(geom8, rng)
        rec = evolve(u, EvolutionParams(mu=1, dt=1e-3, t_end=0.01, snapshot_stride=5))
        rec.save(tmp_path / "traj")
        lines = (tmp_path / "traj" / "diagnostics.csv").read_text().splitlines()
        assert lines[0] == "t,mass,energy,e_star,e_star_star,hdot1,h1_star"
        row = lines[1].split(",")
        assert float(row[1]) == rec.diagnostics["mass"][0]  # repr round-trips exactly


class TestDuhamelPicard:
    def test_mu_zero_fixed_point(self, geom8, rng):
        u = random_smooth_spectral(geom8, rng)
        iters = picard_iterate(u, (0.0, 0.4), iters=1, mu=0, n_samples=9)
        for a, b in zip(iters[0], iters[1]):
            assert np.array_equal(a.coefficients, b.coefficients)

    def test_contraction_small_data(self, geom8, rng):
        u = random_smooth_spectral(geom8, rng, h1_target=0.01)
        iters = picard_iterate(u, (0.0, 0.5), iters=6, mu=-1, n_samples=13)
        dists = []
        for k in range(len(iters) - 1):
            d = max(
                h1_norm(SpectralField(geom8, a.coefficients - b.coefficients))
                for a, b in zip(iters[k + 1], iters[k])
            )
            dists.append(d)
        for k in range(1, 5):
            assert dists[k] < 0.5 * dists[k - 1] or dists[k] == 0.0

    def test_empty_window_rejected(self, geom8, rng):
        u = random_smooth_spectral(geom8, rng)
        with pytest.raises(ValueError):
            picard_iterate(u, (0.5, 0.5), iters=1, mu=1)
        with pytest.raises(ValueError):
            picard_iterate(u, (0.0, 1.5), iters=1, mu=1)  # longer than unit window

    def test_duhamel_needs_samples(self, geom8, rng):
        u = random_smooth_spectral(geom8, rng)
        rec = evolve(u, EvolutionParams(mu=1, dt=1e-3, t_end=0.01, snapshot_stride=100))
        with pytest.raises(ValueError):
            duhamel_integral(rec, (0.5, 0.4))

    def test_duhamel_matches_picard_first_iterate(self, geom8, rng):
        # first Picard correction equals -i mu times the free-solution Duhamel
        u = random_smooth_spectral(geom8, rng, h1_target=0.5)
        times = np.linspace(0.0, 0.2, 9)
        from torus_nls.evolution import trajectory_from_free

        free_traj = trajectory_from_free(u, times)
        duh = duhamel_integral(free_traj, (0.0, 0.2), dealias="pad3_2")
        iters = picard_iterate(u, (0.0, 0.2), iters=1, mu=-1, n_samples=9)
        correction = iters[1][-1].coefficients - iters[0][-1].coefficients
        assert np.max(np.abs(correction - 1j * duh.coefficients)) < 1e-12


class TestParamsValidation:
    def test_bad_mu(self):
        with pytest.raises(ValueError):
            EvolutionParams(mu=2, dt=1e-3, t_end=1.0)

    def test_bad_dt(self):
        with pytest.raises(ValueError):
            EvolutionParams(mu=1, dt=0.0, t_end=1.0)

    def test_bad_dealias(self):
        with pytest.raises(ValueError):
            EvolutionParams(mu=1, dt=1e-3, t_end=1.0, dealias="pad2")
