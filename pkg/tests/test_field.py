import numpy as np
import pytest

from conftest import plane_wave, random_physical
from torus_nls.field import (
    CutoffProfile,
    FieldDataError,
    PhysicalField,
    SpectralField,
    cube_project,
    cutoff_eval,
    forward_transform,
    h1_norm,
    h1_star_norm,
    hdot1_norm,
    inverse_transform,
    l2_norm,
    load_field,
    lp_norm,
    lp_project,
    save_field,
    shell_decompose,
)
from torus_nls.geometry import DyadicShell, Mode, TorusGeometry, shells_up_to


class TestTransforms:
    def test_constant_field(self, geom8):
        u = PhysicalField(geom8, np.full(geom8.shape, 2.5 - 1.0j))
        spec = forward_transform(u)
        assert spec.coefficients[0, 0, 0, 0] == pytest.approx(2.5 - 1.0j, rel=1e-14)
        others = spec.coefficients.copy()
        others[0, 0, 0, 0] = 0
        assert np.max(np.abs(others)) < 1e-13

    def test_single_mode_unit_coefficient(self, geom8):
        u = plane_wave(geom8, (1, 0, 0, 0))
        spec = forward_transform(u)
        assert spec.coefficients[1, 0, 0, 0] == pytest.approx(1.0, rel=1e-13)

    def test_roundtrip_random(self, geom16, rng):
        u = random_physical(geom16, rng)
        v = inverse_transform(forward_transform(u))
        scale = np.max(np.abs(u.samples))
        assert np.max(np.abs(v.samples - u.samples)) < 1e-12 * scale

    def test_plancherel(self, geom8, rng):
        u = random_physical(geom8, rng)
        spec = forward_transform(u)
        phys_l2 = l2_norm(u)
        spec_l2 = l2_norm(spec)
        assert spec_l2 == pytest.approx(phys_l2, rel=1e-12)

    def test_nonfinite_rejected(self, geom8):
        data = np.ones(geom8.shape, dtype=complex)
        data[0, 0, 0, 0] = np.nan
        with pytest.raises(FieldDataError):
            forward_transform(PhysicalField(geom8, data))


class TestNorms:
    def test_constant_h1_star(self, geom8):
        u = PhysicalField(geom8, np.ones(geom8.shape, dtype=complex))
        assert h1_star_norm(u, 10.5) == pytest.approx(np.sqrt(10.5), rel=1e-12)

    def test_constant_l2(self, geom8):
        u = PhysicalField(geom8, 2.0 * np.ones(geom8.shape, dtype=complex))
        assert l2_norm(u) ** 2 == pytest.approx(4.0, rel=1e-12)

    def test_single_mode_hdot1(self, geom8):
        c = 0.3 - 1.2j
        u = plane_wave(geom8, (1, 0, 0, 0), amplitude=c)
        assert hdot1_norm(u) ** 2 == pytest.approx(4 * np.pi**2 * abs(c) ** 2, rel=1e-12)

    def test_lp_requires_p_ge_1(self, geom8):
        u = PhysicalField(geom8, np.ones(geom8.shape, dtype=complex))
        with pytest.raises(ValueError):
            lp_norm(u, 0.5)

    def test_norm_comparability(self, geom16, rng):
        u = forward_transform(random_physical(geom16, rng))
        for c_star in (0.3, 1.0, 7.5):
            h1 = h1_norm(u)
            hs = h1_star_norm(u, c_star)
            lo, hi = min(1.0, np.sqrt(c_star)), max(1.0, np.sqrt(c_star))
            assert lo * h1 - 1e-12 <= hs <= hi * h1 + 1e-12

    def test_norm_bundle(self, geom8, rng):
        from torus_nls.field import norm_bundle

        u = random_physical(geom8, rng)
        b = norm_bundle(u, c_star=2.0, p=6)
        assert b["l2"] == pytest.approx(l2_norm(u), rel=1e-13)
        assert b["h1"] ** 2 == pytest.approx(b["l2"] ** 2 + b["hdot1"] ** 2, rel=1e-12)
        assert b["h1_star"] ** 2 == pytest.approx(
            b["hdot1"] ** 2 + 2.0 * b["l2"] ** 2, rel=1e-12
        )
        assert b["l6"] == pytest.approx(lp_norm(u, 6), rel=1e-13)

    def test_gradient_consistency(self, geom16, rng):
        # spectral Hdot1 equals grid quadrature of the spectral gradient
        u = forward_transform(random_physical(geom16, rng))
        total = 0.0
        for w in u.geometry.omega_grids():
            grad = inverse_transform(SpectralField(u.geometry, 1j * w * u.coefficients))
            total += l2_norm(grad) ** 2
        assert np.sqrt(total) == pytest.approx(hdot1_norm(u), rel=1e-10)


class TestProjections:
    def test_single_mode_shell_selection(self, geom8):
        coeff = np.zeros(geom8.shape, dtype=complex)
        coeff[3, 0, 0, 0] = 1.0
        u = SpectralField(geom8, coeff)
        kept = lp_project(u, DyadicShell(4))
        assert np.array_equal(kept.coefficients, u.coefficients)
        for N in (2, 8):
            killed = lp_project(u, DyadicShell(N))
            assert np.max(np.abs(killed.coefficients)) == 0.0

    def test_idempotence_exact(self, geom8, rng):
        u = forward_transform(random_physical(geom8, rng))
        p = lp_project(u, DyadicShell(2))
        pp = lp_project(p, DyadicShell(2))
        assert np.array_equal(p.coefficients, pp.coefficients)

    def test_partition_of_unity(self, geom16, rng):
        u = forward_transform(random_physical(geom16, rng))
        total = np.zeros(geom16.shape, dtype=complex)
        for sh in shells_up_to(geom16):
            total += lp_project(u, sh).coefficients
        assert np.max(np.abs(total - u.coefficients)) < 1e-12 * np.max(np.abs(u.coefficients))

    def test_disjoint_shells_annihilate(self, geom8, rng):
        u = forward_transform(random_physical(geom8, rng))
        p2 = lp_project(u, DyadicShell(2))
        p2then4 = lp_project(p2, DyadicShell(4))
        assert np.max(np.abs(p2then4.coefficients)) == 0.0

    def test_self_adjoint(self, geom8, rng):
        u = forward_transform(random_physical(geom8, rng))
        v = forward_transform(random_physical(geom8, rng))
        vol = geom8.volume

        def pair(a, b):
            return vol * np.sum(a.coefficients * np.conj(b.coefficients))

        lhs = pair(lp_project(u, DyadicShell(2)), v)
        rhs = pair(u, lp_project(v, DyadicShell(2)))
        assert abs(lhs - rhs) < 1e-12 * abs(lhs + 1e-30)

    def test_h1_monotone(self, geom8, rng):
        u = forward_transform(random_physical(geom8, rng))
        for sh in shells_up_to(geom8):
            assert h1_norm(lp_project(u, sh)) <= h1_norm(u) + 1e-13

    def test_cube_full_is_identity(self, geom8, rng):
        u = forward_transform(random_physical(geom8, rng))
        full = cube_project(u, Mode((0, 0, 0, 0)), DyadicShell(8))
        assert np.array_equal(full.coefficients, u.coefficients)

    def test_cube_disjoint_supports(self, geom8, rng):
        u = forward_transform(random_physical(geom8, rng))
        a = cube_project(u, Mode((-2, 0, 0, 0)), DyadicShell(2))
        b = cube_project(u, Mode((2, 0, 0, 0)), DyadicShell(2))
        overlap = np.abs(a.coefficients) * np.abs(b.coefficients)
        assert np.max(overlap) == 0.0

    def test_cube_l2_contraction(self, geom8, rng):
        u = forward_transform(random_physical(geom8, rng))
        c = cube_project(u, Mode((1, 1, 0, 0)), DyadicShell(4))
        assert l2_norm(c) <= l2_norm(u) + 1e-13

    def test_cube_side_beyond_span(self, geom8, rng):
        from torus_nls.geometry import GeometryError

        u = forward_transform(random_physical(geom8, rng))
        with pytest.raises(GeometryError):
            cube_project(u, Mode((0, 0, 0, 0)), DyadicShell(16))

    def test_shell_decompose_keys(self, geom8):
        coeff = np.zeros(geom8.shape, dtype=complex)
        coeff[3, 0, 0, 0] = 1.0
        parts = shell_decompose(SpectralField(geom8, coeff))
        assert list(parts) == [4]


class TestCutoff:
    def test_plateau_and_support(self):
        eta = CutoffProfile()
        assert cutoff_eval(eta, (0.5, 0, 0, 0)) == 1.0
        assert cutoff_eval(eta, (3.0, 0, 0, 0)) == 0.0
        assert cutoff_eval(eta, (0, 0, 0, 0)) == 1.0

    def test_transition_value(self):
        # exp(1 - 1/(1 - 0.5^2)) = exp(-1/3) at the midpoint of the ramp
        eta = CutoffProfile()
        assert eta(1.5) == pytest.approx(np.exp(-1.0 / 3.0), rel=1e-14)
        assert 0.0 < eta(1.5) < 1.0

    def test_monotone_on_ramp(self):
        eta = CutoffProfile()
        r = np.linspace(1.0, 2.0, 101)
        vals = eta(r)
        assert np.all(np.diff(vals) <= 1e-15)

    def test_bad_radii(self):
        with pytest.raises(ValueError):
            CutoffProfile(radius1=2.0, radius2=1.0)


class TestSnapshotIO:
    def test_bitwise_roundtrip(self, geom8, rng, tmp_path):
        u = random_physical(geom8, rng)
        path = tmp_path / "field.tnls"
        save_field(u, path)
        v = load_field(path)
        assert np.array_equal(u.samples, v.samples)
        assert v.geometry == geom8

    def test_bad_magic(self, tmp_path):
        path = tmp_path / "bad.tnls"
        path.write_bytes(b"NOPE" + b"\x00" * 64)
        with pytest.raises(FieldDataError):
            load_field(path)

    def test_anisotropic_geometry_preserved(self, rng, tmp_path):
        g = TorusGeometry(lam=(1.0, 2**0.5, 1.5, 1.0), grid=(8, 8, 10, 8))
        u = random_physical(g, rng)
        path = tmp_path / "aniso.tnls"
        save_field(u, path)
        v = load_field(path)
        assert v.geometry.lam == g.lam
        assert v.geometry.grid == g.grid
