import numpy as np
import pytest

from elastoscan.elastic import Medium, PlaneWave, PointSource, WaveMode
from elastoscan.forward import (
    MSRMatrix,
    MsrDimensionError,
    MsrFormatError,
    MsrVersionError,
    NumericError,
    add_noise,
    assemble_dirichlet_system,
    assemble_neumann_system,
    cot_quadrature_weights,
    direction_grid,
    farfield_from_density,
    load_msr,
    log_quadrature_weights,
    save_msr,
    solve_density,
    synthesize_msr,
)
from elastoscan.geometry import (
    BoundaryCondition,
    BoundaryCurve,
    BoundaryKind,
    Scene,
    boundary_quadrature,
)

D = BoundaryCondition.DIRICHLET
N = BoundaryCondition.NEUMANN


def one_scene(kind, bc, center=(0.0, 0.0), rho=1.0):
    return Scene(((BoundaryCurve(kind, center, rho), bc),))


def interior_source_error(scene, medium, n, z0, q=(0.6, 0.8)):
    """Far-field error of the solved density against the exact -Phi_inf."""
    bc = scene.components[0][1]
    system = (assemble_dirichlet_system if bc is D else assemble_neumann_system)(
        scene, medium, n)
    src = PointSource(tuple(z0), q)
    density = solve_density(system, src)
    dirs = direction_grid(32)
    up, us = farfield_from_density(density, medium, dirs)
    from elastoscan.elastic import point_source_farfield

    ep, es = point_source_farfield(dirs, np.asarray(z0), np.asarray(q), medium)
    num = np.sum(np.abs(up + ep) ** 2 + np.abs(us + es) ** 2)
    den = np.sum(np.abs(ep) ** 2 + np.abs(es) ** 2)
    return np.sqrt(num / den)


class TestQuadratureRules:
    @pytest.mark.parametrize("m", [1, 2, 5, 11])
    def test_log_rule_exact_on_cosines(self, m):
        n = 64
        t = 2 * np.pi * np.arange(n) / n
        r = log_quadrature_weights(n)
        idx = (0 - np.arange(n)) % n
        approx = (r[idx] * np.cos(m * t)).sum()
        assert abs(approx - (-2 * np.pi / m)) < 1e-12

    @pytest.mark.parametrize("m", [1, 2, 5, 11])
    def test_cot_rule_exact_on_fourier_modes(self, m):
        # kernel cot((tau - t)/2): cos(m tau) -> -2 pi sin(m t), sin -> +2 pi cos
        n = 64
        t = 2 * np.pi * np.arange(n) / n
        h = cot_quadrature_weights(n)
        for i in (0, 5):
            idx = (i - np.arange(n)) % n
            c = (h[idx] * np.cos(m * t)).sum()
            s = (h[idx] * np.sin(m * t)).sum()
            assert abs(c - (-2 * np.pi * np.sin(m * t[i]))) < 1e-12
            assert abs(s - 2 * np.pi * np.cos(m * t[i])) < 1e-12


class TestDirichletSystem:
    def test_matrix_symmetry_on_circle(self, medium):
        system = assemble_dirichlet_system(one_scene(BoundaryKind.CIRCLE, D), medium, 128)
        a = system.matrix
        assert np.linalg.norm(a - a.T) / np.linalg.norm(a) < 1e-10

    def test_density_self_convergence_on_circle(self, medium):
        scene = one_scene(BoundaryKind.CIRCLE, D)
        wave = PlaneWave(WaveMode.P, (1.0, 0.0))
        rho_c = solve_density(assemble_dirichlet_system(scene, medium, 128), wave)
        rho_f = solve_density(assemble_dirichlet_system(scene, medium, 256), wave)
        coarse, fine = rho_c.values, rho_f.values[::2]
        rel = np.linalg.norm(coarse - fine) / np.linalg.norm(fine)
        assert rel < 1e-8

    def test_interior_source_exactness(self, medium):
        err = interior_source_error(one_scene(BoundaryKind.CIRCLE, D), medium, 128,
                                    (0.2, -0.1))
        assert err < 1e-6

    def test_zero_incident_zero_density(self, medium):
        class NullIncident:
            def field(self, x, med):
                return np.zeros((len(np.atleast_2d(x)), 2), complex)

            def traction(self, x, nu, med):
                return np.zeros((len(np.atleast_2d(x)), 2), complex)

        system = assemble_dirichlet_system(one_scene(BoundaryKind.CIRCLE, D), medium, 128)
        density = solve_density(system, NullIncident())
        assert np.linalg.norm(density.values) < 1e-13


class TestNeumannSystem:
    def test_interior_source_exactness_circle(self, medium):
        err = interior_source_error(one_scene(BoundaryKind.CIRCLE, N), medium, 256,
                                    (0.2, -0.1))
        assert err < 1e-4

    def test_interior_source_exactness_kite(self, medium):
        err = interior_source_error(one_scene(BoundaryKind.KITE, N), medium, 512,
                                    (-0.2, 0.3))
        assert err < 1e-3

    def test_farfield_self_convergence_on_circle(self, medium):
        scene = one_scene(BoundaryKind.CIRCLE, N)
        wave = PlaneWave(WaveMode.S, (0.0, 1.0))
        dirs = direction_grid(16)
        out = []
        for n in (256, 512):
            density = solve_density(assemble_neumann_system(scene, medium, n), wave)
            up, us = farfield_from_density(density, medium, dirs)
            out.append(np.concatenate([up, us]))
        rel = np.linalg.norm(out[0] - out[1]) / np.linalg.norm(out[1])
        assert rel < 1e-6

    def test_differs_from_dirichlet(self, medium):
        scene_d = one_scene(BoundaryKind.CIRCLE, D)
        scene_n = one_scene(BoundaryKind.CIRCLE, N)
        a_d = assemble_dirichlet_system(scene_d, medium, 128).matrix
        a_n = assemble_neumann_system(scene_n, medium, 128).matrix
        assert np.linalg.norm(a_d - a_n) > 1.0

    @pytest.mark.filterwarnings("ignore::scipy.linalg.LinAlgWarning")
    def test_singular_system_raises(self, medium):
        system = assemble_dirichlet_system(one_scene(BoundaryKind.CIRCLE, D), medium, 128)
        system.matrix = np.zeros_like(system.matrix)
        system.matrix[0, 0] = 1.0
        with pytest.raises(NumericError):
            system.factorization()


class TestMixedSceneSystem:
    def test_interior_source_exactness_mixed_bcs(self, medium):
        """Two components with different conditions: a point source inside one
        makes u_in + u_sc vanish identically outside it, so both the Dirichlet
        trace and the Neumann traction cancel and the far field is -Phi_inf."""
        from elastoscan.forward import assemble_system

        scene = Scene(((BoundaryCurve(BoundaryKind.CIRCLE, (-2.5, 0.0)), D),
                       (BoundaryCurve(BoundaryKind.KITE, (2.5, 0.0)), N)))
        dirs = direction_grid(32)
        q = (0.6, 0.8)
        system = assemble_system(scene, medium, 256)
        for z0 in ((-2.3, 0.1), (2.3, 0.3)):      # inside circle, inside kite
            density = solve_density(system, PointSource(z0, q))
            up, us = farfield_from_density(density, medium, dirs)
            from elastoscan.elastic import point_source_farfield

            ep, es = point_source_farfield(dirs, np.asarray(z0), np.asarray(q), medium)
            err = np.sqrt(np.sum(np.abs(up + ep) ** 2 + np.abs(us + es) ** 2)
                          / np.sum(np.abs(ep) ** 2 + np.abs(es) ** 2))
            assert err < 1e-3


class TestSmoothDiagonalFormulas:
    """Closed-form singular-quadrature diagonals vs numerically extrapolated limits."""

    def test_single_layer_smooth_diagonal(self, medium):
        from elastoscan.elastic import hankel_pack, logcoef_pack
        from elastoscan.forward import _single_layer_smooth_diag

        quad = boundary_quadrature(BoundaryCurve(BoundaryKind.KITE), 16)
        i = 3
        t0 = quad.t[i]
        from elastoscan.geometry import curve_point, curve_tangent

        kite = BoundaryCurve(BoundaryKind.KITE)

        def smooth_at(eps):
            acc = 0.0
            for sgn in (1.0, -1.0):
                tau = t0 + sgn * eps
                xt = curve_point(kite, tau)
                st = np.linalg.norm(curve_tangent(kite, tau))
                w = quad.points[i] - xt
                r = np.linalg.norm(w)
                what = w / r
                eye = np.eye(2)
                hp = hankel_pack(np.array([r]), medium)
                jp = logcoef_pack(np.array([r]), medium)
                mat = lambda p: (p["phi1"][0] * eye
                                 + p["phi2"][0] * np.outer(what, what)) * st
                acc = acc + mat(hp) - np.log(4 * np.sin(eps / 2) ** 2) * mat(jp)
            return acc / 2.0

        v1, v2, v3 = smooth_at(4e-3), smooth_at(2e-3), smooth_at(1e-3)
        extrap = (64 * v3 - 20 * v2 + v1) / 45
        a_diag, b_diag = _single_layer_smooth_diag(medium, quad.speeds)
        that = np.array([-quad.normals[i, 1], quad.normals[i, 0]])
        closed = quad.speeds[i] * (a_diag[i] * np.eye(2) + b_diag * np.outer(that, that))
        assert np.linalg.norm(extrap - closed) < 1e-8

    def test_cauchy_strength_matches_elastostatic_constant(self, medium):
        from elastoscan.forward import cauchy_strength

        lam = cauchy_strength(medium)
        sigma = medium.lam / (2 * (medium.lam + medium.mu))   # plane-strain Poisson
        classical = (1 - 2 * sigma) / (4 * np.pi * (1 - sigma))
        assert lam[1, 0] == pytest.approx(classical, rel=1e-14)
        assert np.allclose(lam, -lam.T)


class TestFarField:
    def test_zero_density_zero_farfield(self, medium):
        from elastoscan.forward import Density

        quad = boundary_quadrature(BoundaryCurve(BoundaryKind.CIRCLE), 64)
        density = Density(np.zeros((64, 2), complex), quad)
        up, us = farfield_from_density(density, medium, direction_grid(8))
        assert np.all(up == 0) and np.all(us == 0)


class TestSynthesizeMSR:
    def test_m_too_small_rejected(self, medium, circle_scene):
        with pytest.raises(ValueError):
            synthesize_msr(circle_scene, medium, 3, 128)

    def test_disk_blocks_are_circulant(self, msr_disk_m16):
        n = 2 * msr_disk_m16.m
        for block in (msr_disk_m16.f_pp, msr_disk_m16.f_ss,
                      msr_disk_m16.f_ps, msr_disk_m16.f_sp):
            idx = (np.arange(n)[:, None] - np.arange(n)[None, :]) % n
            mean_diag = np.array([block[idx == k].mean() for k in range(n)])
            recon = mean_diag[idx]
            assert np.linalg.norm(block - recon) <= 1e-8 * (np.linalg.norm(block) + 1)

    def test_two_component_scene_smoke(self, medium):
        scene = Scene(((BoundaryCurve(BoundaryKind.KITE, (-3.0, 3.0)), D),
                       (BoundaryCurve(BoundaryKind.PEANUT, (3.0, -3.0)), D)))
        msr = synthesize_msr(scene, medium, 8, 128)
        assert np.all(np.isfinite(msr.assembled()))
        assert msr.frobenius() > 0

    def test_norm_grows_with_obstacle_size(self, medium):
        small = synthesize_msr(one_scene(BoundaryKind.CIRCLE, D, rho=1.0), medium, 8, 128)
        big = synthesize_msr(one_scene(BoundaryKind.CIRCLE, D, rho=2.0), medium, 8, 256)
        assert big.frobenius() > small.frobenius()

    def test_reciprocity_small_case(self, medium):
        msr = synthesize_msr(one_scene(BoundaryKind.KITE, D), medium, 8, 256)
        m = msr.m
        sig = (np.arange(2 * m) + m) % (2 * m)
        nrm = msr.frobenius()
        assert np.abs(msr.f_pp - msr.f_pp[np.ix_(sig, sig)].T).max() < 1e-10 * nrm
        assert np.abs(msr.f_ss - msr.f_ss[np.ix_(sig, sig)].T).max() < 1e-10 * nrm
        assert np.abs(msr.f_ps - msr.f_sp[np.ix_(sig, sig)].T).max() < 1e-10 * nrm


class TestNoise:
    def test_zero_delta_identity(self, msr_disk_m16):
        out = add_noise(msr_disk_m16, 0.0, seed=9)
        assert np.array_equal(out.assembled(), msr_disk_m16.assembled())

    @pytest.mark.parametrize("delta", [0.1, 0.3])
    def test_exact_relative_perturbation(self, msr_disk_m16, delta):
        out = add_noise(msr_disk_m16, delta, seed=4)
        rel = (np.linalg.norm(out.assembled() - msr_disk_m16.assembled())
               / np.linalg.norm(msr_disk_m16.assembled()))
        assert abs(rel - delta) < 1e-12

    def test_seed_determinism(self, msr_disk_m16):
        a = add_noise(msr_disk_m16, 0.2, seed=7).assembled()
        b = add_noise(msr_disk_m16, 0.2, seed=7).assembled()
        c = add_noise(msr_disk_m16, 0.2, seed=8).assembled()
        assert np.array_equal(a, b)
        assert not np.array_equal(a, c)

    def test_negative_delta_rejected(self, msr_disk_m16):
        with pytest.raises(ValueError):
            add_noise(msr_disk_m16, -0.1, seed=1)


class TestMsrPersistence:
    def test_round_trip_value_exact(self, msr_disk_m16, tmp_path):
        noisy = add_noise(msr_disk_m16, 0.1, seed=2)
        path = tmp_path / "disk.msr"
        save_msr(noisy, path)
        back = load_msr(path)
        assert np.array_equal(back.assembled(), noisy.assembled())
        assert back.m == noisy.m and back.delta == noisy.delta and back.seed == 2
        assert back.scene == noisy.scene and back.omega == noisy.omega

    def test_truncated_line_names_offender(self, msr_disk_m16, tmp_path):
        path = tmp_path / "x.msr"
        save_msr(msr_disk_m16, path)
        lines = path.read_text().splitlines()
        lines[12] = lines[12].rsplit(" ", 1)[0]     # drop one number: odd field count
        path.write_text("\n".join(lines) + "\n")
        with pytest.raises(MsrFormatError, match="line 13"):
            load_msr(path)

    def test_missing_rows_dimension_error(self, msr_disk_m16, tmp_path):
        path = tmp_path / "x.msr"
        save_msr(msr_disk_m16, path)
        lines = path.read_text().splitlines()
        path.write_text("\n".join(lines[:-4]) + "\n")
        with pytest.raises(MsrDimensionError):
            load_msr(path)

    def test_header_data_mismatch_dimension_error(self, msr_disk_m16, tmp_path):
        path = tmp_path / "x.msr"
        save_msr(msr_disk_m16, path)
        text = path.read_text().replace("#m=16", "#m=8")
        path.write_text(text)
        with pytest.raises(MsrDimensionError):
            load_msr(path)

    def test_version_mismatch(self, msr_disk_m16, tmp_path):
        path = tmp_path / "x.msr"
        save_msr(msr_disk_m16, path)
        path.write_text(path.read_text().replace("MSR/1", "MSR/9"))
        with pytest.raises(MsrVersionError):
            load_msr(path)

    def test_non_numeric_entry(self, msr_disk_m16, tmp_path):
        path = tmp_path / "x.msr"
        save_msr(msr_disk_m16, path)
        lines = path.read_text().splitlines()
        parts = lines[11].split(" ")
        parts[3] = "bogus"
        lines[11] = " ".join(parts)
        path.write_text("\n".join(lines) + "\n")
        with pytest.raises(MsrFormatError, match="line 12"):
            load_msr(path)
