"""Galerkin assembly: quadrature, overlap, Hamiltonian, dipole, laser."""

from types import SimpleNamespace

import numpy as np
import pytest

from swr2e.basis import LocalBasis, gaussian_basis, slater_basis, trapezoid_weights
from swr2e.geometry import SIDES, GlobalGrid, build_layout
from swr2e.operators import (
    OperatorError,
    assemble_dipole,
    assemble_field_matrix,
    assemble_hamiltonian,
    assemble_overlap,
    build_local_operators,
    dump_matrix,
    quadrature_2d,
)
from swr2e.potentials import LaserField
from support import sine_orbitals

ROBIN = SimpleNamespace(kind="robin", mu=1.0)


def gauss_s1(delta, a, b):
    return np.sqrt(np.pi / (2 * delta)) * np.exp(-delta * (a - b) ** 2 / 2)


def gauss_kin(delta, a, b):
    # int g_a' g_b' dx over the whole line
    d = a - b
    return gauss_s1(delta, a, b) * (delta - delta**2 * d**2)


class TestQuadrature2d:
    def test_constant_rectangle(self):
        x1 = np.linspace(0.0, 2.0, 31)
        x2 = np.linspace(-1.0, 3.0, 17)
        f = np.ones((31, 17))
        assert quadrature_2d(x1, x2, f) == pytest.approx(8.0, abs=1e-12)

    def test_separable_gaussian_gives_pi(self):
        x = np.linspace(-15.0, 15.0, 201)
        f = np.exp(-(x[:, None] ** 2 + x[None, :] ** 2))
        assert quadrature_2d(x, x, f) == pytest.approx(np.pi, abs=1e-6)

    def test_odd_integrand_vanishes(self):
        x = np.linspace(-2.0, 2.0, 41)
        f = x[:, None] * np.ones_like(x)[None, :]
        assert abs(quadrature_2d(x, x, f)) < 1e-12

    def test_shape_mismatch_rejected(self):
        x = np.linspace(0, 1, 5)
        with pytest.raises(ValueError, match="does not match"):
            quadrature_2d(x, x, np.ones((4, 5)))


class TestOverlap:
    def test_analytic_matches_quadrature(self):
        x = np.linspace(-15.0, 15.0, 201)
        b = gaussian_basis(1, x, x, 3, 0.5)  # centers -10, 0, 10
        a_quad = assemble_overlap(b)
        a_exact = assemble_overlap(b, analytic=True)
        assert np.max(np.abs(a_quad - a_exact)) < 1e-8

    def test_diagonal_entry_closed_form(self):
        x = np.linspace(-15.0, 15.0, 201)
        b = gaussian_basis(1, x, x, 1, 0.7,
                           center_rule=(np.zeros(1), np.zeros(1)))
        a = assemble_overlap(b)
        assert a[0, 0] == pytest.approx(np.pi / (2 * 0.7), abs=1e-10)

    def test_single_function_is_norm_squared(self):
        x = np.linspace(-3.0, 3.0, 61)
        b = gaussian_basis(1, x, x, 1, 2.0)
        w = np.outer(trapezoid_weights(x), trapezoid_weights(x))
        a = assemble_overlap(b)
        assert a[0, 0] == pytest.approx(np.sum(w * b.fields[0] ** 2), abs=1e-14)

    def test_orthonormal_slater_block_is_identity(self):
        orbs = sine_orbitals(1, -1.0, 0.02, 101, 0, 4)
        b = slater_basis(1, orbs.x, orbs.x, 0, 0, orbs, orbs)
        a = assemble_overlap(b)
        assert np.max(np.abs(a - np.eye(b.size))) < 1e-10

    def test_degenerate_basis_rejected(self):
        x = np.linspace(-2.0, 2.0, 41)
        g = np.exp(-(x**2))
        dg = -2 * x * g
        terms = [((1.0, g, dg, g, dg),)] * 2  # identical functions
        b = LocalBasis(1, "gaussian", x, x, terms, [("g", 0, 0), ("g", 0, 1)])
        with pytest.raises(OperatorError, match="degenerate"):
            assemble_overlap(b)

    def test_analytic_path_requires_gaussian_kind(self):
        orbs = sine_orbitals(1, -1.0, 0.02, 101, 0, 2)
        b = slater_basis(1, orbs.x, orbs.x, 0, 0, orbs, orbs)
        with pytest.raises(OperatorError, match="gaussian"):
            assemble_overlap(b, analytic=True)


def single_domain(npts=201, span=15.0):
    grid = GlobalGrid(-span, span, -span, span, npts, npts)
    layout = build_layout(grid, 1, 0.0)
    sub = layout.subdomain(1)
    edges = [layout.edge(1, s) for s in SIDES]
    x1, x2 = layout.axes(1)
    return sub, edges, x1, x2


class TestHamiltonian:
    def test_gaussian_kinetic_diagonal(self):
        sub, edges, x1, x2 = single_domain()
        delta = 0.7
        b = gaussian_basis(1, x1, x2, 1, delta,
                           center_rule=(np.zeros(1), np.zeros(1)))
        h, h_bdry, _ = assemble_hamiltonian(b, np.zeros((201, 201)), sub,
                                            edges, ROBIN)
        # 1/2 * 2 * (int g'g') * (int gg) = delta * pi/(2 delta) = pi/2
        assert h[0, 0] == pytest.approx(np.pi / 2, abs=1e-8)
        assert not h_bdry.any()  # no interfaces on a single domain

    def test_gaussian_offdiagonal_closed_form(self):
        sub, edges, x1, x2 = single_domain()
        delta = 0.6
        cx = np.array([-1.0, 1.5])
        cy = np.array([0.5, -0.5])
        b = gaussian_basis(1, x1, x2, 2, delta, center_rule=(cx, cy))
        h, _, _ = assemble_hamiltonian(b, np.zeros((201, 201)), sub, edges, ROBIN)
        k = b.labels.index(("g", 0, 0))
        p = b.labels.index(("g", 1, 1))
        expect = 0.5 * (gauss_kin(delta, cx[0], cx[1]) * gauss_s1(delta, cy[0], cy[1])
                        + gauss_s1(delta, cx[0], cx[1]) * gauss_kin(delta, cy[0], cy[1]))
        assert h[k, p] == pytest.approx(expect, abs=1e-8)

    def test_translation_invariance_with_zero_potential(self):
        grid = GlobalGrid(-15.0, 15.0, -15.0, 15.0, 201, 201)
        layout = build_layout(grid, 5, 0.0)
        subs = [layout.subdomain(n) for n in (7, 13)]
        hs = []
        for sub in subs:
            x1, x2 = layout.axes(sub.n)
            b = gaussian_basis(sub.n, x1, x2, 3, 1.0)
            edges = [layout.edge(sub.n, s) for s in SIDES]
            h, _, _ = assemble_hamiltonian(
                b, np.zeros(sub.shape), sub, edges, ROBIN)
            hs.append(h)
        assert np.max(np.abs(hs[0] - hs[1])) < 1e-12

    def test_symmetry_with_potential(self):
        sub, edges, x1, x2 = single_domain(101)
        b = gaussian_basis(1, x1, x2, 3, 0.4)
        v = np.add.outer(x1**2, x2**2) / 2
        h, _, _ = assemble_hamiltonian(b, v, sub, edges, ROBIN)
        assert np.max(np.abs(h - h.T)) < 1e-10

    def test_robin_boundary_matrix_analytic(self):
        grid = GlobalGrid(-6.0, 6.0, -6.0, 6.0, 121, 121)
        layout = build_layout(grid, 2, 0.4)
        sub = layout.subdomain(1)  # E and N edges are interfaces
        x1, x2 = layout.axes(1)
        delta = 1.5
        b = gaussian_basis(1, x1, x2, 1, delta,
                           center_rule=(np.array([-3.0]), np.array([-3.0])))
        mu = 7.0
        tc = SimpleNamespace(kind="robin", mu=mu)
        edges = [layout.edge(1, s) for s in SIDES]
        _, h_bdry, maps = assemble_hamiltonian(b, np.zeros(sub.shape), sub,
                                               edges, tc)
        assert set(maps) == {"E", "N"}
        ge = np.exp(-delta * (x1[-1] + 3.0) ** 2)
        line = np.exp(-2 * delta * (x2 + 3.0) ** 2)
        expect = 2 * (0.5 * mu) * ge**2 * np.trapezoid(line, x2)
        assert h_bdry[0, 0] == pytest.approx(expect, rel=1e-10)

    def test_robin_rhs_map_constant_data(self):
        grid = GlobalGrid(-6.0, 6.0, -6.0, 6.0, 121, 121)
        layout = build_layout(grid, 2, 0.4)
        sub = layout.subdomain(1)
        x1, x2 = layout.axes(1)
        b = gaussian_basis(1, x1, x2, 2, 0.8)
        edges = [layout.edge(1, s) for s in SIDES]
        _, _, maps = assemble_hamiltonian(b, np.zeros(sub.shape), sub,
                                          edges, ROBIN)
        g = np.full(x2.size, 3.0)
        bvec = maps["E"] @ g
        expect = 0.5 * 3.0 * np.trapezoid(b.line_values(0, x1.size - 1), x2, axis=1)
        np.testing.assert_allclose(bvec, expect, atol=1e-13)

    def test_dirichlet_penalty_scaling(self):
        grid = GlobalGrid(-6.0, 6.0, -6.0, 6.0, 121, 121)
        layout = build_layout(grid, 2, 0.4)
        sub = layout.subdomain(1)
        x1, x2 = layout.axes(1)
        b = gaussian_basis(1, x1, x2, 2, 0.8)
        edges = [layout.edge(1, s) for s in SIDES]
        robin = SimpleNamespace(kind="robin", mu=2.0)
        dirich = SimpleNamespace(kind="dirichlet", mu=0.0)
        _, hb_r, maps_r = assemble_hamiltonian(b, np.zeros(sub.shape), sub,
                                               edges, robin)
        _, hb_d, maps_d = assemble_hamiltonian(b, np.zeros(sub.shape), sub,
                                               edges, dirich)
        np.testing.assert_allclose(hb_d, 1e6 * hb_r, rtol=1e-12)
        np.testing.assert_allclose(maps_d["E"], 2e6 * maps_r["E"], rtol=1e-12)

    def test_complex_mu_gives_complex_boundary(self):
        grid = GlobalGrid(-6.0, 6.0, -6.0, 6.0, 121, 121)
        layout = build_layout(grid, 2, 0.4)
        sub = layout.subdomain(1)
        x1, x2 = layout.axes(1)
        b = gaussian_basis(1, x1, x2, 2, 0.8)
        edges = [layout.edge(1, s) for s in SIDES]
        tc = SimpleNamespace(kind="robin", mu=-10j)
        h, h_bdry, _ = assemble_hamiltonian(b, np.zeros(sub.shape), sub,
                                            edges, tc)
        assert np.iscomplexobj(h_bdry) and not np.iscomplexobj(h)
        assert np.max(np.abs(h_bdry.real)) < 1e-15
        assert np.max(np.abs(h_bdry.imag)) > 0

    def test_validation(self):
        sub, edges, x1, x2 = single_domain(101)
        b = gaussian_basis(1, x1, x2, 2, 0.5)
        v = np.zeros((101, 101))
        with pytest.raises(ValueError, match="mu != 0"):
            assemble_hamiltonian(b, v, sub, edges,
                                 SimpleNamespace(kind="robin", mu=0.0))
        with pytest.raises(ValueError, match="transmission kind"):
            assemble_hamiltonian(b, v, sub, edges,
                                 SimpleNamespace(kind="absorbing", mu=1.0))
        with pytest.raises(ValueError, match="grid slice"):
            assemble_hamiltonian(b, np.zeros((3, 3)), sub, edges, ROBIN)


class TestDipole:
    def test_symmetric_basis_scalar_diagonal_vanishes(self):
        x = np.linspace(-5.0, 5.0, 101)
        b = gaussian_basis(1, x, x, 1, 1.0,
                           center_rule=(np.zeros(1), np.zeros(1)))
        q = assemble_dipole(b, "linear-scalar")["scalar"]
        assert abs(q[0, 0]) < 1e-10

    def test_gaussian_moment_closed_form(self):
        x = np.linspace(-15.0, 15.0, 201)
        cx = np.array([-1.0, 2.0])
        cy = np.array([0.0, 1.0])
        delta = 0.9
        b = gaussian_basis(1, x, x, 2, delta, center_rule=(cx, cy))
        q = assemble_dipole(b, "circular")
        k = b.labels.index(("g", 0, 0))
        p = b.labels.index(("g", 1, 1))
        # <x1 v_k, v_p> = midpoint * S1(ax) * S1(ay)
        expect = (0.5 * (cx[0] + cx[1]) * gauss_s1(delta, cx[0], cx[1])
                  * gauss_s1(delta, cy[0], cy[1]))
        assert q["x"][k, p] == pytest.approx(expect, abs=1e-8)

    def test_symmetry(self):
        x = np.linspace(-4.0, 4.0, 81)
        b = gaussian_basis(1, x, x, 3, 0.7)
        for m in assemble_dipole(b, "circular").values():
            assert np.max(np.abs(m - m.T)) < 1e-12

    def test_unknown_mode(self):
        x = np.linspace(-1, 1, 11)
        b = gaussian_basis(1, x, x, 1, 1.0)
        with pytest.raises(ValueError, match="dipole mode"):
            assemble_dipole(b, "quadrupole")


class TestFieldMatrix:
    X = np.linspace(-3.0, 3.0, 61)

    def laser(self, e0=1.0):
        return LaserField(E0=e0, omega0=8.0, nu0=10.0, T=2.5)

    def test_zero_envelope_gives_zero(self):
        b = gaussian_basis(1, self.X, self.X, 2, 1.0)
        q = assemble_dipole(b, "circular")
        t = assemble_field_matrix(q, self.laser(), -1e3)
        assert not t.any()

    def test_midpulse_circular_combination(self):
        b = gaussian_basis(1, self.X, self.X, 2, 1.0)
        q = assemble_dipole(b, "circular")
        laser = self.laser()
        t = assemble_field_matrix(q, laser, laser.T / 2)
        expect = np.cos(8.0 * 1.25) * q["x"] + np.sin(8.0 * 1.25) * q["y"]
        np.testing.assert_allclose(t, expect, atol=1e-14)

    def test_linear_in_amplitude(self):
        b = gaussian_basis(1, self.X, self.X, 2, 1.0)
        q = assemble_dipole(b, "linear-scalar")
        t1 = assemble_field_matrix(q, self.laser(1.0), 0.7)
        t2 = assemble_field_matrix(q, self.laser(2.0), 0.7)
        np.testing.assert_array_equal(t2, 2.0 * t1)


class TestBuildLocalOperators:
    def test_container_contents(self):
        grid = GlobalGrid(-6.0, 6.0, -6.0, 6.0, 121, 121)
        layout = build_layout(grid, 2, 0.4)
        sub = layout.subdomain(4)  # W and S are interfaces
        x1, x2 = layout.axes(4)
        b = gaussian_basis(4, x1, x2, 3, 0.6)
        edges = [layout.edge(4, s) for s in SIDES]
        v = np.zeros(sub.shape)
        ops = build_local_operators(b, v, sub, edges, ROBIN,
                                    dipole_mode="circular")
        assert ops.size == 9
        assert set(ops.boundary_rhs_maps) == {"W", "S"}
        assert set(ops.Q) == {"x", "y"}
        assert np.isfinite(ops.cond_A) and ops.cond_A >= 1.0
        assert np.max(np.abs(ops.A - ops.A.T)) < 1e-14


def test_dump_matrix_roundtrip(tmp_path):
    m = np.array([[1.5, -2.25], [1e-300, 3.0]])
    path = tmp_path / "mat.txt"
    dump_matrix(path, m)
    back = np.loadtxt(path, skiprows=1)
    np.testing.assert_array_equal(back, m)
    header = path.read_text().splitlines()[0]
    assert header.startswith("# K=2")
