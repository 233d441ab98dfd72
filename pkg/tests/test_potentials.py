import numpy as np
import pytest
from fractions import Fraction
from hypothesis import given, settings, strategies as st
from scipy.integrate import quad

from swr2e.potentials import (
    BarrierSpec,
    LaserField,
    Mollifier,
    NucleusSet,
    a_eps,
    barrier_value,
    laser_value,
    mollifier_value,
    mollify,
    smoothed_coulomb,
    smoothstep,
    softcore_potential,
    two_electron_table,
)
from reference_values import G_COULOMB, G_DEFECTS


class TestMollifier:
    def test_normalization_constants_exact(self):
        assert Mollifier(1.0, 1).sigma_exact == Fraction(3, 4)
        assert Mollifier(1.0, 2).sigma_exact == Fraction(15, 16)
        assert Mollifier(1.0, 4).sigma_exact == Fraction(315, 256)

    def test_unit_mass(self):
        for eps, order in [(0.1, 4), (0.5, 1), (0.5, 2), (0.25, 3)]:
            m = Mollifier(eps, order)
            val, _ = quad(lambda s: mollifier_value(m, s), -eps, eps,
                          points=[0.0], epsabs=1e-13, limit=200)
            assert abs(val - 1.0) < 1e-10

    def test_peak_and_support_edge(self):
        m = Mollifier(0.3, 4)
        assert mollifier_value(m, 0.0) == pytest.approx(m.sigma / 0.3, rel=1e-14)
        assert mollifier_value(m, 0.3) == 0.0
        assert mollifier_value(m, -0.3) == 0.0
        assert mollifier_value(m, 0.31) == 0.0

    @settings(max_examples=80, deadline=None)
    @given(x=st.floats(-2.0, 2.0), order=st.integers(1, 6))
    def test_even_and_nonnegative(self, x, order):
        m = Mollifier(0.7, order)
        assert mollifier_value(m, x) >= 0.0
        assert mollifier_value(m, x) == pytest.approx(mollifier_value(m, -x),
                                                      abs=1e-15)

    def test_rejects_bad_parameters(self):
        with pytest.raises(ValueError):
            Mollifier(0.0, 4)
        with pytest.raises(ValueError):
            Mollifier(0.1, 0)


class TestSmoothedCoulomb:
    def test_frozen_reference_values(self):
        for (eps, order, x), ref in G_COULOMB.items():
            g = smoothed_coulomb(Mollifier(eps, order))
            assert g(x) == pytest.approx(ref, abs=1e-10)

    def test_matches_coulomb_to_second_order(self):
        # |G_eps(0.5) + 2| halving eps four-folds the defect
        defects = []
        for eps in (0.2, 0.1, 0.05):
            g = smoothed_coulomb(Mollifier(eps, 4))
            defects.append(abs(g(0.5) + 2.0))
        for got, ref in zip(defects, G_DEFECTS):
            assert got == pytest.approx(ref, rel=1e-6)
        assert defects[0] / defects[1] == pytest.approx(4.0, rel=0.10)
        assert defects[1] / defects[2] == pytest.approx(4.0, rel=0.10)

    def test_small_eps_limit(self):
        g = smoothed_coulomb(Mollifier(0.01, 4))
        assert g(1.0) == pytest.approx(-1.0, abs=1e-4)

    def test_finite_attractive_at_origin(self):
        g = smoothed_coulomb(Mollifier(0.5, 4))
        v0 = g(0.0)
        assert np.isfinite(v0) and v0 < 0
        # bounded below by the kernel floor -3/eps
        assert v0 >= -3.0 / 0.5

    def test_even_and_monotone(self):
        g = smoothed_coulomb(Mollifier(0.2, 4))
        xs = np.linspace(0.0, 1.5, 40)
        vals = g(xs)
        assert np.allclose(g(-xs), vals, atol=1e-12)
        assert np.all(np.diff(vals) > 0)

    def test_scale_4pi(self):
        m = Mollifier(0.1, 4)
        plain = smoothed_coulomb(m)(0.5)
        scaled = smoothed_coulomb(m, scale_4pi=True)(0.5)
        assert scaled == pytest.approx(plain / (4 * np.pi), rel=1e-14)

    def test_array_evaluation_deduplicates(self):
        g = smoothed_coulomb(Mollifier(0.1, 4))
        xs = np.array([[0.5, -0.5], [0.5, 0.25]])
        vals = g(xs)
        assert vals.shape == (2, 2)
        assert vals[0, 0] == vals[1, 0]
        assert vals[0, 0] == g(0.5)


class TestMollify:
    def test_cosine_richardson_ratio(self):
        xs = np.linspace(0.0, 2 * np.pi, 101)
        errs = []
        for eps in (0.4, 0.2):
            smooth = mollify(Mollifier(eps, 4), np.cos, xs)
            errs.append(np.sqrt(np.trapezoid((smooth - np.cos(xs)) ** 2, xs)))
        assert errs[0] / errs[1] == pytest.approx(4.0, rel=0.10)


class TestBarrier:
    def test_smoothstep_junctions(self):
        eb = 0.5
        assert smoothstep(-eb / 2, eb) == 0.0
        assert smoothstep(eb / 2, eb) == 1.0
        assert smoothstep(0.0, eb) == pytest.approx(0.5, abs=1e-15)
        # one-sided slopes vanish at both junctions
        h = 1e-7
        assert smoothstep(-eb / 2 + h, eb) < 1e-12
        assert 1.0 - smoothstep(eb / 2 - h, eb) < 1e-12

    def test_plateaus(self):
        b = BarrierSpec(x_b=2.0, eps_b=0.5, V_inf=1e3)
        assert barrier_value(b, 0.0) == 0.0
        assert a_eps(b, 0.0) == 1.0
        assert barrier_value(b, 5.0) == 1e3
        assert a_eps(b, 5.0) == 0.0

    @settings(max_examples=60, deadline=None)
    @given(x=st.floats(-6.0, 6.0))
    def test_partition(self, x):
        b = BarrierSpec(x_b=2.0, eps_b=0.5, V_inf=1e3)
        s = barrier_value(b, x) / b.V_inf
        assert a_eps(b, x) + s == pytest.approx(1.0, abs=1e-14)
        assert barrier_value(b, x) == barrier_value(b, -x)


class TestSoftcore:
    def test_two_nucleus_value_at_origin(self):
        n = NucleusSet.symmetric_pair(1.25, 1.0)
        ref = -2.0 / np.sqrt(1.25 ** 2 + 0.2 ** 2)
        assert softcore_potential(n, 0.2, 0.0) == pytest.approx(ref, rel=1e-15)
        assert ref == pytest.approx(-2.0 / np.sqrt(1.6025), rel=1e-15)

    @settings(max_examples=60, deadline=None)
    @given(x=st.floats(-3.0, 3.0))
    def test_symmetric_pair_is_even(self, x):
        n = NucleusSet.symmetric_pair(1.25, 1.0)
        assert softcore_potential(n, 0.2, x) == pytest.approx(
            softcore_potential(n, 0.2, -x), rel=1e-12, abs=1e-13)

    def test_large_eta_limit(self):
        n = NucleusSet((0.0,), (1.0,))
        assert abs(softcore_potential(n, 1e8, 0.3)) < 1e-7

    def test_validation(self):
        with pytest.raises(ValueError):
            NucleusSet((0.0, 1.0), (1.0,))
        with pytest.raises(ValueError):
            NucleusSet((0.0,), (-1.0,))
        with pytest.raises(ValueError):
            softcore_potential(NucleusSet((0.0,), (1.0,)), 0.0, 0.0)


class TestLaser:
    def test_peak_magnitude(self):
        f = LaserField(E0=1.0, omega0=8.0, nu0=10.0, T=2.5)
        ex, ey = laser_value(f, f.T / 2)
        assert np.hypot(ex, ey) == pytest.approx(f.E0, rel=1e-14)

    @settings(max_examples=60, deadline=None)
    @given(t=st.floats(0.0, 2.5))
    def test_circular_identity(self, t):
        f = LaserField(E0=1.0, omega0=8.0, nu0=10.0, T=2.5)
        ex, ey = laser_value(f, t)
        ref = f.E0 ** 2 * np.exp(-2 * f.nu0 * (f.T / 2 - t) ** 2)
        assert ex * ex + ey * ey == pytest.approx(ref, rel=1e-12, abs=1e-300)

    def test_linear_scalar_mode(self):
        f = LaserField(E0=1.0, omega0=8.0, nu0=10.0, T=2.5, mode="linear-scalar")
        ex, ey = laser_value(f, 0.7)
        assert ex == ey

    def test_mode_validation(self):
        with pytest.raises(ValueError):
            LaserField(1.0, 8.0, 10.0, 2.5, mode="elliptic")


class TestTwoElectronTable:
    def test_softcore_matches_direct_formula(self):
        x = np.linspace(-2.0, 2.0, 9)
        n = NucleusSet.symmetric_pair(1.25, 1.0)
        v = two_electron_table(x, x, nuclei=n, model="softcore", eta=0.2)
        i, j = 3, 6
        ref = (softcore_potential(n, 0.2, x[i]) + softcore_potential(n, 0.2, x[j])
               + 1.0 / np.sqrt((x[i] - x[j]) ** 2 + 0.04))
        assert v[i, j] == pytest.approx(ref, rel=1e-14)
        # exchange symmetry for symmetric nuclei
        assert np.allclose(v, v.T, atol=1e-14)

    def test_smoothed_model_composition(self):
        x = np.linspace(-1.0, 1.0, 5)
        n = NucleusSet((0.0,), (2.0,))
        m = Mollifier(0.2, 4)
        v = two_electron_table(x, x, nuclei=n, model="smoothed", mollifier=m)
        g = smoothed_coulomb(m)
        ref = 2.0 * (g(x[1]) + g(x[4])) - g(x[1] - x[4])
        assert v[1, 4] == pytest.approx(ref, rel=1e-13)
        # the electron repulsion term is positive
        assert -g(x[1] - x[4]) > 0

    def test_ee_toggle(self):
        x = np.linspace(-1.0, 1.0, 5)
        n = NucleusSet((0.0,), (1.0,))
        v_on = two_electron_table(x, x, nuclei=n, model="softcore", eta=0.5)
        v_off = two_electron_table(x, x, nuclei=n, model="softcore", eta=0.5,
                                   ee=False)
        diff = v_on - v_off
        assert np.all(diff > 0)

    def test_unknown_model_rejected(self):
        with pytest.raises(ValueError):
            two_electron_table(np.zeros(2), np.zeros(2),
                               nuclei=NucleusSet((0.0,), (1.0,)), model="bare")
