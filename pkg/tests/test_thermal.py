import math

import numpy as np
import pytest
from hypothesis import given, strategies as st
from scipy.integrate import quad

from impurityprobe.constants import CONST
from impurityprobe.thermal import (EnergyDistribution, light_shift, mb_pdf,
                                   mb_quadrature, quadratic_zeeman,
                                   reduced_mass, zeeman_coefficient_hz_per_G2)

K_B = CONST.k_B


class TestReducedMass:
    def test_equal_masses(self):
        assert reduced_mass(3.0, 3.0) == pytest.approx(1.5, rel=1e-15)

    def test_rbcs_value(self):
        # direct arithmetic from the CODATA masses
        m1 = 86.909180531 * CONST.amu
        m2 = 132.905451961 * CONST.amu
        expected = m1 * m2 / (m1 + m2)
        assert expected == pytest.approx(8.726e-26, rel=1e-3)
        assert reduced_mass(CONST.m_Rb, CONST.m_Cs) == pytest.approx(expected)

    def test_heavy_partner_limit(self):
        assert reduced_mass(1.0, 1e12) == pytest.approx(1.0, rel=1e-11)

    @pytest.mark.parametrize("m1,m2", [(0.0, 1.0), (1.0, -2.0)])
    def test_nonpositive_mass_rejected(self, m1, m2):
        with pytest.raises(ValueError):
            reduced_mass(m1, m2)


class TestMBPdf:
    def test_zero_energy(self):
        assert mb_pdf(0.0, 500e-9) == 0.0

    def test_normalization(self):
        T = 600e-9
        total, _ = quad(lambda E: mb_pdf(E, T), 0.0, 40 * K_B * T, limit=200)
        assert total == pytest.approx(1.0, abs=1e-9)

    def test_mode_at_half_kT(self):
        # d/dE [sqrt(E) e^{-E/kT}] = 0 at E = kT/2
        T = 850e-9
        E_star = 0.5 * K_B * T
        eps = 1e-6 * E_star
        assert mb_pdf(E_star, T) > mb_pdf(E_star - eps, T)
        assert mb_pdf(E_star, T) > mb_pdf(E_star + eps, T)

    def test_scale_invariance(self):
        # p(E, T) * kT depends only on E / kT
        x = np.array([0.2, 0.7, 1.9, 4.2])
        for T1, T2 in [(200e-9, 900e-9), (400e-9, 1.7e-6)]:
            f1 = mb_pdf(x * K_B * T1, T1) * K_B * T1
            f2 = mb_pdf(x * K_B * T2, T2) * K_B * T2
            assert np.allclose(f1, f2, rtol=1e-12)

    def test_negative_energy_rejected(self):
        with pytest.raises(ValueError):
            mb_pdf(-1e-30, 500e-9)

    def test_distribution_wrapper(self):
        d = EnergyDistribution(T=300e-9)
        assert d.pdf(K_B * 300e-9) == mb_pdf(K_B * 300e-9, 300e-9)
        with pytest.raises(ValueError):
            EnergyDistribution(T=0.0)


@pytest.mark.parametrize("method", ["gauss", "panel"])
class TestMBQuadrature:
    def test_weights_normalized(self, method):
        E, w = mb_quadrature(500e-9, order=64, method=method)
        assert np.all(np.diff(E) > 0)
        assert np.all(w > 0)
        assert abs(w.sum() - 1.0) < 1e-9

    def test_mean_energy(self, method):
        T = 850e-9
        E, w = mb_quadrature(T, order=32, method=method)
        assert np.dot(w, E) == pytest.approx(1.5 * K_B * T, rel=1e-6)

    def test_second_moment(self, method):
        T = 400e-9
        E, w = mb_quadrature(T, order=64, method=method)
        assert np.dot(w, E**2) == pytest.approx(3.75 * (K_B * T) ** 2, rel=1e-6)

    def test_order_too_small(self, method):
        with pytest.raises(ValueError):
            mb_quadrature(500e-9, order=1, method=method)

    def test_convergence_monotone(self, method):
        # error of a non-polynomial moment shrinks with order
        T = 600e-9
        exact = math.gamma(2.0) / math.gamma(1.5) * math.sqrt(K_B * T)
        errs = []
        for order in (8, 16, 32, 64):
            E, w = mb_quadrature(T, order=order, method=method)
            errs.append(abs(np.dot(w, np.sqrt(E)) - exact))
        for lo, hi in zip(errs[1:], errs[:-1]):
            assert lo <= hi * (1.0 + 1e-9) + 1e-18


class TestZeeman:
    def test_zero_field(self):
        assert quadratic_zeeman(0.0) == 0.0

    def test_coefficient_theory_value(self):
        assert zeeman_coefficient_hz_per_G2() == pytest.approx(427.5, rel=5e-3)

    def test_plug_in_at_operating_field(self):
        # B = 198.5 mG = 0.1985 G
        val = quadratic_zeeman(198.5e-7)
        expected = 2.0 * math.pi * 427.5 * 0.1985**2
        assert val == pytest.approx(expected, rel=5e-3)
        assert val == pytest.approx(2 * math.pi * 16.85, rel=6e-3)

    def test_quadratic_scaling(self):
        assert quadratic_zeeman(2e-5) == pytest.approx(4 * quadratic_zeeman(1e-5),
                                                       rel=1e-14)

    def test_negative_field_rejected(self):
        with pytest.raises(ValueError):
            quadratic_zeeman(-1e-5)


class TestLightShift:
    def test_zero_power(self):
        assert light_shift(0.0, 2 * math.pi * 1083.0) == 0.0

    def test_fixture_slope(self):
        assert light_shift(0.1, 2 * math.pi * 1083.0) == pytest.approx(
            2 * math.pi * 108.3, rel=1e-12)
        assert light_shift(1.0, 2 * math.pi * 1104.0) == pytest.approx(
            2 * math.pi * 1104.0, rel=1e-12)

    @given(st.floats(0, 10), st.floats(0, 10), st.floats(0.1, 10))
    def test_linearity(self, p1, p2, lam):
        slope = 2 * math.pi * 1083.0
        add = light_shift(p1, slope) + light_shift(p2, slope)
        assert light_shift(p1 + p2, slope) == pytest.approx(add, rel=1e-12, abs=1e-12)
        assert light_shift(lam * p1, slope) == pytest.approx(
            lam * light_shift(p1, slope), rel=1e-12, abs=1e-12)

    def test_negative_power_rejected(self):
        with pytest.raises(ValueError):
            light_shift(-0.1, 1.0)
