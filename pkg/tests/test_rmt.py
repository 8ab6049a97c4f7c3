"""Spectral-law closed forms, Gaussian nulls, thresholds, and partials.

Frozen expected values were computed with the quadrature and root-finding
oracles in lss_sense.oracle (see test_oracle.py for the oracles' own
checks against first principles).
"""

import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from lss_sense import (
    DetectorKind,
    MpLaw,
    mp_mass_at_zero,
    mp_moment,
    mp_pdf,
    mp_support,
    mp_moment_numeric,
    mean_correction_numeric,
    np_threshold,
    null_distribution,
    q_function,
    q_inverse,
    sensitivity_partials,
    stieltjes_inverse,
    threshold_slope_rates,
)

HD = [DetectorKind.HDL, DetectorKind.HDS, DetectorKind.HDQ]

ratios = st.floats(min_value=0.02, max_value=20.0, allow_nan=False)


class TestMpLaw:
    def test_support_c3(self):
        a, b = mp_support(3.0)
        assert a == pytest.approx(0.5358983848622454, abs=1e-15)
        assert b == pytest.approx(7.464101615137754, abs=1e-15)

    def test_support_square_case(self):
        assert mp_support(1.0) == (0.0, 4.0)

    @given(ratios)
    def test_support_geometry(self, c):
        a, b = mp_support(c)
        assert 0.0 <= a < b
        assert b - a == pytest.approx(4.0 * math.sqrt(c), rel=1e-12)
        assert a + b == pytest.approx(2.0 * (1.0 + c), rel=1e-12)

    def test_mass_at_zero(self):
        assert mp_mass_at_zero(0.5) == 0.0
        assert mp_mass_at_zero(1.0) == 0.0
        assert mp_mass_at_zero(3.0) == pytest.approx(2.0 / 3.0, rel=1e-15)

    def test_pdf_outside_support_and_edges(self):
        a, b = mp_support(0.5)
        assert mp_pdf(a - 1e-9, 0.5) == 0.0
        assert mp_pdf(b + 1e-9, 0.5) == 0.0
        assert mp_pdf(a, 0.5) == 0.0
        assert mp_pdf(b, 0.5) == 0.0
        assert mp_pdf(1.0, 0.5) > 0.0

    def test_pdf_array_input(self):
        x = np.linspace(0.0, 3.0, 7)
        out = mp_pdf(x, 0.5)
        assert out.shape == x.shape
        assert np.all(out >= 0.0)

    @pytest.mark.parametrize("c", [0.1, 0.5, 1.0, 2.0, 3.0])
    def test_total_mass(self, c):
        total = mean_correction_numeric(lambda x: 1.0, c)
        assert total == pytest.approx(1.0, abs=1e-9)

    def test_moment_low_orders(self):
        for c in (0.25, 1.0, 3.0):
            assert mp_moment(1, c) == pytest.approx(1.0, rel=1e-15)
            assert mp_moment(2, c) == pytest.approx(1.0 + c, rel=1e-15)
            assert mp_moment(3, c) == pytest.approx(1.0 + 3 * c + c * c, rel=1e-14)

    @pytest.mark.parametrize("k", range(1, 9))
    @pytest.mark.parametrize("c", [0.1, 0.9, 1.0, 2.5])
    def test_moment_matches_quadrature(self, k, c):
        assert mp_moment(k, c) == pytest.approx(mp_moment_numeric(k, c), abs=1e-8)

    def test_moment_rejects_bad_order(self):
        with pytest.raises(ValueError):
            mp_moment(0, 1.0)
        with pytest.raises(ValueError):
            mp_moment(1.5, 1.0)

    def test_law_bundle(self):
        law = MpLaw(c=2.0)
        assert law.support == mp_support(2.0)
        assert law.mass_at_zero == mp_mass_at_zero(2.0)
        assert law.moment(2) == mp_moment(2, 2.0)


class TestStieltjes:
    def test_point_example(self):
        assert stieltjes_inverse(-2.0, 3.0) == pytest.approx(-2.5, rel=1e-15)

    def test_poles_rejected(self):
        for m in (0.0, -1.0):
            with pytest.raises(ValueError):
                stieltjes_inverse(m, 1.0)

    @pytest.mark.parametrize("z", [-0.5, -2.0, 9.5, 30.0])
    @pytest.mark.parametrize("c", [0.5, 1.0, 3.0])
    def test_roundtrip_through_quadrature(self, z, c):
        # m(z) of the full law by quadrature, then invert back to z
        a, b = mp_support(c)
        if a - 0.3 < z < b + 0.3:
            pytest.skip("z inside or hugging the support")
        # companion transform: mass (1-c) at zero plus c times the array-side law
        m_arr = mean_correction_numeric(lambda x: 1.0 / (x - z), c)
        m_comp = -(1.0 - c) / z + c * m_arr
        assert stieltjes_inverse(m_comp, c) == pytest.approx(z, rel=1e-7)


class TestGaussianTail:
    def test_halves(self):
        assert q_function(0.0) == pytest.approx(0.5, rel=1e-15)
        assert q_inverse(0.5) == 0.0

    def test_frozen_percentile(self):
        assert q_inverse(0.01) == pytest.approx(2.326347874040841, abs=1e-12)

    @given(st.floats(min_value=1e-8, max_value=1.0 - 1e-8))
    @settings(max_examples=300)
    def test_roundtrip_probability(self, p):
        assert q_function(q_inverse(p)) == pytest.approx(p, rel=1e-10)

    @given(st.floats(min_value=-6.0, max_value=6.0))
    def test_roundtrip_quantile(self, x):
        # far in the left tail, Q(x) sits so close to 1 that one ulp of p
        # already moves x by ulp/phi(x); widen the bound by exactly that much
        phi = math.exp(-0.5 * x * x) / math.sqrt(2.0 * math.pi)
        tol = 1e-9 + 2.5e-16 / phi
        assert q_inverse(q_function(x)) == pytest.approx(x, abs=tol)

    def test_domain(self):
        for p in (0.0, 1.0, -0.1, 1.1, math.nan):
            with pytest.raises(ValueError):
                q_inverse(p)


class TestNullDistribution:
    def test_frozen_90_30(self):
        nd = null_distribution(DetectorKind.HDL, 90, 30)
        assert (nd.mean, nd.variance) == (90.0, 3.0)
        nd = null_distribution(DetectorKind.HDS, 90, 30)
        assert nd.mean == pytest.approx(360.0, rel=1e-15)
        assert nd.variance == pytest.approx(210.0, rel=1e-12)
        nd = null_distribution(DetectorKind.HDQ, 90, 30)
        assert nd.mean == pytest.approx(270.0, rel=1e-15)
        assert nd.variance == pytest.approx(126.0, rel=1e-12)

    def test_square_case(self):
        assert null_distribution(DetectorKind.HDL, 30, 30).variance == pytest.approx(1.0)
        assert null_distribution(DetectorKind.HDQ, 30, 30).variance == pytest.approx(6.0)

    def test_scaling_in_m_at_fixed_c(self):
        # doubling antennas and samples doubles the mean, keeps c fixed
        n1 = null_distribution(DetectorKind.HDS, 45, 50)
        n2 = null_distribution(DetectorKind.HDS, 90, 100)
        assert n2.mean == pytest.approx(2 * n1.mean, rel=1e-12)

    def test_baselines_have_no_null(self):
        for kind in (DetectorKind.GLR, DetectorKind.FN, DetectorKind.RAO):
            with pytest.raises(ValueError):
                null_distribution(kind, 30, 30)

    def test_accepts_real_valued_dims(self):
        nd = null_distribution(DetectorKind.HDL, 45.5, 50.0)
        assert nd.mean == pytest.approx(45.5)


class TestThreshold:
    def test_median_is_mean(self):
        assert np_threshold(DetectorKind.HDL, 70, 30, 0.5) == pytest.approx(70.0, abs=1e-12)

    def test_frozen_example(self):
        tau = np_threshold(DetectorKind.HDL, 70, 30, 0.01)
        assert tau == pytest.approx(73.55355507519725, abs=1e-10)

    def test_hdq_equal_dims(self):
        tau = np_threshold(DetectorKind.HDQ, 30, 30, 0.1)
        assert tau == pytest.approx(30.0 + math.sqrt(6.0) * q_inverse(0.1), rel=1e-14)

    @given(st.floats(min_value=0.001, max_value=0.499), st.floats(min_value=0.001, max_value=0.499))
    def test_monotone_in_pfa(self, p1, p2):
        lo, hi = sorted((p1, p2))
        t_lo = np_threshold(DetectorKind.HDS, 40, 20, lo)
        t_hi = np_threshold(DetectorKind.HDS, 40, 20, hi)
        assert t_lo >= t_hi

    def test_bad_pfa(self):
        for p in (0.0, 1.0, 1.5):
            with pytest.raises(ValueError):
                np_threshold(DetectorKind.HDL, 10, 10, p)


def _fd_partials(kind, m, ell, step=1e-5):
    """Central finite differences of the null law in c, L, M."""
    c = m / ell

    def sigma_of_c(cc):
        return null_distribution(kind, cc * ell, ell).std

    d_sigma_dc = (sigma_of_c(c + step) - sigma_of_c(c - step)) / (2 * step)
    d_mu_dl = (
        null_distribution(kind, m, ell + step).mean - null_distribution(kind, m, ell - step).mean
    ) / (2 * step)
    d_mu_dm = (
        null_distribution(kind, m + step, ell).mean - null_distribution(kind, m - step, ell).mean
    ) / (2 * step)
    return d_sigma_dc, d_mu_dl, d_mu_dm


class TestSensitivity:
    @pytest.mark.parametrize("c", [0.5, 1.0, 3.0])
    @pytest.mark.parametrize("kind", HD)
    def test_matches_finite_differences(self, kind, c):
        ell = 40.0
        m = c * ell
        got = sensitivity_partials(kind, m, ell)
        want = _fd_partials(kind, m, ell)
        for g, w in zip(got, want):
            assert g == pytest.approx(w, rel=1e-6, abs=1e-9)

    def test_hdl_closed_form(self):
        ds, dl, dm = sensitivity_partials(DetectorKind.HDL, 30, 30)
        assert ds == pytest.approx(0.5, rel=1e-12)
        assert dl == 0.0
        assert dm == 1.0

    def test_hdq_equal_dims(self):
        ds, dl, dm = sensitivity_partials(DetectorKind.HDQ, 30, 30)
        assert ds == pytest.approx(8.0 / math.sqrt(6.0), rel=1e-12)  # (2+6c)/sqrt(2+4c) at c=1
        assert dl == pytest.approx(-1.0, rel=1e-12)
        assert dm == pytest.approx(2.0, rel=1e-12)

    @pytest.mark.parametrize("kind", HD)
    def test_slope_rates_signs(self, kind):
        d_dl, d_dm = threshold_slope_rates(kind, 60, 30, 0.01)
        assert d_dl <= 0.0
        assert d_dm >= 0.0

    def test_slope_rates_flat_at_median_hdl(self):
        d_dl, d_dm = threshold_slope_rates(DetectorKind.HDL, 60, 30, 0.5)
        assert d_dl == pytest.approx(0.0, abs=1e-12)
        assert d_dm == pytest.approx(1.0, rel=1e-12)
