import math

import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st

from conftest import gaussian, rel
from modscat.errors import ScheduleError, SingularTimeError, SupportError
from modscat.operators import (
    J_norm,
    apply_J,
    dilate,
    dilate_inverse,
    dollard_residual,
    free_propagate,
    modulate,
    profile_W,
    profile_W_dilation,
)
from modscat.spectral_core import FREQUENCY, PHYSICAL, ComplexField, l2_norm, linf_norm, make_grid


def free_gaussian(x, t):
    # U(t) e^{-x^2/2} = (1 + i t)^{-1/2} exp(-x^2 / (2 (1 + i t)))
    a = 1 + 1j * t
    return a ** -0.5 * np.exp(-x ** 2 / (2 * a))


class TestFreePropagator:
    def test_identity_at_zero(self, grid1):
        f = gaussian(grid1)
        assert free_propagate(f, 0.0) is f

    @pytest.mark.parametrize("t", [0.5, 1.0, 2.0])
    def test_closed_form(self, grid1, t):
        u = free_propagate(gaussian(grid1), t)
        assert rel(u.values, free_gaussian(grid1.x, t)) < 1e-8

    def test_peak_modulus(self, grid1):
        u = free_propagate(gaussian(grid1), 1.0)
        assert abs(u.values[grid1.points // 2]) == pytest.approx(2 ** -0.25, rel=1e-8)

    @given(st.floats(-5, 5), st.floats(-5, 5))
    def test_group_law(self, t, s):
        g = make_grid(1, 512, 40.0)
        f = gaussian(g, k0=0.5)
        lhs = free_propagate(free_propagate(f, s), t)
        assert l2_norm(lhs - free_propagate(f, t + s)) <= 1e-12 * l2_norm(f)
        assert abs(l2_norm(lhs) - l2_norm(f)) <= 1e-12 * l2_norm(f)


class TestModulate:
    def test_inverse_pair(self, grid1):
        f = gaussian(grid1, k0=1.0)
        assert rel(modulate(modulate(f, 3.0), -3.0).values, f.values) < 1e-15

    def test_unimodular(self, grid2):
        f = gaussian(grid2)
        assert np.allclose(np.abs(modulate(f, 0.7).values), np.abs(f.values), rtol=1e-15, atol=0)

    def test_singular(self, grid1):
        with pytest.raises(SingularTimeError):
            modulate(gaussian(grid1), 0.0)


class TestDilate:
    def test_unit(self, grid1):
        f = gaussian(grid1)
        assert rel(dilate(f, 1.0).values, 1j ** -0.5 * f.values) < 1e-15

    def test_inverse_pair(self, grid1):
        f = gaussian(grid1, width=2.0)
        back = dilate_inverse(dilate(f, 2.0), 2.0, out_space=PHYSICAL)
        assert rel(back.values, f.values) < 1e-8

    def test_norm_preserved(self, grid1):
        f = gaussian(grid1, width=3.0)
        assert l2_norm(dilate(f, 2.0)) == pytest.approx(l2_norm(f), rel=1e-8)

    def test_matches_closed_form(self, grid1):
        d = dilate(gaussian(grid1), 2.5)
        assert rel(d.values, (2.5j) ** -0.5 * np.exp(-(grid1.x / 2.5) ** 2 / 2)) < 1e-8

    def test_support_overflow(self, grid1):
        with pytest.raises(SupportError):
            dilate(gaussian(grid1, width=10.0), 8.0)

    def test_singular(self, grid1):
        with pytest.raises(SingularTimeError):
            dilate(gaussian(grid1), 0.0)


class TestDollard:
    @pytest.mark.parametrize("t", [1.0, 2.0, 4.0, 8.0])
    def test_gaussian_suite(self, t):
        g = make_grid(1, 1024, 64.0)
        for w, k0 in ((1.0, 0.0), (0.7, 0.5), (1.5, -1.0)):
            assert dollard_residual(gaussian(g, width=w, k0=k0), t) < 1e-6

    def test_2d(self, grid2):
        assert dollard_residual(gaussian(grid2), 2.0) < 1e-6

    def test_zero(self, grid1):
        assert dollard_residual(ComplexField.zeros(grid1), 2.0) == 0.0


class TestJ:
    def test_t0_is_x(self, grid1):
        f = gaussian(grid1)
        (jx,) = apply_J(f, 0.0)
        assert np.array_equal(jx.values, grid1.x * f.values)

    @pytest.mark.parametrize("t", [0.5, 1.0, 3.0])
    def test_routes_agree_1d(self, grid1, t):
        f = gaussian(grid1, k0=0.3)
        (a,), (b,) = apply_J(f, t), apply_J(f, t, route="direct")
        assert l2_norm(a - b) <= 1e-8 * l2_norm(b)

    @pytest.mark.parametrize("t", [1.0, 3.0])
    def test_routes_agree(self, grid2, t):
        # the chirp M(-t) has local frequency |x|/t; it must stay inside the
        # lattice band where f is non-negligible
        f = gaussian(grid2, k0=0.3)
        for a, b in zip(apply_J(f, t), apply_J(f, t, route="direct")):
            assert l2_norm(a - b) <= 1e-8 * l2_norm(b)

    def test_zero(self, grid2):
        assert all(l2_norm(c) == 0 for c in apply_J(ComplexField.zeros(grid2), 1.0))

    def test_conjugation(self, grid1):
        # J(t) U(t) f = U(t) (x f)
        f = gaussian(grid1, width=1.3)
        t = 2.0
        (lhs,) = apply_J(free_propagate(f, t), t)
        xf = f.with_values(grid1.x * f.values)
        assert l2_norm(lhs - free_propagate(xf, t)) <= 1e-8 * l2_norm(xf)

    def test_norm_route(self, grid1):
        u = free_propagate(gaussian(grid1), 1.5)
        comps = apply_J(u, 2.5)
        direct = math.sqrt(sum(l2_norm(c) ** 2 for c in comps))
        assert J_norm(u, 2.5) == pytest.approx(direct, rel=1e-10)


class TestProfile:
    def test_unitary(self, grid1):
        u = free_propagate(gaussian(grid1, k0=0.4), 3.0)
        W = profile_W(u, 3.0)
        assert W.space == FREQUENCY
        assert l2_norm(W) == pytest.approx(l2_norm(u), rel=1e-10)

    def test_sup_scaling_and_oracle(self, grid1):
        t = 4.0
        u = free_propagate(gaussian(grid1), t)
        W = profile_W(u, t)
        assert linf_norm(W) == pytest.approx(t ** 0.5 * linf_norm(u), rel=1e-8)
        assert rel(W.values, profile_W_dilation(u, t).values) < 1e-8

    def test_pointwise_modulus_identity(self, grid1):
        # |u(t, t y)| = t^{-1/2} |W(t)(y)| read on the frequency lattice
        t = 2.0
        u = free_propagate(gaussian(grid1, width=0.8), t)
        W = profile_W(u, t)
        uu = dilate_inverse(u, t, out_space=FREQUENCY)  # (it)^{1/2} u(t xi)
        assert np.max(np.abs(np.abs(uu.values) - np.abs(W.values))) < 1e-8

    def test_zero(self, grid1):
        assert l2_norm(profile_W(ComplexField.zeros(grid1), 1.0)) == 0.0

    def test_early_time(self, grid1):
        with pytest.raises(ScheduleError):
            profile_W(gaussian(grid1), 0.5)
