"""Weierstrass functions against frozen mpmath references and classical identities."""
import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from bc1bethe import elliptic as ell
from bc1bethe.checks import elliptic_identities, random_lattice
from bc1bethe.errors import EllipticRangeError, LatticeError, PoleError
from oracles import FROZEN


def _contexts():
    return [(ell.make_context(*rec["omega"]), rec) for rec in FROZEN]


class TestFrozenOracle:
    """Agreement with 30-digit theta-function values."""

    @pytest.mark.parametrize("idx", range(len(FROZEN)))
    def test_eta_and_invariants(self, idx):
        rec = FROZEN[idx]
        c = ell.make_context(*rec["omega"])
        assert abs(c.eta[1] - rec["eta"][0]) < 1e-14
        assert abs(c.eta[2] - rec["eta"][1]) < 1e-14
        g2, g3 = rec["g2g3"]
        assert abs(c.g2 - g2) < 1e-13 * abs(g2)
        assert abs(c.g3 - g3) < 1e-13 * max(1.0, abs(g3))

    @pytest.mark.parametrize("idx", range(len(FROZEN)))
    def test_sigma_zeta_wp(self, idx):
        rec = FROZEN[idx]
        c = ell.make_context(*rec["omega"])
        for z, s, zt, p in rec["points"]:
            assert abs(ell.sigma(c, z) / s - 1) < 1e-14
            assert abs(ell.zeta_w(c, z) - zt) < 1e-14 * abs(zt)
            assert abs(ell.wp(c, z) - p) < 1e-13 * abs(p)

    def test_lemniscatic_constants(self):
        # square lattice: eta1 = pi/4, g3 = 0, g2 = Gamma(1/4)^8 / (256 pi^2)
        c = ell.make_context(1.0, 1j)
        assert abs(c.eta[1] - math.pi / 4) < 1e-15
        assert abs(c.eta[2] + 1j * math.pi / 4) < 1e-15
        assert abs(c.g3) < 1e-13
        assert abs(c.g2 - math.gamma(0.25) ** 8 / (256 * math.pi ** 2)) < 1e-12


class TestLiveOracle:
    """Random points against mpmath directly (slower, few examples)."""

    @settings(max_examples=15, deadline=None)
    @given(x=st.floats(-0.5, 0.5), y=st.floats(-0.5, 0.5), cell_m=st.integers(-3, 3), cell_n=st.integers(-3, 3))
    def test_sigma_any_cell(self, x, y, cell_m, cell_n):
        import oracles

        w1, w2 = 1.0, 0.3 + 1.1j
        c = ell.make_context(w1, w2)
        z = 2 * w1 * (x + cell_m) + 2 * w2 * (y + cell_n)
        if ell.lattice_distance(c, z) < 1e-3:
            return
        ref = complex(oracles.sigma(w1, w2, z))
        assert abs(ell.sigma(c, z) / ref - 1) < 1e-12
        ref_z = complex(oracles.zeta(w1, w2, z))
        assert abs(ell.zeta_w(c, z) - ref_z) < 1e-12 * max(1, abs(ref_z))


class TestIdentities:
    @pytest.mark.parametrize("seed", range(5))
    def test_identity_suite_on_random_lattice(self, seed):
        rng = np.random.default_rng(seed)
        c = random_lattice(rng)
        x = rng.uniform(-0.5, 0.5, size=(200, 2))
        z = 2 * c.omega1 * x[:, 0] + 2 * c.omega2 * x[:, 1]
        z = z[np.asarray(ell.lattice_distance(c, 2 * z)) > 0.1 * c.scale]
        res = elliptic_identities(c, z)
        assert max(res.values()) < 1e-11, res

    def test_wp_derivs_match_finite_differences(self, ctx):
        z = 0.37 - 0.21j
        h = 1e-3
        d = ell.wp_derivs(ctx, z, 5)
        for k in range(5):
            # 4th-order central difference of the k-th derivative
            f = lambda x: ell.wp_derivs(ctx, x, k)[k]  # noqa: E731
            fd = (-f(z + 2 * h) + 8 * f(z + h) - 8 * f(z - h) + f(z - 2 * h)) / (12 * h)
            assert abs(fd - d[k + 1]) < 1e-7 * max(1, abs(d[k + 1]))

    def test_sigma_odd_and_shifted_even(self, ctx):
        z = np.array([0.3 + 0.2j, -0.7 + 0.5j])
        assert np.allclose(ell.sigma(ctx, -z), -ell.sigma(ctx, z), rtol=1e-14)
        for r in (1, 2, 3):
            assert np.allclose(ell.sigma_shifted(ctx, r, -z), ell.sigma_shifted(ctx, r, z), rtol=1e-13)

    def test_zeta_shifted_is_log_derivative(self, ctx):
        z, h = 0.41 + 0.13j, 1e-4
        for p in range(4):
            fd = (ell.log_sigma_shifted(ctx, p, z + h) - ell.log_sigma_shifted(ctx, p, z - h)) / (2 * h)
            assert abs(fd - ell.zeta_shifted(ctx, p, z)) < 1e-7

    def test_scalar_and_array_shapes(self, ctx):
        assert isinstance(ell.sigma(ctx, 0.3), complex)
        out = ell.wp(ctx, np.ones((2, 3)) * 0.3)
        assert out.shape == (2, 3)


class TestLatticeErrors:
    def test_real_ratio(self):
        with pytest.raises(LatticeError, match="degenerate"):
            ell.make_context(1.0, 2.0)

    def test_orientation(self):
        with pytest.raises(LatticeError, match="orientation"):
            ell.make_context(1.0, -1j)

    def test_zero_period(self):
        with pytest.raises(LatticeError):
            ell.make_context(0, 1j)

    def test_pole_error_carries_location(self, ctx):
        z = 2 * ctx.omega1 + 2 * ctx.omega2
        with pytest.raises(PoleError) as info:
            ell.zeta_w(ctx, z)
        assert abs(info.value.pole - z) < 1e-12

    def test_overflow_reported(self, ctx):
        with pytest.raises(EllipticRangeError):
            ell.sigma(ctx, 200 * ctx.omega2 + 0.3)
        # log form stays finite
        assert np.isfinite(ell.log_sigma(ctx, 200 * ctx.omega2 + 0.3))

    def test_paranoid_mode_agrees(self, ctx):
        rep = ell.paranoid_report(ctx, np.array([0.3 + 0.4j, -0.8 + 0.1j]))
        assert max(rep.values()) < 1e-14
