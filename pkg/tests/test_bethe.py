"""Bethe equations, Newton solver, certification and the Q-space conditions."""
import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from bc1bethe import elliptic as ell
from bc1bethe.bc1_operator import Couplings, make_params
from bc1bethe.bethe import (
    BetheSolution,
    BetheState,
    SolverOptions,
    bell_from_log_derivs,
    bethe_equations,
    bethe_jacobian,
    bethe_residual,
    certify_eigen,
    eigenvalue,
    log_derivatives,
    normalize_k,
    psi_eval,
    psi_log,
    psi_log_derivs,
    q_form_residual,
    q_space_check,
    solve_newton,
    solve_random,
    validity_violations,
)
from bc1bethe.errors import ConvergenceError, RejectedSolutionError, SingularConfigurationError
from conftest import GAMMA

# 8th-order central stencils for the first and second derivative
D1 = {1: 4 / 5, 2: -1 / 5, 3: 4 / 105, 4: -1 / 280}


def fd1(f, z, h):
    return sum(c * (f(z + j * h) - f(z - j * h)) for j, c in D1.items()) / h


class TestEquations:
    def test_ordering(self):
        cp = Couplings((2, 0, 1, 0), (1, 1, 0, 0), GAMMA)
        eqs = bethe_equations(cp)
        assert [(e.family, e.s, e.shift_mult) for e in eqs] == [
            ("even", 0, 2), ("even", 0, 4), ("odd", 0, 1), ("odd", 1, 1), ("even", 2, 2)]

    def test_jacobian_matches_finite_differences(self, mixed_params):
        st_ = BetheState((0.3 + 0.2j, -0.4 + 0.1j, 0.1 - 0.5j, 0.7 + 0.3j), 0.2 - 0.1j)
        jt, jk = bethe_jacobian(mixed_params, st_)
        h = 1e-5
        for i in range(st_.m):
            t = list(st_.t)
            t[i] += h
            rp = bethe_residual(mixed_params, BetheState(t, st_.k))
            t[i] -= 2 * h
            rm = bethe_residual(mixed_params, BetheState(t, st_.k))
            assert np.allclose((rp - rm) / (2 * h), jt[:, i], atol=1e-7)
        rp = bethe_residual(mixed_params, BetheState(st_.t, st_.k + h))
        rm = bethe_residual(mixed_params, BetheState(st_.t, st_.k - h))
        assert np.allclose((rp - rm) / (2 * h), jk, atol=1e-7)

    def test_singular_configuration_names_equation(self, a1_params):
        # t + omega_0 - 2 gamma on the lattice kills sigma in equation 0
        with pytest.raises(SingularConfigurationError) as info:
            bethe_residual(a1_params, BetheState((2 * GAMMA,), 0.1))
        assert info.value.equation == 0

    def test_log_form_is_product_form(self, mixed_params):
        st_ = BetheState((0.3 + 0.2j, -0.4 + 0.1j, 0.1 - 0.5j, 0.7 + 0.3j), 0.2 - 0.1j)
        r = bethe_residual(mixed_params, st_)
        ctx = mixed_params.ctx
        m = st_.m
        for eq, ri in zip(bethe_equations(mixed_params.couplings), r):
            h = eq.shift(GAMMA)
            w = ctx.omega[eq.s]
            lhs = psi_eval(ctx, st_, w - h) * np.exp(2 * h * m * ctx.eta[eq.s])
            rhs = psi_eval(ctx, st_, w + h)
            assert abs(np.exp(ri) - lhs / rhs) < 1e-12 * abs(lhs / rhs)


class TestDerivativeEngine:
    @settings(max_examples=100, deadline=None)
    @given(
        t=st.lists(st.tuples(st.floats(-0.5, 0.5), st.floats(-0.5, 0.5)), min_size=1, max_size=3),
        k=st.tuples(st.floats(-1, 1), st.floats(-1, 1)),
        z=st.tuples(st.floats(-0.5, 0.5), st.floats(-0.5, 0.5)),
    )
    def test_bell_derivatives_up_to_order_7(self, t, k, z):
        ctx = ell.make_context(1.0, 0.3 + 1.1j)
        ts = tuple(2 * a + 2 * b * ctx.omega2 for a, b in t)
        zz = 2 * z[0] + 2 * z[1] * ctx.omega2
        state = BetheState(ts, complex(*k))
        if min(ell.lattice_distance(ctx, zz + x) for x in ts) < 0.3:
            return
        h = log_derivatives(ctx, state, zz, 7)
        B = bell_from_log_derivs(h, 7)
        # compare B_n = psi^(n)/psi with Cauchy-integral derivatives of psi/psi(z)
        n, r = 64, 0.1
        theta = 2 * np.pi * np.arange(n) / n
        vals = np.exp(np.asarray(psi_log(ctx, state, zz + r * np.exp(1j * theta))) - psi_log(ctx, state, zz))
        c = np.fft.fft(vals) / n
        for order in range(8):
            ref = c[order] * math.factorial(order) / r ** order
            assert abs(B[order] - ref) < 1e-6 * max(1.0, abs(ref))

    def test_psi_log_derivs_first_order(self, ctx):
        state = BetheState((0.3 + 0.1j, -0.2 + 0.4j), 0.5)
        z = 0.11 - 0.07j
        vals = psi_log_derivs(ctx, state, z, 2)
        fd = fd1(lambda x: psi_eval(ctx, state, x), z, 1e-3)
        assert abs(vals[1] - fd) < 1e-9 * abs(fd)


class TestSolver:
    @pytest.mark.parametrize("m,mp", [((1, 0, 0, 0), (0, 0, 0, 0)), ((0, 0, 0, 0), (1, 0, 0, 0)),
                                      ((1, 0, 0, 0), (0, 0, 1, 0)), ((0, 1, 0, 1), (1, 0, 1, 0))])
    def test_certified_solution(self, ctx, rng, m, mp):
        params = make_params(ctx, Couplings(m, mp, GAMMA))
        sol = solve_random(params, 0.3 - 0.4j, rng)
        assert sol.residual_norm < 1e-10
        assert sol.eigen_certificate < 1e-8
        assert q_form_residual(params, sol.state) < 1e-9

    def test_perturbed_state_fails_certification(self, a1_params, rng):
        sol = solve_random(a1_params, 0.3 - 0.4j, rng)
        bad = BetheState(tuple(t + 1e-3 for t in sol.state.t), sol.state.k)
        assert certify_eigen(a1_params, bad, eigenvalue(a1_params, bad)) > 1e-6

    def test_sum_gauge(self, ctx, rng):
        params = make_params(ctx, Couplings((1, 0, 0, 0), (0, 0, 1, 0), GAMMA))
        sol = solve_random(params, 0.3 - 0.4j, rng)
        opts = SolverOptions(gauge="sum", sum_value=sum(sol.state.t))
        init = BetheState(tuple(t + 0.01 for t in sol.state.t), sol.state.k + 0.05)
        again = solve_newton(params, init, opts)
        assert again.certified
        assert abs(sum(again.state.t) - sum(sol.state.t)) < 1e-10

    def test_trivial_couplings(self, ctx):
        params = make_params(ctx, Couplings((0,) * 4, (0,) * 4, GAMMA))
        sol = solve_newton(params, BetheState((), 0.4 - 0.2j), SolverOptions(normalize_k=False))
        assert abs(sol.eigenvalue - 2 * np.cosh(2 * GAMMA * (0.4 - 0.2j))) < 1e-12

    def test_convergence_error_carries_state(self, a1_params):
        opts = SolverOptions(max_iter=1, tol=1e-30)
        with pytest.raises(ConvergenceError) as info:
            solve_newton(a1_params, BetheState((0.4 + 0.3j,), 0.3 - 0.4j), opts)
        assert info.value.state is not None

    def test_rejects_pair_on_lattice(self, ctx):
        # for m_0 = 2 the pair (t, -t) solves nothing useful but trips the validity check
        params = make_params(ctx, Couplings((2, 0, 0, 0), (0, 0, 0, 0), GAMMA))
        assert validity_violations(ctx, BetheState((0.3 + 0.1j, -0.3 - 0.1j), 0.0)) == [(0, 1)]
        with pytest.raises(RejectedSolutionError):
            solve_newton(params, BetheState((0.3 + 0.1j, -0.3 - 0.1j + 2 * ctx.omega1), 0.0),
                         SolverOptions(tol=1e300))

    def test_normalize_k_strip_and_flip(self, a1_params):
        k = 0.2 + 40j
        kn, flips = normalize_k(a1_params, k)
        assert -math.pi / 2 < (2 * GAMMA * kn).imag <= math.pi / 2
        steps = (k - kn) / (math.pi * 1j / (2 * GAMMA))
        assert abs(steps - round(steps.real)) < 1e-9
        assert flips == round(steps.real) % 2

    def test_round_trip(self, a1_params, rng):
        sol = solve_random(a1_params, 0.3 - 0.4j, rng)
        back = BetheSolution.from_dict(sol.to_dict())
        assert back.state == sol.state and back.eigenvalue == sol.eigenvalue


class TestQSpace:
    def test_conditions_and_quotient(self, ctx, rng):
        params = make_params(ctx, Couplings((1, 0, 0, 1), (1, 0, 0, 0), GAMMA))
        sol = solve_random(params, 0.3 - 0.4j, rng)
        rep = q_space_check(params, sol)
        assert rep.passed(), rep
