"""BC1 Heun operator and its Bethe ansatz.

H = -d^2/dz^2 + sum_p g_p (g_p + 1) wp(z + omega_p).

With psi(z) = exp(k z) prod sigma(z + t_i) and w(z) = prod sigma_p(z)^g_p,
the function w^{-1} psi is an eigenfunction of H once the odd derivatives
d^{2j-1}/dz^{2j-1} [psi(z) exp(-m eta_s z)] vanish at omega_s, j = 1..g_s.
The module also measures how the difference operator L approaches
w H w^{-1} as gamma -> 0.
"""
from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np

from . import elliptic as ell
from .bc1_operator import Couplings, _as_int4, apply_L, make_params
from .bethe import (
    BetheState,
    SolverOptions,
    bell_from_log_derivs,
    damped_newton,
    log_derivatives,
    psi_log,
    random_state,
    validity_violations,
)
from .errors import (
    ConvergenceError,
    InsufficientGridError,
    PoleError,
    RejectedSolutionError,
    SingularConfigurationError,
)

# L f = C(gamma) f + KAPPA gamma^2 w H w^{-1} f + o(gamma^2)
KAPPA = -4.0


@dataclass(frozen=True)
class HeunParams:
    ctx: ell.LatticeContext
    g: tuple

    def __post_init__(self):
        object.__setattr__(self, "g", _as_int4(self.g, "g"))

    @property
    def m_total(self) -> int:
        return sum(self.g)

    @classmethod
    def from_couplings(cls, ctx, couplings: Couplings) -> "HeunParams":
        """g_p = m_p + m'_p."""
        return cls(ctx, couplings.g)


@dataclass
class HeunSolution:
    state: BetheState
    eigenvalue: complex
    residual_norm: float
    certificate: float
    g: tuple
    iterations: int = 0
    cert_tol: float = 1e-7
    warnings: list = field(default_factory=list)

    @property
    def certified(self) -> bool:
        return self.certificate < self.cert_tol

    def to_dict(self):
        d = self.state.to_dict()
        d.update(
            g=list(self.g),
            eigenvalue=[self.eigenvalue.real, self.eigenvalue.imag],
            residual=self.residual_norm,
            certificate=self.certificate,
        )
        return d


# -- the operator ---------------------------------------------------------------------

def potential(hp: HeunParams, z):
    """sum_p g_p (g_p + 1) wp(z + omega_p)."""
    ctx = hp.ctx
    arr, scalar = ell._as_array(z)
    out = np.zeros_like(arr)
    for p, gp in enumerate(hp.g):
        if gp:
            out = out + gp * (gp + 1) * np.asarray(ell.wp(ctx, arr + ctx.omega[p]))
    return ell._out(out, scalar)


def heun_apply(hp: HeunParams, f, z):
    """(H f)(z) where ``f(z)`` returns the pair (f, f'')."""
    arr, scalar = ell._as_array(z)
    f0, f2 = (np.asarray(x, dtype=complex) for x in f(arr))
    return ell._out(-f2 + np.asarray(potential(hp, arr)) * f0, scalar)


def log_w_derivs(hp: HeunParams, z):
    """(u, u') with u = w'/w = sum g_p zeta_p(z)."""
    ctx = hp.ctx
    arr = np.asarray(z, dtype=complex)
    u = np.zeros_like(arr)
    du = np.zeros_like(arr)
    for p, gp in enumerate(hp.g):
        if gp:
            u = u + gp * np.asarray(ell.zeta_shifted(ctx, p, arr))
            du = du - gp * np.asarray(ell.wp(ctx, arr + ctx.omega[p]))
    return u, du


def conjugated_heun(hp: HeunParams, f, z):
    """(w H w^{-1} f)(z) for ``f(z)`` returning (f, f', f'').

    Expands to -f'' + 2 u f' + (u' - u^2) f + V f, with u = w'/w and V the potential.
    """
    arr, scalar = ell._as_array(z)
    f0, f1, f2 = (np.asarray(x, dtype=complex) for x in f(arr))
    u, du = log_w_derivs(hp, arr)
    out = -f2 + 2 * u * f1 + (du - u * u) * f0 + np.asarray(potential(hp, arr)) * f0
    return ell._out(out, scalar)


def heun_ratio(hp: HeunParams, state: BetheState, z):
    """(H F)/F for F = psi / w, from analytic log-derivatives."""
    arr, scalar = ell._as_array(z)
    h1, h2 = log_derivatives(hp.ctx, state, arr, 2)
    u, du = log_w_derivs(hp, arr)
    l1 = h1 - u
    l2 = h2 - du
    out = -(l2 + l1 * l1) + np.asarray(potential(hp, arr))
    return ell._out(out, scalar)


def log_F(hp: HeunParams, state: BetheState, z):
    """log(psi / w), branch unspecified."""
    ctx = hp.ctx
    arr, scalar = ell._as_array(z)
    out = np.asarray(psi_log(ctx, state, arr))
    for p, gp in enumerate(hp.g):
        if gp:
            out = out - gp * np.asarray(ell.log_sigma_shifted(ctx, p, arr))
    return ell._out(out, scalar)


# -- continuous Bethe equations -----------------------------------------------------

def continuous_equations(hp: HeunParams):
    """(s, j) pairs, ordered by half-period."""
    return [(s, j) for s in range(4) for j in range(1, hp.g[s] + 1)]


def _cauchy_derivs(fun, z0, order, radius, n=64):
    """Taylor derivatives 0..order of ``fun`` at z0 from an n-point circle FFT."""
    theta = 2 * np.pi * np.arange(n) / n
    vals = np.asarray(fun(z0 + radius * np.exp(1j * theta)), dtype=complex)
    c = np.fft.fft(vals) / n
    return [c[r] * math.factorial(r) / radius ** r for r in range(order + 1)]


def continuous_bethe_residual(hp: HeunParams, state: BetheState):
    """One residual per (s, j): [d^{2j-1}(psi e^{-m eta_s z})]_{omega_s}, normalized.

    The normalization is psi(omega_s) e^{-m eta_s omega_s}, so the residual is the
    complete Bell polynomial in the log-derivatives.  If psi(omega_s) = 0 the
    derivatives come from a Cauchy integral and are scaled by their largest magnitude.
    """
    ctx = hp.ctx
    m = hp.m_total
    if state.m != m:
        raise ValueError(f"state has {state.m} parameters, g needs {m}")
    out = []
    for s in range(4):
        gs = hp.g[s]
        if not gs:
            continue
        w = ctx.omega[s]
        lin = -m * ctx.eta[s]
        order = 2 * gs - 1
        if any(ell.lattice_distance(ctx, w + t) < 1e-8 * ctx.scale for t in state.t):
            radius = 0.1 * min(abs(ctx.omega1), abs(ctx.omega2))
            d = _cauchy_derivs(
                lambda z: np.exp(np.asarray(psi_log(ctx, state, z)) + lin * (z - w)), w, order, radius
            )
            scale = max(abs(x) for x in d) or 1.0
            out.extend(d[2 * j - 1] / scale for j in range(1, gs + 1))
            continue
        h = log_derivatives(ctx, state, w, order, linear=lin)
        B = bell_from_log_derivs(h, order)
        out.extend(complex(B[2 * j - 1]) for j in range(1, gs + 1))
    return np.array(out, dtype=complex)


def continuous_bethe_jacobian(hp: HeunParams, state: BetheState):
    """d r / d t_i using dB_n/dh_r = C(n, r) B_{n-r} and dh_r/dt_i = -wp^{(r-1)}(omega_s + t_i).

    Valid away from psi(omega_s) = 0.  Returns (J_t, J_k).
    """
    ctx = hp.ctx
    m = hp.m_total
    rows_t, rows_k = [], []
    for s in range(4):
        gs = hp.g[s]
        if not gs:
            continue
        w = ctx.omega[s]
        order = 2 * gs - 1
        h = log_derivatives(ctx, state, w, order, linear=-m * ctx.eta[s])
        B = [complex(b) for b in bell_from_log_derivs(h, order)]
        # dh[r]/dt_i for r = 1..order
        dh = np.zeros((order, m), dtype=complex)
        for i, t in enumerate(state.t):
            wps = ell.wp_derivs(ctx, w + t, max(order - 1, 0))
            for r in range(1, order + 1):
                dh[r - 1, i] = -complex(wps[r - 1])
        for j in range(1, gs + 1):
            n = 2 * j - 1
            row = np.zeros(m, dtype=complex)
            for r in range(1, n + 1):
                row += math.comb(n, r) * B[n - r] * dh[r - 1]
            rows_t.append(row)
            rows_k.append(n * B[n - 1])
    return np.array(rows_t, dtype=complex).reshape(-1, m), np.array(rows_k, dtype=complex)


def _continuous_fun(hp, k):
    def fun(t):
        state = BetheState(tuple(t), k)
        r = continuous_bethe_residual(hp, state)
        try:
            jt, _ = continuous_bethe_jacobian(hp, state)
        except PoleError as exc:
            raise SingularConfigurationError(f"psi vanishes at a half-period: {exc}") from exc
        return r, jt
    return fun


# -- certification ------------------------------------------------------------------

def heun_grid(hp: HeunParams, state: BetheState, count=50, seed=12345, min_dist=None):
    """Pseudo-random cell points away from zeros of psi and the half-periods with g_p > 0."""
    ctx = hp.ctx
    rng = np.random.default_rng(seed)
    min_dist = 0.05 * min(abs(ctx.omega1), abs(ctx.omega2)) if min_dist is None else min_dist
    x = rng.uniform(-0.5, 0.5, size=(8 * count, 2))
    z = 2 * ctx.omega1 * x[:, 0] + 2 * ctx.omega2 * x[:, 1]
    ok = np.ones(z.shape, dtype=bool)
    avoid = [-t for t in state.t] + [ctx.omega[p] for p in range(4) if hp.g[p]]
    for p in avoid:
        ok &= np.asarray(ell.lattice_distance(ctx, z - p)) > min_dist
    return z[ok][:count]


def heun_eigenvalue(hp: HeunParams, state: BetheState, grid=None) -> complex:
    """(H F / F)(z*) at the grid point where |F| is largest."""
    grid = heun_grid(hp, state) if grid is None else np.asarray(grid, dtype=complex)
    if len(grid) == 0:
        raise InsufficientGridError("no admissible grid point")
    zs = grid[int(np.argmax(np.real(np.asarray(log_F(hp, state, grid)))))]
    return complex(heun_ratio(hp, state, zs))


def certify_heun(hp: HeunParams, state: BetheState, eps, grid=None, scale=1.0, min_points=10) -> float:
    """max |H F / F - eps| / max(|eps|, scale) over the grid."""
    grid = heun_grid(hp, state) if grid is None else np.asarray(grid, dtype=complex)
    if len(grid) < min_points:
        raise InsufficientGridError(f"only {len(grid)} admissible grid points (need {min_points})")
    r = np.asarray(heun_ratio(hp, state, grid))
    return float(np.max(np.abs(r - eps)) / max(abs(eps), scale))


def finish_continuous(hp, state, residual, opts, iterations=0, warnings=None) -> HeunSolution:
    grid = heun_grid(hp, state, opts.grid_count, seed=opts.grid_seed)
    eps = heun_eigenvalue(hp, state, grid)
    cert = certify_heun(hp, state, eps, grid)
    return HeunSolution(
        state=state, eigenvalue=eps, residual_norm=residual, certificate=cert, g=hp.g,
        iterations=iterations, cert_tol=opts.cert_tol, warnings=list(warnings or []),
    )


def solve_continuous(hp: HeunParams, init: BetheState, opts: SolverOptions | None = None) -> HeunSolution:
    """Newton solve of the continuous Bethe equations at fixed k, then certify.

    Raises
    ------
    ConvergenceError
        No convergence within ``opts.max_iter``.
    RejectedSolutionError
        t_i + t_j on the period lattice for some pair.
    """
    opts = opts or SolverOptions(cert_tol=1e-7)
    if init.m != hp.m_total:
        raise ValueError(f"initial state has {init.m} parameters, g needs {hp.m_total}")
    if hp.m_total == 0:
        return finish_continuous(hp, init, 0.0, opts)
    try:
        t, res, it = damped_newton(_continuous_fun(hp, init.k), init.t, opts)
    except ConvergenceError as exc:
        exc.state = init
        raise
    state = BetheState(tuple(t), init.k)
    bad = validity_violations(hp.ctx, state, opts.validity_tol)
    if bad:
        raise RejectedSolutionError(
            f"t_i + t_j lies on the period lattice for pairs {bad}", pair=bad[0], state=state
        )
    return finish_continuous(hp, state, res, opts, iterations=it)


def solve_continuous_random(hp: HeunParams, k: complex, rng, opts: SolverOptions | None = None) -> HeunSolution:
    """Random starts in the fundamental cell until a certified solution appears."""
    opts = opts or SolverOptions(cert_tol=1e-7)
    last = None
    for _ in range(max(1, opts.restarts)):
        init = random_state(hp, k, rng)
        try:
            sol = solve_continuous(hp, init, opts)
        except (ConvergenceError, RejectedSolutionError, SingularConfigurationError, PoleError,
                InsufficientGridError) as exc:
            last = exc
            continue
        if sol.certified:
            return sol
        last = ConvergenceError(f"solution failed certification ({sol.certificate:.3e})",
                                residual=sol.residual_norm, state=sol.state)
    raise ConvergenceError(f"all {opts.restarts} starts failed; last error: {last}")


def lame_m1(ctx, t):
    """Closed form for g_0 = 1: returns (k, eps) = (-zeta(t), -wp(t))."""
    return -complex(ell.zeta_w(ctx, t)), -complex(ell.wp(ctx, t))


def ode_residual(hp: HeunParams, state: BetheState, eps, points, n=48):
    """Relative residual of -F'' + V F - eps F with F'' from a Cauchy integral.

    F = psi / w is sampled on a circle around each point whose radius is a third of
    the distance to the nearest pole of F; independent of the log-derivative engine.
    """
    ctx = hp.ctx
    pts = np.asarray(points, dtype=complex)
    poles = [ctx.omega[p] for p in range(4) if hp.g[p]]
    theta = 2 * np.pi * np.arange(n) / n
    worst = 0.0
    for z in pts:
        dist = min([float(ell.lattice_distance(ctx, z - w)) for w in poles] + [ctx.scale])
        r = dist / 3
        lf0 = complex(log_F(hp, state, z))
        vals = np.exp(np.asarray(log_F(hp, state, z + r * np.exp(1j * theta))) - lf0)
        c = np.fft.fft(vals) / n
        d2 = 2 * c[2] / r ** 2
        res = -d2 + complex(potential(hp, z)) - eps
        worst = max(worst, abs(res))
    return float(worst / max(abs(eps), 1.0))


# -- gamma -> 0 limit ---------------------------------------------------------------

@dataclass
class LimitReport:
    gammas: list
    constants: list  # per test function, per gamma
    residuals: list  # per test function, per gamma (relative, after removing C f)
    orders: list  # fitted decay order per test function
    constant_spread: float
    excluded: list = field(default_factory=list)

    @property
    def observed_order(self) -> float:
        return float(min(self.orders))

    def passed(self, min_order=2.0, spread_tol=1e-4) -> bool:
        return self.observed_order > min_order and self.constant_spread < spread_tol

    def to_dict(self):
        cplx = lambda z: [z.real, z.imag]  # noqa: E731
        return {
            "gammas": [cplx(g) for g in self.gammas],
            "constants": [[cplx(c) for c in row] for row in self.constants],
            "residuals": [list(map(float, row)) for row in self.residuals],
            "orders": [float(o) for o in self.orders],
            "observed_order": self.observed_order,
            "constant_spread": float(self.constant_spread),
            "excluded": self.excluded,
        }


def exp_poly_test_function(coeffs):
    """f = exp(p(z)), p with the given coefficients (constant term first).

    Returns a callable z -> (f, f', f'').
    """
    p = np.polynomial.Polynomial(np.asarray(coeffs, dtype=complex))
    dp, d2p = p.deriv(1), p.deriv(2)

    def f(z):
        z = np.asarray(z, dtype=complex)
        v = np.exp(p(z))
        a = dp(z)
        return v, a * v, (d2p(z) + a * a) * v

    return f


def random_test_functions(n, rng, degree=3, size=0.3):
    out = []
    for _ in range(n):
        c = size * (rng.standard_normal(degree + 1) + 1j * rng.standard_normal(degree + 1))
        out.append(exp_poly_test_function(c))
    return out


def limit_points(ctx, gammas, count=24, seed=7, min_dist=None):
    """Sample points away from every half-period by ``min_dist`` plus the largest shift."""
    rng = np.random.default_rng(seed)
    min_dist = 0.2 * min(abs(ctx.omega1), abs(ctx.omega2)) if min_dist is None else min_dist
    reach = 3 * max(abs(g) for g in gammas)
    x = rng.uniform(-0.5, 0.5, size=(20 * count, 2))
    z = 2 * ctx.omega1 * x[:, 0] + 2 * ctx.omega2 * x[:, 1]
    ok = np.ones(z.shape, dtype=bool)
    for w in ctx.omega:
        ok &= np.asarray(ell.lattice_distance(ctx, z - w)) > min_dist + reach
    return z[ok][:count]


def limit_check(ctx, couplings: Couplings, gamma0, n_levels=6, test_functions=None, points=None,
                rng=None) -> LimitReport:
    """Compare L with C(gamma) + KAPPA gamma^2 w H w^{-1} along gamma0 / 2^n.

    For each test function f and level, R = L f - KAPPA gamma^2 w H w^{-1} f is
    projected on f to get C(gamma); the relative remainder |R - C f| / |gamma^2 w H w^{-1} f|
    is fitted against log |gamma|.  Points where L hits a pole are dropped.
    """
    rng = np.random.default_rng(2024) if rng is None else rng
    gammas = [complex(gamma0) / 2 ** n for n in range(n_levels)]
    if test_functions is None:
        test_functions = random_test_functions(5, rng)
    pts = limit_points(ctx, gammas) if points is None else np.asarray(points, dtype=complex)
    hp = HeunParams.from_couplings(ctx, couplings)
    consts, resid, orders, excluded = [], [], [], []
    for f in test_functions:
        c_row, r_row = [], []
        for g in gammas:
            params = make_params(ctx, couplings.with_gamma(g), check_gamma=False)
            keep = []
            lf = []
            for z in pts:
                try:
                    lf.append(complex(apply_L(params, lambda x: f(x)[0], z)))
                    keep.append(z)
                except PoleError:
                    excluded.append([float(abs(g)), [z.real, z.imag]])
            zk = np.asarray(keep, dtype=complex)
            lf = np.asarray(lf)
            hw = np.asarray(conjugated_heun(hp, f, zk))
            f0 = f(zk)[0]
            R = lf - KAPPA * g * g * hw
            C = np.vdot(f0, R) / np.vdot(f0, f0)
            rem = np.linalg.norm(R - C * f0) / np.linalg.norm(g * g * hw)
            c_row.append(complex(C))
            r_row.append(float(rem))
        slope = np.polyfit(np.log([abs(g) for g in gammas]), np.log(np.maximum(r_row, 1e-300)), 1)[0]
        consts.append(c_row)
        resid.append(r_row)
        # remainder is relative to gamma^2, so the absolute order is slope + 2
        orders.append(float(slope + 2))
    last = np.array([row[-1] for row in consts])
    spread = float(np.max(np.abs(last - last.mean())) / max(abs(last.mean()), 1e-300))
    return LimitReport(gammas, consts, resid, orders, spread, excluded)
