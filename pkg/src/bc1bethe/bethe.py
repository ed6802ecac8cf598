"""Bethe ansatz for the BC1 operator.

The ansatz is psi(z) = exp(k z) prod_i sigma(z + t_i).  For each half-period
omega_s the Bethe equations read

    psi(omega_s + h) = psi(omega_s - h) exp(2 h m eta_s),

with h = 2 j gamma (j = 1..m_s, the "even" family) and h = (2j - 1) gamma
(j = 1..m'_s, the "odd" family).  A solution with t_i + t_j off the period
lattice makes psi an eigenfunction of L.
"""
from __future__ import annotations

import logging
import math
from dataclasses import dataclass, field, replace

import numpy as np

from . import elliptic as ell
from .bc1_operator import OperatorParams, coeff_a, coeff_b, coeff_c, coefficients
from .errors import (
    ConvergenceError,
    InsufficientGridError,
    PoleError,
    RejectedSolutionError,
    SingularConfigurationError,
)

log = logging.getLogger(__name__)


@dataclass(frozen=True)
class BetheState:
    """Parameters (t_1..t_m, k) of one ansatz function."""

    t: tuple
    k: complex

    def __post_init__(self):
        object.__setattr__(self, "t", tuple(complex(x) for x in self.t))
        object.__setattr__(self, "k", complex(self.k))

    @property
    def m(self) -> int:
        return len(self.t)

    def to_dict(self):
        return {"t": [[x.real, x.imag] for x in self.t], "k": [self.k.real, self.k.imag]}

    @classmethod
    def from_dict(cls, data):
        return cls(t=tuple(complex(a, b) for a, b in data["t"]), k=complex(*data["k"]))


@dataclass
class BetheSolution:
    state: BetheState
    eigenvalue: complex
    residual_norm: float
    eigen_certificate: float
    q: complex
    iterations: int = 0
    cert_tol: float = 1e-8
    warnings: list = field(default_factory=list)

    @property
    def certified(self) -> bool:
        return self.eigen_certificate < self.cert_tol

    def to_dict(self):
        d = self.state.to_dict()
        d.update(
            q=[self.q.real, self.q.imag],
            eigenvalue=[self.eigenvalue.real, self.eigenvalue.imag],
            residual=self.residual_norm,
            certificate=self.eigen_certificate,
        )
        return d

    @classmethod
    def from_dict(cls, data):
        return cls(
            state=BetheState.from_dict(data),
            eigenvalue=complex(*data["eigenvalue"]),
            residual_norm=float(data["residual"]),
            eigen_certificate=float(data["certificate"]),
            q=complex(*data["q"]),
        )


@dataclass
class SolverOptions:
    """Newton solver settings.

    ``gauge`` is ``"k"`` (k held fixed, solve for t) or ``"sum"`` (sum of t
    held at ``sum_value``, solve for t and k).
    """

    tol: float = 1e-10
    max_iter: int = 60
    damping: float = 1.0
    min_damping: float = 2.0 ** -14
    gauge: str = "k"
    sum_value: complex | None = None
    restarts: int = 20
    validity_tol: float = 1e-8
    cert_tol: float = 1e-8
    grid_count: int = 50
    grid_seed: int = 12345
    normalize_k: bool = True
    certify: bool = True


# -- the ansatz function ----------------------------------------------------------

def psi_log(ctx, state: BetheState, z):
    """log psi(z) = k z + sum_i log sigma(z + t_i) (branch unspecified)."""
    arr, scalar = ell._as_array(z)
    out = state.k * arr
    for t in state.t:
        out = out + np.asarray(ell.log_sigma(ctx, arr + t))
    return ell._out(out, scalar)


def psi_eval(ctx, state: BetheState, z):
    """psi(z) = exp(k z) prod sigma(z + t_i).

    Raises ``EllipticRangeError`` on overflow; use :func:`psi_log` instead.
    """
    arr, scalar = ell._as_array(z)
    return ell._out(ell._exp_checked(np.asarray(psi_log(ctx, state, arr)), "psi"), scalar)


def log_derivatives(ctx, state: BetheState, z, order: int, linear: complex = 0j):
    """Derivatives h_1..h_order of log(psi(z) exp(linear * z)).

    h_1 = k + linear + sum zeta(z + t_i), h_r = -sum wp^(r-2)(z + t_i).
    """
    arr = np.asarray(z, dtype=complex)
    h = [np.zeros_like(arr) + state.k + linear]
    if order >= 2:
        h.extend(np.zeros_like(arr) for _ in range(order - 1))
    for t in state.t:
        h[0] = h[0] + np.asarray(ell.zeta_w(ctx, arr + t))
        if order >= 2:
            wps = ell.wp_derivs(ctx, arr + t, order - 2)
            for r in range(2, order + 1):
                h[r - 1] = h[r - 1] - np.asarray(wps[r - 2])
    return h[:order]


def bell_from_log_derivs(h, order: int):
    """Complete Bell polynomials B_0..B_order, i.e. f^(n)/f given (log f)^(n)."""
    B = [np.ones_like(np.asarray(h[0])) if h else 1.0]
    for n in range(order):
        B.append(sum(math.comb(n, j) * B[n - j] * h[j] for j in range(n + 1)))
    return B


def psi_log_derivs(ctx, state: BetheState, z, order: int):
    """[psi, psi', ..., psi^(order)] at ``z`` via the Bell recursion on log psi.

    Raises PoleError when z = -t_i (log psi is singular there).
    """
    arr, scalar = ell._as_array(z)
    psi = np.asarray(psi_eval(ctx, state, arr))
    if order == 0:
        return [ell._out(psi, scalar)]
    h = log_derivatives(ctx, state, arr, order)
    B = bell_from_log_derivs(h, order)
    return [ell._out(psi * b, scalar) for b in B]


# -- Bethe equations ---------------------------------------------------------------

@dataclass(frozen=True)
class BetheEquation:
    family: str  # "even" or "odd"
    s: int
    j: int
    shift_mult: int  # shift = shift_mult * gamma

    def shift(self, gamma):
        return self.shift_mult * gamma


def bethe_equations(couplings):
    """Equation list ordered by half-period, even family before odd family."""
    eqs = []
    for s in range(4):
        for j in range(1, couplings.m[s] + 1):
            eqs.append(BetheEquation("even", s, j, 2 * j))
        for j in range(1, couplings.m_prime[s] + 1):
            eqs.append(BetheEquation("odd", s, j, 2 * j - 1))
    return eqs


def wrap_log(x):
    """Normalize the imaginary part to (-pi, pi]."""
    x = np.asarray(x, dtype=complex)
    im = np.mod(x.imag + np.pi, 2 * np.pi) - np.pi
    im = np.where(im == -np.pi, np.pi, im)
    return x.real + 1j * im


def _singular_guard(params, eqs, t):
    ctx = params.ctx
    g = params.gamma
    tol = params.pole_tol * ctx.scale
    for idx, eq in enumerate(eqs):
        h = eq.shift(g)
        w = ctx.omega[eq.s]
        for i, ti in enumerate(t):
            for sign in (-1, 1):
                if ell.lattice_distance(ctx, ti + w + sign * h) < tol:
                    raise SingularConfigurationError(
                        f"equation {idx} ({eq.family}, s={eq.s}, j={eq.j}): "
                        f"sigma(t_{i} + omega_s {'+' if sign > 0 else '-'} h) vanishes",
                        equation=idx,
                    )


def bethe_residual(params: OperatorParams, state: BetheState):
    """Log-form residuals, one per Bethe equation.

    r = 2 h (m eta_s - k) + sum_i [log sigma(t_i + omega_s - h) - log sigma(t_i + omega_s + h)],
    i.e. log(LHS) - log(RHS) of the product form, wrapped to (-pi, pi].

    Raises
    ------
    SingularConfigurationError
        If a sigma factor vanishes; ``.equation`` names the offending index.
    """
    ctx = params.ctx
    eqs = bethe_equations(params.couplings)
    if len(state.t) != params.m_total:
        raise ValueError(f"state has {len(state.t)} parameters, couplings need {params.m_total}")
    if not eqs:
        return np.zeros(0, dtype=complex)
    _singular_guard(params, eqs, state.t)
    t = np.asarray(state.t, dtype=complex)
    m = params.m_total
    g = params.gamma
    out = np.empty(len(eqs), dtype=complex)
    for idx, eq in enumerate(eqs):
        h = eq.shift(g)
        w = ctx.omega[eq.s]
        val = 2 * h * (m * ctx.eta[eq.s] - state.k)
        val += np.sum(np.asarray(ell.log_sigma(ctx, t + w - h)) - np.asarray(ell.log_sigma(ctx, t + w + h)))
        out[idx] = val
    return wrap_log(out)


def bethe_jacobian(params: OperatorParams, state: BetheState):
    """(J_t, J_k): d r / d t_i = zeta(t_i + omega_s - h) - zeta(t_i + omega_s + h), d r / d k = -2h."""
    ctx = params.ctx
    eqs = bethe_equations(params.couplings)
    t = np.asarray(state.t, dtype=complex)
    g = params.gamma
    jt = np.empty((len(eqs), len(t)), dtype=complex)
    jk = np.empty(len(eqs), dtype=complex)
    for idx, eq in enumerate(eqs):
        h = eq.shift(g)
        w = ctx.omega[eq.s]
        jt[idx] = np.asarray(ell.zeta_w(ctx, t + w - h)) - np.asarray(ell.zeta_w(ctx, t + w + h))
        jk[idx] = -2 * h
    return jt, jk


def q_form_residual(params: OperatorParams, state: BetheState, q=None) -> float:
    """max |b_{s,j}(t) / q^(2j) - 1| (and q^(2j-1) for the odd family)."""
    ctx = params.ctx
    g = params.gamma
    m = params.m_total
    if q is None:
        q = np.exp(2 * g * state.k)
    t = np.asarray(state.t, dtype=complex)
    worst = 0.0
    for eq in bethe_equations(params.couplings):
        h = eq.shift(g)
        w = ctx.omega[eq.s]
        logb = 2 * h * m * ctx.eta[eq.s] + np.sum(
            np.asarray(ell.log_sigma(ctx, t + w - h)) - np.asarray(ell.log_sigma(ctx, t + w + h))
        )
        ratio = np.exp(logb) / q ** eq.shift_mult
        worst = max(worst, abs(ratio - 1))
    return float(worst)


# -- validity and normalization --------------------------------------------------

def validity_violations(ctx, state: BetheState, tol: float = 1e-8):
    """Pairs (i, j) with t_i + t_j within ``tol`` (relative) of the period lattice."""
    bad = []
    for i in range(state.m):
        for j in range(i + 1, state.m):
            if ell.lattice_distance(ctx, state.t[i] + state.t[j]) < tol * ctx.scale:
                bad.append((i, j))
    return bad


def coincidences(ctx, state: BetheState, tol: float = 1e-6):
    out = []
    for i in range(state.m):
        for j in range(i + 1, state.m):
            if ell.lattice_distance(ctx, state.t[i] - state.t[j]) < tol * ctx.scale:
                out.append((i, j))
    return out


def normalize_k(params: OperatorParams, k: complex):
    """Reduce k modulo pi i / gamma into Im(2 gamma k) in (-pi, pi].

    When every m'_s vanishes, k is further reduced modulo pi i / (2 gamma);
    that shift flips the sign of the eigenvalue, so the number of half-shifts
    applied (mod 2) is returned alongside.
    """
    g = params.gamma
    x = 2 * g * k
    n = math.floor((x.imag + math.pi) / (2 * math.pi))
    if (x.imag + math.pi) - 2 * math.pi * n == 0:
        n -= 1
    k = k - n * math.pi * 1j / g
    flips = 0
    if sum(params.couplings.m_prime) == 0:
        im = (2 * g * k).imag
        if im > math.pi / 2:
            k = k - math.pi * 1j / (2 * g)
            flips = 1
        elif im <= -math.pi / 2:
            k = k + math.pi * 1j / (2 * g)
            flips = 1
    return k, flips


# -- Newton ----------------------------------------------------------------------

def _residual_and_jac(params, t, k, opts):
    state = BetheState(tuple(t), k)
    r = bethe_residual(params, state)
    jt, jk = bethe_jacobian(params, state)
    if opts.gauge == "sum":
        s_val = opts.sum_value
        r = np.append(r, np.sum(t) - s_val)
        jac = np.zeros((len(t) + 1, len(t) + 1), dtype=complex)
        jac[:-1, :-1] = jt
        jac[:-1, -1] = jk
        jac[-1, :-1] = 1.0
        return r, jac
    return r, jt


def _norm(r):
    return float(np.max(np.abs(r))) if len(r) else 0.0


def damped_newton(fun, x0, opts: SolverOptions, recoverable=(SingularConfigurationError, PoleError)):
    """Complex damped Newton with backtracking on the max-norm.

    ``fun(x)`` returns ``(residual, jacobian)``.  Returns ``(x, res, iterations)``.
    A final undamped step is kept only if it lowers the residual further.
    """
    x = np.asarray(x0, dtype=complex)
    r, jac = fun(x)
    res = _norm(r)
    it = 0
    while res >= opts.tol:
        if it >= opts.max_iter:
            raise ConvergenceError(
                f"no convergence after {it} iterations (residual {res:.3e})", residual=res, iterations=it
            )
        it += 1
        try:
            step = np.linalg.solve(jac, -r)
        except np.linalg.LinAlgError:
            step = np.linalg.lstsq(jac, -r, rcond=None)[0]
        lam = opts.damping
        while lam >= opts.min_damping:
            x_new = x + lam * step
            try:
                r_new, jac_new = fun(x_new)
            except recoverable:
                lam /= 2
                continue
            res_new = _norm(r_new)
            if np.isfinite(res_new) and res_new < (1 - 1e-4 * lam) * res:
                break
            lam /= 2
        else:
            raise ConvergenceError(
                f"line search failed at iteration {it} (residual {res:.3e})", residual=res, iterations=it
            )
        x, r, jac, res = x_new, r_new, jac_new, res_new
    try:
        x_p = x + np.linalg.solve(jac, -r)
        r_p, _ = fun(x_p)
        if _norm(r_p) < res:
            x, res = x_p, _norm(r_p)
    except (np.linalg.LinAlgError,) + tuple(recoverable):
        pass
    return x, res, it


def solve_newton(params: OperatorParams, init: BetheState, opts: SolverOptions | None = None) -> BetheSolution:
    """Damped Newton iteration on the log-form Bethe system.

    Raises
    ------
    SingularConfigurationError
        If the initial state sits on a vanishing sigma factor.
    ConvergenceError
        On failure to reach ``opts.tol``.
    RejectedSolutionError
        If the limit has t_i + t_j on the period lattice.
    """
    opts = opts or SolverOptions()
    m = params.m_total
    if init.m != m:
        raise ValueError(f"initial state has {init.m} parameters, couplings need {m}")
    if opts.gauge not in ("k", "sum"):
        raise ValueError(f"unknown gauge {opts.gauge!r}")
    if opts.gauge == "sum" and opts.sum_value is None:
        opts = replace(opts, sum_value=complex(sum(init.t)))

    if m == 0:
        t, k, res, it = np.zeros(0, dtype=complex), init.k, 0.0, 0
    elif opts.gauge == "k":
        k = init.k
        try:
            t, res, it = damped_newton(lambda x: _residual_and_jac(params, x, k, opts), init.t, opts)
        except ConvergenceError as exc:
            exc.state = init
            raise
    else:
        x0 = np.append(np.asarray(init.t, dtype=complex), init.k)
        try:
            x, res, it = damped_newton(lambda x: _residual_and_jac(params, x[:m], x[m], opts), x0, opts)
        except ConvergenceError as exc:
            exc.state = init
            raise
        t, k = x[:m], complex(x[m])

    state = BetheState(tuple(t), k)
    bad = validity_violations(params.ctx, state, opts.validity_tol)
    if bad:
        raise RejectedSolutionError(
            f"t_i + t_j lies on the period lattice for pairs {bad}", pair=bad[0], state=state
        )
    warnings = []
    near = coincidences(params.ctx, state)
    if near:
        warnings.append(f"near-coincident parameters {near}")
    if opts.normalize_k:
        k_norm, _ = normalize_k(params, k)
        state = BetheState(state.t, k_norm)
    return finish_solution(params, state, res, opts, iterations=it, warnings=warnings)


def finish_solution(params, state, residual, opts=None, iterations=0, warnings=None):
    """Attach eigenvalue and certificate to a converged state."""
    opts = opts or SolverOptions()
    q = complex(np.exp(2 * params.gamma * state.k))
    if opts.certify:
        grid = default_grid(params, state, opts.grid_count, seed=opts.grid_seed)
        eps = eigenvalue(params, state, grid=grid)
        cert = certify_eigen(params, state, eps, grid)
    else:
        eps, cert = complex("nan"), float("nan")
    return BetheSolution(
        state=state, eigenvalue=eps, residual_norm=residual, eigen_certificate=cert, q=q,
        iterations=iterations, cert_tol=opts.cert_tol, warnings=list(warnings or []),
    )


def random_state(params: OperatorParams, k: complex, rng) -> BetheState:
    """t_i uniform in the fundamental cell, k as given."""
    ctx = params.ctx
    x = rng.uniform(-0.5, 0.5, size=(params.m_total, 2))
    t = 2 * ctx.omega1 * x[:, 0] + 2 * ctx.omega2 * x[:, 1]
    return BetheState(tuple(t), k)


def solve_random(params: OperatorParams, k: complex, rng, opts: SolverOptions | None = None) -> BetheSolution:
    """Solve from random starts, resampling up to ``opts.restarts`` times.

    Solutions that fail certification are treated like failed starts.
    """
    opts = opts or SolverOptions()
    last = None
    for attempt in range(max(1, opts.restarts)):
        init = random_state(params, k, rng)
        try:
            sol = solve_newton(params, init, opts)
        except (ConvergenceError, RejectedSolutionError, SingularConfigurationError, PoleError,
                InsufficientGridError) as exc:
            log.debug("start %d failed: %s", attempt, exc)
            last = exc
            continue
        if not opts.certify or sol.certified:
            return sol
        last = ConvergenceError(
            f"solution failed certification ({sol.eigen_certificate:.3e})",
            residual=sol.residual_norm, state=sol.state,
        )
    if isinstance(last, ConvergenceError):
        raise last
    raise ConvergenceError(f"all {opts.restarts} starts failed; last error: {last}", state=None)


# -- eigenvalue and certification ---------------------------------------------------

def singular_points(params: OperatorParams):
    """Points (mod 2 Gamma) where a, b or c may be singular."""
    ctx = params.ctx
    cp = params.couplings
    g = params.gamma
    pts = []
    for p in range(4):
        w = ctx.omega[p]
        if cp.m[p]:
            pts.append(w)
        if cp.m_prime[p]:
            pts.extend([w - g, w + g])
    for p, c in enumerate(params.c_weights()):
        if c != 0:
            pts.extend([ctx.omega[p] - g, ctx.omega[p] + g])
    return pts


def admissible(params, state, z, min_dist):
    """Boolean mask: z away from coefficient poles and from zeros of psi."""
    ctx = params.ctx
    z = np.asarray(z, dtype=complex)
    ok = np.ones(z.shape, dtype=bool)
    avoid = list(singular_points(params)) + [-t for t in state.t]
    for p in avoid:
        ok &= np.asarray(ell.lattice_distance(ctx, z - p)) > min_dist
    return ok


def default_min_dist(params):
    ctx = params.ctx
    return min(0.05 * min(abs(ctx.omega1), abs(ctx.omega2)), 0.25 * abs(params.gamma))


def default_grid(params, state, count=50, seed=12345, min_dist=None):
    """``count`` admissible pseudo-random points in the fundamental cell."""
    ctx = params.ctx
    rng = np.random.default_rng(seed)
    min_dist = default_min_dist(params) if min_dist is None else min_dist
    x = rng.uniform(-0.5, 0.5, size=(8 * count, 2))
    z = 2 * ctx.omega1 * x[:, 0] + 2 * ctx.omega2 * x[:, 1]
    z = z[admissible(params, state, z, min_dist)]
    return z[:count]


def l_ratio(params: OperatorParams, state: BetheState, z):
    """(L psi)(z) / psi(z) computed through differences of log psi."""
    ctx = params.ctx
    arr, scalar = ell._as_array(z)
    g2 = 2 * params.gamma
    lp0 = np.asarray(psi_log(ctx, state, arr))
    a, b, c = (np.asarray(x) for x in coefficients(params, arr))
    up = np.exp(np.asarray(psi_log(ctx, state, arr + g2)) - lp0)
    dn = np.exp(np.asarray(psi_log(ctx, state, arr - g2)) - lp0)
    with np.errstate(invalid="ignore"):
        out = np.where(a == 0, 0, a * up) + np.where(b == 0, 0, b * dn) + c
    return ell._out(out, scalar)


def L_psi(params: OperatorParams, state: BetheState, z):
    """(L psi)(z) directly."""
    ctx = params.ctx
    g2 = 2 * params.gamma
    arr, scalar = ell._as_array(z)
    a, b, c = (np.asarray(x) for x in coefficients(params, arr))
    out = (
        a * np.asarray(psi_eval(ctx, state, arr + g2))
        + b * np.asarray(psi_eval(ctx, state, arr - g2))
        + c * np.asarray(psi_eval(ctx, state, arr))
    )
    return ell._out(out, scalar)


def L_psi_regularized(params, state, z0, radius=None, n=16):
    """(L psi)(z0) as the mean over a small circle around z0.

    L psi is entire when psi satisfies the Bethe equations, while its three
    terms may have cancelling poles at z0; the circle mean sidesteps them.
    """
    radius = 0.05 * abs(params.gamma) if radius is None else radius
    pts = z0 + radius * np.exp(2j * np.pi * (np.arange(n) + 0.5) / n)
    return complex(np.mean(np.asarray(L_psi(params, state, pts))))


def eigenvalue(params: OperatorParams, state: BetheState, grid=None) -> complex:
    """Eigenvalue (L psi / psi)(z*).

    z* = 2 gamma m_0 when m_0 > 0 (a(z*) = 0 there) and the point is
    admissible; otherwise the grid point with the largest |psi|.
    """
    ctx = params.ctx
    m0 = params.couplings.m[0]
    md = default_min_dist(params)
    if m0 > 0:
        zs = 2 * params.gamma * m0
        if admissible(params, state, np.array([zs]), 0.2 * md)[0]:
            lp0 = psi_log(ctx, state, zs)
            dn = np.exp(psi_log(ctx, state, zs - 2 * params.gamma) - lp0)
            return complex(coeff_b(params, zs) * dn + coeff_c(params, zs))
    if grid is None:
        grid = default_grid(params, state)
    if len(grid) == 0:
        raise InsufficientGridError("no admissible point to evaluate the eigenvalue")
    re_log = np.real(np.asarray(psi_log(ctx, state, grid)))
    zs = grid[int(np.argmax(re_log))]
    return complex(l_ratio(params, state, zs))


def certify_eigen(params, state, eps, grid=None, scale: float = 1.0, min_points: int = 10) -> float:
    """max over the grid of |L psi - eps psi| / max(|eps psi|, scale |psi|).

    Raises InsufficientGridError with fewer than ``min_points`` admissible points.
    """
    if isinstance(state, BetheSolution):
        state = state.state
    if grid is None:
        grid = default_grid(params, state)
    grid = np.asarray(grid, dtype=complex)
    grid = grid[admissible(params, state, grid, 0.2 * default_min_dist(params))]
    if len(grid) < min_points:
        raise InsufficientGridError(f"only {len(grid)} admissible grid points (need {min_points})")
    f = np.asarray(l_ratio(params, state, grid))
    return float(np.max(np.abs(f - eps)) / max(abs(eps), scale))


# -- Q-space conditions ------------------------------------------------------------

_HALF_PERIOD_COORDS = {0: (0, 0), 1: (1, 0), 2: (0, 1), 3: (-1, -1)}


@dataclass
class QCheckItem:
    label: str
    residual: float


@dataclass
class QSpaceReport:
    items: list
    evenness: float = 0.0
    periodicity: float = 0.0

    def max_condition_residual(self) -> float:
        return max((it.residual for it in self.items), default=0.0)

    def passed(self, tol=1e-9, quotient_tol=1e-8) -> bool:
        return (
            self.max_condition_residual() < tol
            and self.evenness < quotient_tol
            and self.periodicity < quotient_tol
        )


def q_space_check(params: OperatorParams, solution, translates=((0, 0), (2, 0))) -> QSpaceReport:
    """Verify that phi = L psi satisfies the Bethe conditions at omega_s and
    translates, and that L psi / psi is even and doubly periodic on a grid.
    """
    state = solution.state if isinstance(solution, BetheSolution) else solution
    ctx = params.ctx
    g = params.gamma
    m = params.m_total
    items = []
    for eq in bethe_equations(params.couplings):
        h = eq.shift(g)
        base = _HALF_PERIOD_COORDS[eq.s]
        for d1, d2 in translates:
            n1, n2 = base[0] + d1, base[1] + d2
            w = n1 * ctx.omega1 + n2 * ctx.omega2
            eta_w = ctx.eta_of(n1, n2)
            plus = L_psi_regularized(params, state, w + h)
            minus = L_psi_regularized(params, state, w - h) * np.exp(2 * h * m * eta_w)
            r = abs(plus - minus) / max(abs(plus), abs(minus), 1e-300)
            items.append(QCheckItem(f"{eq.family} s={eq.s} j={eq.j} at omega_s+({d1},{d2})", float(r)))

    evenness = periodicity = 0.0
    if m:
        grid = default_grid(params, state, 40, seed=777)
        md = 0.2 * default_min_dist(params)
        grid = grid[admissible(params, state, -grid, md)]
        f = np.asarray(l_ratio(params, state, grid))
        scale = max(1.0, float(np.max(np.abs(f))))
        evenness = float(np.max(np.abs(f - np.asarray(l_ratio(params, state, -grid)))) / scale)
        for per in (2 * ctx.omega1, 2 * ctx.omega2):
            ok = admissible(params, state, grid + per, md)
            fper = np.asarray(l_ratio(params, state, grid[ok] + per))
            periodicity = max(periodicity, float(np.max(np.abs(f[ok] - fper), initial=0.0)) / scale)
    return QSpaceReport(items, evenness, periodicity)
