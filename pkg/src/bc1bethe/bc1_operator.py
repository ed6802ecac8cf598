"""The BC1 elliptic Ruijsenaars operator L = a(z) T^{2g} + b(z) T^{-2g} + c(z).

Here ``T^{h} f(z) = f(z + h)`` and ``g`` is the step gamma.  Couplings are
integers: mu_p = 2 gamma m_p, mu'_p = 2 gamma m'_p.
"""
from __future__ import annotations

import itertools
from dataclasses import dataclass, field

import numpy as np

from . import elliptic as ell
from .errors import CouplingError, PoleError

#: pi_0 = id, pi_1 = (01)(23), pi_2 = (02)(13), pi_3 = (03)(12)
PERMUTATIONS = ((0, 1, 2, 3), (1, 0, 3, 2), (2, 3, 0, 1), (3, 2, 1, 0))


def _as_int4(values, name):
    vals = tuple(values)
    if len(vals) != 4:
        raise CouplingError(f"{name} must have 4 entries, got {len(vals)}")
    out = []
    for i, v in enumerate(vals):
        if isinstance(v, bool) or int(v) != v:
            raise CouplingError(f"{name}[{i}] must be an integer, got {v!r}")
        if v < 0:
            raise CouplingError(f"{name}[{i}] must be non-negative, got {v}")
        out.append(int(v))
    return tuple(out)


@dataclass(frozen=True)
class Couplings:
    """Eight non-negative integers m_0..m_3, m'_0..m'_3 and the step gamma."""

    m: tuple
    m_prime: tuple
    gamma: complex

    def __post_init__(self):
        object.__setattr__(self, "m", _as_int4(self.m, "m"))
        object.__setattr__(self, "m_prime", _as_int4(self.m_prime, "m_prime"))
        object.__setattr__(self, "gamma", complex(self.gamma))
        if self.gamma == 0:
            raise CouplingError("gamma must be non-zero")

    @property
    def mu(self):
        return tuple(2 * self.gamma * mp for mp in self.m)

    @property
    def mu_prime(self):
        return tuple(2 * self.gamma * mp for mp in self.m_prime)

    @property
    def m_total(self) -> int:
        return sum(self.m) + sum(self.m_prime)

    @property
    def g(self):
        """Continuous-limit couplings g_p = m_p + m'_p."""
        return tuple(a + b for a, b in zip(self.m, self.m_prime))

    def permuted(self, r: int) -> "Couplings":
        """Couplings with tilde-mu_p = mu_{pi_r(p)}."""
        pi = PERMUTATIONS[r]
        return Couplings(
            m=tuple(self.m[pi[p]] for p in range(4)),
            m_prime=tuple(self.m_prime[pi[p]] for p in range(4)),
            gamma=self.gamma,
        )

    def with_gamma(self, gamma) -> "Couplings":
        return Couplings(self.m, self.m_prime, gamma)

    def to_dict(self):
        return {
            "m": list(self.m),
            "m_prime": list(self.m_prime),
            "gamma": [self.gamma.real, self.gamma.imag],
        }

    @classmethod
    def from_dict(cls, data):
        g = data["gamma"]
        gamma = complex(g[0], g[1]) if isinstance(g, (list, tuple)) else complex(g)
        return cls(m=tuple(data["m"]), m_prime=tuple(data["m_prime"]), gamma=gamma)


def gamma_rationality_distance(ctx, gamma, height: int = 32) -> float:
    """Distance (in units of |omega1|) from gamma to the nearest low-height
    point (p/q) omega1 + (r/s) omega2 with |p|, |q|, |r|, |s| <= height.
    """
    # coordinates of gamma in the (omega1, omega2) basis
    basis = np.array([[ctx.omega1.real, ctx.omega2.real], [ctx.omega1.imag, ctx.omega2.imag]])
    x, y = np.linalg.solve(basis, [gamma.real, gamma.imag])
    best = np.inf
    dens = np.arange(1, height + 1)
    cand_x = np.round(x * dens) / dens
    cand_y = np.round(y * dens) / dens
    ok_x = np.abs(np.round(x * dens)) <= height
    ok_y = np.abs(np.round(y * dens)) <= height
    for cx in cand_x[ok_x]:
        for cy in cand_y[ok_y]:
            d = abs(gamma - (cx * ctx.omega1 + cy * ctx.omega2)) / ctx.scale
            best = min(best, d)
    return float(best)


@dataclass(frozen=True)
class OperatorParams:
    """A lattice context together with the couplings; defines L."""

    ctx: ell.LatticeContext
    couplings: Couplings
    gamma_guard: float = 1e-6
    pole_tol: float = 1e-12
    _cache: dict = field(default_factory=dict, compare=False, repr=False)

    @property
    def gamma(self) -> complex:
        return self.couplings.gamma

    @property
    def m_total(self) -> int:
        return self.couplings.m_total

    def c_weights(self):
        w = self._cache.get("c_weights")
        if w is None:
            w = tuple(c_weight(self, p) for p in range(4))
            self._cache["c_weights"] = w
        return w


def make_params(ctx, couplings, *, gamma_guard=1e-6, check_gamma=True, pole_tol=1e-12):
    """Validate and bundle (ctx, couplings).

    Raises
    ------
    CouplingError
        If gamma lies within ``gamma_guard`` of a low-height rational point of
        the lattice (the integer-coupling theory needs an irrational step).
    """
    if check_gamma:
        d = gamma_rationality_distance(ctx, couplings.gamma)
        if d < gamma_guard:
            raise CouplingError(
                f"gamma = {couplings.gamma} is within {d:.3g} of a rational lattice point"
            )
    return OperatorParams(ctx=ctx, couplings=couplings, gamma_guard=gamma_guard, pole_tol=pole_tol)


# -- coefficients ---------------------------------------------------------------

def _shifted_pole_check(params, p, x, label):
    """sigma_p(x) vanishes iff x + omega_p lies on 2*Gamma."""
    ctx = params.ctx
    d = np.asarray(ell.lattice_distance(ctx, np.asarray(x) + ctx.omega[p]))
    bad = d < params.pole_tol * ctx.scale
    if np.any(bad):
        point = complex(np.ravel(x)[np.flatnonzero(np.ravel(bad))[0]])
        pole = complex(ell.nearest_lattice_point(ctx, point + ctx.omega[p]) - ctx.omega[p])
        raise PoleError(f"{label}: sigma_{p} vanishes at {point}", point=point, pole=pole, factor=label)


def coeff_a(params: OperatorParams, z):
    """a(z) = prod_p sigma_p(z - mu_p) sigma_p(z + gamma - mu'_p) / (sigma_p(z) sigma_p(z + gamma)).

    Factors with a zero coupling cancel identically and are skipped, so the
    all-zero operator has a = 1 exactly.
    """
    ctx = params.ctx
    cp = params.couplings
    arr, scalar = ell._as_array(z)
    logv = np.zeros_like(arr)
    g = cp.gamma
    for p in range(4):
        if cp.m[p]:
            _shifted_pole_check(params, p, arr, f"a: sigma_{p}(z)")
            logv = logv + np.asarray(ell.log_sigma_shifted(ctx, p, arr - cp.mu[p])) - np.asarray(
                ell.log_sigma_shifted(ctx, p, arr)
            )
        if cp.m_prime[p]:
            _shifted_pole_check(params, p, arr + g, f"a: sigma_{p}(z+gamma)")
            logv = logv + np.asarray(
                ell.log_sigma_shifted(ctx, p, arr + g - cp.mu_prime[p])
            ) - np.asarray(ell.log_sigma_shifted(ctx, p, arr + g))
    val = ell._exp_checked(logv, "a")
    return ell._out(val, scalar)


def coeff_b(params: OperatorParams, z):
    """b(z) = a(-z)."""
    arr, scalar = ell._as_array(z)
    return ell._out(np.asarray(coeff_a(params, -arr)), scalar)


def c_weight(params: OperatorParams, p: int) -> complex:
    """Weight c_p multiplying zeta_p(z + gamma) - zeta_p(z - gamma) in c(z).

    c_p = (2 / sigma(2 gamma)) prod_s sigma_s(gamma + mu_{pi_p(s)}) sigma_s(mu'_{pi_p(s)}).

    The overall sign is fixed so that the residues of a + c at z = -gamma
    cancel; with the opposite sign the Bethe eigenfunctions fail to be
    eigenfunctions.
    """
    ctx = params.ctx
    cp = params.couplings
    g = cp.gamma
    pi = PERMUTATIONS[p]
    # sigma_0(0) = 0 kills the product whenever mu'_{pi_p(0)} = mu'_p vanishes
    if cp.m_prime[pi[0]] == 0:
        return 0j
    s2g = ell.sigma(ctx, 2 * g)
    if abs(s2g) < params.pole_tol * ctx.scale:
        raise PoleError("c_p: sigma(2 gamma) vanishes", point=2 * g)
    logv = 0j
    for s in range(4):
        logv += ell.log_sigma_shifted(ctx, s, g + cp.mu[pi[s]])
        logv += ell.log_sigma_shifted(ctx, s, cp.mu_prime[pi[s]])
    return complex(2.0 / s2g * np.exp(logv))


def coeff_c(params: OperatorParams, z):
    """c(z) = sum_p c_p (zeta_p(z + gamma) - zeta_p(z - gamma)); even in z."""
    ctx = params.ctx
    arr, scalar = ell._as_array(z)
    g = params.gamma
    out = np.zeros_like(arr)
    for p, cp in enumerate(params.c_weights()):
        if cp == 0:
            continue
        try:
            out = out + cp * (
                np.asarray(ell.zeta_shifted(ctx, p, arr + g)) - np.asarray(ell.zeta_shifted(ctx, p, arr - g))
            )
        except PoleError as exc:
            raise PoleError(f"c: term p={p}: {exc}", point=exc.point, pole=exc.pole, factor=f"c_{p}") from exc
    return ell._out(out, scalar)


def coefficients(params, z):
    """(a, b, c) at z."""
    return coeff_a(params, z), coeff_b(params, z), coeff_c(params, z)


def apply_L(params: OperatorParams, f, z):
    """(L f)(z) = a(z) f(z + 2 gamma) + b(z) f(z - 2 gamma) + c(z) f(z)."""
    g2 = 2 * params.gamma
    a, b, c = coefficients(params, z)
    arr = np.asarray(z, dtype=complex)
    out = a * np.asarray(f(arr + g2)) + b * np.asarray(f(arr - g2)) + c * np.asarray(f(arr))
    return ell._out(np.asarray(out), np.ndim(z) == 0)


# -- symmetries -----------------------------------------------------------------

def permute_couplings(params: OperatorParams, r: int) -> OperatorParams:
    """Operator with couplings permuted by pi_r."""
    return OperatorParams(
        ctx=params.ctx, couplings=params.couplings.permuted(r),
        gamma_guard=params.gamma_guard, pole_tol=params.pole_tol,
    )


def half_period_class(n1: int, n2: int) -> int:
    """Index s with n1 omega1 + n2 omega2 = omega_s mod 2 Gamma."""
    return {(0, 0): 0, (1, 0): 1, (0, 1): 2, (1, 1): 3}[(n1 % 2, n2 % 2)]


def lambda_shift(params: OperatorParams, omega) -> complex:
    """Exponent lambda(omega) in T^w L_mu T^-w = exp(-lambda z) L_~mu exp(lambda z).

    ``omega`` is a pair of integers (n1, n2) meaning n1 omega1 + n2 omega2.
    With a = prod sigma_p(z - mu_p) ... / ..., shifting z by omega_r gives
    a_mu(z + omega_r) = a_~mu(z) exp(-eta_r sum(mu + mu')), hence
    lambda_r = -eta_r (2 gamma)^-1 sum(mu + mu') = -m eta_r.
    """
    n1, n2 = omega
    return -params.m_total * params.ctx.eta_of(n1, n2)


def conjugation_sides(params: OperatorParams, omega, f, z):
    """Both sides of the conjugation identity applied to ``f`` at ``z``.

    Returns (lhs, rhs, scale) with scale the largest individual term.
    """
    n1, n2 = omega
    ctx = params.ctx
    w = n1 * ctx.omega1 + n2 * ctx.omega2
    g2 = 2 * params.gamma
    z = np.asarray(z, dtype=complex)
    fp, fm, f0 = np.asarray(f(z + g2)), np.asarray(f(z - g2)), np.asarray(f(z))
    a, b, c = (np.asarray(x) for x in coefficients(params, z + w))
    lhs_terms = (a * fp, b * fm, c * f0)
    tilde = permute_couplings(params, half_period_class(n1, n2))
    lam = lambda_shift(params, omega)
    at, bt, ct = (np.asarray(x) for x in coefficients(tilde, z))
    rhs_terms = (at * np.exp(lam * g2) * fp, bt * np.exp(-lam * g2) * fm, ct * f0)
    scale = np.maximum.reduce([np.abs(t) for t in lhs_terms + rhs_terms])
    return sum(lhs_terms), sum(rhs_terms), scale


def check_covariance(params: OperatorParams, omega, f, z) -> float:
    """Relative residual of T^w L_mu T^-w f = e^{-lambda z} L_~mu e^{lambda z} f at z."""
    lhs, rhs, scale = conjugation_sides(params, omega, f, z)
    return float(np.max(np.abs(lhs - rhs) / np.maximum(scale, 1e-300)))


# -- residues and structure conditions ----------------------------------------

def residue(fn, z0, radius, n_radii: int = 4, ratio: float = 10.0):
    """Residue of ``fn`` at a simple pole ``z0`` without contour quadrature.

    Evaluates A(h) = h (fn(z0 + h) - fn(z0 - h)) / 2 = res + O(h^2) at
    ``n_radii`` radii ``radius, radius/ratio, ...`` and Richardson-extrapolates
    in h^2.  Returns (estimate, error_estimate).
    """
    hs = radius / ratio ** np.arange(n_radii)
    direction = np.exp(0.37j)
    vals = []
    for h in hs * direction:
        vals.append(h * (fn(z0 + h) - fn(z0 - h)) / 2)
    # Neville table in x = h^2
    x = np.abs(hs) ** 2
    table = [list(vals)]
    for level in range(1, n_radii):
        prev = table[-1]
        row = []
        for i in range(len(prev) - 1):
            x0, x1 = x[i], x[i + level]
            row.append((x0 * prev[i + 1] - x1 * prev[i]) / (x0 - x1))
        table.append(row)
    # pick the first-level extrapolant with the smallest successive change:
    # the finest radii lose digits to z0 + h cancellation
    best, err = table[1][0], abs(table[1][0] - table[0][1])
    for level in range(1, n_radii):
        for i, val in enumerate(table[level]):
            ref = table[level - 1][i + 1]
            e = abs(val - ref)
            if e < err:
                best, err = val, e
    return complex(best), float(err)


@dataclass
class StructureItem:
    name: str
    residual: float
    passed: bool
    detail: str = ""


@dataclass
class StructureReport:
    items: list

    @property
    def passed(self) -> bool:
        return all(it.passed for it in self.items)

    def max_residual(self) -> float:
        return max((it.residual for it in self.items), default=0.0)

    def as_dict(self):
        return [{"name": it.name, "residual": it.residual, "passed": it.passed, "detail": it.detail} for it in self.items]


def structure_report(params: OperatorParams, tol: float = 1e-9) -> StructureReport:
    """Check numerically the hypotheses under which L preserves the
    Bethe-condition spaces at z = 0.

    Items (each present only when the relevant coupling is positive):

    * ``a(2 gamma m_0) = 0``
    * ``a(2 j gamma) = b(-2 j gamma)`` for j = 1..m_0
    * ``res_{z=0}(a + b) = 0``
    * ``a((2 m'_0 - 1) gamma) = 0``
    * ``res_{z=-gamma}(a + c) = 0`` and ``res_{z=gamma}(b + c) = 0``
    * ``res_{z=-gamma} a + res_{z=gamma} b = 0`` (the sign forced by b(z) = a(-z))
    """
    cp = params.couplings
    g = params.gamma
    m0, mp0 = cp.m[0], cp.m_prime[0]
    items = []

    def amp(z):
        # magnitude of a's numerator-free part: |a| relative to the largest factor nearby
        return max(1.0, abs(coeff_a(params, z + 0.1 * g)), abs(coeff_a(params, z - 0.1 * g)))

    if m0 > 0:
        z = 2 * g * m0
        r = abs(coeff_a(params, z)) / amp(z)
        items.append(StructureItem("a(2*gamma*m0)=0", r, r < tol))
        for j in range(1, m0 + 1):
            aj = coeff_a(params, 2 * j * g)
            bj = coeff_b(params, -2 * j * g)
            r = abs(aj - bj) / max(1.0, abs(aj))
            items.append(StructureItem(f"a(2*{j}*gamma)=b(-2*{j}*gamma)", r, r < tol))
        radius = 1e-3 * abs(g)
        res_ab, err = residue(lambda z: coeff_a(params, z) + coeff_b(params, z), 0j, radius)
        res_a, _ = residue(lambda z: coeff_a(params, z), 0j, radius)
        r = abs(res_ab) / max(1.0, abs(res_a))
        items.append(StructureItem("res_0(a+b)=0", r, r < tol, f"res_0 a = {res_a:.6g}"))
    if mp0 > 0:
        z = (2 * mp0 - 1) * g
        r = abs(coeff_a(params, z)) / amp(z)
        items.append(StructureItem("a((2m'0-1)*gamma)=0", r, r < tol))
        radius = 1e-3 * abs(g)
        res_a, _ = residue(lambda z: coeff_a(params, z), -g, radius)
        res_b, _ = residue(lambda z: coeff_b(params, z), g, radius)
        res_cm, _ = residue(lambda z: coeff_c(params, z), -g, radius)
        res_cp, _ = residue(lambda z: coeff_c(params, z), g, radius)
        res_ac, _ = residue(lambda z: coeff_a(params, z) + coeff_c(params, z), -g, radius)
        res_bc, _ = residue(lambda z: coeff_b(params, z) + coeff_c(params, z), g, radius)
        scale = max(1.0, abs(res_a), abs(res_cm))
        items.append(StructureItem("res_-gamma(a+c)=0", abs(res_ac) / scale, abs(res_ac) / scale < tol,
                                   f"res a = {res_a:.6g}, res c = {res_cm:.6g}"))
        scale = max(1.0, abs(res_b), abs(res_cp))
        items.append(StructureItem("res_gamma(b+c)=0", abs(res_bc) / scale, abs(res_bc) / scale < tol))
        r = abs(res_a + res_b) / max(1.0, abs(res_a))
        items.append(StructureItem("res_-gamma(a)+res_gamma(b)=0", r, r < tol))
    return StructureReport(items)


def _circle(z0, radius, n):
    return z0 + radius * np.exp(2j * np.pi * (np.arange(n) + 0.25) / n)


def structure_scan(ctx, gamma, max_entry: int = 3, n_points: int = 65, radius_frac: float = 0.5,
                   chunk: int = 8192):
    """Structure residuals for every coupling set with entries in 0..max_entry at once.

    log a(z) is a sum of one table entry per coupling, and so is log c_p, so
    all sets are evaluated by gathering from small per-(p, n) tables.  Residues
    are trapezoidal means of (z - z0) f(z) over an odd-point circle of radius
    ``radius_frac * |gamma|``.

    Returns a dict mapping item name to an array of residuals (one per set,
    NaN where the item does not apply) plus ``"m"`` and ``"m_prime"`` arrays.
    """
    g = complex(gamma)
    n_vals = max_entry + 1
    r = radius_frac * abs(g)
    centers = {"0": 0j, "-g": -g, "+g": g}
    circles = {k: _circle(c, r, n_points) for k, c in centers.items()}

    def lsig(p, z):
        with np.errstate(divide="ignore", invalid="ignore"):
            return np.asarray(ell.log_sigma_shifted(ctx, p, np.asarray(z, dtype=complex)))

    def a_tables(z):
        # T[p, n] = log sigma_p(z - 2 g n) - log sigma_p(z), Tp[p, n] likewise at z + g
        z = np.asarray(z, dtype=complex)
        T = np.zeros((4, n_vals) + z.shape, dtype=complex)
        Tp = np.zeros_like(T)
        for p in range(4):
            base, base_p = lsig(p, z), lsig(p, z + g)
            for n in range(1, n_vals):
                T[p, n] = lsig(p, z - 2 * g * n) - base
                Tp[p, n] = lsig(p, z + g - 2 * g * n) - base_p
        return T, Tp

    # c_p tables: log sigma_s(g + 2 g n) and log sigma_s(2 g n) (the latter -inf at s = n = 0)
    A = np.array([[lsig(s, g + 2 * g * n) for n in range(n_vals)] for s in range(4)])
    B = np.array([[lsig(s, 2 * g * n) if (s, n) != (0, 0) else -np.inf for n in range(n_vals)]
                  for s in range(4)])
    log_pref = np.log(2.0 / complex(ell.sigma(ctx, 2 * g)))

    def zeta_diff(z):
        return np.array([np.asarray(ell.zeta_shifted(ctx, p, z + g)) - np.asarray(ell.zeta_shifted(ctx, p, z - g))
                         for p in range(4)])

    tabs = {k: a_tables(c) for k, c in circles.items()}
    tabs_neg = {k: a_tables(-c) for k, c in circles.items()}
    zd = {k: zeta_diff(circles[k]) for k in ("-g", "+g")}

    sets = np.array([v for v in itertools.product(range(n_vals), repeat=8)])
    out = {name: np.full(len(sets), np.nan) for name in (
        "a(2*gamma*m0)=0", "a(2j*gamma)=b(-2j*gamma)", "res_0(a+b)=0", "a((2m'0-1)*gamma)=0",
        "res_-gamma(a+c)=0", "res_gamma(b+c)=0")}
    out["m"], out["m_prime"] = sets[:, :4], sets[:, 4:]

    def log_a(T, Tp, M, Mp):
        return sum(T[p][M[:, p]] + Tp[p][Mp[:, p]] for p in range(4))

    def point_a(z, M, Mp):
        T, Tp = a_tables(np.array([z]))
        with np.errstate(over="ignore", invalid="ignore"):
            return np.exp(log_a(T, Tp, M, Mp)[:, 0])

    for lo in range(0, len(sets), chunk):
        M, Mp = sets[lo:lo + chunk, :4], sets[lo:lo + chunk, 4:]
        idx = np.arange(lo, lo + len(M))
        with np.errstate(over="ignore", invalid="ignore", divide="ignore"):
            logc = np.stack([
                log_pref + sum(A[s][M[:, PERMUTATIONS[p][s]]] + B[s][Mp[:, PERMUTATIONS[p][s]]] for s in range(4))
                for p in range(4)], axis=1)
            cw = np.exp(logc)
            cw[~np.isfinite(logc.real)] = 0
            a_circ = {k: np.exp(log_a(*tabs[k], M, Mp)) for k in circles}
            b_circ = {k: np.exp(log_a(*tabs_neg[k], M, Mp)) for k in circles}
        c_circ = {k: cw @ zd[k] for k in zd}

        def res(vals, key):
            return np.mean((circles[key] - centers[key]) * vals, axis=1)

        m0, mp0 = M[:, 0], Mp[:, 0]
        for mval in range(1, n_vals):
            sel = m0 == mval
            if not sel.any():
                continue
            a0 = point_a(2 * g * mval, M[sel], Mp[sel])
            out["a(2*gamma*m0)=0"][idx[sel]] = np.abs(a0)
            worst = np.zeros(sel.sum())
            for j in range(1, mval + 1):
                aj = point_a(2 * j * g, M[sel], Mp[sel])
                bj = point_a(-(-2 * j * g), M[sel], Mp[sel])
                worst = np.maximum(worst, np.abs(aj - bj) / np.maximum(1, np.abs(aj)))
            out["a(2j*gamma)=b(-2j*gamma)"][idx[sel]] = worst
        sel = m0 > 0
        ra = res(a_circ["0"], "0")
        rab = res(a_circ["0"] + b_circ["0"], "0")
        out["res_0(a+b)=0"][idx[sel]] = (np.abs(rab) / np.maximum(1, np.abs(ra)))[sel]
        for mval in range(1, n_vals):
            sel = mp0 == mval
            if sel.any():
                out["a((2m'0-1)*gamma)=0"][idx[sel]] = np.abs(point_a((2 * mval - 1) * g, M[sel], Mp[sel]))
        sel = mp0 > 0
        ra, rc = res(a_circ["-g"], "-g"), res(c_circ["-g"], "-g")
        rac = res(a_circ["-g"] + c_circ["-g"], "-g")
        out["res_-gamma(a+c)=0"][idx[sel]] = (np.abs(rac) / np.maximum.reduce([np.ones_like(ra.real), np.abs(ra), np.abs(rc)]))[sel]
        rb, rc = res(b_circ["+g"], "+g"), res(c_circ["+g"], "+g")
        rbc = res(b_circ["+g"] + c_circ["+g"], "+g")
        out["res_gamma(b+c)=0"][idx[sel]] = (np.abs(rbc) / np.maximum.reduce([np.ones_like(rb.real), np.abs(rb), np.abs(rc)]))[sel]
    return out


def coupling_sets(max_entry: int, max_total: int | None = None):
    """All (m, m') with entries in 0..max_entry (optionally bounded total)."""
    for vals in itertools.product(range(max_entry + 1), repeat=8):
        if max_total is not None and sum(vals) > max_total:
            continue
        yield vals[:4], vals[4:]
