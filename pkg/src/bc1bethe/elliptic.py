r"""Weierstrass elliptic functions on a lattice with half-periods omega1, omega2.

All functions take a :class:`LatticeContext` and an argument ``z`` which may be
a Python scalar or a numpy array; scalars come back as ``complex``.

The evaluation scheme reduces ``z`` into the period parallelogram centred at
the origin, evaluates the Jacobi product

.. math::

    \sigma(z) = \frac{2\omega_1}{\pi} e^{\eta_1 z^2/2\omega_1} \sin v
        \prod_{n\ge1} \frac{(1-q^{2n}e^{2iv})(1-q^{2n}e^{-2iv})}{(1-q^{2n})^2},
    \qquad v = \frac{\pi z}{2\omega_1},\ q = e^{i\pi\omega_2/\omega_1},

and multiplies the quasi-periodicity factor back in log space.  zeta, wp and
wp' are logarithmic derivatives of the same product.
"""
from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np

from .errors import EllipticRangeError, LatticeError, PoleError

_SERIES_EPS = 1e-17
_LOG_MAX = 709.0


def _terms_for(nome_abs: float, eps: float = _SERIES_EPS) -> int:
    # largest term in the reduced cell is |q|^(2n-1)
    if nome_abs < 1e-300:
        return 1
    return max(1, math.ceil((math.log(eps) / math.log(nome_abs) + 1.0) / 2.0)) + 1


def _as_array(z):
    arr = np.asarray(z, dtype=complex)
    return arr, arr.ndim == 0


def _out(arr, scalar):
    if scalar:
        return complex(arr)
    return arr


@dataclass(frozen=True)
class LatticeContext:
    """Immutable elliptic-function environment.

    Build with :func:`make_context`; the constructor does no validation.
    """

    omega1: complex
    omega2: complex
    omega3: complex
    eta: tuple
    nome: complex
    tau: complex
    n_terms: int
    g2: complex
    g3: complex
    e: tuple
    log_sigma_omega: tuple
    tol: float = 1e-11
    pole_tol: float = 1e-12
    paranoid: bool = False
    checks: dict = field(default_factory=dict, compare=False)

    @property
    def omega(self):
        """Half-periods (omega_0=0, omega_1, omega_2, omega_3)."""
        return (0j, self.omega1, self.omega2, self.omega3)

    @property
    def scale(self) -> float:
        return abs(self.omega1)

    def eta_of(self, n1: int, n2: int) -> complex:
        """eta(omega) for omega = n1*omega1 + n2*omega2."""
        return n1 * self.eta[1] + n2 * self.eta[2]

    def to_dict(self):
        return {
            "omega1": [self.omega1.real, self.omega1.imag],
            "omega2": [self.omega2.real, self.omega2.imag],
        }


# -- raw series (no reduction) -------------------------------------------------

def _series(omega1, q, v, n_terms, order=3):
    """Log of the theta-product ratio and d^k/dv^k log theta_1(v), k = 1..order.

    Works on flat arrays ``v``; returns a list of length ``order + 1``.
    """
    n = np.arange(1, n_terms + 1, dtype=float)[:, None]
    q2n = q ** (2 * n)
    e2iv = np.exp(2j * v)[None, :]
    x = q2n * e2iv
    y = q2n / e2iv
    out = [np.sum(np.log1p(-x) + np.log1p(-y) - 2.0 * np.log1p(-q2n), axis=0)]
    if order == 0:
        return out
    with np.errstate(divide="ignore", invalid="ignore"):
        sin = np.sin(v)
        cot = np.cos(v) / sin
        csc2 = 1.0 / sin ** 2
        out.append(cot + np.sum(2j * (y / (1 - y) - x / (1 - x)), axis=0))
        if order >= 2:
            out.append(-csc2 + 4.0 * np.sum(x / (1 - x) ** 2 + y / (1 - y) ** 2, axis=0))
        if order >= 3:
            out.append(2.0 * csc2 * cot + 8j * np.sum(
                x * (1 + x) / (1 - x) ** 3 - y * (1 + y) / (1 - y) ** 3, axis=0
            ))
    return out


def _eta1(omega1, q, n_terms):
    n = np.arange(1, n_terms + 1, dtype=float)
    q2n = q ** (2 * n)
    e2 = 1.0 - 24.0 * np.sum(q2n / (1 - q2n) ** 2)
    return complex(np.pi ** 2 * e2 / (12.0 * omega1))


def _zeta_raw(omega1, eta1, q, n_terms, z):
    v = np.atleast_1d(np.pi * np.asarray(z, dtype=complex) / (2 * omega1))
    _, dlog = _series(omega1, q, v, n_terms, 1)
    return eta1 * np.asarray(z) / omega1 + (np.pi / (2 * omega1)) * dlog


def _wp_raw(omega1, eta1, q, n_terms, z):
    v = np.atleast_1d(np.pi * np.asarray(z, dtype=complex) / (2 * omega1))
    _, _, d2log = _series(omega1, q, v, n_terms, 2)
    return -eta1 / omega1 - (np.pi / (2 * omega1)) ** 2 * d2log


def make_context(omega1, omega2, *, tol=1e-11, pole_tol=1e-12, paranoid=False):
    """Build a validated lattice context.

    Parameters
    ----------
    omega1, omega2 : complex
        Half-periods; the lattice of periods is ``2*omega1*Z + 2*omega2*Z``.
    tol : float
        Tolerance for the identity checks performed here.
    pole_tol : float
        Relative distance (in units of ``|omega1|``) below which an argument
        counts as sitting on a pole.
    paranoid : bool
        Evaluate every series with twice the number of terms.

    Raises
    ------
    LatticeError
        If the lattice is degenerate or mis-oriented, or an identity fails.
    """
    omega1 = complex(omega1)
    omega2 = complex(omega2)
    if omega1 == 0:
        raise LatticeError("degenerate lattice: omega1 = 0")
    tau = omega2 / omega1
    if abs(tau.imag) <= 1e-12 * max(1.0, abs(tau)):
        raise LatticeError(f"degenerate lattice: omega2/omega1 = {tau} is real")
    if tau.imag < 0:
        raise LatticeError(
            f"lattice orientation: Im(omega2/omega1) = {tau.imag:.3g} < 0 "
            "(swap the half-periods explicitly)"
        )
    q = complex(np.exp(1j * np.pi * tau))
    if abs(q) >= 1 - 1e-6:
        raise LatticeError(f"degenerate lattice: |nome| = {abs(q):.6g} too close to 1")

    n_terms = _terms_for(abs(q)) * (2 if paranoid else 1)
    eta1 = _eta1(omega1, q, n_terms)
    omega3 = -omega1 - omega2
    eta2 = complex(_zeta_raw(omega1, eta1, q, n_terms, omega2)[0])
    eta3 = complex(_zeta_raw(omega1, eta1, q, n_terms, omega3)[0])
    e = tuple(complex(_wp_raw(omega1, eta1, q, n_terms, w)[0]) for w in (omega1, omega2, omega3))
    g2 = 2.0 * (e[0] ** 2 + e[1] ** 2 + e[2] ** 2)
    g3 = 4.0 * e[0] * e[1] * e[2]

    eta = (0j, eta1, eta2, eta3)
    scale = max(1.0, abs(eta1 * omega1), abs(eta2 * omega2))
    legendre = abs(eta1 * omega2 - eta2 * omega1 - 0.5j * np.pi) / scale
    eta_sum = abs(eta1 + eta2 + eta3) / max(1.0, abs(eta1), abs(eta2))
    checks = {"legendre": legendre, "eta_sum": eta_sum}
    if legendre > tol:
        raise LatticeError(f"legendre relation violated: residual {legendre:.3g}")
    if eta_sum > tol:
        raise LatticeError(f"eta-sum identity violated: residual {eta_sum:.3g}")

    proto = LatticeContext(
        omega1=omega1, omega2=omega2, omega3=omega3, eta=eta, nome=q, tau=tau,
        n_terms=n_terms, g2=g2, g3=g3, e=e, log_sigma_omega=(0j, 0j, 0j, 0j),
        tol=tol, pole_tol=pole_tol, paranoid=paranoid, checks=checks,
    )
    lso = (0j,) + tuple(log_sigma(proto, w) for w in (omega1, omega2, omega3))
    return LatticeContext(
        omega1=omega1, omega2=omega2, omega3=omega3, eta=eta, nome=q, tau=tau,
        n_terms=n_terms, g2=g2, g3=g3, e=e, log_sigma_omega=lso,
        tol=tol, pole_tol=pole_tol, paranoid=paranoid, checks=checks,
    )


# -- lattice bookkeeping ---------------------------------------------------------

def lattice_reduce(ctx: LatticeContext, z):
    """Split ``z = z0 + 2*(M*omega1 + N*omega2)`` with z0 in the centred cell.

    Returns ``(z0, M, N)`` with integer-valued float arrays M, N.
    """
    z = np.asarray(z, dtype=complex)
    u = z / (2 * ctx.omega1)
    n = np.round(u.imag / ctx.tau.imag)
    m = np.round((u - n * ctx.tau).real)
    z0 = z - 2 * m * ctx.omega1 - 2 * n * ctx.omega2
    return z0, m, n


def nearest_lattice_point(ctx, z):
    """Nearest point of the period lattice 2*Gamma (by cell reduction)."""
    arr, scalar = _as_array(z)
    z0, m, n = lattice_reduce(ctx, arr)
    return _out(arr - z0, scalar)


def lattice_distance(ctx, z):
    """Distance from ``z`` to the period lattice 2*Gamma."""
    arr, scalar = _as_array(z)
    z0, _, _ = lattice_reduce(ctx, arr)
    # the centred cell can be skewed; check the neighbouring lattice points too
    best = np.abs(z0)
    for a in (-1, 0, 1):
        for b in (-1, 0, 1):
            if a == 0 and b == 0:
                continue
            best = np.minimum(best, np.abs(z0 - 2 * a * ctx.omega1 - 2 * b * ctx.omega2))
    return float(best) if scalar else best


def _check_poles(ctx, z0, znear, what):
    bad = np.abs(z0) < ctx.pole_tol * ctx.scale
    if np.any(bad):
        idx = np.flatnonzero(bad.ravel())[0]
        point = complex(np.ravel(znear)[idx])
        pole = complex(np.ravel(znear - z0)[idx])
        raise PoleError(f"{what}: argument {point} is at the pole {pole}", point=point, pole=pole)


# -- sigma -----------------------------------------------------------------------

def log_sigma(ctx: LatticeContext, z):
    """Complex logarithm of sigma(z) (branch unspecified; -inf at lattice points)."""
    arr, scalar = _as_array(z)
    flat = arr.ravel()
    z0, m, n = lattice_reduce(ctx, flat)
    v = np.pi * z0 / (2 * ctx.omega1)
    (log_prod,) = _series(ctx.omega1, ctx.nome, v, ctx.n_terms, 0)
    with np.errstate(divide="ignore", invalid="ignore"):
        log_sin = np.log(np.sin(v))
    w = m * ctx.omega1 + n * ctx.omega2
    eta_w = m * ctx.eta[1] + n * ctx.eta[2]
    out = (
        np.log(2 * ctx.omega1 / np.pi)
        + ctx.eta[1] * z0 ** 2 / (2 * ctx.omega1)
        + log_sin
        + log_prod
        + 2 * eta_w * (z0 + w)
        + 1j * np.pi * ((m + n + m * n) % 2)
    )
    out = np.where(z0 == 0, complex(-np.inf), out)
    return _out(out.reshape(arr.shape), scalar)


def _exp_checked(logv, what):
    re = np.real(logv)
    finite = np.isfinite(re)
    if np.any(finite & (re > _LOG_MAX)):
        worst = float(np.max(re[finite]))
        raise EllipticRangeError(f"{what}: exponent {worst:.6g} overflows double precision", exponent=worst)
    with np.errstate(invalid="ignore"):
        return np.where(np.isneginf(re), 0j, np.exp(np.where(finite, logv, 0j)))


def sigma(ctx: LatticeContext, z):
    """Weierstrass sigma function.

    Odd, entire, with simple zeros on 2*Gamma and
    sigma(z + 2 omega_s) = -sigma(z) exp(2 eta_s (z + omega_s)).

    Raises
    ------
    EllipticRangeError
        When the quasi-periodicity prefactor overflows.
    """
    arr, scalar = _as_array(z)
    val = _exp_checked(np.asarray(log_sigma(ctx, arr)), "sigma")
    return _out(val, scalar)


def sigma_shifted(ctx: LatticeContext, r: int, z):
    """sigma_r(z) = exp(-eta_r z) sigma(z + omega_r) / sigma(omega_r); sigma_0 = sigma."""
    if r not in (0, 1, 2, 3):
        raise ValueError(f"shift index must be 0..3, got {r}")
    if r == 0:
        return sigma(ctx, z)
    arr, scalar = _as_array(z)
    logv = np.asarray(log_sigma(ctx, arr + ctx.omega[r])) - ctx.log_sigma_omega[r] - ctx.eta[r] * arr
    return _out(_exp_checked(logv, f"sigma_{r}"), scalar)


def log_sigma_shifted(ctx, r, z):
    arr, scalar = _as_array(z)
    if r == 0:
        return log_sigma(ctx, z)
    logv = np.asarray(log_sigma(ctx, arr + ctx.omega[r])) - ctx.log_sigma_omega[r] - ctx.eta[r] * arr
    return _out(logv, scalar)


# -- zeta and wp -----------------------------------------------------------------

def _reduced_series(ctx, arr, order):
    flat = arr.ravel()
    z0, m, n = lattice_reduce(ctx, flat)
    v = np.pi * z0 / (2 * ctx.omega1)
    return z0, m, n, _series(ctx.omega1, ctx.nome, v, ctx.n_terms, order)


def zeta_w(ctx: LatticeContext, z):
    """Weierstrass zeta = sigma'/sigma; zeta(z + 2 omega_s) = zeta(z) + 2 eta_s.

    Raises
    ------
    PoleError
        If ``z`` lies on 2*Gamma (within ``ctx.pole_tol``).
    """
    arr, scalar = _as_array(z)
    z0, m, n, (_, dlog) = _reduced_series(ctx, arr, 1)
    _check_poles(ctx, z0, arr.ravel(), "zeta")
    out = (
        ctx.eta[1] * z0 / ctx.omega1
        + (np.pi / (2 * ctx.omega1)) * dlog
        + 2 * (m * ctx.eta[1] + n * ctx.eta[2])
    )
    return _out(out.reshape(arr.shape), scalar)


def wp(ctx: LatticeContext, z):
    """Weierstrass wp = -zeta'."""
    arr, scalar = _as_array(z)
    z0, _, _, (_, _, d2log) = _reduced_series(ctx, arr, 2)
    _check_poles(ctx, z0, arr.ravel(), "wp")
    out = -ctx.eta[1] / ctx.omega1 - (np.pi / (2 * ctx.omega1)) ** 2 * d2log
    return _out(out.reshape(arr.shape), scalar)


def wp_prime(ctx: LatticeContext, z):
    arr, scalar = _as_array(z)
    z0, _, _, (_, _, _, d3log) = _reduced_series(ctx, arr, 3)
    _check_poles(ctx, z0, arr.ravel(), "wp'")
    out = -((np.pi / (2 * ctx.omega1)) ** 3) * d3log
    return _out(out.reshape(arr.shape), scalar)


def wp_derivs(ctx: LatticeContext, z, order: int):
    """Return [wp, wp', ..., wp^(order)] at ``z``.

    Orders above one come from differentiating wp'' = 6 wp^2 - g2/2.
    """
    arr, scalar = _as_array(z)
    z0, _, _, series = _reduced_series(ctx, arr, 3 if order >= 1 else 2)
    _check_poles(ctx, z0, arr.ravel(), "wp")
    d2log = series[2]
    c = np.pi / (2 * ctx.omega1)
    p = [-ctx.eta[1] / ctx.omega1 - c ** 2 * d2log]
    if order >= 1:
        p.append(-(c ** 3) * series[3])
    if order >= 2:
        p.append(6 * p[0] ** 2 - ctx.g2 / 2)
    for k in range(1, order - 1):
        # d^k/dz^k of wp'' = 6 wp^2 - g2/2
        p.append(6 * sum(math.comb(k, i) * p[i] * p[k - i] for i in range(k + 1)))
    p = [x.reshape(arr.shape) for x in p[: order + 1]]
    return [_out(x, scalar) for x in p]


def zeta_shifted(ctx: LatticeContext, p: int, z):
    """zeta_p(z) = sigma_p'/sigma_p = -eta_p + zeta(z + omega_p); zeta_0 = zeta."""
    if p not in (0, 1, 2, 3):
        raise ValueError(f"shift index must be 0..3, got {p}")
    if p == 0:
        return zeta_w(ctx, z)
    arr, scalar = _as_array(z)
    out = -ctx.eta[p] + np.asarray(zeta_w(ctx, arr + ctx.omega[p]))
    return _out(out, scalar)


def paranoid_report(ctx: LatticeContext, z):
    """Relative change of sigma, zeta, wp at ``z`` when the series length doubles."""
    fine = make_context(ctx.omega1, ctx.omega2, tol=ctx.tol, pole_tol=ctx.pole_tol, paranoid=True)
    out = {}
    for name, fn in (("sigma", sigma), ("zeta", zeta_w), ("wp", wp)):
        a = np.asarray(fn(ctx, z))
        b = np.asarray(fn(fine, z))
        out[name] = float(np.max(np.abs(a - b) / np.maximum(np.abs(b), 1e-300)))
    return out
