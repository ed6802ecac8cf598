"""Identity and structure checks shared by the self-test and the test-suite."""
from __future__ import annotations

import math
from dataclasses import dataclass, replace

import numpy as np

from . import elliptic as ell
from .bc1_operator import (
    Couplings,
    apply_L,
    check_covariance,
    coeff_c,
    make_params,
    structure_scan,
)
from .bethe import BetheState, SolverOptions, q_space_check, solve_random
from .errors import BC1Error, PoleError
from .heun import HeunParams, certify_heun, lame_m1, solve_continuous_random

# sigma_r(z + 2 omega_s) = sign * exp(2 eta_s (z + omega_s)) sigma_r(z), sign = -1 iff r in {0, s}
QUASI_SIGN = {(r, s): (-1 if r in (0, s) else 1) for r in range(4) for s in (1, 2, 3)}

DEFAULT_TOLS = {
    "identity": 1e-11,
    "structure": 1e-9,
    "symmetry": 1e-9,
    "bethe": 1e-10,
    "certificate": 1e-8,
    "q_space": 1e-9,
    "lame": 1e-10,
    "heun": 1e-7,
}


@dataclass
class Check:
    name: str
    residual: float
    tol: float

    @property
    def passed(self) -> bool:
        return bool(np.isfinite(self.residual) and self.residual < self.tol)

    def to_dict(self):
        r = float(self.residual)
        return {"name": self.name, "residual": r if math.isfinite(r) else None, "tol": self.tol,
                "passed": self.passed}


# -- sampling --------------------------------------------------------------------------

def random_lattice(rng, tol=1e-11):
    """Random half-periods with Im(tau) in [0.6, 2] and |omega1| in [0.5, 2]."""
    r = rng.uniform(0.5, 2.0)
    theta = rng.uniform(-np.pi, np.pi)
    tau = complex(rng.uniform(-0.5, 0.5), rng.uniform(0.6, 2.0))
    omega1 = r * np.exp(1j * theta)
    return ell.make_context(omega1, tau * omega1, tol=tol)


def cell_points(ctx, n, rng, margin=0.05):
    """n points of the fundamental cell, away from the half-period lattice by ``margin`` (relative)."""
    out = []
    while sum(len(x) for x in out) < n:
        x = rng.uniform(-0.5, 0.5, size=(2 * n, 2))
        z = 2 * ctx.omega1 * x[:, 0] + 2 * ctx.omega2 * x[:, 1]
        ok = np.asarray(ell.lattice_distance(ctx, 2 * z)) > 2 * margin * ctx.scale
        out.append(z[ok])
    return np.concatenate(out)[:n]


def _wrap(x):
    x = np.asarray(x, dtype=complex)
    return x.real + 1j * (np.mod(x.imag + np.pi, 2 * np.pi) - np.pi)


def _ratio_residual(logdiff):
    """max |exp(d) - 1| for log-differences d that should vanish mod 2 pi i."""
    return float(np.max(np.abs(np.expm1(_wrap(logdiff)))))


# -- elliptic identities ---------------------------------------------------------------

def legendre_residual(ctx) -> float:
    e1, e2 = ctx.eta[1], ctx.eta[2]
    scale = max(1.0, abs(e1 * ctx.omega1), abs(e2 * ctx.omega2))
    return abs(e1 * ctx.omega2 - e2 * ctx.omega1 - 0.5j * np.pi) / scale


def eta_sum_residual(ctx) -> float:
    return abs(sum(ctx.eta[1:])) / max(1.0, abs(ctx.eta[1]), abs(ctx.eta[2]))


def elliptic_identities(ctx, z):
    """Relative residuals of the basic identities at the points ``z``."""
    z = np.asarray(z, dtype=complex)
    out = {"legendre": legendre_residual(ctx), "eta_sum": eta_sum_residual(ctx)}
    ls = np.asarray(ell.log_sigma(ctx, z))
    worst = 0.0
    for s in (1, 2, 3):
        w, e = ctx.omega[s], ctx.eta[s]
        d = np.asarray(ell.log_sigma(ctx, z + 2 * w)) - ls - 2 * e * (z + w) - 1j * np.pi
        worst = max(worst, _ratio_residual(d))
    out["sigma_quasi_periodicity"] = worst
    worst = 0.0
    for r in (1, 2, 3):
        lr = np.asarray(ell.log_sigma_shifted(ctx, r, z))
        for s in (1, 2, 3):
            w, e = ctx.omega[s], ctx.eta[s]
            sign_log = 1j * np.pi if QUASI_SIGN[(r, s)] < 0 else 0
            d = np.asarray(ell.log_sigma_shifted(ctx, r, z + 2 * w)) - lr - 2 * e * (z + w) - sign_log
            worst = max(worst, _ratio_residual(d))
    out["sigma_r_quasi_periodicity"] = worst
    zt = np.asarray(ell.zeta_w(ctx, z))
    worst = 0.0
    for s in (1, 2, 3):
        d = np.asarray(ell.zeta_w(ctx, z + 2 * ctx.omega[s])) - zt - 2 * ctx.eta[s]
        worst = max(worst, float(np.max(np.abs(d) / np.maximum(1.0, np.abs(zt)))))
    out["zeta_quasi_periodicity"] = worst
    # sigma(2z) = 2 sigma(z) sigma_1(z) sigma_2(z) sigma_3(z)
    d = np.asarray(ell.log_sigma(ctx, 2 * z)) - np.log(2) - ls - sum(
        np.asarray(ell.log_sigma_shifted(ctx, r, z)) for r in (1, 2, 3)
    )
    out["sigma_duplication"] = _ratio_residual(d)
    p, dp = (np.asarray(x) for x in ell.wp_derivs(ctx, z, 1))
    terms = [dp * dp, 4 * p ** 3, ctx.g2 * p, ctx.g3 * np.ones_like(p)]
    scale = np.maximum.reduce([np.abs(t) for t in terms])
    out["wp_differential_equation"] = float(np.max(np.abs(terms[0] - terms[1] + terms[2] + terms[3]) / scale))
    return out


# -- operator symmetries ---------------------------------------------------------------

def _operator_points(params, n, rng, margin=0.08):
    """Points z with z and z + half-periods away from every possible pole of a, b, c."""
    ctx = params.ctx
    g = params.gamma
    bad = [ctx.omega[p] + d for p in range(4) for d in (0, g, -g)]
    out = []
    while sum(len(x) for x in out) < n:
        x = rng.uniform(-0.5, 0.5, size=(4 * n, 2))
        z = 2 * ctx.omega1 * x[:, 0] + 2 * ctx.omega2 * x[:, 1]
        ok = np.ones(len(z), dtype=bool)
        for w in ctx.omega:
            for b in bad:
                ok &= np.asarray(ell.lattice_distance(ctx, z + w - b)) > margin * min(ctx.scale, 4 * abs(g))
                ok &= np.asarray(ell.lattice_distance(ctx, -z + w - b)) > margin * min(ctx.scale, 4 * abs(g))
        out.append(z[ok])
    return np.concatenate(out)[:n]


def _even_test_function(z):
    return np.cosh(0.7 * z) + 0.3 * z * z


def _test_function(z):
    return np.exp(0.4 * z) * (1 + 0.2 * z)


def symmetry_checks(params, z):
    """c evenness, L evenness on an even function, and the three half-period conjugations."""
    z = np.asarray(z, dtype=complex)
    c_p, c_m = np.asarray(coeff_c(params, z)), np.asarray(coeff_c(params, -z))
    out = {"c_even": float(np.max(np.abs(c_p - c_m) / np.maximum(1.0, np.abs(c_p))))}
    lp = np.asarray(apply_L(params, _even_test_function, z))
    lm = np.asarray(apply_L(params, _even_test_function, -z))
    out["L_even"] = float(np.max(np.abs(lp - lm) / np.maximum(1.0, np.abs(lp))))
    for name, w in (("omega1", (1, 0)), ("omega2", (0, 1)), ("omega3", (-1, -1))):
        out[f"conjugation_{name}"] = check_covariance(params, w, _test_function, z)
    return out


def structure_maxima(ctx, gamma, max_entry=3):
    """Largest residual of each structure item over all coupling sets."""
    scan = structure_scan(ctx, gamma, max_entry=max_entry)
    return {k: float(np.nanmax(v)) for k, v in scan.items() if k not in ("m", "m_prime")}


# -- self-test ---------------------------------------------------------------------------

DEFAULT_OMEGA = (1.0 + 0j, 0.3 + 1.1j)
DEFAULT_GAMMA = 0.137 + 0.061j


def run_selftest(tol=None, break_legendre=False, seed=0):
    """Run the invariant suite on a fixed lattice; returns a list of :class:`Check`.

    ``tol`` overrides every tolerance.  ``break_legendre`` perturbs eta_2 after
    the context is built, as a negative control.
    """
    def T(kind):
        return DEFAULT_TOLS[kind] if tol is None else tol

    rng = np.random.default_rng(seed)
    ctx = ell.make_context(*DEFAULT_OMEGA)
    if break_legendre:
        e = ctx.eta
        ctx = replace(ctx, eta=(e[0], e[1], e[2] * (1 + 1e-6), e[3]))
    checks = []
    for name, r in elliptic_identities(ctx, cell_points(ctx, 200, rng)).items():
        checks.append(Check(name, r, T("identity")))
    for name, r in structure_maxima(ctx, DEFAULT_GAMMA, max_entry=2).items():
        checks.append(Check(f"structure:{name}", r, T("structure")))
    mixed = make_params(ctx, Couplings((1, 0, 1, 0), (1, 1, 0, 0), DEFAULT_GAMMA))
    for name, r in symmetry_checks(mixed, _operator_points(mixed, 40, rng)).items():
        checks.append(Check(name, r, T("symmetry")))

    opts = SolverOptions(tol=min(1e-10, T("bethe")), cert_tol=T("certificate"))
    for label, cp in (("A1", Couplings((1, 0, 0, 0), (0, 0, 0, 0), DEFAULT_GAMMA)),
                      ("mixed", Couplings((1, 0, 0, 0), (0, 0, 1, 0), DEFAULT_GAMMA))):
        params = make_params(ctx, cp)
        try:
            sol = solve_random(params, 0.3 - 0.4j, rng, opts)
            checks.append(Check(f"bethe_residual_{label}", sol.residual_norm, T("bethe")))
            checks.append(Check(f"eigen_certificate_{label}", sol.eigen_certificate, T("certificate")))
            rep = q_space_check(params, sol)
            checks.append(Check(f"q_space_{label}", rep.max_condition_residual(), T("q_space")))
        except BC1Error as exc:
            checks.append(Check(f"bethe_residual_{label}", math.inf, T("bethe")))
            checks[-1].name += f" ({type(exc).__name__})"

    hp = HeunParams(ctx, (1, 0, 0, 0))
    t = 0.31 + 0.17j
    k, eps = lame_m1(ctx, t)
    try:
        cert = certify_heun(hp, BetheState((t,), k), eps)
    except (PoleError, BC1Error):
        cert = math.inf
    checks.append(Check("lame_m1_closed_form", cert, T("lame")))
    try:
        sol = solve_continuous_random(HeunParams(ctx, (1, 1, 0, 0)), 0.3 - 0.4j, rng,
                                      SolverOptions(cert_tol=T("heun")))
        checks.append(Check("heun_certificate_g1100", sol.certificate, T("heun")))
    except BC1Error:
        checks.append(Check("heun_certificate_g1100", math.inf, T("heun")))
    return checks


SELFTEST_SCHEMA = {
    "$schema": "https://json-schema.org/draft/2020-12/schema",
    "type": "object",
    "required": ["passed", "first_failure", "checks"],
    "additionalProperties": False,
    "properties": {
        "passed": {"type": "boolean"},
        "first_failure": {"type": ["string", "null"]},
        "checks": {
            "type": "array",
            "items": {
                "type": "object",
                "required": ["name", "residual", "tol", "passed"],
                "additionalProperties": False,
                "properties": {
                    "name": {"type": "string"},
                    "residual": {"type": ["number", "null"]},
                    "tol": {"type": "number"},
                    "passed": {"type": "boolean"},
                },
            },
        },
    },
}
