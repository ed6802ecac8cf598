"""Continuation of Bethe solutions in q = exp(2 gamma k).

Samples along a path in the q-plane are produced by a tangent predictor and a
Newton corrector at fixed k.  The module also provides the involution
nu: (t, k) -> (-t, -k), the reduction of a sample to a canonical
representative under the symmetries of the Bethe system, and CSV/JSON export.
"""
from __future__ import annotations

import cmath
import csv
import io
import itertools
import json
import logging
import math
from dataclasses import dataclass, field, replace

import numpy as np

from . import elliptic as ell
from .bc1_operator import OperatorParams
from .bethe import (
    BetheSolution,
    BetheState,
    SolverOptions,
    bethe_equations,
    bethe_jacobian,
    bethe_residual,
    finish_solution,
    normalize_k,
    q_form_residual,
    solve_newton,
    validity_violations,
)
from .errors import (
    ConvergenceError,
    FormatError,
    InsufficientGridError,
    InvolutionMismatchError,
    PoleError,
    RejectedSolutionError,
    SingularConfigurationError,
)

log = logging.getLogger(__name__)

_RECOVERABLE = (ConvergenceError, SingularConfigurationError, PoleError)


@dataclass
class CurveSample:
    q: complex
    state: BetheState
    eigenvalue: complex
    arc_index: int = 0
    branch_id: int = 0
    residual: float = 0.0
    certificate: float = 0.0
    sign_flag: int = 1  # eigenvalue sign relative to the sample this was reduced from

    @property
    def m(self) -> int:
        return self.state.m

    def to_dict(self):
        d = {"q": [self.q.real, self.q.imag]}
        d.update(self.state.to_dict())
        d.update(
            eigenvalue=[self.eigenvalue.real, self.eigenvalue.imag],
            residual=self.residual,
            certificate=self.certificate,
            arc_index=self.arc_index,
            branch_id=self.branch_id,
        )
        return d

    @classmethod
    def from_dict(cls, data):
        return cls(
            q=complex(*data["q"]),
            state=BetheState.from_dict(data),
            eigenvalue=complex(*data["eigenvalue"]),
            arc_index=int(data.get("arc_index", 0)),
            branch_id=int(data.get("branch_id", 0)),
            residual=float(data["residual"]),
            certificate=float(data["certificate"]),
        )


class CurveTrace(list):
    """List of samples plus continuation diagnostics."""

    def __init__(self, *args):
        super().__init__(*args)
        self.stalled = False
        self.diagnostics = {"flagged": [], "stall": None, "substeps": 0, "halvings": 0}


@dataclass
class TraceOptions:
    solver: SolverOptions = field(
        default_factory=lambda: SolverOptions(tol=1e-10, normalize_k=False, certify=False, max_iter=30)
    )
    cert_tol: float = 1e-7
    q_tol: float = 1e-9
    min_step: float = 2.0 ** -12
    jump_ratio: float = 0.5
    branch_id: int = 0


# -- helpers --------------------------------------------------------------------------

def k_from_q(gamma, q, near=None):
    """k with exp(2 gamma k) = q, on the branch of log closest to ``near``."""
    base = cmath.log(q) / (2 * gamma)
    if near is None:
        return base
    period = math.pi * 1j / gamma
    n = round(((near - base) / period).real)
    return base + n * period


def sample_from_solution(params, sol: BetheSolution, arc_index=0, branch_id=0) -> CurveSample:
    return CurveSample(
        q=sol.q, state=sol.state, eigenvalue=sol.eigenvalue, arc_index=arc_index, branch_id=branch_id,
        residual=q_form_residual(params, sol.state, sol.q), certificate=sol.eigen_certificate,
    )


def tangent(params: OperatorParams, state: BetheState):
    """dt/dk along the solution curve at fixed equations."""
    jt, jk = bethe_jacobian(params, state)
    return np.linalg.solve(jt, -jk)


def degenerate_points(params: OperatorParams, sign: int = 1):
    """P^+ (sign=+1) or P^- (sign=-1): omega_s + sign * h for every equation, in equation order."""
    ctx = params.ctx
    g = params.gamma
    return [ctx.omega[eq.s] + sign * eq.shift(g) for eq in bethe_equations(params.couplings)]


def set_distance(ctx, t, points):
    """min over matchings of max_i dist(t_i - P_pi(i), 2 Gamma)."""
    t = list(t)
    if not t:
        return 0.0
    d = np.array([[float(ell.lattice_distance(ctx, a - b)) for b in points] for a in t])
    return float(min(max(d[i, p[i]] for i in range(len(t))) for p in itertools.permutations(range(len(t)))))


def p_plus_distance(params, state):
    return set_distance(params.ctx, state.t, degenerate_points(params, 1))


# -- continuation --------------------------------------------------------------------

def _corrector(params, cur: BetheState, k1, opts: TraceOptions):
    """Predict along the tangent, correct at fixed k1, reject branch jumps."""
    dk = k1 - cur.k
    pred = np.asarray(cur.t) + tangent(params, cur) * dk
    sol = solve_newton(params, BetheState(tuple(pred), k1), opts.solver)
    t_new = np.asarray(sol.state.t)
    corr = float(np.max(np.abs(t_new - pred))) if len(pred) else 0.0
    move = float(np.max(np.abs(pred - np.asarray(cur.t)))) if len(pred) else 0.0
    if corr > opts.jump_ratio * move + 1e-8 * params.ctx.scale:
        raise ConvergenceError(f"corrector jumped {corr:.3e} against predicted move {move:.3e}")
    return sol.state


def trace(params: OperatorParams, seed: BetheSolution, q_path, opts: TraceOptions | None = None) -> CurveTrace:
    """Follow ``seed`` along ``q_path`` (first entry must equal seed.q).

    Each segment is walked in k with step halving on corrector failure; the
    trace stops with ``stalled = True`` when the step drops below ``opts.min_step``.
    Samples that fail certification or hit t_i + t_j in the period lattice are
    listed in ``diagnostics["flagged"]`` and omitted.
    """
    opts = opts or TraceOptions()
    q_path = [complex(q) for q in q_path]
    if not q_path:
        raise ValueError("empty q path")
    if abs(q_path[0] - seed.q) > 1e-9 * max(1.0, abs(seed.q)):
        raise ValueError(f"q path starts at {q_path[0]}, seed has q = {seed.q}")
    out = CurveTrace([sample_from_solution(params, seed, 0, opts.branch_id)])
    g = params.gamma
    cur = seed.state
    for idx, q in enumerate(q_path[1:], start=1):
        k_target = k_from_q(g, q, near=cur.k)
        k_start = cur.k
        s, h = 0.0, 1.0
        while s < 1.0:
            h = min(h, 1.0 - s)
            k1 = k_start + (s + h) * (k_target - k_start)
            try:
                new = _corrector(params, cur, k1, opts)
            except RejectedSolutionError as exc:
                # keep going through the excluded set; the emitted sample is flagged below
                new = exc.state
            except (_RECOVERABLE + (np.linalg.LinAlgError,)) as exc:
                h /= 2
                out.diagnostics["halvings"] += 1
                if h < opts.min_step:
                    out.stalled = True
                    out.diagnostics["stall"] = {"q_index": idx, "q": [q.real, q.imag], "step": h,
                                                "last_k": [cur.k.real, cur.k.imag], "error": str(exc)}
                    return out
                continue
            cur = new
            s += h
            out.diagnostics["substeps"] += 1
            h = min(2 * h, 1.0)
        try:
            sol = finish_solution(params, cur, 0.0, replace(opts.solver, certify=True, cert_tol=opts.cert_tol))
        except (InsufficientGridError, PoleError) as exc:
            out.diagnostics["flagged"].append({"q_index": idx, "reason": "certification", "detail": str(exc)})
            continue
        sample = sample_from_solution(params, sol, idx, opts.branch_id)
        if validity_pairs := validity_violations(params.ctx, cur):
            out.diagnostics["flagged"].append({"q_index": idx, "reason": "collision", "pairs": validity_pairs})
            continue
        if not sol.certified or sample.residual > opts.q_tol:
            out.diagnostics["flagged"].append(
                {"q_index": idx, "reason": "certification", "certificate": sol.eigen_certificate,
                 "residual": sample.residual}
            )
            continue
        out.append(sample)
    return out


def ray_path(q0, r_min, r_max, count):
    """``count`` points q0 * r on a log-spaced ray, starting at q0 * r_min."""
    return [complex(q0) * r for r in np.geomspace(r_min, r_max, count)]


def continuity_ratios(samples):
    """|d eps_n| / (|d eps_{n-1}| * |d k_n| / |d k_{n-1}|) along consecutive samples."""
    out = []
    for a, b, c in zip(samples, samples[1:], samples[2:]):
        de0 = abs(b.eigenvalue - a.eigenvalue)
        de1 = abs(c.eigenvalue - b.eigenvalue)
        dk0 = abs(b.state.k - a.state.k)
        dk1 = abs(c.state.k - b.state.k)
        if de0 == 0 or dk0 == 0:
            continue
        out.append(de1 / (de0 * dk1 / dk0))
    return out


def seed_near_degenerate(params: OperatorParams, q, opts: SolverOptions | None = None, rng=None,
                         sign: int = 1, attempts: int = 12) -> BetheSolution:
    """Solve at small |q| (sign=+1) or large |q| (sign=-1) starting next to P^+ or P^-.

    Initial points are P_i + c |q|^(sign * shift) e^{i theta}, with c grown or
    shrunk until the corrector converges.
    """
    opts = opts or SolverOptions(normalize_k=False)
    rng = np.random.default_rng(0) if rng is None else rng
    eqs = bethe_equations(params.couplings)
    base = np.array(degenerate_points(params, sign))
    k = k_from_q(params.gamma, q)
    last = None
    for a in range(attempts):
        c = 2.0 ** ((-1) ** a * (a // 2))
        theta = rng.uniform(0, 2 * np.pi, size=len(base))
        sizes = np.array([abs(q) ** (sign * eq.shift_mult) for eq in eqs])
        t0 = base + c * params.ctx.scale * sizes * np.exp(1j * theta)
        try:
            return solve_newton(params, BetheState(tuple(t0), k), opts)
        except (_RECOVERABLE + (RejectedSolutionError,)) as exc:
            last = exc
    raise ConvergenceError(f"no solution near the degenerate point after {attempts} attempts: {last}")


# -- involution and equivalences -----------------------------------------------------

def involute(params: OperatorParams, sample: CurveSample, tol: float = 1e-8, cert_tol: float = 1e-7) -> CurveSample:
    """nu: (t, k) -> (-t, -k), q -> 1/q; re-certified, eigenvalue must be unchanged.

    Raises
    ------
    InvolutionMismatchError
        If the image fails the Bethe equations, the certificate or eigenvalue match.
    """
    state = BetheState(tuple(-t for t in sample.state.t), -sample.state.k)
    try:
        res = float(np.max(np.abs(bethe_residual(params, state)))) if state.m else 0.0
        sol = finish_solution(params, state, res, SolverOptions(cert_tol=cert_tol))
    except (PoleError, SingularConfigurationError, InsufficientGridError) as exc:
        raise InvolutionMismatchError(f"involuted sample cannot be evaluated: {exc}") from exc
    diff = abs(sol.eigenvalue - sample.eigenvalue) / max(1.0, abs(sample.eigenvalue))
    if res > 1e-9 or not sol.certified or diff > tol:
        raise InvolutionMismatchError(
            f"involuted sample: residual {res:.2e}, certificate {sol.eigen_certificate:.2e}, "
            f"eigenvalue change {diff:.2e}"
        )
    return CurveSample(
        q=1 / sample.q, state=state, eigenvalue=sol.eigenvalue, arc_index=sample.arc_index,
        branch_id=sample.branch_id, residual=q_form_residual(params, state, 1 / sample.q),
        certificate=sol.eigen_certificate,
    )


def equivalence_reduce(params: OperatorParams, sample: CurveSample) -> CurveSample:
    """Canonical representative under lattice shifts of t, permutations and k-shifts.

    t_i is reduced into the fundamental cell (shifting by -2w adds 2 eta(w) to k),
    the t list is sorted by (real, imag) and k is reduced to its canonical strip.
    ``sign_flag`` records the eigenvalue sign change of a half-strip shift,
    which is only allowed when every m'_s is zero.
    """
    ctx = params.ctx
    t = np.asarray(sample.state.t, dtype=complex)
    k = sample.state.k
    if len(t):
        t0, m1, m2 = ell.lattice_reduce(ctx, t)
        k = k + 2 * complex(np.sum(m1 * ctx.eta[1] + m2 * ctx.eta[2]))
        t = sorted((complex(x) for x in t0), key=lambda z: (round(z.real, 9), round(z.imag, 9)))
    k, flips = normalize_k(params, k)
    sign = -1 if flips % 2 else 1
    state = BetheState(tuple(t), k)
    return CurveSample(
        q=complex(np.exp(2 * params.gamma * k)), state=state, eigenvalue=sign * sample.eigenvalue,
        arc_index=sample.arc_index, branch_id=sample.branch_id, residual=sample.residual,
        certificate=sample.certificate, sign_flag=sign * sample.sign_flag,
    )


def canonical_distance(params, a: CurveSample, b: CurveSample) -> float:
    """Max coordinate difference of the canonical forms (t and k)."""
    ca, cb = equivalence_reduce(params, a), equivalence_reduce(params, b)
    if ca.m != cb.m:
        return math.inf
    d = [abs(x - y) for x, y in zip(ca.state.t, cb.state.t)]
    d.append(abs(ca.state.k - cb.state.k))
    return float(max(d))


def nu_preimage_probe(params: OperatorParams, sample: CurveSample, opts: SolverOptions | None = None,
                      distinct_tol: float = 1e-6):
    """Fresh solve seeded at the nu-image; returns (other sample, eigenvalue gap, canonical distance).

    A positive probe finds a certified solution with the same eigenvalue whose
    canonical form differs from that of ``sample``.
    """
    opts = opts or SolverOptions(normalize_k=False)
    rng = np.random.default_rng(1)
    init_t = np.array([-t for t in sample.state.t])
    init_t = init_t + 1e-3 * params.ctx.scale * (rng.standard_normal(len(init_t)) + 1j * rng.standard_normal(len(init_t)))
    sol = solve_newton(params, BetheState(tuple(init_t), -sample.state.k), opts)
    other = sample_from_solution(params, sol, sample.arc_index, sample.branch_id)
    gap = abs(other.eigenvalue - sample.eigenvalue) / max(1.0, abs(sample.eigenvalue))
    return other, gap, canonical_distance(params, sample, other)


# -- export / import -----------------------------------------------------------------

def csv_header(m: int):
    cols = ["q_re", "q_im"]
    for i in range(1, m + 1):
        cols += [f"t{i}_re", f"t{i}_im"]
    cols += ["k_re", "k_im", "eps_re", "eps_im", "residual", "certificate", "branch_id"]
    return cols


def _check_samples(samples):
    if not samples:
        raise FormatError("cannot export an empty sample list")
    ms = {s.m for s in samples}
    if len(ms) != 1:
        raise FormatError(f"inconsistent number of parameters across samples: {sorted(ms)}")
    return ms.pop()


def export_curve(samples, fmt: str = "json") -> bytes:
    """Serialize samples as JSON (array of records) or CSV; floats use repr, so round-trips are exact."""
    m = _check_samples(samples)
    if fmt == "json":
        return (json.dumps([s.to_dict() for s in samples], indent=1) + "\n").encode()
    if fmt == "csv":
        buf = io.StringIO()
        w = csv.writer(buf, lineterminator="\n")
        w.writerow(csv_header(m))
        for s in samples:
            row = [s.q.real, s.q.imag]
            for t in s.state.t:
                row += [t.real, t.imag]
            row += [s.state.k.real, s.state.k.imag, s.eigenvalue.real, s.eigenvalue.imag,
                    s.residual, s.certificate]
            w.writerow([repr(float(x)) for x in row] + [s.branch_id])
        return buf.getvalue().encode()
    raise FormatError(f"unknown format {fmt!r} (expected 'json' or 'csv')")


def import_curve(data, fmt: str = "json"):
    """Inverse of :func:`export_curve`; CSV rows get arc_index from their position."""
    text = data.decode() if isinstance(data, bytes) else data
    if fmt == "json":
        try:
            recs = json.loads(text)
        except json.JSONDecodeError as exc:
            raise FormatError(f"invalid JSON: {exc}") from exc
        samples = [CurveSample.from_dict(r) for r in recs]
        _check_samples(samples)
        return samples
    if fmt != "csv":
        raise FormatError(f"unknown format {fmt!r} (expected 'json' or 'csv')")
    rows = list(csv.reader(io.StringIO(text)))
    if not rows:
        raise FormatError("empty CSV")
    header = rows[0]
    m = (len(header) - 9) // 2
    if m < 0 or header != csv_header(m):
        raise FormatError(f"unexpected CSV header {header}")
    samples = []
    for idx, row in enumerate(rows[1:]):
        if len(row) != len(header):
            raise FormatError(f"row {idx + 1} has {len(row)} fields, expected {len(header)}")
        x = [float(v) for v in row[:-1]]
        t = [complex(x[2 + 2 * i], x[3 + 2 * i]) for i in range(m)]
        j = 2 + 2 * m
        samples.append(CurveSample(
            q=complex(x[0], x[1]), state=BetheState(tuple(t), complex(x[j], x[j + 1])),
            eigenvalue=complex(x[j + 2], x[j + 3]), residual=x[j + 4], certificate=x[j + 5],
            arc_index=idx, branch_id=int(row[-1]),
        ))
    return samples
