"""Trajectory-pair divergence statistics and the ensemble functional Q_delta.

For a base solution (X, V) and its delta-shifted twin the running statistic

    a_delta(t) = |delta|^2 + sup_{s<=t} |X_s - X_s^d|^2 + int_0^t |V_s - V_s^d|^2 ds

feeds the ensemble functional

    Q_delta(T) = integral over Omega of log(1 + (sup + int) / |delta|^2),

whose growth in log(1/|delta|) is the object of the scaling studies here.
Both flows are integrated with the same Verlet step in lockstep; the sup is
taken over every step and the time integral uses the trapezoid rule, matching
the integrator's order.
"""

from __future__ import annotations

import math
import warnings
from dataclasses import dataclass

import numpy as np

from .flow import FlowParams, PhaseState, inflate_domain, _check_sane
from .spectral import mollify

__all__ = [
    "ShiftSpec",
    "PerturbedPair",
    "DivergenceRecord",
    "EnsembleSpec",
    "ContainmentError",
    "divergence_record",
    "q_delta",
    "q_scaling_study",
    "step_robustness",
    "fit_log_exponent",
    "mollification_cauchy_study",
    "ScalingStudy",
    "ScalingRow",
    "CauchyRow",
    "LogFit",
    "GateResult",
]

DELTA_CEILING = float(np.exp(-1.0))  # studies require |delta| < 1/e


class ContainmentError(RuntimeError):
    """A trajectory left the inflated domain it was certified to stay in."""


@dataclass(frozen=True)
class ShiftSpec:
    """Initial-condition offset of magnitude |delta| along a fixed direction.

    direction is a vector in R^{2d} with |direction| <= 1 (positions first);
    None selects the default (e1-position, e1-velocity)/sqrt(2). The actual
    offsets are magnitude * direction, so |(d1, d2)| <= magnitude always.
    """

    magnitude: float
    direction: np.ndarray | None = None

    def __post_init__(self):
        if not self.magnitude > 0:
            raise ValueError(f"shift magnitude must be positive, got {self.magnitude}")
        if self.direction is not None:
            u = np.asarray(self.direction, dtype=np.float64)
            if np.linalg.norm(u) > 1.0 + 1e-12:
                raise ValueError("shift direction must have norm at most 1")
            object.__setattr__(self, "direction", u)

    def offsets(self, dim):
        """(delta_1, delta_2) position/velocity offsets in R^d each."""
        if self.direction is None:
            u = np.zeros(2 * dim)
            u[0] = u[dim] = 1.0 / np.sqrt(2.0)
        else:
            u = self.direction
            if u.shape != (2 * dim,):
                raise ValueError(f"direction has shape {u.shape}, expected ({2*dim},)")
        full = self.magnitude * u
        return full[:dim], full[dim:]

    def scaled(self, magnitude):
        return ShiftSpec(magnitude, self.direction)


@dataclass(frozen=True)
class PerturbedPair:
    """A base state plus the offsets defining its shifted twin."""

    base: PhaseState
    delta1: np.ndarray
    delta2: np.ndarray
    delta_norm: float

    def __post_init__(self):
        object.__setattr__(self, "delta1", np.atleast_1d(np.asarray(self.delta1, dtype=np.float64)))
        object.__setattr__(self, "delta2", np.atleast_1d(np.asarray(self.delta2, dtype=np.float64)))
        if not self.delta_norm > 0:
            raise ValueError("delta_norm must be positive")
        actual = math.hypot(np.linalg.norm(self.delta1), np.linalg.norm(self.delta2))
        if actual > self.delta_norm * (1.0 + 1e-12):
            raise ValueError(
                f"initial separation {actual} exceeds delta_norm {self.delta_norm}")

    @property
    def shifted(self):
        return PhaseState(self.base.x + self.delta1, self.base.v + self.delta2)


@dataclass(frozen=True)
class DivergenceRecord:
    """Per-step divergence statistics of one trajectory pair."""

    times: np.ndarray
    sup_x_sq: np.ndarray
    int_v_sq: np.ndarray
    delta_norm: float

    @property
    def a_delta(self):
        return self.delta_norm ** 2 + self.sup_x_sq + self.int_v_sq


@dataclass(frozen=True)
class EnsembleSpec:
    """Deterministic sampling plan for the initial-condition box Omega."""

    omega: "PhaseBox"
    sampling: str = "low-discrepancy"
    count: int = 512
    seed: int = 0

    def __post_init__(self):
        if self.sampling not in ("grid", "low-discrepancy", "pseudorandom"):
            raise ValueError(f"unknown sampling scheme {self.sampling!r}")
        if self.count < 1:
            raise ValueError("ensemble count must be at least 1")

    def points(self):
        """(count, 2d) initial conditions inside Omega, deterministic per spec."""
        lo = self.omega.lower
        hi = self.omega.upper
        ndim = lo.shape[0]
        if self.sampling == "grid":
            per_axis = round(self.count ** (1.0 / ndim))
            if per_axis ** ndim != self.count:
                raise ValueError(
                    f"grid sampling needs count = m^{ndim}, got {self.count}")
            axes = [(np.arange(per_axis) + 0.5) / per_axis] * ndim
            unit = np.stack(np.meshgrid(*axes, indexing="ij"), axis=-1).reshape(-1, ndim)
        elif self.sampling == "low-discrepancy":
            from scipy.stats import qmc
            eng = qmc.Sobol(d=ndim, scramble=False)
            m = int(np.log2(self.count))
            if 2 ** m == self.count:
                unit = eng.random_base2(m)
            else:
                with warnings.catch_warnings():
                    warnings.simplefilter("ignore", UserWarning)
                    unit = eng.random(self.count)
        else:
            rng = np.random.Generator(np.random.Philox(np.random.SeedSequence(self.seed)))
            unit = rng.uniform(size=(self.count, ndim))
        return lo + unit * (hi - lo)


# -- lockstep integration engines --------------------------------------------


def _diverge_from_base(force, base_x, base_v, shifts, params, box=None):
    """Integrate the base ensemble and one shifted clone per entry of
    ``shifts`` in lockstep under a single force.

    base_x, base_v: (n, d); shifts: list of (delta1, delta2) pairs.
    Returns (sup_abs_dx, int_dv2), both of shape (len(shifts), n).
    """
    n, d = base_x.shape
    S = len(shifts)
    X = np.empty((S + 1, n, d))
    V = np.empty((S + 1, n, d))
    X[0], V[0] = base_x, base_v
    for s, (d1, d2) in enumerate(shifts):
        X[s + 1] = base_x + d1
        V[s + 1] = base_v + d2
    h = params.h
    sup2 = np.sum((X[1:] - X[0]) ** 2, axis=2)
    int_dv2 = np.zeros((S, n))
    prev = np.sum((V[1:] - V[0]) ** 2, axis=2)
    flat = X.reshape(-1, d)
    F = force(flat).reshape(S + 1, n, d)
    for i in range(1, params.n_steps + 1):
        Vh = V + 0.5 * h * F
        X += h * Vh
        F = force(X.reshape(-1, d)).reshape(S + 1, n, d)
        V = Vh + 0.5 * h * F
        np.maximum(sup2, np.sum((X[1:] - X[0]) ** 2, axis=2), out=sup2)
        cur = np.sum((V[1:] - V[0]) ** 2, axis=2)
        int_dv2 += (0.5 * h) * (prev + cur)
        prev = cur
        if i % 64 == 0 or i == params.n_steps:
            _check_sane(X, V, i * h)
        if box is not None and not _inside(box, X, V):
            raise ContainmentError(f"ensemble left the inflated domain at t={i*h}")
    return np.sqrt(sup2), int_dv2


def _diverge_two_forces(force_a, force_b, x0, v0, params):
    """Flows of two different forces from identical initial conditions.

    Returns per-member (sup_abs_dx, int_dv2), each of shape (n,).
    """
    h = params.h
    Xa, Va = x0.copy(), v0.copy()
    Xb, Vb = x0.copy(), v0.copy()
    Fa, Fb = force_a(Xa), force_b(Xb)
    n = x0.shape[0]
    sup_dx = np.zeros(n)
    int_dv2 = np.zeros(n)
    prev = np.zeros(n)
    for i in range(1, params.n_steps + 1):
        Vah = Va + 0.5 * h * Fa
        Xa += h * Vah
        Fa = force_a(Xa)
        Va = Vah + 0.5 * h * Fa
        Vbh = Vb + 0.5 * h * Fb
        Xb += h * Vbh
        Fb = force_b(Xb)
        Vb = Vbh + 0.5 * h * Fb
        np.maximum(sup_dx, np.linalg.norm(Xa - Xb, axis=1), out=sup_dx)
        cur = np.sum((Va - Vb) ** 2, axis=1)
        int_dv2 += (0.5 * h) * (prev + cur)
        prev = cur
        if i % 64 == 0 or i == params.n_steps:
            _check_sane(Xa, Va, i * h)
            _check_sane(Xb, Vb, i * h)
    return sup_dx, int_dv2


def _inside(box, X, V):
    # X, V broadcast against per-axis bounds on their last axis
    d = box.dim
    return bool(np.all(X >= box.lower[:d]) and np.all(X <= box.upper[:d])
                and np.all(V >= box.lower[d:]) and np.all(V <= box.upper[d:]))


def _containment_box(force, omega, T):
    """Inflated box when the force advertises a certified sup bound."""
    bound = getattr(force, "sup_bound", None)
    if bound is None or omega is None:
        return None
    return inflate_domain(omega, bound, T)


# -- public operations --------------------------------------------------------


def divergence_record(force, pair, params):
    """Per-step divergence statistics for one base/shifted pair."""
    base = pair.base
    x = np.stack([base.x, base.x + pair.delta1])
    v = np.stack([base.v, base.v + pair.delta2])
    h = params.h
    n_steps = params.n_steps
    sup2 = np.empty(n_steps + 1)
    intv = np.empty(n_steps + 1)
    sup2[0] = np.sum((x[1] - x[0]) ** 2)
    intv[0] = 0.0
    prev = np.sum((v[1] - v[0]) ** 2)
    F = force(x)
    for i in range(1, n_steps + 1):
        vh = v + 0.5 * h * F
        x = x + h * vh
        F = force(x)
        v = vh + 0.5 * h * F
        sup2[i] = max(sup2[i - 1], np.sum((x[1] - x[0]) ** 2))
        cur = np.sum((v[1] - v[0]) ** 2)
        intv[i] = intv[i - 1] + 0.5 * h * (prev + cur)
        prev = cur
        if i % 64 == 0 or i == n_steps:
            _check_sane(x, v, i * h)
    times = np.arange(n_steps + 1) * h
    return DivergenceRecord(times, sup2, intv, pair.delta_norm)


def q_delta(force, ensemble, shift, params, check_containment=True):
    """Quadrature of log(1 + (sup|dX|^2 + int|dV|^2) / |delta|^2) over Omega.

    Mean over ensemble samples times |Omega| (midpoint rule for grids, QMC /
    MC otherwise). Reduction uses exact summation so worker order can never
    change the result.
    """
    pts = ensemble.points()
    d = ensemble.omega.dim
    d1, d2 = shift.offsets(d)
    box = _containment_box(force, ensemble.omega, params.T) if check_containment else None
    sup_dx, int_dv2 = _diverge_from_base(
        force, pts[:, :d].copy(), pts[:, d:].copy(), [(d1, d2)], params, box=box)
    integrand = np.log1p((sup_dx[0] ** 2 + int_dv2[0]) / shift.magnitude ** 2)
    return math.fsum(integrand) * ensemble.omega.volume / ensemble.count


@dataclass(frozen=True)
class ScalingRow:
    delta: float
    q: float
    q_over_log: float


@dataclass(frozen=True)
class ScalingStudy:
    rows: tuple
    n_samples: int
    h: float
    T: float
    seed: int

    def deltas(self):
        return np.array([r.delta for r in self.rows])

    def qs(self):
        return np.array([r.q for r in self.rows])


def q_scaling_study(force, ensemble, deltas, params, direction=None,
                    check_containment=True):
    """Q_delta over a decreasing list of |delta| with shared ensemble and
    a fixed shift direction, so only the magnitude varies between rows.

    The base ensemble is integrated once; every shifted clone runs in
    lockstep against it.
    """
    deltas = [float(x) for x in deltas]
    if not deltas:
        raise ValueError("delta list is empty")
    if any(not 0.0 < x < DELTA_CEILING for x in deltas):
        raise ValueError("every |delta| must lie in (0, 1/e)")
    if any(b >= a for a, b in zip(deltas, deltas[1:])):
        raise ValueError("deltas must be strictly decreasing")
    pts = ensemble.points()
    d = ensemble.omega.dim
    template = ShiftSpec(1.0, direction)
    shifts = [template.scaled(x).offsets(d) for x in deltas]
    box = _containment_box(force, ensemble.omega, params.T) if check_containment else None
    sup_dx, int_dv2 = _diverge_from_base(
        force, pts[:, :d].copy(), pts[:, d:].copy(), shifts, params, box=box)
    rows = []
    vol = ensemble.omega.volume
    for j, x in enumerate(deltas):
        integrand = np.log1p((sup_dx[j] ** 2 + int_dv2[j]) / x ** 2)
        q = math.fsum(integrand) * vol / ensemble.count
        rows.append(ScalingRow(x, q, q / math.log(1.0 / x)))
    return ScalingStudy(tuple(rows), ensemble.count, params.h, params.T,
                        ensemble.seed)


@dataclass(frozen=True)
class GateResult:
    """Step-robustness check: Q at h versus h/2 for selected deltas."""

    deltas: tuple
    q_coarse: tuple
    q_fine: tuple

    @property
    def max_rel_change(self):
        worst = 0.0
        for qc, qf in zip(self.q_coarse, self.q_fine):
            denom = max(abs(qc), 1e-300)
            worst = max(worst, abs(qc - qf) / denom)
        return worst

    def passed(self, threshold=0.01):
        return self.max_rel_change < threshold


def step_robustness(force, ensemble, deltas, params, direction=None):
    """Compare Q at the configured step and at half that step."""
    coarse = q_scaling_study(force, ensemble, deltas, params, direction)
    fine = q_scaling_study(force, ensemble, deltas,
                           params.with_step(params.h / 2.0), direction)
    return GateResult(tuple(deltas),
                      tuple(r.q for r in coarse.rows),
                      tuple(r.q for r in fine.rows))


@dataclass(frozen=True)
class LogFit:
    slope: float
    intercept: float
    residual: float
    n_used: int
    excluded: tuple


def fit_log_exponent(deltas, qs):
    """Least-squares slope of log Q against log log(1/delta).

    Rows with nonpositive Q are excluded (and reported); at least three
    usable rows are required.
    """
    deltas = np.asarray(deltas, dtype=np.float64)
    qs = np.asarray(qs, dtype=np.float64)
    if deltas.shape != qs.shape:
        raise ValueError("deltas and Q values disagree in length")
    if np.any(deltas >= DELTA_CEILING):
        raise ValueError("fit requires every |delta| < 1/e")
    usable = qs > 0
    excluded = tuple(int(i) for i in np.nonzero(~usable)[0])
    if usable.sum() < 3:
        raise ValueError(f"need at least 3 rows with positive Q, have {int(usable.sum())}")
    x = np.log(np.log(1.0 / deltas[usable]))
    y = np.log(qs[usable])
    A = np.stack([x, np.ones_like(x)], axis=1)
    coef, *_ = np.linalg.lstsq(A, y, rcond=None)
    resid = float(np.linalg.norm(A @ coef - y))
    return LogFit(float(coef[0]), float(coef[1]), resid, int(usable.sum()), excluded)


@dataclass(frozen=True)
class CauchyRow:
    cut_low: int
    cut_high: int
    sup_component: float
    integral_component: float
    distance: float


def mollification_cauchy_study(field, cutoffs, ensemble, params):
    """Flow distances between consecutive spectral truncations of ``field``.

    For each pair n_i < n_{i+1} the ensemble mean of
    sup_t |X^(i) - X^(i+1)| + (int |V^(i) - V^(i+1)|^2 dt)^{1/2}; a Cauchy
    sequence of flows shows up as a decreasing distance column.
    """
    cutoffs = [int(c) for c in cutoffs]
    if len(cutoffs) < 2:
        raise ValueError("need at least two cutoffs")
    if any(b <= a for a, b in zip(cutoffs, cutoffs[1:])):
        raise ValueError("cutoffs must be strictly increasing")
    pts = ensemble.points()
    d = ensemble.omega.dim
    x0, v0 = pts[:, :d].copy(), pts[:, d:].copy()
    rows = []
    truncated = {c: mollify(field, c) for c in cutoffs}
    for lo, hi in zip(cutoffs[:-1], cutoffs[1:]):
        fa = truncated[lo].evaluate_batch
        fb = truncated[hi].evaluate_batch
        sup_dx, int_dv2 = _diverge_two_forces(fa, fb, x0, v0, params)
        n = ensemble.count
        sup_mean = math.fsum(sup_dx) / n
        int_mean = math.fsum(np.sqrt(int_dv2)) / n
        dist = math.fsum(sup_dx + np.sqrt(int_dv2)) / n
        rows.append(CauchyRow(lo, hi, sup_mean, int_mean, dist))
    return rows
