"""Volume-preserving integration of Newton's equations x' = v, v' = F(x).

The stepper is velocity Verlet, chosen because for this separable system it
is exactly volume-preserving and time-reversible, so the discrete flow map
inherits the structural properties of the exact one (unit Jacobian,
semi-group composition) up to floating-point noise.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

__all__ = [
    "PhaseState",
    "FlowParams",
    "Trajectory",
    "PhaseBox",
    "BlowUpError",
    "verlet_step",
    "integrate",
    "energy",
    "jacobian_determinant",
    "semigroup_residual",
    "inflate_domain",
    "min_safe_period",
    "default_step",
    "write_trajectory_csv",
]

BLOWUP_LIMIT = 1e6


class BlowUpError(RuntimeError):
    """Trajectory left the sane region (non-finite or |x|,|v| > 1e6)."""

    def __init__(self, t, x, v):
        super().__init__(f"blow-up at t={t}: x={x}, v={v}")
        self.t = t
        self.x = x
        self.v = v


@dataclass(frozen=True)
class PhaseState:
    """A point (x, v) in phase space; components must be finite."""

    x: np.ndarray
    v: np.ndarray

    def __post_init__(self):
        object.__setattr__(self, "x", np.atleast_1d(np.asarray(self.x, dtype=np.float64)))
        object.__setattr__(self, "v", np.atleast_1d(np.asarray(self.v, dtype=np.float64)))
        if self.x.shape != self.v.shape:
            raise ValueError("position and velocity dimensions differ")
        if not (np.all(np.isfinite(self.x)) and np.all(np.isfinite(self.v))):
            raise ValueError("phase state has non-finite components")

    @property
    def dim(self):
        return self.x.shape[0]


@dataclass(frozen=True)
class FlowParams:
    """Step size, horizon and recording stride.

    h is adjusted downward so T/h is an integer; the step count must be a
    multiple of record_stride so recorded samples stay uniformly spaced.
    """

    h: float
    T: float
    record_stride: int = 1
    n_steps: int = field(init=False)

    def __post_init__(self):
        if not self.h > 0:
            raise ValueError(f"step must be positive, got {self.h}")
        if not self.T > 0:
            raise ValueError(f"horizon must be positive, got {self.T}")
        if self.h > self.T:
            raise ValueError(f"step {self.h} exceeds horizon {self.T}")
        if self.record_stride < 1:
            raise ValueError("record_stride must be at least 1")
        n = int(np.ceil(self.T / self.h - 1e-9))
        object.__setattr__(self, "n_steps", n)
        object.__setattr__(self, "h", self.T / n)
        if n % self.record_stride != 0:
            raise ValueError(
                f"step count {n} is not a multiple of record_stride {self.record_stride}")

    def with_step(self, h):
        return FlowParams(h=h, T=self.T, record_stride=self.record_stride)


@dataclass(frozen=True)
class Trajectory:
    """Recorded samples; times[j] = j * record_stride * h."""

    times: np.ndarray
    xs: np.ndarray
    vs: np.ndarray

    def __len__(self):
        return len(self.times)

    def state(self, j):
        return PhaseState(self.xs[j], self.vs[j])

    @property
    def final_state(self):
        return PhaseState(self.xs[-1], self.vs[-1])


@dataclass(frozen=True)
class PhaseBox:
    """Axis-aligned box in phase space R^{2d}: first d axes position."""

    lower: np.ndarray
    upper: np.ndarray

    def __post_init__(self):
        object.__setattr__(self, "lower", np.atleast_1d(np.asarray(self.lower, dtype=np.float64)))
        object.__setattr__(self, "upper", np.atleast_1d(np.asarray(self.upper, dtype=np.float64)))
        if self.lower.shape != self.upper.shape:
            raise ValueError("box corners disagree in dimension")
        if self.lower.shape[0] % 2 != 0:
            raise ValueError("phase box needs an even number of axes (x then v)")
        if np.any(self.lower > self.upper):
            raise ValueError("box has lower > upper")

    @property
    def dim(self):
        return self.lower.shape[0] // 2

    @property
    def volume(self):
        return float(np.prod(self.upper - self.lower))

    def position_bounds(self):
        d = self.dim
        return self.lower[:d], self.upper[:d]

    def velocity_bounds(self):
        d = self.dim
        return self.lower[d:], self.upper[d:]

    def contains(self, x, v, slack=0.0):
        d = self.dim
        return (np.all(x >= self.lower[:d] - slack) and np.all(x <= self.upper[:d] + slack)
                and np.all(v >= self.lower[d:] - slack) and np.all(v <= self.upper[d:] + slack))


def _as_force(force):
    """Accept a SpectralField or any callable mapping (n, d) -> (n, d)."""
    if callable(force):
        return force
    raise TypeError(f"force must be callable, got {type(force)!r}")


def verlet_step(force, state, h):
    """One velocity-Verlet step:
    v_half = v + (h/2) F(x); x' = x + h v_half; v' = v_half + (h/2) F(x')."""
    if not h > 0:
        raise ValueError(f"step must be positive, got {h}")
    f = _as_force(force)
    x = state.x[None, :]
    v_half = state.v + 0.5 * h * f(x)[0]
    x_new = state.x + h * v_half
    v_new = v_half + 0.5 * h * f(x_new[None, :])[0]
    return PhaseState(x_new, v_new)


def _check_sane(x, v, t):
    if (not np.all(np.isfinite(x)) or not np.all(np.isfinite(v))
            or np.abs(x).max() > BLOWUP_LIMIT or np.abs(v).max() > BLOWUP_LIMIT):
        raise BlowUpError(t, x, v)


def integrate(force, state0, params):
    """Trajectory of params.n_steps Verlet steps from state0."""
    f = _as_force(force)
    h = params.h
    stride = params.record_stride
    n_rec = params.n_steps // stride + 1
    d = state0.dim
    xs = np.empty((n_rec, d))
    vs = np.empty((n_rec, d))
    xs[0] = state0.x
    vs[0] = state0.v
    x = state0.x.copy()
    v = state0.v.copy()
    fx = f(x[None, :])[0]
    rec = 1
    for i in range(1, params.n_steps + 1):
        v_half = v + 0.5 * h * fx
        x = x + h * v_half
        fx = f(x[None, :])[0]
        v = v_half + 0.5 * h * fx
        if i % 64 == 0 or i == params.n_steps:
            _check_sane(x, v, i * h)
        if i % stride == 0:
            xs[rec] = x
            vs[rec] = v
            rec += 1
    times = np.arange(n_rec) * (stride * h)
    return Trajectory(times, xs, vs)


def energy(field, state):
    """|v|^2 / 2 + phi(x) for a gradient field (or a bare potential callable)."""
    if hasattr(field, "evaluate_potential"):
        if not getattr(field, "is_gradient", False):
            raise ValueError("energy needs a gradient field")
        phi = field.evaluate_potential(state.x)
    elif callable(field):
        phi = float(field(state.x))
    else:
        raise TypeError("field must expose a potential")
    return float(0.5 * np.dot(state.v, state.v) + phi)


def jacobian_determinant(force, state, h, fd_eps=None):
    """Determinant of the finite-difference Jacobian of the one-step map."""
    if fd_eps is None:
        scale = float(np.sqrt(np.dot(state.x, state.x) + np.dot(state.v, state.v)))
        fd_eps = 1e-5 * (1.0 + scale)
    if not fd_eps > 0:
        raise ValueError(f"fd_eps must be positive, got {fd_eps}")
    d = state.dim
    jac = np.empty((2 * d, 2 * d))
    base = np.concatenate([state.x, state.v])
    for j in range(2 * d):
        plus = base.copy()
        minus = base.copy()
        plus[j] += fd_eps
        minus[j] -= fd_eps
        sp = verlet_step(force, PhaseState(plus[:d], plus[d:]), h)
        sm = verlet_step(force, PhaseState(minus[:d], minus[d:]), h)
        jac[:, j] = np.concatenate([sp.x - sm.x, sp.v - sm.v]) / (2.0 * fd_eps)
    return float(np.linalg.det(jac))


def semigroup_residual(force, state, t, s, params):
    """Distance in R^{2d} between the (t+s)-flow and the s-flow of the t-flow.

    t and s must sit on the step grid; the discrete map then composes
    exactly and the residual is floating-point noise only.
    """
    h = params.h
    nt = int(round(t / h))
    ns = int(round(s / h))
    for name, val, n in (("t", t, nt), ("s", s, ns)):
        if abs(n * h - val) > 1e-9 * max(1.0, abs(val)):
            raise ValueError(f"{name}={val} is not a multiple of the step {h}")
    if nt < 0 or ns < 0:
        raise ValueError("times must be nonnegative")

    def run(state0, n):
        if n == 0:
            return state0
        p = FlowParams(h=h, T=n * h, record_stride=n)
        return integrate(force, state0, p).final_state

    direct = run(state, nt + ns)
    via = run(run(state, nt), ns)
    dx = direct.x - via.x
    dv = direct.v - via.v
    return float(np.sqrt(np.dot(dx, dx) + np.dot(dv, dv)))


def inflate_domain(omega, A, T):
    """Enlarged box guaranteed to contain the flow of omega up to time T.

    Velocities move at most A*T; positions at most |v|_max*T + A*T^2/2;
    both get the extra unit of slack for nearby initial conditions.
    """
    if A < 0 or T < 0:
        raise ValueError("bound and horizon must be nonnegative")
    d = omega.dim
    vlo, vhi = omega.velocity_bounds()
    v_max = float(np.max(np.maximum(np.abs(vlo), np.abs(vhi))))
    dv = A * T + 1.0
    dx = v_max * T + 0.5 * A * T * T + 1.0
    lower = omega.lower - np.concatenate([np.full(d, dx), np.full(d, dv)])
    upper = omega.upper + np.concatenate([np.full(d, dx), np.full(d, dv)])
    return PhaseBox(lower, upper)


def min_safe_period(omega, A, T):
    """Smallest torus period that keeps all flows from wrapping: four times
    the position diameter of the twice-inflated box."""
    box2 = inflate_domain(inflate_domain(omega, A, T), A, T)
    lo, hi = box2.position_bounds()
    return 4.0 * float(np.max(hi - lo))


def default_step(field, cap=1e-3):
    """Step resolving the field's fastest mode: 0.1 / max angular wavenumber."""
    kmax = field.max_wavenumber
    if kmax == 0.0:
        return cap
    return min(cap, 0.1 * field.period / (2.0 * np.pi * kmax))


def write_trajectory_csv(traj, path):
    """CSV dump with header t, x_1..x_d, v_1..v_d at 17 significant digits."""
    d = traj.xs.shape[1]
    cols = ["t"] + [f"x_{i+1}" for i in range(d)] + [f"v_{i+1}" for i in range(d)]
    with open(path, "w") as fh:
        fh.write(",".join(cols) + "\n")
        for t, x, v in zip(traj.times, traj.xs, traj.vs):
            row = [f"{t:.17g}"] + [f"{c:.17g}" for c in x] + [f"{c:.17g}" for c in v]
            fh.write(",".join(row) + "\n")
