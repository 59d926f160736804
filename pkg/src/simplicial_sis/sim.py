"""Fixed-step RK4 integration, Lyapunov monitors and empirical domains.

Both model flavours are lowered to one kernel representation: a scaled
pairwise matrix ``beta1 * A`` plus a padded hyperedge table (target,
sources, ``beta_k * w``).  The inner loop is compiled with numba.
"""

from __future__ import annotations

import enum
import logging
import math
import warnings
from dataclasses import dataclass, field

import numba
import numpy as np

from . import linalg
from .analysis import Domain, higher_order_collapse
from .errors import DomainEscape
from .model import HigherOrderSis, ScalarSis, SimplicialSis, as_state

log = logging.getLogger(__name__)

EXTINCTION_THRESHOLD = 1e-6
ATTRACTOR_MATCH = 1e-4
SETTLED_FIELD = 1e-8
STATIONARY_FIELD = 1e-13
PROBE_EPS = 1e-3


class MonitorUnsound(UserWarning):
    """The Lyapunov monitor is used outside the regime where it is guaranteed."""


@dataclass(frozen=True)
class IntegratorConfig:
    dt: float = 0.01
    t_end: float = 500.0
    method: str = "RK4"
    domain_tolerance: float = 1e-9
    record_stride: int = 1

    def __post_init__(self):
        if self.method != "RK4":
            raise ValueError(f"unsupported method {self.method!r}")
        if not (self.dt > 0 and self.t_end > 0 and self.dt <= self.t_end):
            raise ValueError("need 0 < dt <= t_end")
        if self.record_stride < 1:
            raise ValueError("record_stride must be >= 1")

    @property
    def steps(self) -> int:
        return max(1, int(math.ceil(self.t_end / self.dt - 1e-9)))


@dataclass(frozen=True)
class Trajectory:
    times: np.ndarray
    states: np.ndarray
    monitors: np.ndarray | None = None
    max_excursion: float = 0.0
    clamped_steps: int = 0


class ProbeVerdict(str, enum.Enum):
    EXTINCT = "extinct"
    ENDEMIC = "endemic"
    UNDECIDED = "undecided"

    def __str__(self):
        return self.value


@dataclass(frozen=True)
class BasinProbe:
    initial: np.ndarray
    verdict: ProbeVerdict
    final: np.ndarray = field(repr=False)

    @property
    def xstar_estimate(self):
        return self.final if self.verdict is ProbeVerdict.ENDEMIC else None


# ------------------------------------------------------------------ kernel

@dataclass(frozen=True)
class _Kernel:
    gamma: np.ndarray
    A1: np.ndarray
    targets: np.ndarray
    sources: np.ndarray
    coef: np.ndarray

    @property
    def args(self):
        return self.gamma, self.A1, self.targets, self.sources, self.coef


def lower(model) -> _Kernel:
    """Kernel arrays for any supported model."""
    if isinstance(model, ScalarSis):
        model = SimplicialSis([model.gamma], [[1.0]], [[[1.0]]], model.beta1, model.beta2)
    n = model.n
    if isinstance(model, SimplicialSis):
        idx = np.argwhere(model.B != 0)
        targets = idx[:, 0].astype(np.int64)
        sources = idx[:, 1:].astype(np.int64)
        coef = model.beta2 * model.B[idx[:, 0], idx[:, 1], idx[:, 2]]
    elif isinstance(model, HigherOrderSis):
        kmax = max(model.orders, default=1)
        t_parts, s_parts, c_parts = [], [], []
        for k, hs in model.orders.items():
            pad = np.full((hs.targets.shape[0], kmax), -1, dtype=np.int64)
            pad[:, :k] = hs.sources
            t_parts.append(hs.targets)
            s_parts.append(pad)
            c_parts.append(hs.beta * hs.weights)
        targets = np.concatenate(t_parts).astype(np.int64) if t_parts else np.zeros(0, np.int64)
        sources = np.vstack(s_parts) if s_parts else np.zeros((0, 1), np.int64)
        coef = np.concatenate(c_parts) if c_parts else np.zeros(0)
    else:
        raise TypeError(f"cannot integrate {type(model).__name__}")
    return _Kernel(np.ascontiguousarray(model.gamma, dtype=float),
                   np.ascontiguousarray(model.beta1 * model.A),
                   np.ascontiguousarray(targets), np.ascontiguousarray(sources),
                   np.ascontiguousarray(coef, dtype=float))


@numba.njit(cache=True)
def _field(x, gamma, A1, targets, sources, coef, out):
    n = x.shape[0]
    for i in range(n):
        s = 0.0
        for j in range(n):
            s += A1[i, j] * x[j]
        out[i] = s
    for e in range(targets.shape[0]):
        p = coef[e]
        for pos in range(sources.shape[1]):
            src = sources[e, pos]
            if src < 0:
                break
            p *= x[src]
        out[targets[e]] += p
    for i in range(n):
        out[i] = -gamma[i] * x[i] + (1.0 - x[i]) * out[i]


@numba.njit(cache=True)
def _rk4_step(x, h, gamma, A1, targets, sources, coef, k1, k2, k3, k4, tmp):
    n = x.shape[0]
    _field(x, gamma, A1, targets, sources, coef, k1)
    for i in range(n):
        tmp[i] = x[i] + 0.5 * h * k1[i]
    _field(tmp, gamma, A1, targets, sources, coef, k2)
    for i in range(n):
        tmp[i] = x[i] + 0.5 * h * k2[i]
    _field(tmp, gamma, A1, targets, sources, coef, k3)
    for i in range(n):
        tmp[i] = x[i] + h * k3[i]
    _field(tmp, gamma, A1, targets, sources, coef, k4)
    for i in range(n):
        x[i] += h / 6.0 * (k1[i] + 2.0 * k2[i] + 2.0 * k3[i] + k4[i])


@numba.njit(cache=True)
def _clamp(x, tol):
    """Clamp into [0, 1]; returns the excursion, or -excursion if beyond tol."""
    exc = 0.0
    for i in range(x.shape[0]):
        if -x[i] > exc:
            exc = -x[i]
        if x[i] - 1.0 > exc:
            exc = x[i] - 1.0
    if exc > tol:
        return -exc
    for i in range(x.shape[0]):
        if x[i] < 0.0:
            x[i] = 0.0
        elif x[i] > 1.0:
            x[i] = 1.0
    return exc


@numba.njit(cache=True)
def _run(x0, dt, last_dt, nsteps, stride, tol, gamma, A1, targets, sources, coef, out):
    """Integrate, writing every ``stride``-th state and the final one into ``out``.

    Returns (status, step, max excursion, clamped steps); status 1 = escape.
    """
    n = x0.shape[0]
    x = x0.copy()
    k1 = np.empty(n)
    k2 = np.empty(n)
    k3 = np.empty(n)
    k4 = np.empty(n)
    tmp = np.empty(n)
    out[0, :] = x
    row = 1
    worst = 0.0
    clamped = 0
    for step in range(1, nsteps + 1):
        h = last_dt if step == nsteps else dt
        _rk4_step(x, h, gamma, A1, targets, sources, coef, k1, k2, k3, k4, tmp)
        exc = _clamp(x, tol)
        if exc < 0.0:
            return 1, step, -exc, clamped
        if exc > 0.0:
            clamped += 1
            if exc > worst:
                worst = exc
        if step % stride == 0 or step == nsteps:
            out[row, :] = x
            row += 1
    return 0, nsteps, worst, clamped


@numba.njit(cache=True)
def _settle(x0, dt, last_dt, nsteps, tol, stationary, gamma, A1, targets, sources, coef):
    """Integrate to the end, or stop early once ||f(x)||_inf <= stationary.

    Returns (final state, status, steps taken, ||f(final)||_inf).
    """
    n = x0.shape[0]
    x = x0.copy()
    k1 = np.empty(n)
    k2 = np.empty(n)
    k3 = np.empty(n)
    k4 = np.empty(n)
    tmp = np.empty(n)
    for step in range(1, nsteps + 1):
        h = last_dt if step == nsteps else dt
        _rk4_step(x, h, gamma, A1, targets, sources, coef, k1, k2, k3, k4, tmp)
        if _clamp(x, tol) < 0.0:
            return x, 1, step, np.inf
        if step % 16 == 0:
            _field(x, gamma, A1, targets, sources, coef, k1)
            if np.max(np.abs(k1)) <= stationary:
                return x, 0, step, np.max(np.abs(k1))
    _field(x, gamma, A1, targets, sources, coef, k1)
    return x, 0, nsteps, np.max(np.abs(k1))


def _n_of(model):
    return 1 if isinstance(model, ScalarSis) else model.n


def _step_plan(cfg: IntegratorConfig):
    nsteps = cfg.steps
    last_dt = cfg.t_end - (nsteps - 1) * cfg.dt
    return nsteps, last_dt


# ------------------------------------------------------------------ public API

def integrate(model, x0, cfg: IntegratorConfig | None = None, monitor: bool = False) -> Trajectory:
    """Classical RK4 with fixed step ``cfg.dt`` from ``x0`` up to ``cfg.t_end``.

    Rounding excursions up to ``cfg.domain_tolerance`` outside ``[0, 1]`` are
    clamped and reported; larger ones raise :class:`DomainEscape`.  With
    ``monitor=True`` the disease-free Lyapunov value is recorded too.
    """
    cfg = cfg or IntegratorConfig()
    n = _n_of(model)
    x0 = as_state(x0, n)
    kern = lower(model)
    nsteps, last_dt = _step_plan(cfg)
    stride = cfg.record_stride
    rows = nsteps // stride + 1 + (1 if nsteps % stride else 0)
    out = np.empty((rows, n))
    status, step, worst, clamped = _run(x0, cfg.dt, last_dt, nsteps, stride,
                                        cfg.domain_tolerance, *kern.args, out)
    if status == 1:
        raise DomainEscape(f"state left [0, 1]^n by {worst:.3g} at t = {step * cfg.dt:g}; reduce dt")
    steps_recorded = np.arange(0, nsteps + 1, stride)
    if nsteps % stride:
        steps_recorded = np.append(steps_recorded, nsteps)
    times = steps_recorded * cfg.dt
    times[-1] = cfg.t_end if steps_recorded[-1] == nsteps else times[-1]
    traj = Trajectory(times=times, states=out, max_excursion=worst, clamped_steps=clamped)
    if monitor:
        traj = Trajectory(times=times, states=out, monitors=lyapunov_trace(model, traj),
                          max_excursion=worst, clamped_steps=clamped)
    return traj


def settle(model, x0, cfg: IntegratorConfig | None = None):
    """Final state of a trajectory, stopping early once the field vanishes.

    Returns ``(x_end, ||f(x_end)||_inf)``.
    """
    cfg = cfg or IntegratorConfig()
    x0 = as_state(x0, _n_of(model))
    nsteps, last_dt = _step_plan(cfg)
    x, status, step, speed = _settle(x0, cfg.dt, last_dt, nsteps, cfg.domain_tolerance,
                                     STATIONARY_FIELD, *lower(model).args)
    if status == 1:
        raise DomainEscape(f"state left [0, 1]^n at t = {step * cfg.dt:g}; reduce dt")
    return x, float(speed)


def lyapunov_weights(model):
    """``(v, lam, q)``: left Perron vector ``v`` and eigenvalue ``lam`` of the
    disease-free comparison matrix, and the decay rate ``q = (lam - 1) min(gamma)``."""
    if isinstance(model, HigherOrderSis):
        M = model.beta1 * model.A / model.gamma[:, None] + higher_order_collapse(model)
    else:
        M = (model.beta1 * model.A + model.beta2 * model.b_column_sums) / model.gamma[:, None]
    pair = linalg.perron_eigenpair(M, side="left")
    q = (pair.value - 1.0) * float(model.gamma.min())
    return pair.vector, pair.value, q


def lyapunov_trace(model, traj: Trajectory) -> np.ndarray:
    """``V(x(t)) = v^T Gamma^-1 x(t)`` along a trajectory."""
    v, lam, _ = lyapunov_weights(model)
    if lam >= 1.0:
        warnings.warn("disease-free condition fails; V need not decrease", MonitorUnsound, stacklevel=2)
    return traj.states @ (v / model.gamma)


def write_trajectory_csv(traj: Trajectory, target):
    """CSV with header ``t,x1,...,xn[,V]`` and 17 significant digits.

    ``target`` is a path or an open text stream.
    """
    if hasattr(target, "write"):
        _write_rows(traj, target)
    else:
        with open(target, "w", encoding="utf-8", newline="") as fh:
            _write_rows(traj, fh)


def _write_rows(traj, fh):
    n = traj.states.shape[1]
    header = ["t"] + [f"x{i + 1}" for i in range(n)]
    if traj.monitors is not None:
        header.append("V")
    fh.write(",".join(header) + "\n")
    for k, t in enumerate(traj.times):
        row = [t, *traj.states[k]]
        if traj.monitors is not None:
            row.append(traj.monitors[k])
        fh.write(",".join(format(float(v), ".17g") for v in row) + "\n")


def probe(model, x0, cfg: IntegratorConfig | None = None) -> BasinProbe:
    x0 = as_state(x0, _n_of(model))
    x, speed = settle(model, x0, cfg)
    if np.max(x) < EXTINCTION_THRESHOLD:
        verdict = ProbeVerdict.EXTINCT
    elif speed <= SETTLED_FIELD and np.min(x) > EXTINCTION_THRESHOLD:
        verdict = ProbeVerdict.ENDEMIC
    else:
        verdict = ProbeVerdict.UNDECIDED
    return BasinProbe(initial=x0, verdict=verdict, final=x)


def default_probes(n: int):
    return [np.full(n, PROBE_EPS), np.full(n, 0.5), np.ones(n)]


def classify_empirical(model, cfg: IntegratorConfig | None = None, probes=None, details: bool = False):
    """Domain read off simulated trajectories.

    The first probe plays the role of the small initial infection and the
    last one of the fully infected start.  Disease-free: every probe dies
    out.  Endemic: the small probe reaches an endemic state that every other
    probe also reaches (within 1e-4).  Bistable: the small probe dies out and
    the last probe is endemic.  Anything else is undecided.
    """
    n = _n_of(model)
    starts = default_probes(n) if probes is None else [np.asarray(p, dtype=float) for p in probes]
    results = [probe(model, x0, cfg) for x0 in starts]
    first, last = results[0], results[-1]
    if all(r.verdict is ProbeVerdict.EXTINCT for r in results):
        domain = Domain.DISEASE_FREE
    elif first.verdict is ProbeVerdict.ENDEMIC and all(
            r.verdict is ProbeVerdict.ENDEMIC
            and np.max(np.abs(r.final - first.final)) <= ATTRACTOR_MATCH for r in results):
        domain = Domain.ENDEMIC
    elif first.verdict is ProbeVerdict.EXTINCT and last.verdict is ProbeVerdict.ENDEMIC:
        domain = Domain.BISTABLE
    else:
        domain = Domain.UNDECIDED
    log.debug("empirical verdicts %s -> %s", [str(r.verdict) for r in results], domain)
    return (domain, results) if details else domain

