"""Explicit Dormand-Prince 5(4) integrator with PI step control, dense output
and bisection event location."""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Callable, Sequence

import numpy as np

from .errors import DomainError, StepUnderflowError

# Butcher tableau
_C = np.array([0.0, 1 / 5, 3 / 10, 4 / 5, 8 / 9, 1.0, 1.0])
_A = [
    [],
    [1 / 5],
    [3 / 40, 9 / 40],
    [44 / 45, -56 / 15, 32 / 9],
    [19372 / 6561, -25360 / 2187, 64448 / 6561, -212 / 729],
    [9017 / 3168, -355 / 33, 46732 / 5247, 49 / 176, -5103 / 18656],
    [35 / 384, 0.0, 500 / 1113, 125 / 192, -2187 / 6784, 11 / 84],
]
_B = np.array([35 / 384, 0.0, 500 / 1113, 125 / 192, -2187 / 6784, 11 / 84, 0.0])
_E = np.array([71 / 57600, 0.0, -71 / 16695, 71 / 1920, -17253 / 339200, 22 / 525, -1 / 40])
# continuous extension (Shampine), columns multiply theta, theta^2, theta^3, theta^4
_P = np.array([
    [1, -8048581381 / 2820520608, 8663915743 / 2820520608, -12715105075 / 11282082432],
    [0, 0, 0, 0],
    [0, 131558114200 / 32700410799, -68118460800 / 10900136933, 87487479700 / 32700410799],
    [0, -1754552775 / 470086768, 14199869525 / 1410260304, -10690763975 / 1880347072],
    [0, 127303824393 / 49829197408, -318862633887 / 49829197408, 701980252875 / 199316789632],
    [0, -282668133 / 205662961, 2019193451 / 616988883, -1453857185 / 822651844],
    [0, 40617522 / 29380423, -110615467 / 29380423, 69997945 / 29380423],
])

_SAFETY = 0.9
_MIN_FACTOR = 0.2
_MAX_FACTOR = 10.0
_ALPHA = 0.7 / 5
_BETA = 0.4 / 5


@dataclass(frozen=True)
class IntegrationConfig:
    rel_tol: float = 1e-10
    abs_tol: float = 1e-12
    max_step: float = math.inf
    event_tol: float = 1e-12
    max_steps: int = 1_000_000

    def __post_init__(self):
        for name in ("rel_tol", "abs_tol", "max_step", "event_tol"):
            if not getattr(self, name) > 0:
                raise DomainError(f"{name} must be positive")


@dataclass
class Event:
    """Scalar event function ``func(t, y)``; zeros are located by bisection.

    ``direction`` restricts to rising (+1) or falling (-1) crossings; 0 takes
    both. Terminal events stop the run at the located time.
    """

    func: Callable
    name: str = "event"
    terminal: bool = False
    direction: int = 0


@dataclass
class EventRecord:
    t: float
    name: str
    y: np.ndarray
    info: dict = field(default_factory=dict)


class _Segment:
    __slots__ = ("t0", "h", "y0", "k")

    def __init__(self, t0, h, y0, k):
        self.t0, self.h, self.y0, self.k = t0, h, y0, k

    def __call__(self, t):
        th = (t - self.t0) / self.h
        q = _P @ np.array([th, th * th, th ** 3, th ** 4])
        return self.y0 + self.h * (self.k.T @ q)


@dataclass
class Trajectory:
    t: np.ndarray
    y: np.ndarray
    events: list
    segments: list = field(default_factory=list, repr=False)
    status: str = "ok"
    nfev: int = 0

    def __call__(self, t: float) -> np.ndarray:
        """Dense-output value at ``t`` (within the integrated span)."""
        if not self.t[0] <= t <= self.t[-1]:
            raise DomainError(f"t={t} outside integrated span [{self.t[0]}, {self.t[-1]}]")
        i = int(np.searchsorted(self.t, t, side="right")) - 1
        if i >= len(self.segments):
            return self.y[-1].copy()
        if t == self.t[i]:
            return self.y[i].copy()
        return self.segments[max(i, 0)](t)

    def sample(self, times: Sequence[float]) -> np.ndarray:
        return np.array([self(t) for t in times])

    @property
    def final(self) -> np.ndarray:
        return self.y[-1]


def _rms(v):
    return float(np.sqrt(np.mean(v * v)))


def _initial_step(rhs, t0, y0, f0, rtol, atol, max_step, span):
    scale = atol + rtol * np.abs(y0)
    d0, d1 = _rms(y0 / scale), _rms(f0 / scale)
    h0 = 1e-6 if d0 < 1e-5 or d1 < 1e-5 else 0.01 * d0 / d1
    h0 = min(h0, span)
    f1 = np.asarray(rhs(t0 + h0, y0 + h0 * f0), dtype=float)
    d2 = _rms((f1 - f0) / scale) / h0
    if max(d1, d2) <= 1e-15:
        h1 = max(1e-6, h0 * 1e-3)
    else:
        h1 = (0.01 / max(d1, d2)) ** 0.2
    return min(100 * h0, h1, max_step, span)


def _stages(rhs, t, y, h, f0):
    k = np.empty((7, y.size))
    k[0] = f0
    for i in range(1, 7):
        dy = h * (np.asarray(_A[i]) @ k[:i])
        k[i] = rhs(t + _C[i] * h, y + dy)
    return k


def _locate(seg, ev, ta, tb, ga, tol):
    """Bisection on the dense output; returns a bracket end inside [ta, tb]."""
    f = lambda t: float(ev.func(t, seg(t)))
    a, b = ta, tb
    while b - a > tol:
        m = 0.5 * (a + b)
        gm = f(m)
        if gm == 0.0:
            return m
        if (gm > 0) == (ga > 0):
            a, ga = m, gm
        else:
            b = m
    return b


def _crossed(ga, gb, direction):
    if ga == 0.0 or not (gb == 0.0 or (ga > 0) != (gb > 0)):
        return False
    rising = gb > ga
    return direction == 0 or (direction > 0 and rising) or (direction < 0 and not rising)


def integrate_adaptive(rhs: Callable, y0, t_span, config: IntegrationConfig | None = None,
                       events: Sequence[Event] = ()) -> Trajectory:
    """Integrate ``y' = rhs(t, y)`` over ``t_span = (t0, t1)`` with ``t1 > t0``.

    Raises StepUnderflowError when the step size collapses below rounding
    level (typical near singular points of the vector field).
    """
    cfg = config or IntegrationConfig()
    t0, tf = float(t_span[0]), float(t_span[1])
    if not tf > t0:
        raise DomainError(f"empty or reversed time span ({t0}, {tf})")
    y = np.array(y0, dtype=float)
    rtol, atol = cfg.rel_tol, cfg.abs_tol

    f = np.asarray(rhs(t0, y), dtype=float)
    nfev = 1
    if not np.all(np.isfinite(f)):
        raise StepUnderflowError(f"vector field not finite at the initial point t={t0}")
    h = _initial_step(rhs, t0, y, f, rtol, atol, cfg.max_step, tf - t0)
    nfev += 1

    ts, ys, segs, log = [t0], [y.copy()], [], []
    gvals = [float(ev.func(t0, y)) for ev in events]
    err_prev = 1e-4
    t = t0
    for _ in range(cfg.max_steps):
        if t >= tf:
            break
        h = min(h, cfg.max_step, tf - t)
        if h <= 16 * np.finfo(float).eps * max(1.0, abs(t)):
            raise StepUnderflowError(f"step size underflow at t={t:.17g}")
        k = _stages(rhs, t, y, h, f)
        nfev += 6
        y_new = y + h * (_B @ k)
        err_vec = h * (_E @ k) / (atol + rtol * np.maximum(np.abs(y), np.abs(y_new)))
        err = _rms(err_vec)
        if not np.isfinite(err):
            h *= _MIN_FACTOR
            continue
        if err > 1.0:
            h *= max(_MIN_FACTOR, _SAFETY * err ** -0.2)
            continue

        seg = _Segment(t, h, y.copy(), k)
        t_new = t + h if tf - (t + h) > 1e-14 * max(1.0, abs(tf)) else tf
        stop_at = None
        for j, ev in enumerate(events):
            g_new = float(ev.func(t_new, y_new))
            if _crossed(gvals[j], g_new, ev.direction):
                te = _locate(seg, ev, t, t_new, gvals[j], cfg.event_tol)
                log.append(EventRecord(te, ev.name, seg(te)))
                if ev.terminal and (stop_at is None or te < stop_at):
                    stop_at = te
            gvals[j] = g_new
        if stop_at is not None:
            ye = seg(stop_at)
            ts.append(stop_at)
            ys.append(ye)
            segs.append(seg)
            log = [e for e in log if e.t <= stop_at]
            return Trajectory(np.array(ts), np.array(ys), log, segs, "event", nfev)

        t, y, f = t_new, y_new, k[6]
        ts.append(t)
        ys.append(y.copy())
        segs.append(seg)
        err = max(err, 1e-10)
        factor = _SAFETY * err ** -_ALPHA * err_prev ** _BETA
        h *= min(_MAX_FACTOR, max(_MIN_FACTOR, factor))
        err_prev = err
    else:
        raise StepUnderflowError(f"maximum number of steps ({cfg.max_steps}) exceeded at t={t}")
    return Trajectory(np.array(ts), np.array(ys), log, segs, "ok", nfev)


def drift_report(traj: Trajectory, functionals: dict) -> dict:
    """Max relative drift ``|F(y(t)) - F(y(0))| / max(1, |F(y(0))|)`` per functional."""
    out = {}
    for name, fn in functionals.items():
        vals = np.array([fn(yk) for yk in traj.y], dtype=float)
        ref = vals[0]
        out[name] = float(np.max(np.abs(vals - ref)) / max(1.0, abs(ref)))
    return out
