"""Shared machinery for integrating a pair of separated equations across
turning points.

Each coordinate carries a branch velocity ``v_i = +-sqrt(F_i(q_i))`` built
from signed radicals, and ``q_i' = g(q) v_i``. The first-order form stalls at
simple roots of ``F_i`` (not Lipschitz there), so the motion is integrated in
the smooth form ``q' = qdot(q, v), v' = vdot(q)`` obtained by differentiating
``v_i^2 = F_i``. A zero of ``v_i`` is a turning point: it is located by
bisection on the dense output and the sign bit of the radical whose radicand
vanishes there is flipped.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Callable, Sequence

import numpy as np

from .errors import DegenerateError
from .integrator import Event, IntegrationConfig, integrate_adaptive


@dataclass(frozen=True)
class Radicand:
    """A radicand attached to coordinate ``coord`` and sign bit ``bit``."""

    coord: int
    bit: int
    func: Callable  # q -> float, in factored form so exact roots give 0.0
    name: str = ""


@dataclass
class Flip:
    t: float
    coord: int
    bit: int
    name: str
    q: np.ndarray


@dataclass
class SeparatedRun:
    t: np.ndarray
    q: np.ndarray
    v: np.ndarray
    bits: np.ndarray  # one row per sample
    flips: list = field(default_factory=list)
    bits0: tuple = ()


def _vanishing(q, radicands, coord, tol):
    cands = [(abs(rd.func(q)), rd) for rd in radicands if rd.coord == coord]
    val, rd = min(cands, key=lambda p: p[0])
    return rd if val <= tol else None


def settle_start_bits(q, bits, radicands, velocity, dynamics, tol=1e-13, probe=1e-7):
    """Fix the bit of a radical that vanishes at the start point.

    Just after the start ``v_i`` has the sign of ``vdot_i``; the bit is chosen
    so the branch velocity at a point nudged along the motion agrees.
    """
    bits = list(bits)
    q = np.asarray(q, dtype=float)
    a = dynamics(q, np.zeros_like(q))[1]
    for i in range(len(q)):
        rd = _vanishing(q, radicands, i, tol)
        if rd is None:
            continue
        if abs(a[i]) <= tol:
            raise DegenerateError(f"start point sits on a multiple root of radicand {rd.name or rd.bit}")
        v_probe = np.zeros_like(q)
        v_probe[i] = a[i]
        step = dynamics(q, v_probe)[0][i]
        qp = q.copy()
        qp[i] += probe * np.sign(step) * max(1.0, abs(q[i]))
        vel = velocity(qp, bits)[i]
        if np.sign(vel) != np.sign(a[i]):
            bits[rd.bit] = -bits[rd.bit]
    return tuple(bits)


def integrate_separated(q0, bits0, velocity: Callable, dynamics: Callable, radicands: Sequence[Radicand],
                        t_span, samples, config: IntegrationConfig | None = None,
                        root_tol: float = 1e-9) -> SeparatedRun:
    """Run the second-order separated flow and replay bit flips at ``samples``.

    ``velocity(q, bits)`` returns the branch velocities ``v`` (real) and
    ``dynamics(q, v)`` the pair ``(q', v')``. ``samples`` must lie in ``t_span``.
    """
    cfg = config or IntegrationConfig(rel_tol=1e-12, abs_tol=1e-14)
    q0 = np.asarray(q0, dtype=float)
    n = q0.size
    bits = settle_start_bits(q0, bits0, radicands, velocity, dynamics)
    v0 = np.asarray(velocity(q0, bits), dtype=float)

    def rhs(t, y):
        qd, vd = dynamics(y[:n], y[n:])
        return np.concatenate([qd, vd])

    events = [Event(lambda t, y, i=i: y[n + i], name=f"turn{i}") for i in range(n)]
    traj = integrate_adaptive(rhs, np.concatenate([q0, v0]), t_span, cfg, events)

    flips = []
    cur = list(bits)
    for ev in traj.events:
        i = int(ev.name[4:])
        q = ev.y[:n]
        scale = [abs(rd.func(q)) for rd in radicands if rd.coord == i]
        rd = [r for r in radicands if r.coord == i][int(np.argmin(scale))]
        if min(scale) > root_tol * max(1.0, float(np.max(np.abs(q))) ** 2):
            raise DegenerateError(f"velocity of coordinate {i} vanished at t={ev.t:.6g} off every radicand root")
        if abs(dynamics(q, ev.y[n:])[1][i]) <= 1e-10:
            raise DegenerateError(f"turning point at t={ev.t:.6g} is a multiple root ({rd.name})")
        cur[rd.bit] = -cur[rd.bit]
        flips.append(Flip(ev.t, i, rd.bit, rd.name, q.copy()))

    samples = np.asarray(samples, dtype=float)
    ys = traj.sample(samples)
    bit_rows = []
    for t in samples:
        b = list(bits)
        for f in flips:
            if f.t <= t:
                b[f.bit] = -b[f.bit]
        bit_rows.append(b)
    return SeparatedRun(samples, ys[:, :n], ys[:, n:], np.array(bit_rows, dtype=int), flips, bits)
