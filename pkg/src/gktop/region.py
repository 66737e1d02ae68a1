"""Accessible regions on the (s1, s2) plane: grid sampling and boundary
tracing over an arrangement of straight lines."""

from __future__ import annotations

import itertools
import math
from dataclasses import dataclass
from typing import Callable

import numpy as np

from .coordinate_nets import SPoint
from .critical_set import SubsystemNConstants, SubsystemOConstants
from .rigid_core import BodyParams


@dataclass(frozen=True)
class Line:
    """``n1 s1 + n2 s2 = c``."""

    name: str
    n1: float
    n2: float
    c: float

    def value(self, s1, s2):
        return self.n1 * s1 + self.n2 * s2 - self.c


@dataclass(frozen=True)
class Window:
    s1_min: float
    s1_max: float
    s2_min: float
    s2_max: float

    def contains(self, s1, s2, eps=1e-12):
        return (self.s1_min - eps <= s1 <= self.s1_max + eps
                and self.s2_min - eps <= s2 <= self.s2_max + eps)


@dataclass
class Segment:
    line: str
    s1a: float
    s2a: float
    s1b: float
    s2b: float


def lines_o(c: SubsystemOConstants, params: BodyParams) -> list[Line]:
    from .sov_o import OConstantsDerived

    d = OConstantsDerived.from_constants(c, params)
    a, b, r2, s = params.a, params.b, params.r2, c.s
    out = [Line("s1=+a", 1, 0, a), Line("s1=-a", 1, 0, -a), Line("s2=+b", 0, 1, b), Line("s2=-b", 0, 1, -b)]
    # u - k v +- 2 s = 0 with u = s1 + s2, v = s1 - s2
    for name, k in (("Lambda", (c.tau - 2 * s * d.chi) / r2), ("M", (c.tau + 2 * s * d.chi) / r2)):
        out.append(Line(name + "+", 1 - k, 1 + k, -2 * s))
        out.append(Line(name + "-", 1 - k, 1 + k, 2 * s))
    return out


def lines_n(c: SubsystemNConstants, params: BodyParams) -> list[Line]:
    from .sov_n import phi_roots

    a, b = params.a, params.b
    lo, hi = phi_roots(c)
    return [Line("s1=+a", 1, 0, a), Line("s1=-a", 1, 0, -a), Line("s2=+b", 0, 1, b), Line("s2=-b", 0, 1, -b),
            Line("s1=phi_lo", 1, 0, lo), Line("s1=phi_hi", 1, 0, hi),
            Line("s2=phi_lo", 0, 1, lo), Line("s2=phi_hi", 0, 1, hi)]


def _clip(line: Line, win: Window):
    """Parametrize the line as p0 + t d and clip to the window; None if missed."""
    nn = math.hypot(line.n1, line.n2)
    if nn == 0.0:
        return None
    d = np.array([-line.n2, line.n1]) / nn
    p0 = np.array([line.n1, line.n2]) * line.c / nn ** 2
    lo, hi = -math.inf, math.inf
    for k, (vmin, vmax) in enumerate(((win.s1_min, win.s1_max), (win.s2_min, win.s2_max))):
        if abs(d[k]) < 1e-15:
            if not vmin <= p0[k] <= vmax:
                return None
            continue
        ta, tb = (vmin - p0[k]) / d[k], (vmax - p0[k]) / d[k]
        lo, hi = max(lo, min(ta, tb)), min(hi, max(ta, tb))
    if not lo < hi:
        return None
    return p0, d, lo, hi


def trace_boundary(lines: list[Line], inside: Callable, win: Window, offset: float = 1e-7) -> list[Segment]:
    """Pieces of ``lines`` separating inside from outside within ``win``.

    Each line is cut at its crossings with the other lines; a piece is
    boundary when points just off its midpoint on the two sides disagree.
    Consecutive pieces of one line are merged.
    """
    out = []
    for ln in lines:
        clip = _clip(ln, win)
        if clip is None:
            continue
        p0, d, lo, hi = clip
        cuts = {lo, hi}
        for other in lines:
            if other is ln:
                continue
            den = other.n1 * d[0] + other.n2 * d[1]
            if abs(den) < 1e-14:
                continue
            t = -other.value(*p0) / den
            if lo < t < hi:
                cuts.add(t)
        ts = sorted(cuts)
        nrm = np.array([ln.n1, ln.n2]) / math.hypot(ln.n1, ln.n2)
        cur = None
        for ta, tb in zip(ts[:-1], ts[1:]):
            if tb - ta < 1e-12:
                continue
            mid = p0 + 0.5 * (ta + tb) * d
            h = offset * max(1.0, float(np.max(np.abs(mid))))
            sa, sb = inside(*(mid + h * nrm)), inside(*(mid - h * nrm))
            if sa != sb:
                pa, pb = p0 + ta * d, p0 + tb * d
                if cur is not None and abs(cur.s1b - pa[0]) < 1e-12 and abs(cur.s2b - pa[1]) < 1e-12:
                    cur.s1b, cur.s2b = float(pb[0]), float(pb[1])
                else:
                    cur = Segment(ln.name, float(pa[0]), float(pa[1]), float(pb[0]), float(pb[1]))
                    out.append(cur)
            else:
                cur = None
    return out


def sample_grid(inside: Callable, win: Window, n: int) -> np.ndarray:
    """``(s1, s2, inside)`` rows on an ``n x n`` grid; ``n = 1`` gives the window center."""
    if n < 1:
        raise ValueError("grid resolution must be >= 1")
    if n == 1:
        g1 = np.array([0.5 * (win.s1_min + win.s1_max)])
        g2 = np.array([0.5 * (win.s2_min + win.s2_max)])
    else:
        g1 = np.linspace(win.s1_min, win.s1_max, n)
        g2 = np.linspace(win.s2_min, win.s2_max, n)
    rows = [(s1, s2, 1.0 if inside(s1, s2) else 0.0) for s2, s1 in itertools.product(g2, g1)]
    return np.array(rows, dtype=float).reshape(-1, 3)


def o_inside(c: SubsystemOConstants, params: BodyParams) -> Callable:
    from .sov_o import region_o

    return lambda s1, s2: region_o(SPoint(s1, s2), c, params)


def n_inside(c: SubsystemNConstants, params: BodyParams) -> Callable:
    from .sov_n import region_n

    return lambda s1, s2: region_n(s1, s2, c, params)
