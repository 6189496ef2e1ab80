"""Numerical replicator flow, logarithmic rescaling and numerical return maps.

The integrator is a Dormand-Prince 5(4) pair with per-component relative
error control, so that coordinates of size ``1e-30`` near the boundary are
resolved as accurately as those of size one. After every accepted step each
group is renormalised to sum to one.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from fractions import Fraction
from typing import Sequence

import numpy as np

from .conservative import HamiltonianSpec
from .game import GameSpec
from .skeleton import Branch, ConeSector, FlowGraph, PiecewiseLinearMap
from . import rational as ra

Vertex = tuple[int, ...]


class IntegrationError(RuntimeError):
    """Step-size underflow or a state that left the tolerance envelope."""


class SaturationError(ValueError):
    """Rescaling a boundary point, whose rescaled coordinate is infinite."""


@dataclass(frozen=True)
class ODEControl:
    """Integrator settings.

    ``rtol`` is applied per component relative to the component's size;
    ``atol`` only guards exact zeros.
    """

    rtol: float = 1e-10
    atol: float = 1e-300
    h0: float = 1e-3
    hmax: float = 5.0
    hmin: float = 1e-14
    max_steps: int = 2_000_000
    envelope: float = 1e-9


# Dormand-Prince 5(4) tableau
_A = [
    [],
    [1 / 5],
    [3 / 40, 9 / 40],
    [44 / 45, -56 / 15, 32 / 9],
    [19372 / 6561, -25360 / 2187, 64448 / 6561, -212 / 729],
    [9017 / 3168, -355 / 33, 46732 / 5247, 49 / 176, -5103 / 18656],
    [35 / 384, 0, 500 / 1113, 125 / 192, -2187 / 6784, 11 / 84],
]
_B5 = np.array([35 / 384, 0, 500 / 1113, 125 / 192, -2187 / 6784, 11 / 84, 0])
_B4 = np.array([5179 / 57600, 0, 7571 / 16695, 393 / 640, -92097 / 339200, 187 / 2100, 1 / 40])


class Stepper:
    """Adaptive DOPRI5 stepper for one game, with first-same-as-last reuse."""

    def __init__(self, g: GameSpec, ctrl: ODEControl = ODEControl()):
        self.g = g
        self.ctrl = ctrl
        self.A = g.payoff_float
        self.slices = [slice(r.start, r.stop) for r in g.group_ranges]

    def f(self, x: np.ndarray) -> np.ndarray:
        ax = self.A @ x
        out = np.empty_like(x)
        for sl in self.slices:
            out[sl] = x[sl] * (ax[sl] - x[sl] @ ax[sl])
        return out

    def renormalize(self, x: np.ndarray) -> np.ndarray:
        x = np.maximum(x, 0.0)
        for sl in self.slices:
            x[sl] /= x[sl].sum()
        return x

    def step(self, x: np.ndarray, fx: np.ndarray, h: float):
        """Try one step; returns (x_new, f_new, error_ratio)."""
        k = [fx]
        for i in range(1, 7):
            xi = x + h * sum(a * kk for a, kk in zip(_A[i], k))
            k.append(self.f(xi))
        x5 = x + h * sum(b * kk for b, kk in zip(_B5, k) if b)
        x4 = x + h * sum(b * kk for b, kk in zip(_B4, k) if b)
        scale = self.ctrl.atol + self.ctrl.rtol * np.maximum(np.abs(x), np.abs(x5))
        err = float(np.max(np.abs(x5 - x4) / scale))
        return x5, k[6], err

    def advance(self, x, fx, h):
        """Take one accepted step starting with trial size ``h``.

        Returns ``(x_new, f_new, h_used, h_next)``.
        """
        ctrl = self.ctrl
        while True:
            if h < ctrl.hmin:
                raise IntegrationError(f"step size underflow (h = {h:.3e})")
            xn, fn, err = self.step(x, fx, h)
            if err <= 1.0 and np.all(np.isfinite(xn)):
                fac = 5.0 if err == 0 else min(5.0, max(0.2, 0.9 * err ** -0.2))
                xn = self.renormalize(xn)
                return xn, self.f(xn), h, min(h * fac, ctrl.hmax)
            fac = 0.2 if not np.isfinite(err) else max(0.2, 0.9 * err ** -0.2)
            h *= fac

    def check(self, x: np.ndarray) -> None:
        tol = self.ctrl.envelope
        if np.min(x) < -tol:
            raise IntegrationError("state left the polytope")
        for sl in self.slices:
            if abs(x[sl].sum() - 1.0) > tol:
                raise IntegrationError("group sum drifted from 1")


def hermite(x0, f0, x1, f1, h, theta):
    """Cubic Hermite interpolant on a step of length ``h`` at fraction ``theta``."""
    t2, t3 = theta * theta, theta ** 3
    h00 = 2 * t3 - 3 * t2 + 1
    h10 = t3 - 2 * t2 + theta
    h01 = -2 * t3 + 3 * t2
    h11 = t3 - t2
    return h00 * x0 + h10 * h * f0 + h01 * x1 + h11 * h * f1


# ------------------------------------------------------------ trajectory


@dataclass
class Trajectory:
    """Accepted integration steps with conservation audit columns."""

    times: np.ndarray
    states: np.ndarray
    h: np.ndarray | None
    casimirs: np.ndarray | None
    group_sums: np.ndarray

    def drift(self) -> dict:
        out = {"group_sum": float(np.max(np.abs(self.group_sums - 1.0)))}
        if self.h is not None:
            out["h"] = float(np.max(np.abs(self.h - self.h[0])))
        if self.casimirs is not None and self.casimirs.size:
            out["casimir"] = float(np.max(np.abs(self.casimirs - self.casimirs[0])))
        return out


def _log_functional(coeffs: np.ndarray, x: np.ndarray) -> float:
    mask = coeffs != 0
    if np.any(x[mask] <= 0):
        return float("nan")
    return math.fsum(coeffs[mask] * np.log(x[mask]))


def integrate(
    g: GameSpec,
    x0: Sequence,
    T: float,
    ctrl: ODEControl = ODEControl(),
    hs: HamiltonianSpec | None = None,
    casimirs: Sequence[Sequence] = (),
) -> Trajectory:
    """Integrate the replicator field from ``x0`` over ``[0, T]``.

    ``hs`` and ``casimirs`` add audit columns for the logarithmic invariants
    (NaN when the state lies on the boundary).
    """
    st = Stepper(g, ctrl)
    x = np.array([float(v) for v in x0])
    st.check(x)
    x = st.renormalize(x)
    fx = st.f(x)
    t, h = 0.0, ctrl.h0
    times, states = [0.0], [x.copy()]
    nsteps = 0
    while t < T:
        if nsteps >= ctrl.max_steps:
            raise IntegrationError("step budget exhausted")
        h = min(h, T - t)
        x, fx, used, h = st.advance(x, fx, h)
        t += used
        st.check(x)
        times.append(t)
        states.append(x.copy())
        nsteps += 1
    S = np.array(states)
    hc = np.array([float(c) for c in hs.coefficients]) if hs is not None else None
    W = [np.array([float(c) for c in w]) for w in casimirs]
    return Trajectory(
        np.array(times),
        S,
        None if hc is None else np.array([_log_functional(hc, s) for s in S]),
        np.array([[_log_functional(w, s) for w in W] for s in S]) if W else None,
        np.array([[s[sl].sum() for sl in st.slices] for s in S]),
    )


# --------------------------------------------------------------- rescaling


@dataclass(frozen=True)
class RescaleChart:
    """Logarithmic chart ``y_k = -eps^2 log(x_k / delta)`` at a vertex.

    Only the facets containing the vertex carry coordinates; the vertex
    strategies are recovered from the group sums.
    """

    g: GameSpec
    vertex: Vertex
    eps: float
    delta: float = 0.1

    def __post_init__(self):
        if not self.eps > 0:
            raise ValueError("eps must be positive")
        if not 0 < self.delta < 1:
            raise ValueError("delta must lie in (0, 1)")

    @property
    def coords(self) -> tuple[int, ...]:
        used = set(self.vertex)
        return tuple(i for i in range(self.g.n) if i not in used)

    def forward(self, x) -> np.ndarray:
        x = np.asarray(x, dtype=float)
        y = np.zeros(self.g.n)
        for k in self.coords:
            if x[k] <= 0:
                raise SaturationError(f"coordinate {k + 1} is on the boundary; rescaled value is infinite")
            y[k] = -self.eps ** 2 * math.log(x[k] / self.delta)
        return y

    def inverse(self, y) -> np.ndarray:
        y = np.asarray(y, dtype=float)
        x = np.zeros(self.g.n)
        for k in self.coords:
            x[k] = self.delta * math.exp(-y[k] / self.eps ** 2)
        for a, r in enumerate(self.g.group_ranges):
            j = self.vertex[a]
            x[j] = 1.0 - sum(x[k] for k in r if k != j)
        if np.any(x < 0):
            raise ValueError("point is outside the rescaled tube")
        return x

    def rescale(self, direction: str, point) -> np.ndarray:
        if direction == "forward":
            return self.forward(point)
        if direction == "inverse":
            return self.inverse(point)
        raise ValueError("direction must be 'forward' or 'inverse'")


# -------------------------------------------------------- return maps


def check_tubes(g: GameSpec, delta: float) -> None:
    """Raise unless the vertex tubes of width ``delta`` are pairwise disjoint.

    Two vertex tubes differing in a group of size ``m`` meet exactly when
    ``m * delta >= 1``, so the bound is set by the largest non-trivial group.
    """
    sizes = [m for m in g.groups if m > 1]
    if sizes and max(sizes) * delta >= 1:
        raise ValueError(f"tube width {delta} too large: vertex tubes overlap (need delta < 1/{max(sizes)})")


@dataclass
class PoincareResult:
    """Outcome of one numerical return map evaluation.

    ``status`` is ``"ok"``, ``"itinerary_mismatch"``, ``"time_budget"`` or
    ``"integration_error"``; ``vertices`` is the vertex sequence actually
    visited, read off from the crossed sections.
    """

    y: np.ndarray | None
    status: str
    vertices: list[Vertex]
    time: float


def _locate(st, x0, f0, x1, f1, h, gfun, tol):
    """Bisection on the Hermite interpolant for a sign change of ``gfun`` in the step."""
    lo, hi = 0.0, 1.0
    glo = gfun(x0)
    for _ in range(200):
        mid = 0.5 * (lo + hi)
        xm = hermite(x0, f0, x1, f1, h, mid)
        gm = gfun(xm)
        if abs(gm) < tol:
            return mid, xm
        if (gm > 0) == (glo > 0):
            lo, glo = mid, gm
        else:
            hi = mid
    return mid, xm


def numerical_poincare(
    g: GameSpec,
    fg: FlowGraph,
    edges: Sequence[int],
    eps: float,
    y0,
    delta: float = 0.1,
    ctrl: ODEControl = ODEControl(),
    max_time: float | None = None,
    event_tol: float = 1e-12,
) -> PoincareResult:
    """Numerical first-return map along a path of flowing edges.

    The start point ``y0`` lives on the section of ``edges[0]``: it is
    mapped into state space by the inverse chart at that edge's target,
    where it lies on the entry face ``x_r = delta``. The flow is followed
    from section to section: leaving a vertex when some non-vertex strategy
    rises to ``delta``, entering the next when the old vertex strategy falls
    to ``delta``. Integration stops on entering the target of the last edge
    and the exit point is rescaled in that vertex's chart.
    """
    check_tubes(g, delta)
    edges = list(edges)
    v = fg.target(edges[0])
    chart = RescaleChart(g, v, eps, delta)
    y0 = np.asarray([float(t) for t in y0])
    x = chart.inverse(y0)
    expected = [fg.target(k) for k in edges]  # vertices to enter, in order
    st = Stepper(g, ctrl)
    fx = st.f(x)
    t, h = 0.0, ctrl.h0
    if max_time is None:
        max_time = 400.0 / eps ** 2
    visited = [v]
    mode = "inside"  # inside a vertex tube, waiting to exit
    watch_exit = [k for k in chart.coords]
    entering: tuple[int, Vertex] | None = None
    try:
        while t < max_time:
            x1, f1, used, hnext = st.advance(x, fx, h)
            if mode == "inside":
                crossed = [k for k in watch_exit if x[k] < delta <= x1[k]]
                if crossed:
                    # earliest crossing among the candidates
                    best = None
                    for k in crossed:
                        th, xe = _locate(st, x, fx, x1, f1, used, lambda z, k=k: z[k] - delta, event_tol)
                        if best is None or th < best[0]:
                            best = (th, k, xe)
                    th, k, xe = best
                    a = g.group_of[k]
                    w = list(v)
                    old = w[a]
                    w[a] = k
                    entering = (old, tuple(w))
                    x, fx, t = st.renormalize(xe.copy()), None, t + th * used
                    x[k] = delta
                    fx = st.f(x)
                    mode = "transit"
                    h = max(th * used, ctrl.hmin * 10)
                    continue
            else:
                old, w = entering
                if x[old] > delta >= x1[old]:
                    th, xe = _locate(st, x, fx, x1, f1, used, lambda z: z[old] - delta, event_tol)
                    x, t = st.renormalize(xe.copy()), t + th * used
                    x[old] = delta
                    fx = st.f(x)
                    v = w
                    visited.append(v)
                    step_no = len(visited) - 1
                    if v != expected[step_no]:
                        return PoincareResult(None, "itinerary_mismatch", visited, t)
                    if step_no == len(edges) - 1:
                        out = RescaleChart(g, v, eps, delta).forward(x)
                        out[old] = 0.0
                        return PoincareResult(out, "ok", visited, t)
                    chart = RescaleChart(g, v, eps, delta)
                    watch_exit = list(chart.coords)
                    mode = "inside"
                    h = max(th * used, ctrl.hmin * 10)
                    continue
            x, fx, t, h = x1, f1, t + used, hnext
    except IntegrationError:
        return PoincareResult(None, "integration_error", visited, t)
    return PoincareResult(None, "time_budget", visited, t)


# ----------------------------------------------------- convergence study


def cone_samples(cone: ConeSector, count: int, margin: float = 0.2, seed: int = 0, max_tries: int = 200_000) -> list[tuple]:
    """Seeded rational points of an open cone, normalised to sup-norm one,
    whose every defining inequality is at least ``margin``."""
    import random

    rng = random.Random(seed)
    out = []
    sup = cone.support
    for _ in range(max_tries):
        vals = [Fraction(rng.randint(0, 1000), 1000) for _ in sup]
        top = max(vals)
        if top == 0:
            continue
        y = [Fraction(0)] * cone.n
        for i, val in zip(sup, vals):
            y[i] = val / top
        if all(v >= Fraction(margin).limit_denominator(10**6) for v in cone.values(y)):
            out.append(tuple(y))
            if len(out) == count:
                return out
    raise ValueError("could not find enough samples with the requested margin")


@dataclass
class ConvergenceRow:
    eps: float
    sample: int
    error: float
    status: str
    vertices: list[Vertex] = field(default_factory=list)


@dataclass
class ConvergenceTable:
    rows: list[ConvergenceRow]
    epsilons: list[float]
    monotone: dict[int, bool] | None
    itinerary_ok: bool

    def errors(self, sample: int) -> list[float]:
        return [r.error for r in self.rows if r.sample == sample]


def convergence_study(
    g: GameSpec,
    pl: PiecewiseLinearMap,
    branch: int,
    epsilons: Sequence[float],
    samples: Sequence[Sequence],
    delta: float = 0.1,
    ctrl: ODEControl = ODEControl(),
) -> ConvergenceTable:
    """Sup-norm distance between numerical and piecewise-linear return maps.

    Samples outside the branch cone are reported as ``domain_failure`` rows.
    Monotonicity (weak decrease as ``eps`` shrinks) is judged per sample when
    at least two epsilons are given.
    """
    b: Branch = pl.branches[branch]
    eps_sorted = sorted(epsilons, reverse=True)
    rows = []
    itin_ok = True
    for si, y in enumerate(samples):
        yq = ra.vec(y)
        inside = b.sector.contains(yq)
        target = np.array([float(v) for v in ra.matvec(b.matrix, yq)])
        for eps in eps_sorted:
            if not inside:
                rows.append(ConvergenceRow(eps, si, float("nan"), "domain_failure"))
                continue
            res = numerical_poincare(g, pl.flow, b.edges, eps, [float(v) for v in yq], delta, ctrl)
            if res.status != "ok":
                itin_ok = False
                rows.append(ConvergenceRow(eps, si, float("nan"), res.status, res.vertices))
                continue
            if tuple(res.vertices) != b.vertices[1:]:
                itin_ok = False
            err = float(np.max(np.abs(res.y - target)))
            rows.append(ConvergenceRow(eps, si, err, "ok", res.vertices))
    mono = None
    if len(eps_sorted) > 1:
        mono = {}
        for si in range(len(samples)):
            errs = [r.error for r in rows if r.sample == si]
            mono[si] = all(np.isfinite(errs)) and all(e2 <= e1 for e1, e2 in zip(errs, errs[1:]))
    return ConvergenceTable(rows, eps_sorted, mono, itin_ok)
