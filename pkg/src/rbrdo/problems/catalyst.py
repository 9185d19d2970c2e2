"""Catalyst mixing along a tubular reactor (optimal control, 3 segments).

The state y = (y1, y2) holds the molar fractions of the first two species;
the piecewise-constant control v(t) in [0, 1] blends the two catalysts:

    y1' = v (10 y2 - y1)
    y2' = v (y1 - 10 y2) - (1 - v) y2,   y(0) = (1, 0),  t in [0, 1].

The target is to maximize the final conversion f = 1 - y1(1) - y2(1). With
three segments the decision variables are the segment controls and the two
switch times t1 <= 0.5 < t2.

Within a segment the system is linear time-invariant, y' = A(v) y. The
production integrator is classical fixed-step RK4 with h = 1e-3; because
one RK4 step of a linear system is multiplication by the degree-4 Taylor
polynomial of exp(hA), a whole segment is that matrix raised to the step
count, which this module computes by binary exponentiation. The closed-form
eigenvalue propagator serves as the independent reference.

Uncertain forms treat the segment controls as independent normals with
coefficient of variation 0.1 whose means are decision variables; the ODE is
driven by the most probable (reliability-degraded) control values, so the
reliability index feeds directly into the objective.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from ..core import Bounds, Sense
from ..errors import UsageError
from ..formulation import RbrdoProblem
from ..reliability import PerformanceFunction
from .base import DeterministicProblem

OPTIMUM_DET = 0.048065  # v = (1, 0.2248, 0), t = (0.1338, 0.7237)
DEFAULT_STEP = 1e-3
_MU_FLOOR = 1e-6  # closed box stand-in for the open bound 0 < mu

_BOUNDS_DET = Bounds(np.array([0.0, 0.0, 0.0, 0.0, 0.5]),
                     np.array([1.0, 1.0, 1.0, 0.5, 1.0]))
_BOUNDS_RBRDO = Bounds(np.array([_MU_FLOOR, _MU_FLOOR, _MU_FLOOR, 0.0, 0.5]),
                       np.array([1.0, 1.0, 1.0, 0.5, 1.0]))
_Y0 = np.array([1.0, 0.0])


@dataclass(frozen=True)
class CatalystControl:
    """Piecewise-constant catalyst fractions with their switch times."""

    values: np.ndarray
    t1: float
    t2: float

    def __post_init__(self):
        v = np.asarray(self.values, dtype=float)
        if v.shape[-1] != 3:
            raise UsageError("three control segments are required")
        if not 0.0 <= self.t1 <= 0.5:
            raise UsageError("t1 must lie in [0, 0.5]")
        if not 0.5 <= self.t2 <= 1.0:
            raise UsageError("t2 must lie in (0.5, 1]")
        object.__setattr__(self, "values", v)

    @property
    def durations(self) -> np.ndarray:
        return np.array([self.t1, self.t2 - self.t1, 1.0 - self.t2])


def _system_matrix(v) -> np.ndarray:
    """A(v) of y' = A(v) y, batched over the shape of v."""
    v = np.asarray(v, dtype=float)
    a = np.empty(v.shape + (2, 2))
    a[..., 0, 0] = -v
    a[..., 0, 1] = 10.0 * v
    a[..., 1, 0] = v
    a[..., 1, 1] = -(9.0 * v + 1.0)
    return a


def _rk4_segment_matrix(a, duration, h):
    """RK4 propagator of one segment: (I + Z + Z^2/2 + Z^3/6 + Z^4/24)^n.

    n = ceil(duration/h) equal steps of size <= h; binary exponentiation
    reproduces the classical step-by-step iteration exactly (the system is
    linear, so each RK4 step is the same matrix product).
    """
    eye = np.broadcast_to(np.eye(2), a.shape).copy()
    if duration <= 0.0:
        return eye
    n = max(1, int(np.ceil(duration / h - 1e-12)))
    z = (duration / n) * a
    z2 = z @ z
    step = eye + z + z2 / 2.0 + (z2 @ z) / 6.0 + (z2 @ z2) / 24.0
    out = eye
    p = step
    e = n
    while e:
        if e & 1:
            out = p @ out
        e >>= 1
        if e:
            p = p @ p
    return out


def _expm_segment_matrix(a, duration):
    """Closed-form exp(A * duration) via the (real, distinct) eigenvalues."""
    tr = a[..., 0, 0] + a[..., 1, 1]
    det = a[..., 0, 0] * a[..., 1, 1] - a[..., 0, 1] * a[..., 1, 0]
    disc = np.sqrt(tr * tr - 4.0 * det)
    lam1 = 0.5 * (tr + disc)
    lam2 = 0.5 * (tr - disc)
    eye = np.broadcast_to(np.eye(2), a.shape)
    e1 = np.exp(lam1 * duration)[..., None, None]
    e2 = np.exp(lam2 * duration)[..., None, None]
    l1 = lam1[..., None, None]
    l2 = lam2[..., None, None]
    return (e1 * (a - l2 * eye) - e2 * (a - l1 * eye)) / (l1 - l2)


def catalyst_simulate(control: CatalystControl, values=None,
                      method: str = "rk4", h: float = DEFAULT_STEP):
    """Final molar fractions (y1, y2) at t = 1.

    ``values`` overrides the control's segment values (e.g. with the most
    probable perturbed controls) and may carry leading batch axes; switch
    times are shared across the batch. ``method`` selects the fixed-step
    RK4 production integrator or the closed-form reference propagator.
    """
    if method not in ("rk4", "closed_form"):
        raise UsageError(f"unknown integration method {method!r}")
    v = control.values if values is None else np.asarray(values, dtype=float)
    if v.shape[-1] != 3:
        raise UsageError("three control segments are required")
    y = np.broadcast_to(_Y0, v.shape[:-1] + (2,)).copy()
    for seg, duration in enumerate(control.durations):
        a = _system_matrix(v[..., seg])
        if method == "rk4":
            m = _rk4_segment_matrix(a, float(duration), h)
        else:
            m = _expm_segment_matrix(a, float(duration))
        y = np.einsum("...ij,...j->...i", m, y)
    return y


def conversion(control: CatalystControl, values=None, method: str = "rk4",
               h: float = DEFAULT_STEP):
    """Objective f = 1 - y1(1) - y2(1)."""
    y = catalyst_simulate(control, values=values, method=method, h=h)
    return 1.0 - y[..., 0] - y[..., 1]


def _decision_objective(d, x, method="rk4", h=DEFAULT_STEP):
    """Objective over decision rows d = (c0, c1, c2, t1, t2), controls x."""
    d = np.asarray(d, dtype=float)
    x = np.asarray(x, dtype=float)
    flat_d = d.reshape(-1, d.shape[-1])
    t1 = flat_d[0, 3]
    t2 = flat_d[0, 4]
    if not (np.allclose(flat_d[:, 3], t1) and np.allclose(flat_d[:, 4], t2)):
        out = np.array([
            conversion(CatalystControl(row_x[:3], row_d[3], row_d[4]),
                       method=method, h=h)
            for row_d, row_x in zip(flat_d, np.asarray(x).reshape(-1, 3))])
        return out.reshape(d.shape[:-1])
    control = CatalystControl(flat_d[0, :3], float(np.clip(t1, 0.0, 0.5)),
                              float(np.clip(t2, 0.5, 1.0)))
    return conversion(control, values=x[..., :3], method=method, h=h)


def deterministic() -> DeterministicProblem:
    def objective(d):
        d = np.asarray(d, dtype=float)
        return _decision_objective(d, d[..., :3])

    return DeterministicProblem(
        name="catalyst",
        bounds=_BOUNDS_DET,
        sense=Sense.MAXIMIZE,
        objective=objective,
        violation=lambda d: np.zeros(np.asarray(d).shape[:-1]),
        optimum=OPTIMUM_DET,
    )


def _random_vars(d):
    d = np.asarray(d, dtype=float)
    mu = d[..., :3]
    return mu, 0.1 * np.maximum(mu, _MU_FLOOR)


def _performance_functions():
    def make(i):
        def g(d, x):
            return np.asarray(x, dtype=float)[..., i]

        def grad(d, x):
            x = np.asarray(x, dtype=float)
            out = np.zeros(x.shape)
            out[..., i] = 1.0
            return out

        return PerformanceFunction(g, grad, name=f"g{i + 1}")

    return tuple(make(i) for i in range(3))


def rbrdo() -> RbrdoProblem:
    return RbrdoProblem(
        name="catalyst",
        det_bounds=_BOUNDS_RBRDO,
        beta_bounds=(0.1, 5.0),
        senses=(Sense.MAXIMIZE,),
        objective=_decision_objective,
        constraints=_performance_functions(),
        random_vars=_random_vars,
        noise_mask=np.array([True, True, True, False, False]),
        objective_at_mpp=True,
    )
