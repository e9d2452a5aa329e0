"""Fixed-step RK4 integration of base vector fields with first-integral monitoring."""

from __future__ import annotations

import csv
import math
from dataclasses import dataclass, field

import numpy as np

from .exterior import SkewField, skew_array


class FlowSingularityError(ArithmeticError):
    """Raised when the vector field cannot be evaluated along a trajectory."""

    def __init__(self, time, point, cause, trajectory=None):
        super().__init__(f"vector field failed at t={time:.6g}, x={tuple(np.round(point, 10))}: {cause}")
        self.time = time
        self.point = point
        self.trajectory = trajectory


@dataclass
class Trajectory:
    times: np.ndarray
    points: np.ndarray
    coords: tuple = ()
    meta: dict = field(default_factory=dict)

    def __len__(self):
        return len(self.times)

    @property
    def start(self):
        return self.points[0]

    @property
    def end(self):
        return self.points[-1]

    def samples(self, count):
        """``count`` points spread evenly along the trajectory (ends included)."""
        idx = np.unique(np.linspace(0, len(self) - 1, max(int(count), 1)).round().astype(int))
        return [tuple(self.points[i]) for i in idx]


def as_callable(vf):
    """Turn a degree-1 field on a tangent algebroid into ``x -> ndarray``."""
    if callable(vf) and not isinstance(vf, SkewField):
        return vf
    if not isinstance(vf, SkewField) or vf.degree != 1:
        raise TypeError("expected a vector field or a callable")
    n = vf.algebroid.rank

    def f(x):
        vals = vf.values(tuple(x))
        return np.array([vals.get((k,), 0.0) for k in range(n)])

    return f


def covered_hamiltonian_field(tensor, h):
    """``x -> -P(x) grad h`` for a base bivector ``tensor`` (``-pi# dh`` in components).

    With ``(pi# dh)^j = sum_i d_i h pi^{ij}`` this is the field whose flow is
    ``qdot = dh/dp`` for the canonical tensor.
    """
    n = tensor.algebroid.n

    def f(x):
        x = tuple(float(v) for v in x)
        P = skew_array(tensor, x, 0).c[..., 0]
        g = h.jet(x, 1).c[1 : n + 1]
        return -(g @ P)

    return f


def integrate(vf, x0, t_end, dt, coords=()):
    """Classical RK4 with fixed step ``dt`` from ``t = 0`` to ``t_end``.

    The final step is shortened if ``t_end`` is not a multiple of ``dt``.
    """
    if not dt > 0:
        raise ValueError("dt must be positive")
    if not t_end >= 0:
        raise ValueError("t_end must be non-negative")
    f = as_callable(vf)
    steps = int(math.floor(t_end / dt + 1e-9))
    hs = [dt] * steps
    rest = t_end - steps * dt
    if rest > 1e-12 * max(1.0, t_end):
        hs.append(rest)
    x = np.asarray(x0, dtype=float).copy()
    times = np.empty(len(hs) + 1)
    pts = np.empty((len(hs) + 1, x.size))
    times[0], pts[0] = 0.0, x
    t = 0.0

    def ev(y, tt):
        try:
            v = np.asarray(f(y), dtype=float)
        except (ArithmeticError, ValueError) as exc:
            raise FlowSingularityError(tt, y, exc, Trajectory(times[:k + 1].copy(), pts[:k + 1].copy(), tuple(coords))) from exc
        if not np.all(np.isfinite(v)):
            raise FlowSingularityError(tt, y, "non-finite value", Trajectory(times[:k + 1].copy(), pts[:k + 1].copy(), tuple(coords)))
        return v

    for k, h in enumerate(hs):
        k1 = ev(x, t)
        k2 = ev(x + 0.5 * h * k1, t + 0.5 * h)
        k3 = ev(x + 0.5 * h * k2, t + 0.5 * h)
        k4 = ev(x + h * k3, t + h)
        x = x + (h / 6.0) * (k1 + 2 * k2 + 2 * k3 + k4)
        t = (k + 1) * dt if k < steps else t_end
        times[k + 1], pts[k + 1] = t, x
    times[-1] = t_end
    return Trajectory(times, pts, tuple(coords))


def conservation_report(traj, functions):
    """``{label: max_t |f(x(t)) - f(x0)| / max(1, |f(x0)|)}``."""
    out = {}
    for i, fn in enumerate(functions):
        label = getattr(fn, "label", None) or f"f{i}"
        vals = np.array([fn(tuple(p)) for p in traj.points])
        out[label] = float(np.max(np.abs(vals - vals[0])) / max(1.0, abs(vals[0])))
    return out


def write_csv(traj, path, stride=1):
    """Header ``t, <coords>``; every ``stride``-th sample plus the last one."""
    if stride < 1:
        raise ValueError("stride must be >= 1")
    coords = traj.coords or tuple(f"x{i}" for i in range(traj.points.shape[1]))
    rows = list(range(0, len(traj), stride))
    if rows[-1] != len(traj) - 1:
        rows.append(len(traj) - 1)
    with open(path, "w", newline="") as fh:
        w = csv.writer(fh)
        w.writerow(["t", *coords])
        for i in rows:
            w.writerow([repr(float(traj.times[i]))] + [repr(float(v)) for v in traj.points[i]])
    return len(rows)


def read_csv(path):
    with open(path, newline="") as fh:
        r = csv.reader(fh)
        head = next(r)
        data = np.array([[float(v) for v in row] for row in r])
    return Trajectory(data[:, 0], data[:, 1:], tuple(head[1:]))


def max_deviation(a, b):
    """Pointwise max distance between two trajectories on the same time grid."""
    if len(a) != len(b) or not np.allclose(a.times, b.times):
        raise ValueError("trajectories are on different time grids")
    return float(np.max(np.abs(a.points - b.points)))
