"""Adaptive explicit Runge-Kutta integration with dense output.

The stepper is the Dormand-Prince 5(4) embedded pair (FSAL) with a PI
step-size controller and the pair's free quartic interpolant for dense
output (a cubic Hermite falls well short of the nodal accuracy; the
quartic keeps dense-output error within a small factor of it). The method
is deliberately explicit only: stiffness induced by small timescale
separation is handled by step-size limits, not by an implicit method.

The compiled kernel in ``flocsim._fastrk`` mirrors this file's algorithm
and constants; keep the two in sync.
"""

import math
from dataclasses import dataclass

import numpy as np

from ..errors import ConfigError, DomainError, IntegrationError

# Dormand-Prince 5(4) tableau
C = (0.0, 1 / 5, 3 / 10, 4 / 5, 8 / 9, 1.0, 1.0)
A = (
    (),
    (1 / 5,),
    (3 / 40, 9 / 40),
    (44 / 45, -56 / 15, 32 / 9),
    (19372 / 6561, -25360 / 2187, 64448 / 6561, -212 / 729),
    (9017 / 3168, -355 / 33, 46732 / 5247, 49 / 176, -5103 / 18656),
    (35 / 384, 0.0, 500 / 1113, 125 / 192, -2187 / 6784, 11 / 84),
)
# 5th order solution = stage weights of the last row (FSAL); E = b5 - b4
E = (71 / 57600, 0.0, -71 / 16695, 71 / 1920, -17253 / 339200, 22 / 525, -1 / 40)

# free quartic interpolant: y(t0 + s h) = y0 + h s sum_j (P^T k)_j s^j
P = (
    (1.0, -8048581381 / 2820520608, 8663915743 / 2820520608, -12715105075 / 11282082432),
    (0.0, 0.0, 0.0, 0.0),
    (0.0, 131558114200 / 32700410799, -68118460800 / 10900136933, 87487479700 / 32700410799),
    (0.0, -1754552775 / 470086768, 14199869525 / 1410260304, -10690763975 / 1880347072),
    (0.0, 127303824393 / 49829197408, -318862633887 / 49829197408, 701980252875 / 199316789632),
    (0.0, -282668133 / 205662961, 2019193451 / 616988883, -1453857185 / 822651844),
    (0.0, 40617522 / 29380423, -110615467 / 29380423, 69997945 / 29380423),
)

_A_ROWS = [np.array(row, dtype=float) for row in A]
_E_ROW = np.array(E, dtype=float)
_P_T = np.array(P, dtype=float).T  # (4, 7)

SAFETY = 0.9
BETA = 0.04           # PI controller: integral gain
ALPHA = 0.2 - 0.75 * BETA
FAC_MIN = 0.2
FAC_MAX = 10.0
MIN_FACOLD = 1e-4


@dataclass(frozen=True)
class IntegratorConfig:
    """Tolerances and budgets for :func:`integrate`.

    ``rel_tol`` must not be looser than 1e-3; the mixed per-component
    error weight is ``abs_tol + rel_tol * |y|``.
    """

    rel_tol: float = 1e-8
    abs_tol: float = 1e-10
    max_step: float = math.inf
    max_steps: int = 10_000_000
    grid_size: int = 2000

    def __post_init__(self):
        if not (0.0 < self.rel_tol <= 1e-3):
            raise ConfigError(f"rel_tol must be in (0, 1e-3], got {self.rel_tol}")
        if self.abs_tol <= 0.0:
            raise ConfigError(f"abs_tol must be positive, got {self.abs_tol}")
        if self.max_step <= 0.0:
            raise ConfigError(f"max_step must be positive, got {self.max_step}")
        if self.max_steps < 1:
            raise ConfigError(f"max_steps must be >= 1, got {self.max_steps}")
        if self.grid_size < 2:
            raise ConfigError(f"grid_size must be >= 2, got {self.grid_size}")


class Trajectory:
    """Accepted integration nodes plus dense-output data.

    ``times`` is strictly increasing; ``states`` has one row per node;
    ``derivs`` holds the right-hand side at each node. ``dense`` carries
    the quartic interpolation coefficients of each accepted step with shape
    (nsteps, 4, dim); without them :meth:`sample` falls back to the cubic
    Hermite built from the node derivatives.
    """

    def __init__(self, times, states, derivs, dense=None, columns=None,
                 naccept=0, nreject=0, nfev=0):
        self.times = np.asarray(times, dtype=float)
        self.states = np.asarray(states, dtype=float)
        self.derivs = np.asarray(derivs, dtype=float)
        self.dense = None if dense is None else np.asarray(dense, dtype=float)
        self.columns = list(columns) if columns is not None else [
            f"y{i}" for i in range(self.states.shape[1])
        ]
        self.naccept = naccept
        self.nreject = nreject
        self.nfev = nfev

    @property
    def t0(self):
        return float(self.times[0])

    @property
    def t1(self):
        return float(self.times[-1])

    def sample(self, t):
        """Evaluate the dense output at scalar or array ``t`` within the span."""
        t_arr = np.atleast_1d(np.asarray(t, dtype=float))
        if t_arr.min() < self.times[0] - 1e-12 or t_arr.max() > self.times[-1] + 1e-12:
            raise DomainError(
                f"sample time outside [{self.times[0]}, {self.times[-1]}]"
            )
        idx = np.clip(np.searchsorted(self.times, t_arr, side="right") - 1, 0, len(self.times) - 2)
        t_lo = self.times[idx]
        h = self.times[idx + 1] - t_lo
        theta = np.clip((t_arr - t_lo) / h, 0.0, 1.0)[:, None]
        if self.dense is not None:
            Q = self.dense[idx]  # (m, 4, dim)
            acc = Q[:, 3, :]
            for j in (2, 1, 0):
                acc = acc * theta + Q[:, j, :]
            out = self.states[idx] + (h[:, None] * theta) * acc
        else:
            y0 = self.states[idx]
            y1 = self.states[idx + 1]
            f0 = self.derivs[idx]
            f1 = self.derivs[idx + 1]
            t2 = theta * theta
            t3 = t2 * theta
            out = ((2.0 * t3 - 3.0 * t2 + 1.0) * y0
                   + (t3 - 2.0 * t2 + theta) * (h[:, None] * f0)
                   + (-2.0 * t3 + 3.0 * t2) * y1
                   + (t3 - t2) * (h[:, None] * f1))
        if np.isscalar(t) or np.ndim(t) == 0:
            return out[0]
        return out

    def sample_grid(self, n):
        """Uniform grid of ``n`` points over the span and states there."""
        grid = np.linspace(self.times[0], self.times[-1], n)
        return grid, self.sample(grid)

    def write_csv(self, path):
        with open(path, "w", encoding="utf-8") as fh:
            fh.write("t," + ",".join(self.columns) + "\n")
            for t, row in zip(self.times, self.states):
                fh.write(repr(float(t)) + "," + ",".join(repr(float(v)) for v in row) + "\n")


def _rms_norm(v, scale):
    return float(np.sqrt(np.mean((v / scale) ** 2)))


def _initial_step(rhs, t0, y0, f0, t1, rtol, atol, max_step):
    with np.errstate(over="ignore", invalid="ignore", divide="ignore"):
        scale = atol + rtol * np.abs(y0)
        d0 = _rms_norm(y0, scale)
        d1 = _rms_norm(f0, scale)
        h0 = 1e-6 if (d0 < 1e-5 or d1 < 1e-5) else 0.01 * d0 / d1
        h0 = min(h0, t1 - t0, max_step)
        if not (math.isfinite(h0) and h0 > 0.0):
            h0 = min(1e-6, t1 - t0, max_step)
        y1 = y0 + h0 * f0
        f1 = rhs(t0 + h0, y1)
        d2 = _rms_norm(np.asarray(f1, dtype=float) - f0, scale) / h0
        if max(d1, d2) <= 1e-15:
            h1 = max(1e-6, h0 * 1e-3)
        else:
            h1 = (0.01 / max(d1, d2)) ** 0.2
        h = min(100.0 * h0, h1, t1 - t0, max_step)
    if not (math.isfinite(h) and h > 0.0):
        h = min(1e-6, t1 - t0, max_step)
    return h


def integrate(rhs, init, t_span, config=None):
    """Integrate ``y' = rhs(t, y)`` over ``t_span = (t0, t1)``, ``t1 > t0``.

    Returns a :class:`Trajectory`. Raises :class:`IntegrationError` when the
    step size underflows (stiffness beyond budget) or ``max_steps`` is
    exceeded; the error carries the last valid time and partial trajectory.
    """
    cfg = config or IntegratorConfig()
    t0, t1 = float(t_span[0]), float(t_span[1])
    if not t1 > t0:
        raise ConfigError(f"t_span must satisfy t1 > t0, got {t_span}")
    y = np.array(init, dtype=float)
    if y.ndim != 1:
        raise ConfigError("initial state must be one-dimensional")
    f = np.asarray(rhs(t0, y), dtype=float)
    if not np.all(np.isfinite(f)):
        raise DomainError("rhs is not finite at the initial state")

    rtol, atol = cfg.rel_tol, cfg.abs_tol
    ts, ys, fs = [t0], [y.copy()], [f.copy()]
    dense = []
    nfev = 2  # initial rhs + the probe inside _initial_step
    naccept = nreject = 0

    h = _initial_step(rhs, t0, y, f, t1, rtol, atol, cfg.max_step)
    t = t0
    facold = MIN_FACOLD
    k = np.empty((7, y.size), dtype=float)
    k[0] = f
    rejected = False

    while t < t1:
        if naccept + nreject >= cfg.max_steps:
            raise IntegrationError(
                f"max_steps={cfg.max_steps} exceeded at t={t}",
                t_last=t,
                trajectory=Trajectory(ts, ys, fs, dense,
                                      naccept=naccept, nreject=nreject, nfev=nfev),
            )
        h = min(h, cfg.max_step, t1 - t)
        if h <= 1e-14 * max(1.0, abs(t)):
            raise IntegrationError(
                f"step size underflow (h={h}) at t={t}",
                t_last=t,
                trajectory=Trajectory(ts, ys, fs, dense,
                                      naccept=naccept, nreject=nreject, nfev=nfev),
            )

        with np.errstate(over="ignore", invalid="ignore", divide="ignore"):
            for i in range(1, 7):
                yi = y + h * np.dot(_A_ROWS[i], k[:i])
                k[i] = rhs(t + C[i] * h, yi)
            nfev += 6
            y_new = yi  # stage 7 argument equals the 5th order solution (FSAL)
            f_new = k[6]
            err_vec = h * np.dot(_E_ROW, k)
            scale = atol + rtol * np.maximum(np.abs(y), np.abs(y_new))
            err = _rms_norm(err_vec, scale)

        if not np.isfinite(err):
            err = 2.0  # force rejection and shrink

        if err <= 1.0:
            t_new = t + h
            naccept += 1
            ts.append(t_new)
            ys.append(y_new.copy())
            fs.append(f_new.copy())
            dense.append(np.dot(_P_T, k))
            fac11 = err ** ALPHA if err > 0.0 else 0.0
            fac = fac11 / facold ** BETA if err > 0.0 else 1.0 / FAC_MAX
            fac = max(1.0 / FAC_MAX, min(1.0 / FAC_MIN, fac / SAFETY))
            h_new = h / fac
            if rejected:
                h_new = min(h_new, h)
            facold = max(err, MIN_FACOLD)
            t, y = t_new, y_new
            k[0] = f_new
            rejected = False
            h = h_new
        else:
            nreject += 1
            rejected = True
            fac11 = err ** ALPHA
            h = h / min(1.0 / FAC_MIN, fac11 / SAFETY)

    return Trajectory(ts, ys, fs, dense, naccept=naccept, nreject=nreject, nfev=nfev)
