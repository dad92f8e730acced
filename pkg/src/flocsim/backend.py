"""Integration backend selection.

The hot inner loop of every analysis is adaptive ODE stepping. When the
compiled extension ``flocsim._fastrk`` is importable (built from
``_fastrk.pyx``) and a model can be encoded as a flat parameter block, the
stepping runs there; otherwise the pure-Python kernel in
:mod:`flocsim.numerics` is used. Both implement the identical pair,
controller, and constants. Set ``FLOCSIM_PURE=1`` to force the fallback.
"""

import os
from typing import NamedTuple

import numpy as np

from .errors import ConfigError, IntegrationError
from .numerics import IntegratorConfig, Trajectory, integrate

try:
    if os.environ.get("FLOCSIM_PURE"):
        _fastrk = None
    else:
        from . import _fastrk
except ImportError:
    _fastrk = None

_KIND_CODES = {"full_single": 0, "reduced_single": 1, "full_multi": 2, "reduced_multi": 3}

_STATUS_OK = 0
_STATUS_UNDERFLOW = 1
_STATUS_MAX_STEPS = 2


class System(NamedTuple):
    """A simulatable ODE system: generic rhs plus optional packed encoding."""

    rhs: object
    packed: object  # (kind name, params array) or None
    columns: list


def compiled_available() -> bool:
    return _fastrk is not None


def backend_name(system: System = None) -> str:
    if _fastrk is None:
        return "pure"
    if system is not None and system.packed is None:
        return "pure"
    return "compiled"


def simulate(system: System, y0, t_span, config: IntegratorConfig = None) -> Trajectory:
    """Integrate a :class:`System`, dispatching to the fastest usable backend."""
    cfg = config or IntegratorConfig()
    if not float(t_span[1]) > float(t_span[0]):
        raise ConfigError(f"t_span must satisfy t1 > t0, got {t_span}")
    if _fastrk is not None and system.packed is not None:
        kind_name, params = system.packed
        ts, ys, fs, dense, status, naccept, nreject, nfev = _fastrk.integrate_packed(
            _KIND_CODES[kind_name],
            np.ascontiguousarray(params, dtype=float),
            np.ascontiguousarray(y0, dtype=float),
            float(t_span[0]),
            float(t_span[1]),
            cfg.rel_tol,
            cfg.abs_tol,
            cfg.max_step,
            cfg.max_steps,
        )
        traj = Trajectory(ts, ys, fs, dense, columns=system.columns,
                          naccept=naccept, nreject=nreject, nfev=nfev)
        if status == _STATUS_UNDERFLOW:
            raise IntegrationError(
                f"step size underflow at t={ts[-1]}", t_last=ts[-1], trajectory=traj
            )
        if status == _STATUS_MAX_STEPS:
            raise IntegrationError(
                f"max_steps={cfg.max_steps} exceeded at t={ts[-1]}",
                t_last=ts[-1],
                trajectory=traj,
            )
        return traj
    traj = integrate(system.rhs, y0, t_span, cfg)
    traj.columns = list(system.columns)
    return traj
