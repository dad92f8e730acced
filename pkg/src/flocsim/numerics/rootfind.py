"""Bracketed scalar root finding (Brent's method)."""

from typing import Callable, NamedTuple

from ..errors import BracketError

_EPS = 2.220446049250313e-16


class RootResult(NamedTuple):
    root: float
    residual: float  # |func(root)|
    iterations: int


def find_root(func: Callable[[float], float], lo: float, hi: float, tol: float = 1e-13) -> RootResult:
    """Find a root of ``func`` in ``[lo, hi]`` where ``func(lo)*func(hi) <= 0``.

    Brent's method: bisection safeguarded by secant / inverse quadratic
    interpolation. The bracket shrinks to ``2*eps*|x| + tol`` and the
    returned value always lies inside the initial bracket.
    """
    a, b = float(lo), float(hi)
    fa, fb = float(func(a)), float(func(b))
    if fa == 0.0:
        return RootResult(a, 0.0, 0)
    if fb == 0.0:
        return RootResult(b, 0.0, 0)
    if (fa > 0.0) == (fb > 0.0):
        raise BracketError(f"no sign change on [{lo}, {hi}]: f(lo)={fa}, f(hi)={fb}")

    c, fc = a, fa
    e = d = b - a
    it = 0
    while True:
        if abs(fc) < abs(fb):
            a, b, c = b, c, b
            fa, fb, fc = fb, fc, fb
        tol_eff = 2.0 * _EPS * abs(b) + 0.5 * tol
        m = 0.5 * (c - b)
        if abs(m) <= tol_eff or fb == 0.0:
            return RootResult(b, abs(fb), it)
        if abs(e) < tol_eff or abs(fa) <= abs(fb):
            e = d = m
        else:
            s = fb / fa
            if a == c:
                p = 2.0 * m * s
                q = 1.0 - s
            else:
                q = fa / fc
                r = fb / fc
                p = s * (2.0 * m * q * (q - r) - (b - a) * (r - 1.0))
                q = (q - 1.0) * (r - 1.0) * (s - 1.0)
            if p > 0.0:
                q = -q
            else:
                p = -p
            s = e
            e = d
            if 2.0 * p < 3.0 * m * q - abs(tol_eff * q) and p < abs(0.5 * s * q):
                d = p / q
            else:
                e = d = m
        a, fa = b, fb
        if abs(d) > tol_eff:
            b += d
        elif m > 0.0:
            b += tol_eff
        else:
            b -= tol_eff
        fb = float(func(b))
        it += 1
        if (fb > 0.0) == (fc > 0.0):
            c, fc = a, fa
            e = d = b - a
