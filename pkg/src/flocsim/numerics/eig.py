"""Eigenvalues of small dense real matrices.

2x2 matrices are solved in closed form from trace and determinant. Larger
matrices (up to 64x64) go through Parlett-Reinsch balancing, Householder
reduction to upper Hessenberg form, and the Francis double-shift QR
iteration with deflation. Eigenvalues are returned sorted by real part,
descending.
"""

import math

import numpy as np

from ..errors import ConfigError, DomainError, NumericsError

_EPS = 2.220446049250313e-16
_MAX_DIM = 64
_MAX_SWEEPS = 30  # QR sweeps per deflation block before giving up


def eigenvalues(M) -> list[complex]:
    M = np.asarray(M)
    if np.iscomplexobj(M):
        raise ConfigError("eigenvalues expects a real matrix")
    A = np.array(M, dtype=float)
    if A.ndim != 2 or A.shape[0] != A.shape[1]:
        raise ConfigError(f"matrix must be square, got shape {A.shape}")
    n = A.shape[0]
    if n > _MAX_DIM:
        raise DomainError(f"matrix dimension {n} exceeds supported maximum {_MAX_DIM}")
    if not np.all(np.isfinite(A)):
        raise DomainError("matrix contains non-finite entries")

    if n == 0:
        return []
    if n == 1:
        return [complex(A[0, 0])]
    if n == 2:
        eigs = eig2x2(A[0, 0], A[0, 1], A[1, 0], A[1, 1])
    else:
        H = _hessenberg(_balance(A))
        eigs = _hqr(H)
    return sorted(eigs, key=lambda z: (-z.real, -z.imag))


def eig2x2(a, b, c, d) -> tuple[complex, complex]:
    """Closed-form eigenvalues of [[a, b], [c, d]]."""
    tr = a + d
    det = a * d - b * c
    disc = tr * tr - 4.0 * det
    if disc >= 0.0:
        rt = math.sqrt(disc)
        # evaluate the larger-magnitude root first to avoid cancellation
        if tr >= 0.0:
            l1 = 0.5 * (tr + rt)
        else:
            l1 = 0.5 * (tr - rt)
        l2 = det / l1 if l1 != 0.0 else 0.5 * (tr - math.copysign(rt, tr))
        return (complex(l1), complex(l2))
    im = 0.5 * math.sqrt(-disc)
    re = 0.5 * tr
    return (complex(re, im), complex(re, -im))


def _balance(a):
    RADIX = 2.0
    n = a.shape[0]
    done = False
    while not done:
        done = True
        for i in range(n):
            r = np.sum(np.abs(a[i, :])) - abs(a[i, i])
            c = np.sum(np.abs(a[:, i])) - abs(a[i, i])
            if c == 0.0 or r == 0.0:
                continue
            g = r / RADIX
            f = 1.0
            s = c + r
            while c < g:
                f *= RADIX
                c *= RADIX * RADIX
            g = r * RADIX
            while c > g:
                f /= RADIX
                c /= RADIX * RADIX
            if (c + r) / f < 0.95 * s:
                done = False
                a[i, :] *= 1.0 / f
                a[:, i] *= f
    return a


def _hessenberg(a):
    n = a.shape[0]
    for k in range(n - 2):
        x = a[k + 1:, k]
        xnorm = math.sqrt(float(np.dot(x, x)))
        if xnorm == 0.0 or float(np.sum(np.abs(x[1:]))) == 0.0:
            continue
        v = x.copy()
        v[0] += math.copysign(xnorm, x[0]) if x[0] != 0.0 else xnorm
        vnorm = math.sqrt(float(np.dot(v, v)))
        if vnorm == 0.0:
            continue
        v /= vnorm
        a[k + 1:, k:] -= 2.0 * np.outer(v, v @ a[k + 1:, k:])
        a[:, k + 1:] -= 2.0 * np.outer(a[:, k + 1:] @ v, v)
        a[k + 2:, k] = 0.0
    return a


def _hqr(a):
    """Francis double-shift QR on an upper Hessenberg matrix (in place)."""
    n = a.shape[0]
    wr = [0.0] * n
    wi = [0.0] * n
    anorm = float(np.sum(np.abs(np.triu(a, -1))))
    if anorm == 0.0:
        return [complex(0.0)] * n
    t = 0.0
    nn = n - 1
    while nn >= 0:
        its = 0
        while True:
            for l in range(nn, 0, -1):
                s = abs(a[l - 1, l - 1]) + abs(a[l, l])
                if s == 0.0:
                    s = anorm
                if abs(a[l, l - 1]) <= _EPS * s:
                    a[l, l - 1] = 0.0
                    break
            else:
                l = 0
            x = a[nn, nn]
            if l == nn:
                wr[nn] = x + t
                wi[nn] = 0.0
                nn -= 1
                break
            y = a[nn - 1, nn - 1]
            w = a[nn, nn - 1] * a[nn - 1, nn]
            if l == nn - 1:
                p = 0.5 * (y - x)
                q = p * p + w
                z = math.sqrt(abs(q))
                x += t
                if q >= 0.0:
                    z = p + math.copysign(z, p)
                    wr[nn - 1] = wr[nn] = x + z
                    if z != 0.0:
                        wr[nn] = x - w / z
                    wi[nn - 1] = wi[nn] = 0.0
                else:
                    wr[nn - 1] = wr[nn] = x + p
                    wi[nn - 1] = -z
                    wi[nn] = z
                nn -= 2
                break
            if its == _MAX_SWEEPS:
                raise NumericsError(
                    f"QR iteration did not converge within {_MAX_SWEEPS} sweeps"
                )
            if its == 10 or its == 20:
                # exceptional shift to break symmetry-induced cycles
                t += x
                for i in range(nn + 1):
                    a[i, i] -= x
                s = abs(a[nn, nn - 1]) + abs(a[nn - 1, nn - 2])
                y = x = 0.75 * s
                w = -0.4375 * s * s
            its += 1
            for m in range(nn - 2, l - 1, -1):
                z = a[m, m]
                r = x - z
                s = y - z
                p = (r * s - w) / a[m + 1, m] + a[m, m + 1]
                q = a[m + 1, m + 1] - z - r - s
                r = a[m + 2, m + 1]
                s = abs(p) + abs(q) + abs(r)
                p /= s
                q /= s
                r /= s
                if m == l:
                    break
                u = abs(a[m, m - 1]) * (abs(q) + abs(r))
                v = abs(p) * (abs(a[m - 1, m - 1]) + abs(z) + abs(a[m + 1, m + 1]))
                if u <= _EPS * v:
                    break
            for i in range(m + 2, nn + 1):
                a[i, i - 2] = 0.0
                if i != m + 2:
                    a[i, i - 3] = 0.0
            for k in range(m, nn):
                if k != m:
                    p = a[k, k - 1]
                    q = a[k + 1, k - 1]
                    r = a[k + 2, k - 1] if k != nn - 1 else 0.0
                    x = abs(p) + abs(q) + abs(r)
                    if x != 0.0:
                        p /= x
                        q /= x
                        r /= x
                s = math.copysign(math.sqrt(p * p + q * q + r * r), p)
                if s == 0.0:
                    continue
                if k == m:
                    if l != m:
                        a[k, k - 1] = -a[k, k - 1]
                else:
                    a[k, k - 1] = -s * x
                p += s
                x = p / s
                y = q / s
                z = r / s
                q /= p
                r /= p
                for j in range(k, nn + 1):
                    p = a[k, j] + q * a[k + 1, j]
                    if k != nn - 1:
                        p += r * a[k + 2, j]
                        a[k + 2, j] -= p * z
                    a[k + 1, j] -= p * y
                    a[k, j] -= p * x
                mmin = nn if nn < k + 3 else k + 3
                for i in range(l, mmin + 1):
                    p = x * a[i, k] + y * a[i, k + 1]
                    if k != nn - 1:
                        p += z * a[i, k + 2]
                        a[i, k + 2] -= p * r
                    a[i, k + 1] -= p * q
                    a[i, k] -= p
    return [complex(re, im) for re, im in zip(wr, wi)]
