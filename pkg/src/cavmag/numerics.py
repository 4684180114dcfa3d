"""Small dense kernels: 4x4 spectra, pivoted solves, and a Dormand-Prince stepper."""
from __future__ import annotations

import math
from typing import Callable, NamedTuple

import numpy as np

from .errors import DomainError, SingularityError

MAX_DIM = 16
PIVOT_RTOL = 1e-14


def eigenvalues_4x4(m) -> np.ndarray:
    """All four eigenvalues of a real 4x4 matrix, with multiplicity.

    LAPACK's general eigensolver balances the matrix before the QR sweep.
    The result is sorted by (real, imag) so callers get a stable order.
    """
    m = np.asarray(m, dtype=float)
    if m.shape != (4, 4):
        raise DomainError(f"expected a 4x4 matrix, got shape {m.shape}")
    if not np.all(np.isfinite(m)):
        raise DomainError("matrix has non-finite entries")
    ev = np.linalg.eigvals(m)
    return ev[np.lexsort((ev.imag, ev.real))]


def solve_dense(a, b) -> np.ndarray:
    """Solve ``a x = b`` by Gaussian elimination with partial pivoting.

    Raises SingularityError when a pivot falls below ``1e-14`` times the
    largest entry of its row in the original matrix.
    """
    a = np.array(a, dtype=float)
    x = np.array(b, dtype=float)
    n = a.shape[0]
    if a.shape != (n, n) or x.shape != (n,):
        raise DomainError(f"shape mismatch: a {a.shape}, b {x.shape}")
    if n > MAX_DIM:
        raise DomainError(f"dimension {n} exceeds {MAX_DIM}")
    row_max = np.abs(a).max(axis=1)
    if np.any(row_max == 0):
        raise SingularityError("matrix has a zero row")

    for k in range(n):
        p = k + int(np.argmax(np.abs(a[k:, k])))
        if p != k:
            a[[k, p]] = a[[p, k]]
            x[[k, p]] = x[[p, k]]
            row_max[[k, p]] = row_max[[p, k]]
        piv = a[k, k]
        if abs(piv) < PIVOT_RTOL * row_max[k]:
            raise SingularityError(f"pivot {piv:.3e} at column {k} below tolerance")
        factors = a[k + 1:, k] / piv
        a[k + 1:, k:] -= np.outer(factors, a[k, k:])
        x[k + 1:] -= factors * x[k]

    for k in range(n - 1, -1, -1):
        x[k] = (x[k] - a[k, k + 1:] @ x[k + 1:]) / a[k, k]
    return x


# Dormand-Prince 5(4) tableau
_C = (0.0, 1 / 5, 3 / 10, 4 / 5, 8 / 9, 1.0, 1.0)
_A = (
    (),
    (1 / 5,),
    (3 / 40, 9 / 40),
    (44 / 45, -56 / 15, 32 / 9),
    (19372 / 6561, -25360 / 2187, 64448 / 6561, -212 / 729),
    (9017 / 3168, -355 / 33, 46732 / 5247, 49 / 176, -5103 / 18656),
)
_B = (35 / 384, 0.0, 500 / 1113, 125 / 192, -2187 / 6784, 11 / 84)
# difference between the 5th- and 4th-order weights (7 stages, FSAL)
_E = (71 / 57600, 0.0, -71 / 16695, 71 / 1920, -17253 / 339200, 22 / 525, -1 / 40)

SAFETY = 0.9
MIN_FACTOR = 0.2
MAX_FACTOR = 5.0


class StepResult(NamedTuple):
    state: np.ndarray
    accepted: np.ndarray | bool
    dt_next: np.ndarray | float
    derivative: np.ndarray  # f at the new state where accepted, else the k1 used
    error_norm: np.ndarray | float


def _step_factor(err: float) -> float:
    if err == 0.0:
        return MAX_FACTOR
    return min(MAX_FACTOR, max(MIN_FACTOR, SAFETY * err ** -0.2))


def rk45_step(
    f: Callable,
    t,
    y,
    dt,
    rtol: float = 1e-9,
    atol: float = 1e-12,
    k1=None,
) -> StepResult:
    """One embedded Dormand-Prince 5(4) step with error control.

    ``y`` is either one state of shape ``(n,)`` or a batch ``(batch, n)``;
    with a batch, ``t`` and ``dt`` may be per-row arrays and ``f(t, y)``
    must accept and return ``(batch, n)`` arrays.  Each row is advanced,
    accepted or rejected on its own, and only elementwise arithmetic mixes
    values, so a row's result does not depend on the rest of the batch.

    Rejected rows keep their old state.  The proposed next step changes by
    at most a factor of 5 either way.  Pass ``derivative`` back as ``k1``
    to reuse the last stage (first-same-as-last).
    """
    y = np.asarray(y, dtype=float)
    single = y.ndim == 1
    ys = y[None, :] if single else y
    rows = ys.shape[0]
    dt = np.broadcast_to(np.asarray(dt, dtype=float), (rows,))
    t = np.broadcast_to(np.asarray(t, dtype=float), (rows,))
    if np.any(dt <= 0):
        raise DomainError(f"dt must be positive, got {dt.min()}")
    if single:
        def fb(tt, yy):
            return np.asarray(f(float(tt[0]), yy[0]), dtype=float)[None, :]
    else:
        fb = f

    h = dt[:, None]
    k = [fb(t, ys) if k1 is None else np.asarray(k1, dtype=float).reshape(ys.shape)]
    for i in range(1, 6):
        acc = _A[i][0] * k[0]
        for c, kj in zip(_A[i][1:], k[1:]):
            acc = acc + c * kj
        k.append(fb(t + _C[i] * dt, ys + h * acc))
    acc = _B[0] * k[0]
    for c, kj in zip(_B[1:], k[1:]):
        if c:
            acc = acc + c * kj
    y_new = ys + h * acc
    k.append(fb(t + dt, y_new))

    e = _E[0] * k[0]
    for c, kj in zip(_E[1:], k[1:]):
        if c:
            e = e + c * kj
    r = h * e / (atol + rtol * np.maximum(np.abs(ys), np.abs(y_new)))
    r2 = r[:, 0] * r[:, 0]
    for j in range(1, r.shape[1]):
        r2 = r2 + r[:, j] * r[:, j]
    err = np.sqrt(r2 / r.shape[1])

    factor = np.array([_step_factor(x) for x in err.tolist()])
    accepted = err <= 1.0
    dt_next = dt * np.where(accepted, factor, np.minimum(factor, 1.0))
    mask = accepted[:, None]
    state = np.where(mask, y_new, ys)
    deriv = np.where(mask, k[6], k[0])
    if single:
        return StepResult(state[0], bool(accepted[0]), float(dt_next[0]), deriv[0], float(err[0]))
    return StepResult(state, accepted, dt_next, deriv, err)
