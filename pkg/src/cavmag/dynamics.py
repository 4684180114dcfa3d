"""Time integration of the mean-field equations.

The state is ``(Re a, Im a, Re m, Im m)`` with both amplitudes scaled by
``sqrt(K/gamma)`` and time in units of ``1/kappa``.  Many trajectories can
be advanced together, one per row.  Each row keeps its own clock, step
size and convergence window, so a batch gives the same numbers as running
the rows one at a time.
"""
from __future__ import annotations

from dataclasses import dataclass
from typing import Sequence

import numpy as np

from .errors import CavmagError, DivergenceError, NonConvergenceError, StepUnderflowError
from .model import SystemParams, delta_a_tilde
from .numerics import rk45_step

RTOL = 1e-9
ATOL = 1e-12
MIN_STEP = 1e-12
OVERFLOW_GUARD = 1e6
CONVERGENCE_TOL = 1e-8
SETTLE_WINDOW = 10.0
SETTLE_T_MAX = 1e4
SETTLE_RESIDUAL = 1e-7  # max |time derivative| accepted as stationary
# Steps are capped at STABILITY_FRACTION / rho, with rho a Gershgorin bound on
# the local Jacobian.  Without the cap the controller parks the step on the
# edge of the stability region near a fixed point and |m|^2 jitters at ~1e-8.
STABILITY_FRACTION = 2.5

TRAJECTORY_COLUMNS = ("time", "re_a", "im_a", "re_m", "im_m", "n_m_scaled")


class _Batch:
    """Independent trajectories advanced together, one per row."""

    def __init__(self, params: Sequence[SystemParams], a0, m0, dt_hint=1e-2, nonlinear=True,
                 rtol=RTOL, atol=ATOL):
        def col(xs):
            return np.array(xs, dtype=float)

        self.da = col([delta_a_tilde(p) for p in params])
        self.kappa = col([p.kappa for p in params])
        self.j = col([p.coupling_j for p in params])
        self.g = col([p.drive_g for p in params])
        self.gamma = col([p.gamma for p in params])
        self.dm = col([p.delta_m for p in params])
        self.kerr = self.gamma.copy() if nonlinear else np.zeros_like(self.gamma)
        self.rho_cavity = self.kappa + np.abs(self.da) + self.g + self.j
        self.rho_magnon = self.j + self.gamma + np.abs(self.dm)

        size = len(params)
        a0 = np.broadcast_to(np.asarray(a0, dtype=complex), (size,))
        m0 = np.broadcast_to(np.asarray(m0, dtype=complex), (size,))
        self.y = np.stack([a0.real, a0.imag, m0.real, m0.imag], axis=1).astype(float)
        self.t = np.zeros(size)
        self.rtol, self.atol = rtol, atol
        every = np.arange(size)
        self.h = np.minimum(float(dt_hint), self._max_step(self.y, every))
        self.k1 = self._rhs(every)(self.t, self.y)

    def _rhs(self, rows):
        da, k, j, g = self.da[rows], self.kappa[rows], self.j[rows], self.g[rows]
        gam, dm, kerr = self.gamma[rows], self.dm[rows], self.kerr[rows]

        def f(t, y):
            ar, ai, mr, mi = y[:, 0], y[:, 1], y[:, 2], y[:, 3]
            w = dm + kerr * (mr * mr + mi * mi)
            return np.stack((
                (da - g) * ai - k * ar + j * mi,
                -(da + g) * ar - k * ai - j * mr,
                w * mi - gam * mr + j * ai,
                -w * mr - gam * mi - j * ar,
            ), axis=1)

        return f

    def _max_step(self, y, rows):
        n = y[:, 2] * y[:, 2] + y[:, 3] * y[:, 3]
        rho = np.maximum(self.rho_cavity[rows], self.rho_magnon[rows] + 4 * self.kerr[rows] * n)
        return STABILITY_FRACTION / rho

    def attempt(self, rows: np.ndarray, t_stop: np.ndarray) -> np.ndarray:
        """One step attempt per row in ``rows``, never passing ``t_stop``.

        Returns the accepted mask.  Failures are left for ``check``.
        """
        t, h, y = self.t[rows], self.h[rows], self.y[rows]
        remaining = t_stop - t
        clamped = remaining <= h
        step = np.where(clamped, remaining, h)
        res = rk45_step(self._rhs(rows), t, y, step, self.rtol, self.atol, self.k1[rows])
        ok = res.accepted
        self.t[rows] = np.where(ok, np.where(clamped, t_stop, t + step), t)
        self.y[rows] = res.state
        self.k1[rows] = res.derivative
        # an artificially short final step says nothing about the next one
        grown = np.minimum(res.dt_next, self._max_step(res.state, rows))
        self.h[rows] = np.where(ok, np.where(clamped, h, grown), res.dt_next)
        return ok

    def check(self, rows: np.ndarray) -> dict:
        """Rows that underflowed or diverged, mapped to the matching error."""
        failed = {}
        for r in rows[self.h[rows] < MIN_STEP].tolist():
            failed[r] = StepUnderflowError(
                f"step {self.h[r]:.3e} below {MIN_STEP:g} at t={self.t[r]:.6g}")
        y = self.y[rows]
        # past the drive bound the photon runs away while the Kerr shift pins
        # |m| near |a|^(1/3), so both amplitudes are guarded
        size = np.maximum(np.hypot(y[:, 0], y[:, 1]), np.hypot(y[:, 2], y[:, 3]))
        bad = ~(size <= OVERFLOW_GUARD) | ~np.all(np.isfinite(y), axis=1)
        for r in rows[bad].tolist():
            failed[r] = DivergenceError(f"amplitude exceeded {OVERFLOW_GUARD:g} at t={self.t[r]:.6g}")
        return failed

    def magnon_number(self, rows) -> np.ndarray:
        y = self.y[rows]
        return y[:, 2] * y[:, 2] + y[:, 3] * y[:, 3]


@dataclass(frozen=True)
class Trajectory:
    times: np.ndarray
    photon_amplitudes: np.ndarray
    magnon_amplitudes: np.ndarray
    final_magnon_number_scaled: float
    converged: bool

    @property
    def magnon_numbers(self) -> np.ndarray:
        return np.abs(self.magnon_amplitudes) ** 2

    def rows(self):
        for t, a, m in zip(self.times, self.photon_amplitudes, self.magnon_amplitudes):
            yield (float(t), a.real, a.imag, m.real, m.imag, abs(m) ** 2)


def integrate(
    p: SystemParams,
    a0: complex,
    m0: complex,
    t_end: float,
    dt_hint: float = 1e-2,
    stride: int = 1,
    rtol: float = RTOL,
    atol: float = ATOL,
    convergence_tol: float = CONVERGENCE_TOL,
    nonlinear: bool = True,
) -> Trajectory:
    """Integrate the coupled mean-field equations from ``(a0, m0)`` to ``t_end``.

    Every ``stride``-th accepted step is sampled, plus the initial and final
    states.  ``nonlinear=False`` drops the Kerr term.
    """
    if t_end <= 0:
        raise ValueError(f"t_end must be positive, got {t_end}")
    if stride < 1:
        raise ValueError("stride must be >= 1")
    batch = _Batch([p], complex(a0), complex(m0), dt_hint, nonlinear, rtol, atol)
    rows = np.array([0])
    stop = np.array([float(t_end)])
    times, states = [0.0], [batch.y[0].copy()]
    count = 0
    while batch.t[0] < t_end:
        accepted = bool(batch.attempt(rows, stop)[0])
        failed = batch.check(rows)
        if failed:
            raise failed[0]
        if not accepted:
            continue
        count += 1
        if count % stride == 0 or batch.t[0] >= t_end:
            times.append(float(batch.t[0]))
            states.append(batch.y[0].copy())
    states = np.array(states)
    a = states[:, 0] + 1j * states[:, 1]
    m = states[:, 2] + 1j * states[:, 3]
    n = np.abs(m) ** 2
    converged = len(n) >= 2 and abs(n[-1] - n[-2]) < convergence_tol
    return Trajectory(np.array(times), a, m, float(n[-1]), bool(converged))


@dataclass(frozen=True)
class SettleResult:
    photon_amplitude: complex
    magnon_amplitude: complex
    magnon_number: float
    time: float


def settle_many(
    params: Sequence[SystemParams],
    a0: complex,
    m0: complex,
    window: float = SETTLE_WINDOW,
    tol: float = CONVERGENCE_TOL,
    t_max: float = SETTLE_T_MAX,
    dt_hint: float = 1e-2,
) -> list:
    """Settle every parameter point from the same initial condition.

    A row has settled once ``|m|^2`` varies by less than ``tol`` across a
    whole window of length ``window`` and the state is stationary to
    SETTLE_RESIDUAL.  The second test matters near the zero state, where
    ``|m|^2`` is tiny long before the photon amplitude has decayed.  Rows that fail come back as the
    exception instance in place of a SettleResult.
    """
    params = list(params)
    if not params:
        return []
    if window <= 0 or t_max <= 0:
        raise ValueError("window and t_max must be positive")
    batch = _Batch(params, complex(a0), complex(m0), dt_hint)
    out: list = [None] * len(params)
    active = np.arange(len(params))
    t_stop = np.full(len(params), min(window, t_max))
    lo = batch.magnon_number(active)
    hi = lo.copy()

    while active.size:
        ok = batch.attempt(active, t_stop[active])
        n = batch.magnon_number(active)
        lo[active] = np.where(ok, np.minimum(lo[active], n), lo[active])
        hi[active] = np.where(ok, np.maximum(hi[active], n), hi[active])

        done = []
        for r, err in batch.check(active).items():
            out[r] = err
            done.append(r)
        for r in active[batch.t[active] >= t_stop[active]].tolist():
            if out[r] is not None:
                continue
            y = batch.y[r]
            if hi[r] - lo[r] < tol and _stationary(batch, r):
                out[r] = SettleResult(complex(y[0], y[1]), complex(y[2], y[3]),
                                      float(y[2] * y[2] + y[3] * y[3]), float(batch.t[r]))
                done.append(r)
            elif batch.t[r] >= t_max:
                out[r] = NonConvergenceError(f"no convergence within t={t_max:g}/kappa")
                done.append(r)
            else:
                t_stop[r] = min(batch.t[r] + window, t_max)
                lo[r] = hi[r] = batch.magnon_number([r])[0]
        if done:
            active = active[~np.isin(active, done)]
    return out


def _stationary(batch: _Batch, r: int) -> bool:
    rate = batch._rhs(np.array([r]))(batch.t[r], batch.y[r][None, :])
    return float(np.max(np.abs(rate))) < SETTLE_RESIDUAL


def settle_state(p: SystemParams, a0: complex, m0: complex, **kwargs) -> SettleResult:
    res = settle_many([p], a0, m0, **kwargs)[0]
    if isinstance(res, CavmagError):
        raise res
    return res


def settle(p: SystemParams, a0: complex, m0: complex, **kwargs) -> float:
    """Final scaled magnon number reached from ``(a0, m0)``.

    Runs until ``|m|^2`` changes by less than 1e-8 over a window of
    ``10/kappa``, and raises NonConvergenceError after ``t_max``.
    """
    return settle_state(p, a0, m0, **kwargs).magnon_number
