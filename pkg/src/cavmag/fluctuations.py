"""Steady Gaussian fluctuations about a stable fixed point.

The covariance ``V`` of the quadratures ``(dQ, dP, dX, dY)`` solves
``U V + V U^T = -D``.  Vacuum inputs give ``V = I/2`` for the undriven,
uncoupled modes, so ``<dm^dag dm> = (V33 + V44 - 1)/2`` vanishes there.
"""
from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from ._parallel import parallel_map
from .errors import DomainError, InstabilityError
from .model import SystemParams, is_valid
from .numerics import solve_dense
from .stability import STABILITY_MARGIN, DriftMatrix, Protocol, classify_point, drift_matrix

REFINE_STEPS = 3

FLUCTUATION_COLUMNS = ("g_over_kappa", "delta_f_over_kappa", "branch", "fluctuation", "residual")


@dataclass(frozen=True)
class CovarianceResult:
    v: np.ndarray
    magnon_fluctuation: float
    residual: float


def diffusion_matrix(p: SystemParams, thermal_occupation: float = 0.0) -> np.ndarray:
    """Symmetrized vacuum diffusion ``diag(kappa, kappa, gamma, gamma)``.

    Only zero-temperature baths are supported; ``thermal_occupation`` is
    accepted so configs can state it, but anything nonzero is rejected.
    """
    if thermal_occupation != 0.0:
        raise DomainError("only zero-temperature (vacuum) noise is supported")
    return np.diag([p.kappa, p.kappa, p.gamma, p.gamma]).astype(float)


def lyapunov_residual(u: np.ndarray, v: np.ndarray, d: np.ndarray) -> float:
    return float(np.max(np.abs(u @ v + v @ u.T + d)))


def _lyapunov_operator(u: np.ndarray) -> np.ndarray:
    # row-major vec: vec(U V) = (U kron I) vec V, vec(V U^T) = (I kron U) vec V
    eye = np.eye(u.shape[0])
    return np.kron(u, eye) + np.kron(eye, u)


def solve_lyapunov(u, d) -> CovarianceResult:
    """Solve ``U V + V U^T = -D`` through the 16-dimensional linear system.

    ``u`` may be a DriftMatrix or a plain 4x4 array.  A few rounds of
    iterative refinement keep the residual near round-off even close to
    criticality, where the system is badly conditioned.
    """
    if isinstance(u, DriftMatrix):
        ev, u = u.eigenvalues, u.entries
    else:
        u = np.asarray(u, dtype=float)
        ev = np.linalg.eigvals(u)
    d = np.asarray(d, dtype=float)
    if u.shape != (4, 4) or d.shape != (4, 4):
        raise DomainError(f"expected 4x4 inputs, got {u.shape} and {d.shape}")
    if np.max(ev.real) >= -STABILITY_MARGIN:
        raise InstabilityError(
            f"drift matrix not stable (max Re = {np.max(ev.real):.3e}); no steady covariance")

    op = _lyapunov_operator(u)
    rhs = -d.reshape(-1)
    x = solve_dense(op, rhs)
    v = 0.5 * (x.reshape(4, 4) + x.reshape(4, 4).T)
    for _ in range(REFINE_STEPS):
        r = rhs - op @ v.reshape(-1)
        if np.max(np.abs(r)) == 0.0:
            break
        dx = solve_dense(op, r).reshape(4, 4)
        v = v + 0.5 * (dx + dx.T)
    fluct = 0.5 * (v[2, 2] + v[3, 3] - 1.0)
    return CovarianceResult(v, float(fluct), lyapunov_residual(u, v, d))


@dataclass(frozen=True)
class FluctuationPoint:
    drive_g: float
    delta_f: float
    branch: str | None
    fluctuation: float
    residual: float
    status: str = "ok"  # ok | skipped | invalid
    note: str = ""

    def row(self) -> tuple:
        return (self.drive_g, self.delta_f, self.branch or "", self.fluctuation, self.residual)


def fluctuation_at(p: SystemParams, protocol: Protocol = Protocol.SWEEP_UP) -> FluctuationPoint:
    """Fluctuation on the branch occupied at ``p`` under ``protocol``.

    Points beyond the drive bound are ``invalid``; points where no branch
    is stable by the margin are ``skipped``.  Both carry ``nan`` values.
    """
    nan = float("nan")
    if not is_valid(p):
        return FluctuationPoint(p.drive_g, p.delta_f, None, nan, nan, "invalid", "beyond drive bound")
    pt = classify_point(p)
    br = pt.occupied(protocol)
    if br is None:
        note = pt.note or "no branch stable within the margin"
        return FluctuationPoint(p.drive_g, p.delta_f, None, nan, nan, "skipped", note)
    res = solve_lyapunov(drift_matrix(p, br), diffusion_matrix(p))
    return FluctuationPoint(p.drive_g, p.delta_f, br.label.value, res.magnon_fluctuation, res.residual)


def _at(args):
    p, protocol = args
    return fluctuation_at(p, protocol)


def fluctuation_sweep(p: SystemParams, g_values, protocol: Protocol = Protocol.SWEEP_UP,
                      workers: int | None = 1) -> list[FluctuationPoint]:
    """Fluctuation along a drive sweep; skipped points are kept and marked."""
    items = [(p.replace(drive_g=float(g)), Protocol(protocol)) for g in g_values]
    return parallel_map(_at, items, workers)
