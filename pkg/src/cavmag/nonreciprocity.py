"""Isolation between the two spinning directions.

For each drive and Fizeau magnitude the occupied magnon number is
evaluated at ``delta_f = -|delta_f|`` and ``+|delta_f|``, and the
isolation is their absolute normalized difference.
"""
from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from ._parallel import parallel_map
from .errors import DomainError
from .model import SystemParams, is_valid
from .stability import Protocol, classify_point
from .steady_state import Regime, critical_strengths

EQUALITY_TOL = 1e-10

MAP_COLUMNS = ("abs_df", "g", "m2_neg", "m2_pos", "isolation")
BOUNDARY_COLUMNS = ("abs_df", "g_left", "g_right")


def isolation(m2_neg: float, m2_pos: float, tol: float = EQUALITY_TOL) -> float:
    """``|m2_neg - m2_pos| / (m2_neg + m2_pos)``, or 0 when the two agree within ``tol``."""
    if m2_neg < 0 or m2_pos < 0:
        raise DomainError(f"magnon numbers must be non-negative, got {m2_neg}, {m2_pos}")
    diff = m2_neg - m2_pos
    if abs(diff) < tol:
        return 0.0
    return min(1.0, abs(diff / (m2_neg + m2_pos)))


@dataclass(frozen=True)
class IsolationPoint:
    abs_delta_f: float
    drive_g: float
    m2_forward: float  # delta_f < 0
    m2_backward: float  # delta_f > 0
    isolation: float
    status: str = "ok"  # ok | invalid | skipped
    note: str = ""

    def row(self) -> tuple:
        return (self.abs_delta_f, self.drive_g, self.m2_forward, self.m2_backward, self.isolation)


def occupied_number(p: SystemParams, protocol: Protocol = Protocol.SWEEP_UP) -> float | None:
    """Scaled magnon number of the branch occupied at ``p``; None when nothing is stable."""
    br = classify_point(p).occupied(protocol)
    return None if br is None else br.magnon_number_scaled


def isolation_point(p: SystemParams, abs_df: float, g: float,
                    protocol: Protocol = Protocol.SWEEP_UP) -> IsolationPoint:
    nan = math.nan
    if abs_df < 0:
        raise DomainError(f"abs_df must be >= 0, got {abs_df}")
    neg = p.replace(drive_g=float(g), delta_f=-float(abs_df))
    pos = p.replace(drive_g=float(g), delta_f=float(abs_df))
    if not (is_valid(neg) and is_valid(pos)):
        return IsolationPoint(abs_df, g, nan, nan, nan, "invalid", "beyond drive bound")
    m_neg = occupied_number(neg, protocol)
    m_pos = occupied_number(pos, protocol)
    if m_neg is None or m_pos is None:
        return IsolationPoint(abs_df, g, nan, nan, nan, "skipped", "no stable branch")
    return IsolationPoint(abs_df, g, m_neg, m_pos, isolation(m_neg, m_pos))


def _node(args):
    return isolation_point(*args)


@dataclass(frozen=True)
class IsolationMap:
    """``points[i][j]`` sits at ``abs_df_values[i]``, ``g_values[j]``."""

    base: SystemParams
    abs_df_values: np.ndarray
    g_values: np.ndarray
    points: list
    protocol: Protocol

    def isolation(self) -> np.ndarray:
        return np.array([[pt.isolation for pt in row] for row in self.points])


def isolation_map(p: SystemParams, abs_df_values, g_values,
                  protocol: Protocol = Protocol.SWEEP_UP, workers: int | None = 1) -> IsolationMap:
    abs_df_values = np.asarray(abs_df_values, dtype=float)
    g_values = np.asarray(g_values, dtype=float)
    if abs_df_values.size == 0 or g_values.size == 0:
        raise DomainError("isolation grid is empty")
    protocol = Protocol(protocol)
    nodes = [(p, df, g, protocol) for df in abs_df_values for g in g_values]
    flat = parallel_map(_node, nodes, workers)
    ng = g_values.size
    points = [flat[i * ng:(i + 1) * ng] for i in range(abs_df_values.size)]
    return IsolationMap(p, abs_df_values, g_values, points, protocol)


def onset(p: SystemParams, protocol: Protocol = Protocol.SWEEP_UP) -> float:
    """Drive at which the excited branch becomes occupied under ``protocol``.

    Sweeping up, the excited branch is taken from G_c1 in the first-order
    regime; sweeping down, the unexcited branch is kept until G_c2.
    """
    c = critical_strengths(p)
    if c.regime is Regime.FIRST_ORDER and Protocol(protocol) is Protocol.SWEEP_UP:
        return c.g_c1
    return c.g_c2


def boundary_curves(p: SystemParams, abs_df_values,
                    protocol: Protocol = Protocol.SWEEP_UP) -> list[tuple[float, float, float]]:
    """Analytic onsets ``(|delta_f|, G_left, G_right)`` for the two spinning directions."""
    out = []
    for df in np.asarray(abs_df_values, dtype=float):
        left = onset(p.replace(delta_f=-float(df)), protocol)
        right = onset(p.replace(delta_f=float(df)), protocol)
        out.append((float(df), left, right))
    return out
