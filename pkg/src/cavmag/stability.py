"""Linear stability of the fixed points and phase classification.

Fluctuations are written in the quadratures ``(dQ, dP, dX, dY)`` of the
cavity and magnon modes.  A fixed point is stable when every eigenvalue of
the 4x4 drift matrix has real part below ``-STABILITY_MARGIN``.
"""
from __future__ import annotations

import enum
from dataclasses import dataclass, field

import numpy as np

from ._parallel import parallel_map
from .errors import CavmagError, DomainError
from .model import SystemParams, delta_a_tilde, drive_bound, is_valid
from .numerics import eigenvalues_4x4
from .steady_state import Branch, SteadyBranch, steady_states

STABILITY_MARGIN = 1e-9


class Phase(str, enum.Enum):
    PSP = "PSP"  # only the unexcited fixed point is stable
    PSBP = "PSBP"  # only the excited (parity-broken) fixed point is stable
    BP = "BP"  # both are stable
    INVALID = "Invalid"

    def __str__(self):
        return self.value


class Stability(str, enum.Enum):
    STABLE = "stable"
    UNSTABLE = "unstable"

    def __str__(self):
        return self.value


class Protocol(str, enum.Enum):
    """Which attractor is occupied where both are stable.

    ``sweep-up`` takes the excited branch as soon as it is physical and
    stable (what a large initial amplitude relaxes to); ``sweep-down``
    stays on the unexcited branch while that one is stable.
    """

    SWEEP_UP = "sweep-up"
    SWEEP_DOWN = "sweep-down"

    def __str__(self):
        return self.value


@dataclass(frozen=True)
class DriftMatrix:
    entries: np.ndarray
    eigenvalues: np.ndarray

    @property
    def max_real_part(self) -> float:
        return float(np.max(self.eigenvalues.real))


def detuning_shifted_fluct(p: SystemParams, n_scaled: float) -> float:
    """delta_m + 2 K |M|^2, the Kerr-dressed detuning seen by fluctuations."""
    return p.delta_m + 2 * p.gamma * n_scaled


def drift_matrix_for(p: SystemParams, m: complex) -> DriftMatrix:
    """Drift matrix linearised about a fixed point with scaled magnon amplitude ``m``."""
    da = delta_a_tilde(p)
    kerr_m2 = p.gamma * m * m  # K M^2 in kappa units
    dm = detuning_shifted_fluct(p, abs(m) ** 2)
    k, j, g = p.kappa, p.coupling_j, p.drive_g
    u = np.array([
        [-k, da - g, 0.0, j],
        [-da - g, -k, -j, 0.0],
        [0.0, j, -p.gamma + kerr_m2.imag, dm - kerr_m2.real],
        [-j, 0.0, -dm - kerr_m2.real, -p.gamma - kerr_m2.imag],
    ])
    return DriftMatrix(u, eigenvalues_4x4(u))


def drift_matrix(p: SystemParams, branch: SteadyBranch) -> DriftMatrix:
    if branch.magnon_amplitude is None:
        if branch.label is not Branch.ZERO:
            raise DomainError(f"{branch.label} branch has no amplitudes; fill them first")
        return drift_matrix_for(p, 0j)
    return drift_matrix_for(p, branch.magnon_amplitude)


def classify_branch(dm: DriftMatrix) -> Stability:
    if dm.max_real_part < -STABILITY_MARGIN:
        return Stability.STABLE
    return Stability.UNSTABLE


@dataclass(frozen=True)
class PhasePoint:
    params: SystemParams
    phase: Phase
    stable_branches: frozenset = frozenset()
    branches: tuple = ()
    branch_spectra: dict = field(default_factory=dict)
    note: str = ""

    def branch(self, label: Branch) -> SteadyBranch | None:
        for br in self.branches:
            if br.label is label:
                return br
        return None

    def occupied(self, protocol: Protocol = Protocol.SWEEP_UP) -> SteadyBranch | None:
        """The branch the system sits on under ``protocol`` (None if neither is stable)."""
        order = (Branch.PLUS, Branch.ZERO) if protocol is Protocol.SWEEP_UP else (Branch.ZERO, Branch.PLUS)
        for label in order:
            if label in self.stable_branches:
                return self.branch(label)
        return None


_PHASE_OF = {
    frozenset({Branch.ZERO}): Phase.PSP,
    frozenset({Branch.PLUS}): Phase.PSBP,
    frozenset({Branch.ZERO, Branch.PLUS}): Phase.BP,
}


def classify_point(p: SystemParams) -> PhasePoint:
    """Classify one parameter point as PSP, PSBP, BP or Invalid.

    Points beyond the bare-cavity drive bound, and points whose set of
    stable branches matches none of the three phases, come back as
    Invalid with an explanatory ``note``.
    """
    if not is_valid(p):
        return PhasePoint(p, Phase.INVALID,
                          note=f"G={p.drive_g:.6g} >= bare-cavity bound {drive_bound(p):.6g}")
    try:
        branches = steady_states(p)
    except CavmagError as exc:
        return PhasePoint(p, Phase.INVALID, note=str(exc))

    stable = set()
    spectra = {}
    for br in branches:
        if not br.physical:
            continue
        dm = drift_matrix(p, br)
        spectra[br.label] = dm.eigenvalues
        if classify_branch(dm) is Stability.STABLE:
            stable.add(br.label)
    stable = frozenset(stable)
    phase = _PHASE_OF.get(stable)
    note = ""
    if phase is None:
        phase = Phase.INVALID
        names = ",".join(sorted(str(b) for b in stable)) or "none"
        note = f"anomalous stable set {{{names}}}"
    return PhasePoint(p, phase, stable, tuple(branches), spectra, note)


@dataclass(frozen=True)
class PhaseDiagram:
    """Phases on a grid; ``points[i][j]`` is at ``ratio_values[i]``, ``g_values[j]``.

    The vertical axis is ``delta_m / delta_a_tilde``.
    """

    base: SystemParams
    g_values: np.ndarray
    ratio_values: np.ndarray
    points: list

    def phases(self) -> np.ndarray:
        return np.array([[pt.phase.value for pt in row] for row in self.points])


def node_params(p: SystemParams, g: float, ratio: float) -> SystemParams:
    return p.replace(drive_g=float(g), delta_m=float(ratio) * delta_a_tilde(p))


def _classify_node(args):
    p, g, ratio = args
    return classify_point(node_params(p, g, ratio))


def phase_diagram(p: SystemParams, g_values, ratio_values, workers: int | None = 1) -> PhaseDiagram:
    g_values = np.asarray(g_values, dtype=float)
    ratio_values = np.asarray(ratio_values, dtype=float)
    if g_values.size == 0 or ratio_values.size == 0:
        raise DomainError("phase diagram grid is empty")
    nodes = [(p, g, r) for r in ratio_values for g in g_values]
    flat = parallel_map(_classify_node, nodes, workers)
    ng = g_values.size
    points = [flat[i * ng:(i + 1) * ng] for i in range(ratio_values.size)]
    return PhaseDiagram(p, g_values, ratio_values, points)
