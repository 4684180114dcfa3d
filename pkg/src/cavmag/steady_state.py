"""Mean-field fixed points and the analytic critical drive strengths.

Amplitudes are scaled by ``sqrt(K/gamma)`` so that the Kerr term of the
magnon equation becomes ``gamma |m|^2 m`` and the order parameter is the
scaled magnon number ``n = |M|^2 K / gamma``.
"""
from __future__ import annotations

import cmath
import enum
import math
from dataclasses import dataclass, replace

from .errors import ConsistencyError, DomainError
from .model import SystemParams, beta, delta_a_tilde

#: Tolerance on | |exp(2i theta)| - 1 | when reconstructing the magnon phase.
PHASE_MODULUS_TOL = 1e-6


class Branch(str, enum.Enum):
    ZERO = "Zero"
    PLUS = "Plus"
    MINUS = "Minus"

    def __str__(self):
        return self.value


class Regime(str, enum.Enum):
    FIRST_ORDER = "first-order"
    SECOND_ORDER = "second-order"

    def __str__(self):
        return self.value


@dataclass(frozen=True)
class SteadyBranch:
    label: Branch
    magnon_number_scaled: float
    physical: bool
    photon_number_scaled: float | None = None
    magnon_amplitude: complex | None = None
    photon_amplitude: complex | None = None

    @property
    def has_amplitudes(self) -> bool:
        return self.magnon_amplitude is not None


@dataclass(frozen=True)
class CriticalStrengths:
    g_c1: float
    g_c2: float
    regime: Regime
    triple_point_ratio: float

    @property
    def threshold(self) -> float:
        """Drive at which the excited branch first becomes occupied."""
        return self.g_c1 if self.regime is Regime.FIRST_ORDER else self.g_c2


def detuning_shifted_meanfield(p: SystemParams, b: float | None = None) -> float:
    """delta_m - beta * delta_a_tilde: magnon detuning dressed by the cavity."""
    if b is None:
        b = beta(p)
    return p.delta_m - b * delta_a_tilde(p)


def damping_shifted(p: SystemParams, b: float | None = None) -> float:
    """gamma + beta * kappa."""
    if b is None:
        b = beta(p)
    return p.gamma + b * p.kappa


def discriminant(p: SystemParams) -> float:
    """beta^2 G^2 - (gamma + beta kappa)^2; nonzero branches need it >= 0."""
    b = beta(p)
    return (b * p.drive_g) ** 2 - damping_shifted(p, b) ** 2


def magnon_branches(p: SystemParams) -> list[SteadyBranch]:
    """The three fixed-point magnon numbers ``[Zero, Plus, Minus]``.

    Branches whose number is complex (negative discriminant) carry ``nan``;
    branches with a negative real number keep the value.  Both are flagged
    ``physical=False``.
    """
    b = beta(p)
    shifted = detuning_shifted_meanfield(p, b)
    disc = (b * p.drive_g) ** 2 - damping_shifted(p, b) ** 2

    zero = SteadyBranch(Branch.ZERO, 0.0, True, photon_number_scaled=0.0)
    if disc < 0:
        return [
            zero,
            SteadyBranch(Branch.PLUS, math.nan, False),
            SteadyBranch(Branch.MINUS, math.nan, False),
        ]
    root = math.sqrt(disc)
    out = [zero]
    for label, n in ((Branch.PLUS, (-shifted + root) / p.gamma),
                     (Branch.MINUS, (-shifted - root) / p.gamma)):
        physical = n >= 0
        photons = photon_number(p.delta_m, p.gamma, p.coupling_j, n) if physical else None
        out.append(SteadyBranch(label, n, physical, photon_number_scaled=photons))
    return out


def photon_number(detuning: float, gamma: float, coupling_j: float, n_scaled: float) -> float:
    """Scaled photon number ``((detuning + gamma n)^2 + gamma^2) n / J^2``.

    ``detuning`` is the bare magnon detuning; the combination
    ``detuning - i gamma + gamma n`` is the magnon self-energy whose
    modulus fixes ``|J A| = |f| |M|``.
    """
    if n_scaled == 0:
        return 0.0
    if coupling_j == 0:
        raise ZeroDivisionError("photon number undefined for J = 0 on a nonzero branch")
    return ((detuning + gamma * n_scaled) ** 2 + gamma**2) / coupling_j**2 * n_scaled


def photon_occupation(p: SystemParams, branch: SteadyBranch) -> float:
    if not branch.physical:
        raise DomainError(f"{branch.label} branch is not physical")
    if branch.label is Branch.ZERO:
        return 0.0
    return photon_number(p.delta_m, p.gamma, p.coupling_j, branch.magnon_number_scaled)


def critical_strengths(p: SystemParams) -> CriticalStrengths:
    """Closed-form thresholds G_c1 (first order) and G_c2 (second order).

    G_c1 solves ``beta G = gamma + beta kappa`` and does not depend on
    ``delta_m``.  G_c2 is where the excited branch meets zero.  The triple
    point sits at ``delta_m / delta_a_tilde = beta(G_c1)``.
    """
    if p.gamma <= 0:
        raise DomainError("gamma must be positive")
    g2 = p.coupling_j**2
    gam, kap, da, dm = p.gamma, p.kappa, delta_a_tilde(p), p.delta_m
    g_c1 = (-g2 + math.sqrt(4 * gam**2 * da**2 + (g2 + 2 * gam * kap) ** 2)) / (2 * gam)
    g_c2 = math.sqrt(
        ((g2 - da * dm) ** 2 + gam**2 * da**2 + 2 * g2 * gam * kap + gam**2 * kap**2
         + dm**2 * kap**2)
        / (gam**2 + dm**2)
    )
    b_c = beta(p.replace(drive_g=g_c1))
    # first order when the dressed detuning at G_c1 is non-positive; this is
    # delta_m/delta_a_tilde <= beta(G_c1) for delta_a_tilde > 0
    first = dm - b_c * da <= 0
    return CriticalStrengths(
        g_c1=g_c1,
        g_c2=g_c2,
        regime=Regime.FIRST_ORDER if first else Regime.SECOND_ORDER,
        triple_point_ratio=b_c,
    )


def complex_amplitudes(p: SystemParams, branch: SteadyBranch, partner: bool = False) -> SteadyBranch:
    """Fill the scaled amplitudes ``(A, M)`` of a physical branch.

    Of the parity doublet ``(A, M)`` / ``(-A, -M)`` the representative with
    the magnon phase in ``[0, pi)`` is returned, or its partner when
    ``partner`` is set.
    """
    if not branch.physical:
        raise DomainError(f"{branch.label} branch is not physical")
    if branch.label is Branch.ZERO:
        return replace(branch, magnon_amplitude=0j, photon_amplitude=0j, photon_number_scaled=0.0)

    n = branch.magnon_number_scaled
    f = complex(p.delta_m + p.gamma * n, -p.gamma)
    denom = complex(delta_a_tilde(p), -p.kappa) * f - p.coupling_j**2
    phase2 = -p.drive_g * f.conjugate() / denom
    if abs(abs(phase2) - 1.0) > PHASE_MODULUS_TOL:
        raise ConsistencyError(
            f"|exp(2i theta)| = {abs(phase2):.12g} for {branch.label} branch; "
            "magnon number inconsistent with the parameters"
        )
    theta = (cmath.phase(phase2) / 2) % math.pi
    m = math.sqrt(n) * cmath.exp(1j * theta)
    if partner:
        m = -m
    a = -f * m / p.coupling_j
    return replace(
        branch,
        magnon_amplitude=m,
        photon_amplitude=a,
        photon_number_scaled=abs(a) ** 2,
    )


def mean_field_rhs(p: SystemParams, a: complex, m: complex, nonlinear: bool = True) -> tuple[complex, complex]:
    """Time derivatives of the scaled mean fields."""
    da = delta_a_tilde(p)
    a_dot = -1j * complex(da, -p.kappa) * a - 1j * p.coupling_j * m - 1j * p.drive_g * a.conjugate()
    self_energy = complex(p.delta_m, -p.gamma)
    if nonlinear:
        self_energy += p.gamma * (m.real**2 + m.imag**2)
    m_dot = -1j * self_energy * m - 1j * p.coupling_j * a
    return a_dot, m_dot


def steady_residual(p: SystemParams, a: complex, m: complex) -> float:
    a_dot, m_dot = mean_field_rhs(p, a, m)
    return max(abs(a_dot), abs(m_dot))


def steady_states(p: SystemParams, partner: bool = False) -> list[SteadyBranch]:
    """All three branches, with amplitudes filled for the physical ones."""
    return [
        complex_amplitudes(p, br, partner) if br.physical else br
        for br in magnon_branches(p)
    ]
