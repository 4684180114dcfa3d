"""Physical parameters of the spinning cavity-magnon system.

All rates and detunings are stored in units of the cavity damping rate
``kappa``.  Detunings are measured in the frame rotating at half the pump
frequency, so ``delta_a = omega_a - omega_d/2`` and
``delta_m = omega_m - omega_d/2``.  The spin of the resonator enters only
through the signed Fizeau shift ``delta_f``.
"""
from __future__ import annotations

import math
from dataclasses import dataclass, fields, replace

from .errors import DomainError, SingularityError

SPEED_OF_LIGHT = 299_792_458.0  # m/s

#: Denominators of ``beta`` smaller than this (kappa units) are singular.
BETA_EPSILON = 1e-12

CCW = +1
CW = -1


@dataclass(frozen=True)
class SystemParams:
    """Rates and detunings of the driven cavity-magnon system, in units of kappa.

    ``kerr_k`` only fixes the unit of the scaled order parameter
    ``|M|^2 K / gamma``; no result in the package depends on its value.
    """

    gamma: float = 1.0
    coupling_j: float = 2.5
    drive_g: float = 0.0
    delta_a: float = 3.0
    delta_m: float = 4.0
    delta_f: float = 0.0
    kappa: float = 1.0
    kerr_k: float = 1.0

    def __post_init__(self):
        for f in fields(self):
            value = getattr(self, f.name)
            if not math.isfinite(value):
                raise DomainError(f"{f.name} must be finite, got {value!r}")
        if self.kappa <= 0:
            raise DomainError(f"kappa must be positive, got {self.kappa}")
        if self.gamma <= 0:
            raise DomainError(f"gamma must be positive, got {self.gamma}")
        if self.coupling_j < 0:
            raise DomainError(f"coupling_j must be >= 0, got {self.coupling_j}")
        if self.kerr_k <= 0:
            raise DomainError(f"kerr_k must be positive, got {self.kerr_k}")
        if self.drive_g < 0:
            raise DomainError(f"drive_g must be >= 0, got {self.drive_g}")

    def replace(self, **changes) -> "SystemParams":
        return replace(self, **changes)

    def as_dict(self) -> dict[str, float]:
        return {f.name: float(getattr(self, f.name)) for f in fields(self)}

    @classmethod
    def field_names(cls) -> tuple[str, ...]:
        return tuple(f.name for f in fields(cls))


@dataclass(frozen=True)
class FizeauInput:
    """Mechanical and optical data of a spinning resonator (SI units)."""

    omega_spin: float
    refractive_index: float
    radius: float
    omega_a: float
    wavelength: float
    dn_dlambda: float = 0.0
    sign: int = CCW

    def __post_init__(self):
        if self.refractive_index <= 1:
            raise DomainError(
                f"refractive_index must exceed 1, got {self.refractive_index}"
            )
        if self.radius <= 0:
            raise DomainError(f"radius must be positive, got {self.radius}")
        if self.omega_a <= 0:
            raise DomainError(f"omega_a must be positive, got {self.omega_a}")
        if self.sign not in (CCW, CW):
            raise DomainError(f"sign must be +1 (CCW) or -1 (CW), got {self.sign}")


def fizeau_shift(inp: FizeauInput) -> float:
    """Sagnac-Fizeau resonance shift of a spinning ring, in rad/s.

    The CCW mode (``sign=+1``) is shifted up, the CW mode down, by
    ``Omega n r omega_a / c * (1 - 1/n**2 - (lambda/n) dn/dlambda)``.
    """
    n = inp.refractive_index
    drag = 1.0 - 1.0 / n**2 - (inp.wavelength / n) * inp.dn_dlambda
    return inp.sign * inp.omega_spin * n * inp.radius * inp.omega_a / SPEED_OF_LIGHT * drag


def delta_a_tilde(p: SystemParams) -> float:
    """Cavity detuning including the Fizeau shift."""
    return p.delta_a + p.delta_f


def drive_bound(p: SystemParams) -> float:
    """Largest drive for which the bare (J=0) cavity is stable."""
    return math.hypot(delta_a_tilde(p), p.kappa)


def is_valid(p: SystemParams) -> bool:
    return p.drive_g < drive_bound(p)


def beta(p: SystemParams) -> float:
    """Dimensionless coupling ratio J^2 / (delta_a_tilde^2 + kappa^2 - G^2)."""
    den = delta_a_tilde(p) ** 2 + p.kappa**2 - p.drive_g**2
    if abs(den) < BETA_EPSILON:
        raise SingularityError(
            f"beta denominator vanishes at G={p.drive_g} "
            f"(bound {drive_bound(p)})"
        )
    return p.coupling_j**2 / den
