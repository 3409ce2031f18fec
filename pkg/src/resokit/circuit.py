"""Closed-form physics of lumped LC resonators and their parallel-plate
capacitors.

Conventions: SI units throughout, except capacitor areas which are in
um^2 and capacitance per area in F/um^2 (the natural fabrication units;
their product is plain farads). All functions are pure and thread-safe.
"""

import math
from dataclasses import dataclass

from .constants import E_CHARGE, EPS_0, K_B, PHI_0, TWO_PI, UM2_PER_M2
from .errors import DomainError, UnreachableFrequencyError

__all__ = [
    "ResonatorDesign",
    "DielectricSpec",
    "JunctionLeakageSpec",
    "DispersiveBudget",
    "DispersiveReport",
    "resonance_frequency",
    "area_for_frequency",
    "ceiling_frequency",
    "capacitance_from_area",
    "dielectric_constant",
    "debye_permittivity",
    "junction_shunt_inductance",
    "critical_current",
    "dispersive_min_q",
    "tls_noise_weight",
]


@dataclass(frozen=True)
class ResonatorDesign:
    """A lumped-element resonator: wire inductor plus plate capacitor.

    Parameters
    ----------
    inductance_geometric : float
        Wire inductance from field simulation, H.
    cap_area : float
        Plate overlap area, um^2.
    cap_per_area : float
        Capacitance per unit plate area, F/um^2.
    cap_to_ground : float
        Parasitic capacitance offset to ground, F.
    kinetic_fraction : float
        Kinetic inductance as a fraction of the geometric value. Zero by
        default so that predicted frequencies match fit constants that
        were extracted with the bare inductance; a typical thin-wire
        estimate is 0.06.
    """

    inductance_geometric: float
    cap_area: float
    cap_per_area: float
    cap_to_ground: float
    kinetic_fraction: float = 0.0

    def __post_init__(self):
        if self.inductance_geometric <= 0:
            raise DomainError("inductance must be positive")
        if self.cap_area < 0:
            raise DomainError("capacitor area must be non-negative")
        if self.cap_per_area <= 0:
            raise DomainError("capacitance per area must be positive")
        if self.cap_to_ground <= 0:
            raise DomainError("ground capacitance must be positive")
        if not 0.0 <= self.kinetic_fraction < 1.0:
            raise DomainError("kinetic fraction must lie in [0, 1)")

    @property
    def inductance_effective(self) -> float:
        return self.inductance_geometric * (1.0 + self.kinetic_fraction)

    @property
    def capacitance_total(self) -> float:
        return self.cap_to_ground + self.cap_per_area * self.cap_area


@dataclass(frozen=True)
class DielectricSpec:
    """Debye-relaxation description of a capacitor dielectric."""

    thickness: float        # m
    eps_static: float
    eps_inf: float
    relax_time: float       # s

    def __post_init__(self):
        if self.thickness <= 0:
            raise DomainError("thickness must be positive")
        if not self.eps_static >= self.eps_inf >= 1.0:
            raise DomainError("require eps_static >= eps_inf >= 1")
        if self.relax_time < 0:
            raise DomainError("relaxation time must be non-negative")


@dataclass(frozen=True)
class JunctionLeakageSpec:
    """Tunnel-leakage check inputs for a plate capacitor.

    specific_resistance is the room-temperature resistance-area product
    in ohm um^2; gap_energy is the superconducting gap in eV (aluminum
    default 180 ueV).
    """

    specific_resistance: float
    area: float
    gap_energy: float = 180e-6
    temperature: float = 0.01

    def __post_init__(self):
        if self.specific_resistance <= 0 or self.area <= 0:
            raise DomainError("resistance-area product and area must be positive")
        if not 0.0 < self.gap_energy < 1e-2:
            raise DomainError("gap energy outside (0, 1e-2) eV sanity window")
        if self.temperature <= 0:
            raise DomainError("temperature must be positive")


@dataclass(frozen=True)
class DispersiveBudget:
    """Scalar budget for dispersive readout: resonator frequency,
    qubit-resonator detuning and coupling, all in Hz."""

    resonator_freq: float
    detuning: float
    coupling: float

    def __post_init__(self):
        if min(self.resonator_freq, self.detuning, self.coupling) <= 0:
            raise DomainError("all budget frequencies must be positive")
        if self.coupling >= self.detuning:
            raise DomainError("dispersive regime requires coupling < detuning")


@dataclass(frozen=True)
class DispersiveReport:
    """Minimum total Q for resolvable readout, with the shift and
    linewidth at that operating point (chi equals kappa there)."""

    min_q_total: float
    dispersive_shift: float   # Hz
    linewidth_at_min_q: float  # Hz


def resonance_frequency(design: ResonatorDesign) -> float:
    """Resonance frequency 1/(2 pi sqrt(L_eff (C_g + c S))), Hz.

    Strictly decreasing in area, inductance and ground capacitance.
    """
    lc = design.inductance_effective * design.capacitance_total
    if lc <= 0:
        raise DomainError("non-positive LC product")
    return 1.0 / (TWO_PI * math.sqrt(lc))


def ceiling_frequency(inductance_geometric: float, cap_to_ground: float,
                      kinetic_fraction: float = 0.0) -> float:
    """Zero-area frequency ceiling of a design family, Hz."""
    l_eff = inductance_geometric * (1.0 + kinetic_fraction)
    if l_eff <= 0 or cap_to_ground <= 0:
        raise DomainError("inductance and ground capacitance must be positive")
    return 1.0 / (TWO_PI * math.sqrt(l_eff * cap_to_ground))


def area_for_frequency(target: float, inductance_geometric: float,
                       cap_per_area: float, cap_to_ground: float,
                       kinetic_fraction: float = 0.0) -> float:
    """Plate area (um^2) that tunes a design to the target frequency.

    Exact inverse of resonance_frequency; raises
    UnreachableFrequencyError for targets at or above the zero-area
    ceiling.
    """
    if target <= 0:
        raise DomainError("target frequency must be positive")
    if cap_per_area <= 0:
        raise DomainError("capacitance per area must be positive")
    ceiling = ceiling_frequency(inductance_geometric, cap_to_ground,
                                kinetic_fraction)
    if target >= ceiling:
        raise UnreachableFrequencyError(
            f"target {target:.6g} Hz is at or above the zero-area ceiling "
            f"{ceiling:.6g} Hz")
    l_eff = inductance_geometric * (1.0 + kinetic_fraction)
    c_total = 1.0 / (l_eff * (TWO_PI * target) ** 2)
    return (c_total - cap_to_ground) / cap_per_area


def capacitance_from_area(area: float, cap_per_area: float,
                          offset: float = 0.0) -> float:
    """Plate capacitance c*S plus a stray offset, F."""
    if area < 0:
        raise DomainError("area must be non-negative")
    if cap_per_area <= 0:
        raise DomainError("capacitance per area must be positive")
    return cap_per_area * area + offset


def dielectric_constant(cap_per_area: float, thickness: float) -> float:
    """Relative permittivity d*c/eps0 of a plate dielectric.

    cap_per_area in F/um^2, thickness in m.
    """
    if cap_per_area <= 0 or thickness <= 0:
        raise DomainError("capacitance per area and thickness must be positive")
    return thickness * cap_per_area * UM2_PER_M2 / EPS_0


def debye_permittivity(spec: DielectricSpec, angular_freq: float) -> float:
    """Debye dispersion eps_inf + (eps_s - eps_inf)/(1 + w^2 tau^2).

    Non-increasing in angular frequency, bounded by
    [eps_inf, eps_static].
    """
    if angular_freq < 0:
        raise DomainError("angular frequency must be non-negative")
    wt = angular_freq * spec.relax_time
    return spec.eps_inf + (spec.eps_static - spec.eps_inf) / (1.0 + wt * wt)


def critical_current(spec: JunctionLeakageSpec) -> float:
    """Tunnel critical current from the normal-state resistance, A.

    I_c = (pi Delta / 2 e R) tanh(Delta / 2 k_B T) with R the
    room-temperature resistance of the plate stack.
    """
    resistance = spec.specific_resistance / spec.area
    gap_j = spec.gap_energy * E_CHARGE
    thermal = math.tanh(gap_j / (2.0 * K_B * spec.temperature))
    return math.pi * gap_j / (2.0 * E_CHARGE * resistance) * thermal


def junction_shunt_inductance(spec: JunctionLeakageSpec) -> float:
    """Parasitic Josephson inductance Phi0/(2 pi I_c) of a leaky
    capacitor, H.

    Returns inf when the critical current underflows to zero (fully
    suppressed tunneling): the shunt is negligible, not an error.
    """
    i_c = critical_current(spec)
    if i_c == 0.0:
        return math.inf
    return PHI_0 / (TWO_PI * i_c)


def dispersive_min_q(budget: DispersiveBudget) -> DispersiveReport:
    """Minimum total quality factor for dispersive readout.

    Requires the state-dependent shift chi = g^2/Delta to exceed the
    linewidth kappa = omega/Q_total, giving Q_total >= omega Delta/g^2
    (the 2 pi factors cancel when everything is in Hz).
    """
    min_q = budget.resonator_freq * budget.detuning / budget.coupling ** 2
    chi = budget.coupling ** 2 / budget.detuning
    return DispersiveReport(min_q_total=min_q, dispersive_shift=chi,
                            linewidth_at_min_q=budget.resonator_freq / min_q)


def tls_noise_weight(eps: float, field_scale: float, volume: float) -> float:
    """Relative dielectric-noise weight 1/(eps^2 E V) of a design.

    Only ratios between designs are meaningful; the field-scale factor
    has no committed unit, so absolute values carry no physical meaning.
    """
    if min(eps, field_scale, volume) <= 0:
        raise DomainError("all inputs must be positive")
    return 1.0 / (eps ** 2 * field_scale * volume)
