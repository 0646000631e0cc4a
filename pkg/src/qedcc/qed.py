"""Working formulas for the QED channels.

Lamb sum-over-states, second-order electron-positron pair energies and the
assembly of the channel-summed working Hamiltonian used by the brute-force
and coupled-cluster solvers.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Optional

import numpy as np

from qedcc.errors import ConfigurationError, DegenerateDenominatorError, DomainError
from qedcc.model import ModelSystem, PhysicalConstants

CHANNELS = ("coulomb", "breit", "hyperfine", "lamb")
LAMB_DEGENERACY_FLOOR = 1e-10
PAIR_DENOMINATOR_FLOOR = 1e-8

# Reference values quoted for hydrogen; documentation only, never computed here.
HYDROGEN_LAMB_SHIFT_MHZ = 1057.8
HYDROGEN_SELF_ENERGY_PART_MHZ = 1040.0
HYDROGEN_VACUUM_POLARIZATION_MHZ = -27.0
HYDROGEN_HYPERFINE_MHZ = 1420.0


def parse_channels(channels) -> frozenset:
    """Normalise a channel selection; Coulomb is always part of the set."""
    if channels is None:
        names = []
    elif isinstance(channels, str):
        names = [c.strip() for c in channels.split(",") if c.strip()]
    else:
        names = [str(c).strip() for c in channels]
    unknown = sorted(set(names) - set(CHANNELS))
    if unknown:
        raise ConfigurationError(f"unknown channel(s): {', '.join(unknown)}")
    return frozenset(names) | {"coulomb"}


@dataclass(frozen=True)
class WorkingHamiltonian:
    """Channel-summed one- and two-body operators of a model system.

    ``lamb_scalar`` is the Lamb sum-over-states energy; it is added to
    reported totals and never enters amplitude equations.
    """

    system: ModelSystem
    channels: frozenset
    h: np.ndarray
    v: np.ndarray
    lamb_scalar: float = 0.0

    @property
    def n_levels(self) -> int:
        return self.h.shape[0]


def _positive_only(v, negative):
    if not negative:
        return v
    out = np.array(v)
    for axis in range(4):
        idx = [slice(None)] * 4
        idx[axis] = negative
        out[tuple(idx)] = 0.0
    return out


def assemble_channels(system: ModelSystem, enabled=("coulomb",)) -> WorkingHamiltonian:
    """Sum the enabled channels into one working Hamiltonian.

    Breit entries touching any negative-sector level are dropped (projected
    Breit operator). Per-level Lamb shifts, when the Lamb channel is on,
    become diagonal one-body terms; the Lamb term list becomes
    ``lamb_scalar``.
    """
    chans = parse_channels(enabled)
    ints = system.integrals
    h = np.array(ints.h_ext)
    v = np.array(ints.v_coulomb)
    if "breit" in chans:
        if ints.v_breit is None:
            raise ConfigurationError("Breit channel enabled but v_breit is absent")
        v = v + _positive_only(ints.v_breit, system.negative_levels)
    if "hyperfine" in chans:
        if ints.h_hf is None:
            raise ConfigurationError("hyperfine channel enabled but h_hf is absent")
        h = h + ints.h_hf
    lamb_scalar = 0.0
    if "lamb" in chans:
        if ints.lamb_terms is None:
            raise ConfigurationError("Lamb channel enabled but lamb_terms is absent")
        h = h + np.diag([lv.lamb_shift for lv in system.levels]).astype(complex)
        lamb_scalar = lamb_shift(ints.lamb_terms, system.constants)
    h.setflags(write=False)
    v.setflags(write=False)
    return WorkingHamiltonian(system, chans, h, v, lamb_scalar)


def lamb_shift(terms, constants: PhysicalConstants, degeneracy_floor=LAMB_DEGENERACY_FLOOR):
    """Lamb energy from ``(weight, excitation_energy)`` sum-over-states terms.

    Each term contributes ``weight * dE * ln(m c^2 / |dE|)`` times
    ``2 alpha / (3 pi c^2)``; terms below ``degeneracy_floor`` vanish.
    """
    mc2 = constants.rest_energy
    total = 0.0
    for w, de in terms:
        if w < 0:
            raise DomainError(f"negative Lamb weight {w}")
        ade = abs(de)
        if ade >= mc2:
            raise DomainError(f"|dE| = {ade} is not small against m c^2 = {mc2}")
        if ade < degeneracy_floor:
            continue
        total += w * de * np.log(mc2 / ade)
    return 2.0 * constants.alpha / (3.0 * np.pi * constants.c**2) * total


@dataclass
class PairEnergyReport:
    one_pair: float = 0.0
    two_pair: float = 0.0
    terms: list = field(default_factory=list)
    amplitudes_1pair: dict = field(default_factory=dict)
    amplitudes_2pair: dict = field(default_factory=dict)


def _pair_denominator(system, i, j, a, b, n_negative, mode):
    if mode == "alpha_z_limit":
        return 2.0 * n_negative * system.constants.rest_energy
    if mode != "exact_denominator":
        raise ConfigurationError(f"unknown pair denominator mode {mode!r}")
    e = system.energies
    d = e[i] + e[j] - e[a] - e[b]
    if abs(d) < PAIR_DENOMINATOR_FLOOR:
        raise DegenerateDenominatorError(
            f"pair denominator {d:.3e} for quadruple ({i}, {j}, {a}, {b})"
        )
    return d


def pair_energy_mbpt2(
    system: ModelSystem, mode: str = "exact_denominator", v: Optional[np.ndarray] = None
) -> PairEnergyReport:
    """Second-order one-pair and two-pair energies.

    First-order pair amplitudes ``<a p'||i j> / D`` are formed with either the
    exact orbital-energy denominator or its ``2mc^2`` / ``4mc^2`` limit, and
    the energies are occupancy-weighted sums of ``|<a p'||i j>|^2 / D``. The
    Coulomb tensor is used unless ``v`` is given.
    """
    report = PairEnergyReport()
    neg = system.negative_levels
    if not neg:
        return report
    if v is None:
        v = system.integrals.v_coulomb
    occ = system.occupied
    virt = system.positive_virtuals
    f = system.occupancies
    for x, i in enumerate(occ):
        for j in occ[x + 1 :]:
            w = f[i] * f[j]
            for a in virt:
                for p in neg:
                    g = v[a, p, i, j]
                    if g == 0:
                        continue
                    d = _pair_denominator(system, i, j, a, p, 1, mode)
                    report.amplitudes_1pair[(i, j, a, p)] = g / d
                    contrib = w * abs(g) ** 2 / d
                    report.one_pair += contrib
                    report.terms.append(((i, j, a, p), contrib))
            for y, p in enumerate(neg):
                for q in neg[y + 1 :]:
                    g = v[p, q, i, j]
                    if g == 0:
                        continue
                    d = _pair_denominator(system, i, j, p, q, 2, mode)
                    report.amplitudes_2pair[(i, j, p, q)] = g / d
                    contrib = w * abs(g) ** 2 / d
                    report.two_pair += contrib
                    report.terms.append(((i, j, p, q), contrib))
    return report
