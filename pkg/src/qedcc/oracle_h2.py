"""Closed forms for non-interacting minimal-basis H2 units.

Each unit has a bonding pair (levels 1 up / 1 down, energy eps1, occupied)
and an antibonding pair (2 up / 2 down, energy eps2). Only the paired double
``|2 2bar>`` couples to the reference, which turns every correlation
problem into a 2x2 eigenvalue problem

    [[0, K], [K, 2 Delta]]

with ``K = K12 (+ KB12)`` and ``Delta`` the half excitation gap. This module
returns the closed-form energies and builds the matching ``ModelSystem`` so the
iterative and brute-force solvers can be checked against them.

Spin-orbital layout of one unit::

    0: 1 up   1: 1 down   2: 2 up   3: 2 down         (positive sector)
    4: 1' up  5: 1' down  6: 2' up  7: 2' down        (negative sector, optional)

Spatial integrals (chemist notation, real orbitals, gerade/ungerade symmetry
kills every integral with an odd number of antibonding indices)::

    (11|11) = J11   (22|22) = J22   (11|22) = J12   (12|12) = (12|21) = K12

and likewise for the Breit channel with J^B_12 = 0. The bare one-body diagonal
is chosen so the Coulomb Fock diagonal reproduces eps1 and eps2 exactly:
``h11 = eps1 - J11`` and ``h22 = eps2 - 2 J12 + K12``.
"""

from __future__ import annotations

import json
from dataclasses import asdict, dataclass, fields

import numpy as np

from qedcc.errors import DomainError, ModelFormatError
from qedcc.model import (
    NEGATIVE,
    POSITIVE,
    IntegralSet,
    ModelSystem,
    PhysicalConstants,
    SpinorLevel,
    antisymmetrize_spatial,
)

DEFAULT_PAIR_SCALE = 1e-3


@dataclass(frozen=True)
class H2UnitParams:
    eps1: float
    eps2: float
    j11: float
    j22: float
    j12: float
    k12: float
    jb11: float = 0.0
    jb22: float = 0.0
    kb12: float = 0.0

    @classmethod
    def from_dict(cls, data: dict) -> "H2UnitParams":
        names = {f.name for f in fields(cls)}
        extra = set(data) - names - {"schema_version"}
        if extra:
            raise ModelFormatError(f"unknown H2 fixture keys: {sorted(extra)}")
        missing = {"eps1", "eps2", "j11", "j22", "j12", "k12"} - set(data)
        if missing:
            raise ModelFormatError(f"missing H2 fixture keys: {sorted(missing)}")
        try:
            return cls(**{k: float(v) for k, v in data.items() if k in names})
        except (TypeError, ValueError) as exc:
            raise ModelFormatError(f"bad H2 fixture value: {exc}") from None

    @classmethod
    def load(cls, path) -> "H2UnitParams":
        try:
            with open(path, encoding="utf-8") as fh:
                data = json.load(fh)
        except json.JSONDecodeError as exc:
            raise ModelFormatError(f"{path}: {exc}") from None
        if not isinstance(data, dict):
            raise ModelFormatError(f"{path}: top level must be an object")
        return cls.from_dict(data)

    def to_dict(self) -> dict:
        return asdict(self)


def _lowest_shift(delta, k):
    """Lowest eigenvalue of [[0, k], [k, 2 delta]], cancellation-free."""
    root = np.hypot(delta, k)
    if delta > 0:
        return -(k * k) / (delta + root)
    return delta - root


def delta_dc(p: H2UnitParams) -> float:
    return (p.eps2 - p.eps1) + 0.5 * (p.j11 + p.j22) - 2.0 * p.j12 + p.k12


def delta_dcb(p: H2UnitParams) -> float:
    return delta_dc(p) + 0.5 * (p.jb22 - p.jb11)


def correl_dc(p: H2UnitParams):
    """Per-unit Dirac-Coulomb correlation energy and the doubles coefficient.

    Returns ``(energy, coefficient)`` with ``energy = coefficient * K12``.
    """
    d = delta_dc(p)
    e = _lowest_shift(d, p.k12)
    if p.k12 == 0:
        return e, 0.0
    # for d > 0 the coefficient is -K / (d + sqrt(d^2 + K^2)) without cancellation
    c = -p.k12 / (d + np.hypot(d, p.k12)) if d > 0 else e / p.k12
    return e, c


def correl_dcb(p: H2UnitParams):
    """Per-unit Dirac-Coulomb-Breit correlation energy and coefficient."""
    d = delta_dcb(p)
    k = p.k12 + p.kb12
    e = _lowest_shift(d, k)
    if k == 0:
        return e, 0.0
    c = -k / (d + np.hypot(d, k)) if d > 0 else e / k
    return e, c


def breit_correction_leading(p: H2UnitParams) -> float:
    """Leading small-coupling estimate of the per-unit Breit correlation shift.

    Expands ``correl_dcb - correl_dc`` to first order in ``K^B/Delta`` and
    ``(J^B_22 - J^B_11)/Delta`` and to leading order in ``K12/Delta``.
    """
    d = delta_dc(p)
    if d <= 0:
        raise DomainError(f"expansion needs Delta_DC > 0, got {d}")
    x = (p.jb22 - p.jb11) / (2.0 * d)
    return -(p.kb12 * (2.0 * p.k12 + p.kb12) - p.k12**2 * x) * (1.0 - x) / (2.0 * d)


def dci_per_unit(p: H2UnitParams, n_units: int) -> float:
    """Doubles-CI correlation energy per unit for ``n_units`` replicas."""
    if n_units < 1:
        raise DomainError("n_units must be >= 1")
    d = delta_dc(p)
    return _lowest_shift(d, np.sqrt(n_units) * p.k12) / n_units


def mp2_per_unit(p: H2UnitParams) -> float:
    gap = p.eps2 - p.eps1
    if gap <= 0:
        raise DomainError(f"MP2 needs eps2 > eps1, got gap {gap}")
    return -(p.k12**2) / (2.0 * gap)


def _spatial_tensor(n_spatial, orbital_of, values):
    eri = np.zeros((n_spatial,) * 4)
    for (a, b, c, d), val in values.items():
        for key in {(a, b, c, d), (b, a, c, d), (a, b, d, c), (b, a, d, c),
                    (c, d, a, b), (d, c, a, b), (c, d, b, a), (d, c, b, a)}:
            eri[key] = val
    o = orbital_of
    return eri[np.ix_(o, o, o, o)]


def _set_antisym(v, p, q, r, s, val):
    for (a, b, c, d), sgn in (((p, q, r, s), 1), ((q, p, r, s), -1),
                              ((p, q, s, r), -1), ((q, p, s, r), 1)):
        v[a, b, c, d] = sgn * val
        v[c, d, a, b] = sgn * np.conj(val)


def build_unit(
    p: H2UnitParams,
    include_negative_sector: bool = False,
    constants: PhysicalConstants | None = None,
    pair_scale: float = DEFAULT_PAIR_SCALE,
) -> ModelSystem:
    """One H2 unit as a ``ModelSystem`` in the layout of the module docstring.

    With the negative sector on, all four positronic levels sit at
    ``-2mc^2 - (eps1 + eps2)/2`` and every one-pair and two-pair double that
    conserves ms couples to the reference with strength ``pair_scale``.
    """
    k = constants or PhysicalConstants()
    orbital = [0, 0, 1, 1]
    spins = [0.5, -0.5, 0.5, -0.5]
    coul = {(0, 0, 0, 0): p.j11, (1, 1, 1, 1): p.j22, (0, 0, 1, 1): p.j12,
            (0, 1, 0, 1): p.k12}
    breit = {(0, 0, 0, 0): p.jb11, (1, 1, 1, 1): p.jb22, (0, 1, 0, 1): p.kb12}
    vc4 = antisymmetrize_spatial(_spatial_tensor(2, orbital, coul), spins)
    vb4 = antisymmetrize_spatial(_spatial_tensor(2, orbital, breit), spins)
    h11 = p.eps1 - p.j11
    h22 = p.eps2 - 2.0 * p.j12 + p.k12
    levels = [
        SpinorLevel(0, p.eps1, POSITIVE, True, spin=0.5),
        SpinorLevel(1, p.eps1, POSITIVE, True, spin=-0.5),
        SpinorLevel(2, p.eps2, POSITIVE, False, spin=0.5),
        SpinorLevel(3, p.eps2, POSITIVE, False, spin=-0.5),
    ]
    n = 4
    if include_negative_sector:
        n = 8
        e_neg = -2.0 * k.rest_energy - 0.5 * (p.eps1 + p.eps2)
        for idx, spin in zip(range(4, 8), (0.5, -0.5, 0.5, -0.5)):
            levels.append(SpinorLevel(idx, e_neg, NEGATIVE, False, spin=spin))
    h = np.zeros((n, n), dtype=complex)
    h[0, 0] = h[1, 1] = h11
    h[2, 2] = h[3, 3] = h22
    vc = np.zeros((n,) * 4, dtype=complex)
    vb = np.zeros((n,) * 4, dtype=complex)
    vc[:4, :4, :4, :4] = vc4
    vb[:4, :4, :4, :4] = vb4
    if include_negative_sector:
        for idx in range(4, 8):
            h[idx, idx] = levels[idx].energy
        one_pair = [(2, 5), (2, 7), (4, 3), (6, 3)]
        two_pair = [(4, 5), (4, 7), (6, 5), (6, 7)]
        for a, b in one_pair + two_pair:
            _set_antisym(vc, a, b, 0, 1, pair_scale)
    integrals = IntegralSet(
        h_ext=h,
        v_coulomb=vc,
        h_hf=np.zeros((n, n)),
        v_breit=vb,
        lamb_terms=(),
    )
    return ModelSystem(k, levels, integrals, 2.0)
