"""Spinor bases, channel-separated integrals and reference states.

Conventions fixed here and relied on everywhere else:

* atomic units, hbar = e = m = 1 by default;
* level energies exclude the rest energy, so negative-sector (positronic)
  levels sit near ``-2 m c**2``;
* two-body tensors are dense, antisymmetrized, physicist ordering:
  ``v[p, q, r, s] = <pq||rs>``;
* every tensor is complex and spans the full level range (no compression).
"""

from __future__ import annotations

from dataclasses import dataclass, field, replace
from typing import Optional

import numpy as np

from qedcc.errors import ConfigurationError, StructuralError

FINE_STRUCTURE = 1.0 / 137.035999084
SPEED_OF_LIGHT = 137.035999084

POSITIVE = "positive"
NEGATIVE = "negative"
SECTORS = (POSITIVE, NEGATIVE)

MAX_LEVELS = 64
DEFAULT_TOLERANCE = 1e-10
DEFAULT_GAP_FRACTION = 0.1


@dataclass(frozen=True)
class PhysicalConstants:
    alpha: float = FINE_STRUCTURE
    c: float = SPEED_OF_LIGHT
    m: float = 1.0
    z_scale: float = 1.0

    @property
    def rest_energy(self) -> float:
        return self.m * self.c**2

    def with_c(self, c: float) -> "PhysicalConstants":
        """Same constants with a rescaled speed of light (alpha follows as 1/c)."""
        return replace(self, c=float(c), alpha=1.0 / float(c))


@dataclass(frozen=True)
class SpinorLevel:
    """One spinor of the finite basis.

    ``spin`` is an optional Kramers/ms label (+0.5 or -0.5) used only to
    restrict brute-force determinant spaces; ``lamb_shift`` is an optional
    level-diagonal Lamb correction that enters the working Hamiltonian when
    the Lamb channel is enabled.
    """

    index: int
    energy: float
    sector: str = POSITIVE
    occupied_in_reference: bool = False
    f: Optional[float] = None
    spin: Optional[float] = None
    lamb_shift: float = 0.0

    def __post_init__(self):
        if self.sector not in SECTORS:
            raise StructuralError(f"level {self.index}: unknown sector {self.sector!r}")
        if self.f is None:
            object.__setattr__(self, "f", 1.0 if self.occupied_in_reference else 0.0)


def _frozen(a, ndim, name):
    if a is None:
        return None
    arr = np.array(a, dtype=complex)
    if arr.ndim != ndim:
        raise StructuralError(f"{name} must have {ndim} dimensions, got {arr.ndim}")
    arr.setflags(write=False)
    return arr


@dataclass(frozen=True)
class IntegralSet:
    """Channel-separated integrals.

    ``h_hf`` and ``v_breit`` may be ``None`` (channel absent). ``lamb_terms``
    is a sequence of ``(weight, excitation_energy)`` pairs; ``None`` marks the
    Lamb channel absent, an empty tuple marks it present but empty.
    """

    h_ext: np.ndarray
    v_coulomb: np.ndarray
    h_hf: Optional[np.ndarray] = None
    v_breit: Optional[np.ndarray] = None
    lamb_terms: Optional[tuple] = ()

    def __post_init__(self):
        object.__setattr__(self, "h_ext", _frozen(self.h_ext, 2, "h_ext"))
        object.__setattr__(self, "v_coulomb", _frozen(self.v_coulomb, 4, "v_coulomb"))
        object.__setattr__(self, "h_hf", _frozen(self.h_hf, 2, "h_hf"))
        object.__setattr__(self, "v_breit", _frozen(self.v_breit, 4, "v_breit"))
        if self.lamb_terms is not None:
            terms = tuple((float(w), float(de)) for w, de in self.lamb_terms)
            object.__setattr__(self, "lamb_terms", terms)

    @property
    def n(self) -> int:
        return self.h_ext.shape[0]


@dataclass(frozen=True)
class ModelSystem:
    constants: PhysicalConstants
    levels: tuple
    integrals: IntegralSet
    n_electrons: float

    def __post_init__(self):
        object.__setattr__(self, "levels", tuple(self.levels))
        n = len(self.levels)
        if n > MAX_LEVELS:
            raise StructuralError(f"{n} levels exceed the index space of {MAX_LEVELS}")
        ints = self.integrals
        for name in ("h_ext", "h_hf"):
            arr = getattr(ints, name)
            if arr is not None and arr.shape != (n, n):
                raise StructuralError(f"{name} has shape {arr.shape}, expected {(n, n)}")
        for name in ("v_coulomb", "v_breit"):
            arr = getattr(ints, name)
            if arr is not None and arr.shape != (n,) * 4:
                raise StructuralError(f"{name} has shape {arr.shape}, expected {(n,) * 4}")

    @property
    def n_levels(self) -> int:
        return len(self.levels)

    @property
    def energies(self) -> np.ndarray:
        return np.array([lv.energy for lv in self.levels], dtype=float)

    @property
    def occupancies(self) -> np.ndarray:
        return np.array([lv.f if lv.occupied_in_reference else 0.0 for lv in self.levels])

    @property
    def occupied(self) -> list:
        return [lv.index for lv in self.levels if lv.occupied_in_reference]

    @property
    def positive_virtuals(self) -> list:
        return [
            lv.index
            for lv in self.levels
            if lv.sector == POSITIVE and not lv.occupied_in_reference
        ]

    @property
    def negative_levels(self) -> list:
        return [lv.index for lv in self.levels if lv.sector == NEGATIVE]

    @property
    def reference_bits(self) -> int:
        bits = 0
        for i in self.occupied:
            bits |= 1 << i
        return bits

    @property
    def is_closed_shell(self) -> bool:
        return all(lv.f == 1.0 for lv in self.levels if lv.occupied_in_reference)


def _occupied_weights(system):
    occ = system.occupied
    f = system.occupancies[occ]
    return occ, f


def _two_body_expectation(v, occ, f):
    if not occ:
        return 0.0
    block = v[np.ix_(occ, occ, occ, occ)]
    diag = np.einsum("ijij->ij", block)
    return 0.5 * float(np.real(np.einsum("i,j,ij->", f, f, diag)))


def reference_energy(system: ModelSystem) -> float:
    """External-field plus Coulomb energy of the reference determinant."""
    occ, f = _occupied_weights(system)
    if not occ:
        return 0.0
    h = system.integrals.h_ext
    one = float(np.real(np.sum(f * h[occ, occ])))
    return one + _two_body_expectation(system.integrals.v_coulomb, occ, f)


def channel_reference_energy(system: ModelSystem, channel: str) -> float:
    """Reference expectation of a single correction channel.

    ``breit`` contracts the Breit two-body tensor like the Coulomb one;
    ``hyperfine`` is the occupation-weighted one-body expectation.
    """
    occ, f = _occupied_weights(system)
    ints = system.integrals
    if channel == "breit":
        if ints.v_breit is None:
            raise ConfigurationError("Breit channel absent from the integral set")
        return _two_body_expectation(ints.v_breit, occ, f)
    if channel == "hyperfine":
        if ints.h_hf is None:
            raise ConfigurationError("hyperfine channel absent from the integral set")
        if not occ:
            return 0.0
        return float(np.real(np.sum(f * ints.h_hf[occ, occ])))
    raise ConfigurationError(f"no reference energy defined for channel {channel!r}")


def _block_diag(blocks, ndim):
    n = sum(b.shape[0] for b in blocks)
    out = np.zeros((n,) * ndim, dtype=complex)
    off = 0
    for b in blocks:
        k = b.shape[0]
        out[(slice(off, off + k),) * ndim] = b
        off += k
    return out


def replicate(unit: ModelSystem, n_units: int) -> ModelSystem:
    """Direct sum of ``n_units`` non-interacting copies of ``unit``.

    Levels of copy ``u`` occupy indices ``u*n .. u*n + n - 1``; every
    integral coupling two different copies is exactly zero.
    """
    if n_units < 1:
        raise StructuralError("n_units must be >= 1")
    if n_units == 1:
        return unit
    n = unit.n_levels
    if n * n_units > MAX_LEVELS:
        raise StructuralError(
            f"{n_units} copies of {n} levels exceed the index space of {MAX_LEVELS}"
        )
    levels = [
        replace(lv, index=lv.index + u * n) for u in range(n_units) for lv in unit.levels
    ]
    ints = unit.integrals

    def rep(arr, ndim):
        return None if arr is None else _block_diag([arr] * n_units, ndim)

    lamb = None if ints.lamb_terms is None else tuple(ints.lamb_terms) * n_units
    integrals = IntegralSet(
        h_ext=rep(ints.h_ext, 2),
        v_coulomb=rep(ints.v_coulomb, 4),
        h_hf=rep(ints.h_hf, 2),
        v_breit=rep(ints.v_breit, 4),
        lamb_terms=lamb,
    )
    return ModelSystem(unit.constants, levels, integrals, unit.n_electrons * n_units)


@dataclass(frozen=True)
class Violation:
    invariant: str
    detail: str
    magnitude: float = 0.0


@dataclass
class ValidationReport:
    violations: list = field(default_factory=list)

    @property
    def ok(self) -> bool:
        return not self.violations

    def __len__(self):
        return len(self.violations)

    def add(self, invariant, detail, magnitude=0.0):
        self.violations.append(Violation(invariant, detail, float(magnitude)))


def _worst(delta):
    idx = np.unravel_index(np.argmax(np.abs(delta)), delta.shape)
    return float(np.abs(delta[idx])), tuple(int(i) for i in idx)


def validate(
    system: ModelSystem,
    tol: float = DEFAULT_TOLERANCE,
    gap_tolerance: Optional[float] = None,
) -> ValidationReport:
    """Check every model invariant and report the violated ones.

    Never raises; an empty report means the system is usable as-is.
    ``gap_tolerance`` defaults to ``0.1 m c**2``.
    """
    report = ValidationReport()
    k = system.constants
    for name in ("alpha", "c", "m", "z_scale"):
        if not getattr(k, name) > 0:
            report.add("constants-positive", f"{name} = {getattr(k, name)}")
    dev = abs(k.c * k.alpha - 1.0)
    if dev > 1e-12:
        report.add("constants-atomic-units", "c * alpha != 1", dev)

    if gap_tolerance is None:
        gap_tolerance = DEFAULT_GAP_FRACTION * k.rest_energy
    limit = -2.0 * k.rest_energy + gap_tolerance
    for pos, lv in enumerate(system.levels):
        if lv.index != pos:
            report.add("level-ordinal", f"level at position {pos} has index {lv.index}")
        if lv.sector == NEGATIVE:
            if lv.energy > limit:
                report.add(
                    "sector-energy",
                    f"negative-sector level {lv.index} has energy {lv.energy}",
                    lv.energy - limit,
                )
            if lv.occupied_in_reference:
                report.add("sector-occupation", f"negative-sector level {lv.index} occupied")
        if not 0.0 <= lv.f <= 1.0:
            report.add("occupancy-range", f"level {lv.index} has f = {lv.f}", abs(lv.f))
        if not lv.occupied_in_reference and lv.f != 0.0:
            report.add("occupancy-range", f"unoccupied level {lv.index} has f = {lv.f}", lv.f)

    count = float(np.sum(system.occupancies))
    if abs(count - system.n_electrons) > tol:
        report.add(
            "electron-count",
            f"n_electrons = {system.n_electrons} but occupations sum to {count}",
            abs(count - system.n_electrons),
        )

    ints = system.integrals
    for name in ("h_ext", "h_hf"):
        h = getattr(ints, name)
        if h is None:
            continue
        mag, idx = _worst(h - h.conj().T)
        if mag > tol:
            report.add("one-body-hermiticity", f"{name}{list(idx)}", mag)
    for name in ("v_coulomb", "v_breit"):
        v = getattr(ints, name)
        if v is None:
            continue
        mag, idx = _worst(v + v.transpose(1, 0, 2, 3))
        if mag > tol:
            report.add("antisymmetry", f"{name}{list(idx)} bra swap", mag)
        mag, idx = _worst(v + v.transpose(0, 1, 3, 2))
        if mag > tol:
            report.add("antisymmetry", f"{name}{list(idx)} ket swap", mag)
        mag, idx = _worst(v - v.transpose(2, 3, 0, 1).conj())
        if mag > tol:
            report.add("two-body-hermiticity", f"{name}{list(idx)}", mag)
    if ints.lamb_terms:
        for t, (w, _) in enumerate(ints.lamb_terms):
            if w < 0:
                report.add("lamb-weight", f"lamb term {t} has weight {w}", -w)
    return report


def antisymmetrize_spatial(eri, spins):
    """Spin-orbital ``<pq||rs>`` from a spatial chemist-notation tensor.

    ``eri[p, q, r, s] = (pq|rs)`` over spin orbitals' spatial parts; ``spins``
    gives one ms label per spin orbital. Used by fixture builders.
    """
    eri = np.asarray(eri, dtype=complex)
    s = np.asarray(spins, dtype=float)
    same = (s[:, None] == s[None, :]).astype(float)
    # <pq|rs> = (pr|qs) delta(sp, sr) delta(sq, ss)
    phys = eri.transpose(0, 2, 1, 3) * same[:, None, :, None] * same[None, :, None, :]
    return phys - phys.transpose(0, 1, 3, 2)
