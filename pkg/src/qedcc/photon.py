"""Thermal photon statistics and the radiative coupling matrix element.

Units are atomic (hbar = e = 1), so a mode of wave vector ``k`` has
``omega = c |k|`` and the Boltzmann ratio is ``x = omega / tau``. Grid sums
run over modes in index order and are accumulated with ``math.fsum``, which
makes them exactly rounded and therefore independent of summation order;
grids closed under polarization inversion cancel to an exact zero.
"""

from __future__ import annotations

import json
import math
from dataclasses import dataclass, field

import numpy as np

from qedcc.errors import DomainError, ModelFormatError, NumericalError
from qedcc.model import PhysicalConstants

DEFAULT_N_MAX = 64
TAIL_TOLERANCE = 1e-15
SERIES_HARD_CAP = 1 << 22
GEOMETRY_TOL = 1e-12


@dataclass(frozen=True)
class PhotonMode:
    """One plane-wave mode ``(k, lambda)`` with a quadrature weight."""

    k: tuple
    polarization: tuple
    weight: float = 1.0

    def __post_init__(self):
        k = np.asarray(self.k, dtype=float).reshape(-1)
        lam = np.asarray(self.polarization, dtype=complex).reshape(-1)
        if k.shape != (3,) or lam.shape != (3,):
            raise DomainError("k and polarization must be 3-vectors")
        if not np.linalg.norm(k) > 0:
            raise DomainError("|k| must be positive")
        if abs(np.linalg.norm(lam) - 1.0) > GEOMETRY_TOL:
            raise DomainError(f"|polarization| = {np.linalg.norm(lam)} is not 1")
        if abs(k @ lam) > GEOMETRY_TOL * np.linalg.norm(k):
            raise DomainError("polarization is not transverse to k")
        object.__setattr__(self, "k", tuple(float(x) for x in k))
        object.__setattr__(self, "polarization", tuple(complex(x) for x in lam))
        object.__setattr__(self, "weight", float(self.weight))

    @property
    def k_norm(self) -> float:
        return float(np.linalg.norm(self.k))

    def omega(self, constants: PhysicalConstants) -> float:
        return constants.c * self.k_norm

    def inverted(self) -> "PhotonMode":
        return PhotonMode(self.k, tuple(-p for p in self.polarization), self.weight)


@dataclass(frozen=True)
class ThermalState:
    tau: float
    modes: tuple
    volume: float = 1.0
    constants: PhysicalConstants = field(default_factory=PhysicalConstants)

    def __post_init__(self):
        if not self.tau > 0:
            raise DomainError(f"tau must be positive, got {self.tau}")
        if not self.volume > 0:
            raise DomainError(f"volume must be positive, got {self.volume}")
        object.__setattr__(self, "modes", tuple(self.modes))

    def ratio(self, mode: PhotonMode) -> float:
        """Boltzmann ratio ``hbar omega / tau``."""
        return mode.omega(self.constants) / self.tau


def g_of_ratio(n, x: float):
    """Planck number-state amplitude for Boltzmann ratio ``x``."""
    n = np.asarray(n)
    amp = math.sqrt(-math.expm1(-x))
    with np.errstate(invalid="ignore", over="ignore"):
        out = amp * np.where(n == 0, 1.0, np.exp(-0.5 * x * np.where(n == 0, 1, n)))
    return out if out.ndim else float(out)


def planck_g(n: int, mode: PhotonMode, state: ThermalState) -> float:
    """``(1 - exp(-x))**0.5 * exp(-n x / 2)`` with ``x = hbar omega / tau``."""
    if n < 0:
        raise DomainError("occupation count must be >= 0")
    return g_of_ratio(n, state.ratio(mode))


def occupation_of_ratio(x: float) -> float:
    if x > 700.0:
        return math.exp(-x)
    return 1.0 / math.expm1(x)


def mean_occupation(mode: PhotonMode, state: ThermalState) -> float:
    """Bose factor ``1 / (exp(x) - 1)``."""
    return occupation_of_ratio(state.ratio(mode))


def occupation_series(x: float, n_max: int = DEFAULT_N_MAX) -> float:
    """``sum_n n g_n**2`` truncated at ``n_max`` (cross-check of the Bose factor)."""
    n = np.arange(n_max + 1)
    return math.fsum(n * g_of_ratio(n, x) ** 2)


def normalization_series(x: float, n_max: int = DEFAULT_N_MAX) -> float:
    n = np.arange(n_max + 1)
    return math.fsum(g_of_ratio(n, x) ** 2)


def radiation_energy_density(state: ThermalState) -> float:
    """``Omega**-1 sum_modes weight * Nbar * hbar omega``."""
    terms = [m.weight * mean_occupation(m, state) * m.omega(state.constants) for m in state.modes]
    return math.fsum(terms) / state.volume


def _tail_bound(x, n):
    """Bound on ``sum_{m > n} sqrt(m+1) g_m g_{m+1}`` (geometric majorant)."""
    q2 = math.exp(-x)
    rho = q2 * math.sqrt((n + 3) / (n + 2))
    if rho >= 1.0:
        return math.inf
    first = -math.expm1(-x) * math.exp(-0.5 * x * (2 * n + 3)) * math.sqrt(n + 2)
    return first / (1.0 - rho)


def ladder_sums(x: float, n_max: int = DEFAULT_N_MAX, tail_tol: float = TAIL_TOLERANCE):
    """``(S_plus, S_minus, n_used)`` for Boltzmann ratio ``x``.

    ``S_plus = sum sqrt(n+1) g_n g_{n+1}`` and ``S_minus = sum sqrt(n) g_n g_{n-1}``.
    The truncation ``n_max`` is doubled until the geometric tail bound drops
    below ``tail_tol`` relative to the partial sum.
    """
    if x == math.inf:
        return 0.0, 0.0, 0
    n = max(1, int(n_max))
    while True:
        idx = np.arange(n + 2)
        g = g_of_ratio(idx, x)
        s_plus = math.fsum(np.sqrt(idx[:-1] + 1.0) * g[:-1] * g[1:])
        s_minus = math.fsum(np.sqrt(idx[1:] * 1.0) * g[1:] * g[:-1])
        if _tail_bound(x, n) <= tail_tol * max(s_plus, 1e-300) or s_plus == 0.0:
            return s_plus, s_minus, n
        if n >= SERIES_HARD_CAP:
            raise NumericalError(f"photon series not converged at n_max = {n} (x = {x})")
        n *= 2


def _mode_prefactor(mode, state):
    return math.sqrt(2.0 * math.pi * state.constants.c / mode.k_norm)


def _fsum_complex(values):
    return complex(math.fsum(v.real for v in values), math.fsum(v.imag for v in values))


def vector_potential_average(state: ThermalState, position=(0.0, 0.0, 0.0), time: float = 0.0,
                             n_max: int = DEFAULT_N_MAX) -> np.ndarray:
    """Thermal average of the vector potential at ``(position, time)``."""
    r = np.asarray(position, dtype=float)
    comps = ([], [], [])
    for mode in state.modes:
        s_plus, s_minus, _ = ladder_sums(state.ratio(mode), n_max)
        phase = np.exp(1j * (np.dot(mode.k, r) - mode.omega(state.constants) * time))
        lam = np.asarray(mode.polarization)
        vec = mode.weight * _mode_prefactor(mode, state) * (
            lam * phase * s_plus + lam.conj() / phase * s_minus
        )
        for c in range(3):
            comps[c].append(vec[c])
    out = np.array([_fsum_complex(c) for c in comps])
    return out / math.sqrt(state.volume)


def radiative_coupling(currents, state: ThermalState, n_max: int = DEFAULT_N_MAX) -> complex:
    """Photon-mediated matrix element between two electronic configurations.

    ``currents[m]`` is the transition-current 3-vector of mode ``m`` with the
    spatial phase already folded in. ``J . lambda`` is a plain bilinear
    product (no conjugation).
    """
    currents = list(currents)
    if len(currents) != len(state.modes):
        raise ValueError(f"{len(currents)} current elements for {len(state.modes)} modes")
    terms = []
    for mode, j in zip(state.modes, currents):
        j = np.asarray(j, dtype=complex).reshape(3)
        s_plus, s_minus, _ = ladder_sums(state.ratio(mode), n_max)
        lam = np.asarray(mode.polarization)
        terms.append(mode.weight * _mode_prefactor(mode, state)
                     * (s_plus * (j @ lam) + s_minus * (j @ lam.conj())))
    return -_fsum_complex(terms) / math.sqrt(state.volume)


@dataclass(frozen=True)
class CouplingSummary:
    value: complex
    magnitude: float
    order_estimate: float


def coupling_summary(currents, state: ThermalState, n_max: int = DEFAULT_N_MAX) -> CouplingSummary:
    """Coupling value, its modulus and the ``alpha Z`` order estimate."""
    v = radiative_coupling(currents, state, n_max)
    k = state.constants
    return CouplingSummary(v, abs(v), k.alpha * k.z_scale)


def _complex3(raw, what):
    try:
        vals = [complex(float(re), float(im)) for re, im in raw]
    except (TypeError, ValueError):
        raise ModelFormatError(f"{what} must be three [re, im] pairs") from None
    if len(vals) != 3:
        raise ModelFormatError(f"{what} must have three components")
    return vals


def modes_from_records(records) -> tuple:
    out = []
    for i, rec in enumerate(records):
        if not isinstance(rec, dict):
            raise ModelFormatError(f"mode {i} is not an object")
        extra = set(rec) - {"k", "polarization", "weight"}
        if extra:
            raise ModelFormatError(f"mode {i}: unknown keys {sorted(extra)}")
        try:
            k = [float(x) for x in rec["k"]]
            lam = _complex3(rec["polarization"], f"mode {i} polarization")
        except KeyError as exc:
            raise ModelFormatError(f"mode {i}: missing key {exc}") from None
        out.append(PhotonMode(tuple(k), tuple(lam), float(rec.get("weight", 1.0))))
    return tuple(out)


def mode_to_record(mode: PhotonMode) -> dict:
    return {
        "k": list(mode.k),
        "polarization": [[p.real, p.imag] for p in mode.polarization],
        "weight": mode.weight,
    }


def load_photon_input(path):
    """Read ``{"tau", "volume", "modes", "currents"?}``; returns ``(state, currents)``."""
    try:
        with open(path, encoding="utf-8") as fh:
            data = json.load(fh)
    except json.JSONDecodeError as exc:
        raise ModelFormatError(f"{path}: {exc}") from None
    if not isinstance(data, dict):
        raise ModelFormatError(f"{path}: top level must be an object")
    extra = set(data) - {"schema_version", "tau", "volume", "modes", "currents"}
    if extra:
        raise ModelFormatError(f"{path}: unknown keys {sorted(extra)}")
    if "tau" not in data or "modes" not in data:
        raise ModelFormatError(f"{path}: needs 'tau' and 'modes'")
    modes = modes_from_records(data["modes"])
    state = ThermalState(float(data["tau"]), modes, float(data.get("volume", 1.0)))
    currents = None
    if "currents" in data:
        currents = [_complex3(c, f"current {i}") for i, c in enumerate(data["currents"])]
    return state, currents


def isotropic_grid(n_directions: int = 6, k_norm: float = 0.01, weight: float = 1.0) -> tuple:
    """Mode grid closed under polarization inversion.

    Each direction carries two transverse polarizations and their negatives.
    """
    dirs = [(1, 0, 0), (0, 1, 0), (0, 0, 1), (-1, 0, 0), (0, -1, 0), (0, 0, -1)][:n_directions]
    modes = []
    for d in dirs:
        d = np.asarray(d, dtype=float)
        a = np.array([0.0, 0.0, 1.0]) if abs(d[2]) < 0.5 else np.array([1.0, 0.0, 0.0])
        e1 = np.cross(d, a)
        e1 /= np.linalg.norm(e1)
        e2 = np.cross(d, e1)
        for e in (e1, e2):
            for sgn in (1.0, -1.0):
                modes.append(PhotonMode(tuple(k_norm * d), tuple(sgn * e), weight))
    return tuple(modes)
