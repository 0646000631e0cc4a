"""State-specific multireference coupled cluster at toy scale.

Every reference ``Phi_mu`` carries its own singles-and-doubles cluster
operator ``T_mu``; excitations whose image lies inside the model space are
left out, which keeps the intermediate normalisation
``<Phi_mu| exp(T_nu) |Phi_nu> = delta_mu_nu`` exact. All similarity
transforms are done densely on the full determinant space through
:mod:`qedcc.fock`, so this module is meant for a few dozen determinants, not
for production work.
"""

from __future__ import annotations

import logging
import warnings
from dataclasses import dataclass, field
from itertools import combinations

import numpy as np

from qedcc import fock, photon
from qedcc.amplitudes import Amplitudes
from qedcc.errors import (
    CapacityError,
    ContractError,
    DegenerateDenominatorError,
    DivergenceError,
    DomainError,
    NumericalError,
    StructuralError,
)
from qedcc.qed import assemble_channels

log = logging.getLogger(__name__)

NORMALIZATION_TOL = 1e-10
DEFECT_CONDITION = 1e10
COEFFICIENT_FLOOR = 1e-8

# Nitrogen atom term energies and fine-structure splittings in cm^-1; shipped
# as demonstration inputs for the coupling, never produced by a calculation.
NITROGEN_TERM_ENERGIES_CM = {"2D": 19224.5, "2P": 28838.9}
NITROGEN_SPLITTINGS_CM = {"2D": 8.7, "2P": 0.4}


@dataclass(frozen=True)
class ModelSpace:
    references: tuple
    target_root: int = 0

    def __post_init__(self):
        refs = tuple(int(r) for r in self.references)
        if not refs:
            raise StructuralError("model space needs at least one reference")
        if len(set(refs)) != len(refs):
            raise StructuralError("model-space references must be distinct")
        if len({r.bit_count() for r in refs}) != 1:
            raise StructuralError("model-space references differ in electron count")
        if not 0 <= self.target_root < len(refs):
            raise StructuralError(f"target root {self.target_root} outside 0..{len(refs) - 1}")
        object.__setattr__(self, "references", refs)

    @property
    def dimension(self) -> int:
        return len(self.references)

    @classmethod
    def from_strings(cls, strings, target_root: int = 0) -> "ModelSpace":
        """References as '0'/'1' strings; character ``p`` is level ``p``."""
        refs = []
        for s in strings:
            if not s or set(s) - {"0", "1"}:
                raise StructuralError(f"bad occupation string {s!r}")
            refs.append(fock.bits(p for p, ch in enumerate(s) if ch == "1"))
        return cls(tuple(refs), target_root)


@dataclass
class EffectiveHamiltonian:
    matrix: np.ndarray
    amplitudes: list
    space: ModelSpace
    iterations: int = 0
    converged: bool = True
    residual_history: list = field(default_factory=list, repr=False)
    warnings: list = field(default_factory=list)

    @property
    def dimension(self) -> int:
        return self.matrix.shape[0]


def reference_excitations(system, space: ModelSpace, mu: int):
    """Singles and doubles out of reference ``mu`` that leave the model space.

    Returns a list of ``(kind, key, annihilated, created)`` where ``kind`` is
    1 or 2 and ``key`` indexes the matching :class:`Amplitudes` map.
    Negative-sector targets and ms-changing excitations are skipped.
    """
    ref = space.references[mu]
    inside = set(space.references)
    occ = fock.occupied_levels(ref)
    vir = [lv.index for lv in system.levels
           if lv.sector == "positive" and not ref >> lv.index & 1]
    ms_ref = fock.determinant_ms(system, ref)
    out = []

    def keep(ann, cre):
        r = fock.excite(ref, ann, cre)
        if r is None or r[1] in inside:
            return False
        return abs(fock.determinant_ms(system, r[1]) - ms_ref) < 1e-9

    for i in occ:
        for a in vir:
            if keep((i,), (a,)):
                out.append((1, (i, a), (i,), (a,)))
    for i, j in combinations(occ, 2):
        for a, b in combinations(vir, 2):
            if keep((i, j), (b, a)):
                out.append((2, (i, j, a, b), (i, j), (b, a)))
    return out


class _Workspace:
    """Dense full-space operators shared by the MRCC routines."""

    def __init__(self, space, system, channels, cap):
        self.ham = assemble_channels(system, channels)
        ms = {fock.determinant_ms(system, r) for r in space.references}
        if max(ms) - min(ms) > 1e-9:
            raise StructuralError("model-space references differ in ms")
        self.full = fock.enumerate_space(system, "full", reference=space.references[0], cap=cap)
        if len(self.full) > cap:
            raise CapacityError(f"{len(self.full)} determinants exceed the dense cap {cap}")
        for r in space.references:
            if r not in self.full:
                raise StructuralError(f"reference {bin(r)} not in the determinant space")
        self.H = fock.hamiltonian_matrix(self.full, self.ham)
        self.rows = [self.full.index[r] for r in space.references]

    def exps(self, amps):
        T = fock.cluster_matrix(amps, self.full)
        return fock.exp_nilpotent(T, 1.0), fock.exp_nilpotent(T, -1.0)


def _heff_from(ws, e_plus):
    rows = ws.rows
    n = len(rows)
    M = np.empty((n, n), dtype=complex)
    for nu in range(n):
        wave = e_plus[nu][:, rows[nu]]
        for mu in range(n):
            overlap = wave[rows[mu]]
            target = 1.0 if mu == nu else 0.0
            if abs(overlap - target) > NORMALIZATION_TOL:
                raise ContractError(
                    f"<Phi_{mu}|exp(T_{nu})|Phi_{nu}> = {overlap:.3e}, expected {target}"
                )
        M[:, nu] = (ws.H @ wave)[rows]
    return M


def build_heff(space: ModelSpace, system, amplitudes, channels=("coulomb",),
               cap: int = 4096) -> EffectiveHamiltonian:
    """``H_eff[mu, nu] = <Phi_mu| H exp(T_nu) |Phi_nu>`` through the exact engine."""
    amplitudes = list(amplitudes)
    if len(amplitudes) != space.dimension:
        raise StructuralError(f"{len(amplitudes)} amplitude sets for {space.dimension} references")
    ws = _Workspace(space, system, channels, cap)
    e_plus = [ws.exps(a)[0] for a in amplitudes]
    return EffectiveHamiltonian(_heff_from(ws, e_plus), amplitudes, space)


def _normalized(vec):
    vec = np.asarray(vec, dtype=complex)
    vec = vec / np.linalg.norm(vec)
    k = int(np.argmax(np.abs(vec)))
    return vec * (abs(vec[k]) / vec[k])


def diagonalize_heff(h) -> list:
    """Right eigenpairs ``(E, c)`` sorted by real part, each ``c`` of unit norm.

    Accepts an :class:`EffectiveHamiltonian` or a bare square matrix.
    """
    M = np.asarray(h.matrix if isinstance(h, EffectiveHamiltonian) else h, dtype=complex)
    if M.ndim != 2 or M.shape[0] != M.shape[1] or M.shape[0] == 0:
        raise StructuralError("effective Hamiltonian must be a non-empty square matrix")
    w, V = np.linalg.eig(M)
    if np.linalg.cond(V) > DEFECT_CONDITION:
        raise NumericalError("effective Hamiltonian is defective within tolerance")
    order = np.lexsort((w.imag, w.real))
    return [(complex(w[k]), _normalized(V[:, k])) for k in order]


@dataclass
class MRCCOptions:
    channels: tuple = ("coulomb",)
    max_iterations: int = 500
    damping: float = 0.5
    tolerance: float = 1e-9
    energy_tolerance: float = 1e-11
    intruder_threshold: float = 1e-2
    cap: int = 4096


def mrcc_residual_solve(space: ModelSpace, system, options: MRCCOptions | None = None):
    """Solve the state-specific coupled residual equations for the target root.

    For every reference ``mu`` and excited determinant ``q`` of ``mu``::

        <q| Hbar_mu |Phi_mu> c_mu
          + sum_{nu != mu} <q| exp(-T_mu) exp(T_nu) |Phi_mu> <Phi_mu| Hbar_nu |Phi_nu> c_nu = 0

    with the effective Hamiltonian re-diagonalised every macro-iteration and
    the target root followed by maximum overlap. Returns
    ``(EffectiveHamiltonian, eigenpairs)``.
    """
    opts = options or MRCCOptions()
    ws = _Workspace(space, system, opts.channels, opts.cap)
    n = space.dimension
    rows = ws.rows
    diag = np.real(np.diag(ws.H))
    excs = [reference_excitations(system, space, mu) for mu in range(n)]
    images = []
    for mu, ex in enumerate(excs):
        imgs = []
        for _, _, ann, cre in ex:
            sign, det = fock.excite(space.references[mu], ann, cre)
            imgs.append((sign, ws.full.index[det]))
        images.append(imgs)
    amps = [Amplitudes() for _ in range(n)]
    for mu, ex in enumerate(excs):
        for kind, key, _, _ in ex:
            (amps[mu].t1 if kind == 1 else amps[mu].t2)[key] = 0.0j

    complement = [k for k in range(len(ws.full)) if k not in set(rows)]
    step = 1.0 - opts.damping
    history = []
    c_prev = None
    e_prev = None
    result_warnings = []
    converged = False
    it = 0
    for it in range(1, opts.max_iterations + 1):
        e_plus, e_minus = zip(*(ws.exps(a) for a in amps))
        heff = _heff_from(ws, e_plus)
        pairs = diagonalize_heff(heff)
        if c_prev is None:
            energy, c = pairs[space.target_root]
        else:
            energy, c = max(pairs, key=lambda p: abs(np.vdot(c_prev, p[1])))
            c = c * np.exp(-1j * np.angle(np.vdot(c_prev, c)))
        hbar_cols = [e_minus[nu] @ (ws.H @ e_plus[nu][:, rows[nu]]) for nu in range(n)]

        rmax = 0.0
        updates = []
        for mu in range(n):
            vec = hbar_cols[mu] * c[mu]
            for nu in range(n):
                if nu == mu:
                    continue
                coupling = hbar_cols[nu][rows[mu]]
                vec = vec + (e_minus[mu] @ e_plus[nu][:, rows[mu]]) * coupling * c[nu]
            if abs(c[mu]) < COEFFICIENT_FLOOR and excs[mu]:
                raise NumericalError(f"reference {mu} has vanishing weight in the target root")
            res = []
            for (kind, key, _, _), (sign, row) in zip(excs[mu], images[mu]):
                r = sign * vec[row]
                d = c[mu] * (diag[row] - diag[rows[mu]] - (energy - heff[mu, mu]))
                if abs(d) < 1e-12:
                    raise DegenerateDenominatorError(f"MRCC denominator vanishes for {key}")
                res.append((kind, key, r, d))
                rmax = max(rmax, abs(r))
            updates.append(res)
        history.append(rmax)
        de = abs(energy - e_prev) if e_prev is not None else np.inf
        if rmax <= opts.tolerance and (de <= opts.energy_tolerance or rmax == 0.0):
            converged = True
            break
        for mu, res in enumerate(updates):
            for kind, key, r, d in res:
                block = amps[mu].t1 if kind == 1 else amps[mu].t2
                block[key] = block[key] - step * r / d
        c_prev, e_prev = c, energy

    if not converged:
        raise DivergenceError(f"MRCC not converged after {it} macro-iterations", history)
    if complement:
        gap = min(abs(diag[k] - energy.real) for k in complement)
        if gap < opts.intruder_threshold:
            msg = f"possible intruder state: complement diagonal within {gap:.3e} of the target"
            result_warnings.append(msg)
            warnings.warn(msg, RuntimeWarning, stacklevel=2)
    for a in amps:
        a.iterations, a.residual_norm, a.converged = it, history[-1], True
    h = EffectiveHamiltonian(heff, amps, space, it, True, history, result_warnings)
    log.debug("MRCC converged in %d macro-iterations, E = %.12g", it, energy.real)
    return h, pairs


def static_correlation_shift(e1: float, e2: float, v: complex):
    """Mixing of two configurations by a coupling ``v``.

    Returns ``(perturbative, exact, (c1, c2))``: ``-|v|^2 / (e2 - e1)``, the
    lowest eigenvalue of ``[[e1, v], [conj(v), e2]]`` minus ``e1``, and the
    moduli of the lowest eigenvector.
    """
    gap = e2 - e1
    av = abs(v)
    if gap < 0:
        raise DomainError(f"need e2 >= e1, got e1 = {e1}, e2 = {e2}")
    if av == 0.0:
        return 0.0, 0.0, (1.0, 0.0)
    if gap == 0.0:
        raise DegenerateDenominatorError("degenerate configurations: perturbative shift undefined")
    half = 0.5 * gap
    exact = -(av * av) / (half + np.hypot(half, av))
    ratio = abs(exact) / av
    norm = np.hypot(1.0, ratio)
    return -(av * av) / gap, float(exact), (float(1.0 / norm), float(ratio / norm))


def diradical_coupling(currents, thermal: photon.ThermalState) -> complex:
    """Radiation-induced coupling of the two diradical configurations."""
    return photon.radiative_coupling(currents, thermal)
