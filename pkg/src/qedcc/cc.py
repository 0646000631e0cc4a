"""Closed-shell coupled-cluster solvers over channel-summed Hamiltonians.

The amplitude equations are the spin-orbital CCSD equations written with
Fock-matrix intermediates; CCD is the same system with singles frozen at
zero. Pair doubles (targets in the negative-energy sector) are either
first-order estimates added after the no-pair solve (``decoupled``) or full
members of the doubles manifold (``coupled``).
"""

from __future__ import annotations

import logging
from dataclasses import dataclass, field

import numpy as np

from qedcc import fock
from qedcc.amplitudes import Amplitudes
from qedcc.errors import (
    ConfigurationError,
    DegenerateDenominatorError,
    DivergenceError,
    NumericalError,
    StructuralError,
)
from qedcc.model import ModelSystem, channel_reference_energy, reference_energy
from qedcc.qed import assemble_channels, pair_energy_mbpt2

log = logging.getLogger(__name__)

__all__ = [
    "Amplitudes",
    "CCOptions",
    "CorrelationReport",
    "ccd_solve",
    "ccsd_solve",
    "mp2_energy",
    "dci_energy",
]

PAIR_MODES = ("none", "decoupled", "coupled")
PAIR_DENOMINATORS = {"exact": "exact_denominator", "limit": "alpha_z_limit",
                     "exact_denominator": "exact_denominator",
                     "alpha_z_limit": "alpha_z_limit"}
DENOMINATOR_FLOOR = 1e-8
IMAGINARY_TOL = 1e-12


@dataclass
class CCOptions:
    max_iterations: int = 500
    damping: float = 0.5
    tolerance: float = 1e-10
    energy_tolerance: float = 1e-12
    level_shift: float = 0.0
    pair_mode: str = "decoupled"
    pair_denominator: str = "exact"

    def __post_init__(self):
        if self.pair_mode not in PAIR_MODES:
            raise ConfigurationError(f"unknown pair mode {self.pair_mode!r}")
        if self.pair_denominator not in PAIR_DENOMINATORS:
            raise ConfigurationError(f"unknown pair denominator {self.pair_denominator!r}")
        if not 0.0 <= self.damping < 1.0:
            raise ConfigurationError(f"damping must lie in [0, 1), got {self.damping}")
        if self.max_iterations < 1:
            raise ConfigurationError("max_iterations must be >= 1")


@dataclass
class CorrelationReport:
    e_reference: float = 0.0
    e_breit0: float = 0.0
    e_lamb0: float = 0.0
    e_hf0: float = 0.0
    e_correl: float = 0.0
    e_1pair: float = 0.0
    e_2pair: float = 0.0
    converged: bool = True
    # imaginary part of the correlation energy; nonzero only for complex
    # integrals, where truncated CC is not Hermitian
    e_correl_imag: float = 0.0
    method: str = ""
    channels: tuple = ()
    residual_history: list = field(default_factory=list, repr=False)

    @property
    def e_total(self) -> float:
        return (self.e_reference + self.e_breit0 + self.e_lamb0 + self.e_hf0
                + self.e_correl + self.e_1pair + self.e_2pair)

    def as_dict(self) -> dict:
        keys = ("e_reference", "e_breit0", "e_lamb0", "e_hf0", "e_correl",
                "e_1pair", "e_2pair", "e_total")
        out = {k: float(getattr(self, k)) for k in keys}
        out["converged"] = bool(self.converged)
        return out


class _Blocks:
    """Integral and Fock blocks over the occupied / active-virtual split."""

    def __init__(self, ham, occ, vir, real=False):
        self.occ, self.vir = list(occ), list(vir)
        o, v = self.occ, self.vir
        allp = list(range(ham.n_levels))
        g = ham.v.real if real else ham.v
        f = np.array(ham.h.real if real else ham.h)
        if o:
            f = f + np.einsum("pkqk->pq", g[np.ix_(allp, o, allp, o)])
        self.f = f

        def blk(*ax):
            return g[np.ix_(*ax)]

        self.foo, self.fov, self.fvo, self.fvv = f[np.ix_(o, o)], f[np.ix_(o, v)], f[np.ix_(v, o)], f[np.ix_(v, v)]
        self.oooo = blk(o, o, o, o)
        self.ooov = blk(o, o, o, v)
        self.oovo = blk(o, o, v, o)
        self.oovv = blk(o, o, v, v)
        self.ovov = blk(o, v, o, v)
        self.ovvo = blk(o, v, v, o)
        self.ovvv = blk(o, v, v, v)
        self.vvvv = blk(v, v, v, v)
        self.vvvo = blk(v, v, v, o)
        self.ovoo = blk(o, v, o, o)
        self.vvoo = blk(v, v, o, o)
        eo = np.real(np.diag(self.foo))
        ev = np.real(np.diag(self.fvv))
        self.d1 = eo[:, None] - ev[None, :]
        self.d2 = eo[:, None, None, None] + eo[None, :, None, None] - ev[None, None, :, None] - ev[None, None, None, :]


def _einsum(*args):
    return np.einsum(*args, optimize=True)


def _perm_ij(x):
    return x - x.transpose(1, 0, 2, 3)


def _perm_ab(x):
    return x - x.transpose(0, 1, 3, 2)


def ccsd_residuals(t1, t2, B):
    """Projected residuals ``<ex| exp(-T) H exp(T) |ref>`` for singles and doubles."""
    e = _einsum
    t1t1 = e("ia,jb->ijab", t1, t1)
    t1t1 = t1t1 - t1t1.transpose(0, 1, 3, 2)
    tau_t = t2 + 0.5 * t1t1
    tau = t2 + t1t1

    Fae = (B.fvv - 0.5 * e("me,ma->ae", B.fov, t1) + e("mf,mafe->ae", t1, B.ovvv)
           - 0.5 * e("mnaf,mnef->ae", tau_t, B.oovv))
    Fmi = (B.foo + 0.5 * e("ie,me->mi", t1, B.fov) + e("ne,mnie->mi", t1, B.ooov)
           + 0.5 * e("inef,mnef->mi", tau_t, B.oovv))
    Fme = B.fov + e("nf,mnef->me", t1, B.oovv)

    tmp = e("je,mnie->mnij", t1, B.ooov)
    Wmnij = B.oooo + tmp - tmp.transpose(0, 1, 3, 2) + 0.25 * e("ijef,mnef->mnij", tau, B.oovv)
    tmp = e("mb,maef->abef", t1, B.ovvv)
    Wabef = B.vvvv + tmp - tmp.transpose(1, 0, 2, 3) + 0.25 * e("mnab,mnef->abef", tau, B.oovv)
    Wmbej = (B.ovvo + e("jf,mbef->mbej", t1, B.ovvv) - e("nb,mnej->mbej", t1, B.oovo)
             - e("jnfb,mnef->mbej", 0.5 * t2 + e("jf,nb->jnfb", t1, t1), B.oovv))

    r1 = (B.fvo.T + e("ie,ae->ia", t1, Fae) - e("ma,mi->ia", t1, Fmi)
          + e("imae,me->ia", t2, Fme) - e("nf,naif->ia", t1, B.ovov)
          - 0.5 * e("imef,maef->ia", t2, B.ovvv) - 0.5 * e("mnae,nmei->ia", t2, B.oovo))

    r2 = B.vvoo.transpose(2, 3, 0, 1).copy()
    r2 += _perm_ab(e("ijae,be->ijab", t2, Fae - 0.5 * e("mb,me->be", t1, Fme)))
    r2 -= _perm_ij(e("imab,mj->ijab", t2, Fmi + 0.5 * e("je,me->mj", t1, Fme)))
    r2 += 0.5 * e("mnab,mnij->ijab", tau, Wmnij)
    r2 += 0.5 * e("ijef,abef->ijab", tau, Wabef)
    tmp = e("imae,mbej->ijab", t2, Wmbej) - e("ie,ma,mbej->ijab", t1, t1, B.ovvo)
    r2 += _perm_ab(_perm_ij(tmp))
    r2 += _perm_ij(e("ie,abej->ijab", t1, B.vvvo))
    r2 -= _perm_ab(e("ma,mbij->ijab", t1, B.ovoo))
    return r1, r2


def _pairs(n):
    return np.triu_indices(n, 1)


def ccd_residuals(t2, B):
    """Doubles residual at ``T1 = 0``, written as dense matrix products.

    Same value as ``ccsd_residuals(0, t2, B)[1]``; used by the CCD solver
    because it avoids all singles contractions. The two ladder terms run
    over packed ``i < j`` and ``a < b`` pairs.
    """
    no, nv = B.d1.shape
    oo, vv = no * no, nv * nv
    io, jo = _pairs(no)
    av, bv = _pairs(nv)
    g = B.oovv
    gp = g[io, jo][:, av, bv]
    tp = t2[io, jo][:, av, bv]
    Fae = B.fvv - 0.5 * np.tensordot(t2, g, axes=([0, 1, 3], [0, 1, 3]))
    Fmi = B.foo + 0.5 * np.tensordot(g, t2, axes=([1, 2, 3], [1, 2, 3]))
    w_oo = B.oooo[io, jo][:, io, jo] + 0.5 * gp @ tp.T
    w_vv = B.vvvv[av, bv][:, av, bv] + 0.5 * tp.T @ gp
    ladder = np.zeros((no, no, nv, nv), dtype=t2.dtype)
    ladder[io[:, None], jo[:, None], av[None, :], bv[None, :]] = w_oo.T @ tp + tp @ w_vv.T
    ladder = _perm_ab(_perm_ij(ladder))

    # ring intermediate stored as (m, e, b, j)
    x = g.transpose(0, 2, 1, 3).reshape(no * nv, no * nv)
    y = t2.transpose(1, 2, 3, 0).reshape(no * nv, nv * no)
    w_ring = B.ovvo.transpose(0, 2, 1, 3).reshape(no * nv, nv * no) - 0.5 * x @ y
    ia = t2.transpose(0, 2, 1, 3).reshape(no * nv, no * nv)
    ring = (ia @ w_ring).reshape(no, nv, nv, no).transpose(0, 3, 1, 2)

    r2 = B.vvoo.transpose(2, 3, 0, 1) + ladder + _perm_ab(_perm_ij(ring))
    r2 += _perm_ab(t2 @ Fae.T)
    r2 -= _perm_ij(np.tensordot(t2, Fmi, axes=([1], [0])).transpose(0, 3, 1, 2))
    return r2


def _energy_parts(t1, t2, B, n_neg):
    """Correlation energy split by the number of negative-sector targets."""
    e = _einsum
    singles = e("ia,ia->", B.fov, t1) + 0.5 * e("ijab,ia,jb->", B.oovv, t1, t1)
    doubles = 0.25 * B.oovv * t2
    return (singles + doubles[..., n_neg == 0].sum(),
            doubles[..., n_neg == 1].sum(),
            doubles[..., n_neg == 2].sum())


def _shifted(d, shift, mask):
    d = np.where(mask, d, 1.0)
    small = mask & (np.abs(d) < DENOMINATOR_FLOOR)
    if shift == 0.0 and small.any():
        idx = tuple(int(i) for i in np.argwhere(small)[0])
        raise ConfigurationError(
            f"degenerate denominator at block index {idx}; set a level shift"
        )
    return d + np.where(d >= 0, shift, -shift)


def _is_real(system):
    ints = system.integrals
    arrays = [ints.h_ext, ints.v_coulomb, ints.h_hf, ints.v_breit]
    return all(a is None or not np.iscomplexobj(a) or not np.any(a.imag) for a in arrays)


def _solve(system, channels, options, with_singles):
    options = options or CCOptions()
    if not system.is_closed_shell:
        raise ConfigurationError("coupled-cluster solvers need a closed-shell reference")
    for lv in system.levels:
        if lv.occupied_in_reference and lv.sector != "positive":
            raise StructuralError(f"negative-sector level {lv.index} occupied in reference")
    ham = assemble_channels(system, channels)
    occ = system.occupied
    pos = system.positive_virtuals
    neg = system.negative_levels
    coupled = options.pair_mode == "coupled" and bool(neg)
    vir = sorted(pos + neg) if coupled else pos
    real = not (np.any(ham.h.imag) or np.any(ham.v.imag))
    dtype = float if real else complex
    B = _Blocks(ham, occ, vir, real)
    no, nv = len(occ), len(vir)
    is_neg = np.array([p in set(neg) for p in vir], dtype=int)
    n_neg = is_neg[:, None] + is_neg[None, :]

    mask1 = np.broadcast_to(is_neg[None, :] == 0, (no, nv)) if with_singles else np.zeros((no, nv), bool)
    ii = np.arange(no)
    aa = np.arange(nv)
    mask2 = ((ii[:, None] != ii[None, :])[:, :, None, None]
             & (aa[:, None] != aa[None, :])[None, None, :, :])
    d1 = _shifted(B.d1, options.level_shift, mask1)
    d2 = _shifted(B.d2, options.level_shift, mask2)

    t1 = np.zeros((no, nv), dtype=dtype)
    t2 = np.zeros((no, no, nv, nv), dtype=dtype)
    step = 1.0 - options.damping
    history = []
    e_prev = None
    converged = False
    it = 0
    for it in range(1, options.max_iterations + 1):
        if with_singles:
            r1, r2 = ccsd_residuals(t1, t2, B)
        else:
            r1, r2 = t1, ccd_residuals(t2, B)
        r1 = np.where(mask1, r1, 0.0)
        r2 = np.where(mask2, r2, 0.0)
        parts = _energy_parts(t1, t2, B, n_neg)
        e_tot = sum(parts)
        rnorm = max(np.max(np.abs(r1), initial=0.0), np.max(np.abs(r2), initial=0.0))
        history.append(float(rnorm))
        if (rnorm <= options.tolerance and e_prev is not None
                and abs(e_tot - e_prev) <= options.energy_tolerance):
            converged = True
            break
        if rnorm <= options.tolerance and (no == 0 or nv == 0):
            converged = True
            break
        e_prev = e_tot
        t1 = t1 + step * r1 / d1
        t2 = t2 + step * r2 / d2
        if not np.isfinite(rnorm):
            break
    if not converged:
        raise DivergenceError(
            f"CC amplitudes not converged after {it} iterations "
            f"(residual {history[-1]:.3e})",
            history,
        )

    e_cor, e_1p, e_2p = parts
    if _is_real(system):
        worst = max(abs(complex(x).imag) for x in parts)
        if worst > IMAGINARY_TOL:
            raise NumericalError(f"real system produced imaginary energy {worst:.3e}")

    amps = Amplitudes(iterations=it, residual_norm=history[-1], converged=True)
    for i in range(no):
        for a in range(nv):
            if mask1[i, a]:
                amps.t1[(occ[i], vir[a])] = complex(t1[i, a])
        for j in range(i + 1, no):
            for a in range(nv):
                for b in range(a + 1, nv):
                    key = (occ[i], occ[j], vir[a], vir[b])
                    val = complex(t2[i, j, a, b])
                    if n_neg[a, b] == 0:
                        amps.t2[key] = val
                    elif n_neg[a, b] == 2:
                        amps.t2_2pair[key] = val
                    elif is_neg[a]:
                        amps.t2_1pair[(occ[i], occ[j], vir[b], vir[a])] = -val
                    else:
                        amps.t2_1pair[key] = val

    chans = ham.channels
    report = CorrelationReport(
        e_reference=reference_energy(system),
        e_breit0=channel_reference_energy(system, "breit") if "breit" in chans else 0.0,
        e_hf0=channel_reference_energy(system, "hyperfine") if "hyperfine" in chans else 0.0,
        e_correl=float(np.real(e_cor)),
        e_correl_imag=float(np.imag(e_cor + e_1p + e_2p)),
        e_1pair=float(np.real(e_1p)),
        e_2pair=float(np.real(e_2p)),
        converged=True,
        method="ccsd" if with_singles else "ccd",
        channels=tuple(sorted(chans)),
        residual_history=history,
    )
    if "lamb" in chans:
        f = system.occupancies
        report.e_lamb0 = ham.lamb_scalar + float(
            sum(f[i] * system.levels[i].lamb_shift for i in occ)
        )

    if neg and options.pair_mode == "decoupled":
        pairs = pair_energy_mbpt2(system, PAIR_DENOMINATORS[options.pair_denominator])
        report.e_1pair = pairs.one_pair
        report.e_2pair = pairs.two_pair
        amps.t2_1pair = {k: complex(v) for k, v in pairs.amplitudes_1pair.items()}
        amps.t2_2pair = {k: complex(v) for k, v in pairs.amplitudes_2pair.items()}
    log.debug("%s converged in %d iterations, E_correl = %.12g",
              report.method, it, report.e_correl)
    return amps, report


def ccd_solve(system: ModelSystem, channels=("coulomb",), options: CCOptions | None = None):
    """Solve the CCD amplitude equations; returns ``(Amplitudes, CorrelationReport)``."""
    return _solve(system, channels, options, with_singles=False)


def ccsd_solve(system: ModelSystem, channels=("coulomb",), options: CCOptions | None = None):
    """Solve the CCSD amplitude equations; returns ``(Amplitudes, CorrelationReport)``."""
    return _solve(system, channels, options, with_singles=True)


def mp2_energy(system: ModelSystem, channels=("coulomb",)) -> float:
    """No-pair MP2 energy with orbital-energy denominators.

    Sum over ``i < j`` occupied and ``a < b`` positive virtuals of
    ``|<ab||ij>|^2 / (e_i + e_j - e_a - e_b)``.
    """
    ham = assemble_channels(system, channels)
    occ, vir = system.occupied, system.positive_virtuals
    eps = system.energies
    total = 0.0
    for x, i in enumerate(occ):
        for j in occ[x + 1:]:
            for y, a in enumerate(vir):
                for b in vir[y + 1:]:
                    g = ham.v[a, b, i, j]
                    if g == 0:
                        continue
                    d = eps[i] + eps[j] - eps[a] - eps[b]
                    if abs(d) < DENOMINATOR_FLOOR:
                        raise DegenerateDenominatorError(
                            f"MP2 denominator {d:.3e} for ({i}, {j}, {a}, {b})"
                        )
                    total += abs(g) ** 2 / d
    return float(total)


def dci_energy(system: ModelSystem, channels=("coulomb",), cap: int = fock.DEFAULT_CAP) -> float:
    """Lowest reference-plus-doubles CI eigenvalue relative to the reference."""
    ham = assemble_channels(system, channels)
    space = fock.enumerate_space(system, "doubles-only", cap=cap)
    w, _ = fock.diagonalize(space, ham)
    ref = system.reference_bits
    e_ref = fock.matrix_element(ref, ref, ham)
    return float(w[0] - e_ref.real)
