"""Brute-force determinant engine.

Determinants are Python ints used as occupation bitstrings (bit ``p`` set
means level ``p`` occupied). Creation operators fill in ascending index
order, so ``a+_p`` acting on ``|d>`` carries the sign
``(-1)**(number of occupied levels below p)``.

Everything here is dense and exact; it is the reference against which the
approximate solvers are checked, not a production CI code.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from itertools import combinations
from math import comb

import numpy as np

from qedcc.amplitudes import Amplitudes
from qedcc.errors import CapacityError, NumericalError, StructuralError
from qedcc.model import ModelSystem
from qedcc.qed import WorkingHamiltonian, assemble_channels

DEFAULT_CAP = 200_000
HERMITICITY_TOL = 1e-10

RULES = ("full", "doubles-only", "doubles-plus-pair", "custom")


def occupied_levels(det: int) -> list:
    out = []
    p = 0
    while det:
        if det & 1:
            out.append(p)
        det >>= 1
        p += 1
    return out


def bits(levels) -> int:
    d = 0
    for p in levels:
        d |= 1 << p
    return d


def _sign_below(det, p):
    return -1 if (det & ((1 << p) - 1)).bit_count() & 1 else 1


def annihilate(det: int, p: int):
    """``a_p |det>`` as ``(sign, det')``; ``None`` when level ``p`` is empty."""
    if not det >> p & 1:
        return None
    return _sign_below(det, p), det ^ (1 << p)


def create(det: int, p: int):
    """``a+_p |det>`` as ``(sign, det')``; ``None`` when level ``p`` is filled."""
    if det >> p & 1:
        return None
    return _sign_below(det, p), det | (1 << p)


def excite(det: int, annihilated=(), created=()):
    """Apply annihilators then creators, each left to right."""
    sign = 1
    for p in annihilated:
        r = annihilate(det, p)
        if r is None:
            return None
        s, det = r
        sign *= s
    for p in created:
        r = create(det, p)
        if r is None:
            return None
        s, det = r
        sign *= s
    return sign, det


@dataclass(frozen=True)
class CISpace:
    determinants: tuple
    rule: str = "custom"
    index: dict = field(default=None, compare=False, repr=False)

    def __post_init__(self):
        dets = tuple(int(d) for d in self.determinants)
        if len(set(dets)) != len(dets):
            raise StructuralError("duplicate determinants in CI space")
        counts = {d.bit_count() for d in dets}
        if len(counts) > 1:
            raise StructuralError(f"mixed electron counts {sorted(counts)} in CI space")
        object.__setattr__(self, "determinants", dets)
        object.__setattr__(self, "index", {d: k for k, d in enumerate(dets)})

    def __len__(self):
        return len(self.determinants)

    def __iter__(self):
        return iter(self.determinants)

    def __contains__(self, det):
        return det in self.index


def _spin(system, p):
    s = system.levels[p].spin
    return 0.0 if s is None else s


def determinant_ms(system: ModelSystem, det: int) -> float:
    return sum(_spin(system, p) for p in occupied_levels(det))


def _electron_count(system):
    n = system.n_electrons
    if abs(n - round(n)) > 1e-12:
        raise StructuralError(f"non-integer electron count {n} for a determinant space")
    n = int(round(n))
    if n > system.n_levels:
        raise StructuralError(f"{n} electrons do not fit into {system.n_levels} levels")
    return n


def enumerate_space(
    system: ModelSystem,
    rule: str = "full",
    custom=None,
    cap: int = DEFAULT_CAP,
    reference: int | None = None,
) -> CISpace:
    """Sorted determinant space generated from the system reference.

    Every rule keeps only determinants whose total ms (sum of level spin
    labels, unlabelled levels counting zero) equals that of the reference.
    ``doubles-only`` is the reference plus positive-sector doubles;
    ``doubles-plus-pair`` adds doubles with one or two negative-sector targets.
    """
    if rule not in RULES:
        raise StructuralError(f"unknown generation rule {rule!r}")
    if rule == "custom":
        if custom is None:
            raise StructuralError("custom rule needs a determinant list")
        dets = sorted(set(int(d) for d in custom))
        if len(dets) > cap:
            raise CapacityError(f"{len(dets)} determinants exceed cap {cap}")
        return CISpace(tuple(dets), "custom")

    n_el = _electron_count(system)
    ref = system.reference_bits if reference is None else reference
    ms_ref = determinant_ms(system, ref)

    if rule == "full":
        total = comb(system.n_levels, n_el)
        if total > cap:
            raise CapacityError(f"full space of {total} determinants exceeds cap {cap}")
        cands = (bits(c) for c in combinations(range(system.n_levels), n_el))
    else:
        occ = occupied_levels(ref)
        pos = [p for p in system.positive_virtuals if not ref >> p & 1]
        neg = system.negative_levels
        targets = [pair for pair in combinations(pos, 2)]
        if rule == "doubles-plus-pair":
            targets += [(a, p) for a in pos for p in neg]
            targets += list(combinations(neg, 2))
        n_occ_pairs = comb(len(occ), 2)
        if 1 + n_occ_pairs * len(targets) > cap:
            raise CapacityError(
                f"{1 + n_occ_pairs * len(targets)} determinants exceed cap {cap}"
            )
        cands = [ref]
        for i, j in combinations(occ, 2):
            hole = ref ^ (1 << i) ^ (1 << j)
            for a, b in targets:
                cands.append(hole | (1 << a) | (1 << b))

    dets = sorted(
        {d for d in cands if abs(determinant_ms(system, d) - ms_ref) < 1e-9}
    )
    return CISpace(tuple(dets), rule)


def _resolve(system, channels):
    if isinstance(system, WorkingHamiltonian):
        return system
    return assemble_channels(system, channels)


def _element(d1, d2, h, v):
    diff = d1 ^ d2
    ndiff = diff.bit_count()
    if ndiff == 0:
        occ = occupied_levels(d1)
        if not occ:
            return 0.0 + 0.0j
        idx = np.array(occ)
        one = h[idx, idx].sum()
        block = v[np.ix_(idx, idx, idx, idx)]
        return one + 0.5 * np.einsum("ijij->", block)
    if ndiff == 2:
        (p,) = occupied_levels(d1 & diff)
        (q,) = occupied_levels(d2 & diff)
        sign, _ = excite(d2, (q,), (p,))
        common = occupied_levels(d1 & d2)
        val = h[p, q]
        if common:
            val = val + v[p, common, q, common].sum()
        return sign * val
    if ndiff == 4:
        p, q = occupied_levels(d1 & diff)
        r, s = occupied_levels(d2 & diff)
        sign, _ = excite(d2, (r, s), (q, p))
        return sign * v[p, q, r, s]
    return 0.0 + 0.0j


def matrix_element(d1: int, d2: int, system, channels=("coulomb",)) -> complex:
    """Slater-Condon element ``<d1|H|d2>`` of the channel-summed Hamiltonian."""
    ham = _resolve(system, channels)
    return complex(_element(d1, d2, ham.h, ham.v))


def hamiltonian_matrix(space: CISpace, system, channels=("coulomb",)) -> np.ndarray:
    """Dense Hamiltonian over ``space``; both triangles evaluated independently."""
    ham = _resolve(system, channels)
    dets = space.determinants
    n = len(dets)
    H = np.zeros((n, n), dtype=complex)
    arr = np.array(dets, dtype=np.uint64)
    for k, d in enumerate(dets):
        near = np.nonzero(np.bitwise_count(arr ^ np.uint64(d)) <= 4)[0]
        for m in near:
            H[k, m] = _element(d, dets[m], ham.h, ham.v)
    return H


def check_hermitian(H: np.ndarray, tol: float = HERMITICITY_TOL):
    if H.size == 0:
        return
    delta = np.abs(H - H.conj().T)
    k, m = np.unravel_index(np.argmax(delta), delta.shape)
    if delta[k, m] > tol:
        raise NumericalError(
            f"Hamiltonian not Hermitian: |H[{k},{m}] - conj(H[{m},{k}])| = {delta[k, m]:.3e}"
        )


def diagonalize(space: CISpace, system, channels=("coulomb",)):
    """Ascending eigenvalues and orthonormal eigenvectors over ``space``."""
    if len(space) == 0:
        raise StructuralError("cannot diagonalize an empty space")
    H = hamiltonian_matrix(space, system, channels)
    check_hermitian(H)
    H = 0.5 * (H + H.conj().T)
    w, V = np.linalg.eigh(H)
    return w, V


def cluster_matrix(amps: Amplitudes, space: CISpace) -> np.ndarray:
    """Matrix of the cluster operator over ``space``.

    Images falling outside ``space`` are dropped, so results are exact only
    on spaces closed under the excitations (e.g. the full space).
    """
    n = len(space)
    T = np.zeros((n, n), dtype=complex)
    exc = [(a, c, t) for a, c, t in amps.excitations() if t != 0]
    for col, d in enumerate(space.determinants):
        for ann, cre, t in exc:
            r = excite(d, ann, cre)
            if r is None:
                continue
            sign, target = r
            row = space.index.get(target)
            if row is not None:
                T[row, col] += sign * t
    return T


def exp_nilpotent(T: np.ndarray, sign: float = 1.0, max_order: int | None = None) -> np.ndarray:
    """``exp(sign * T)`` by its power series, stopping once ``T**k`` vanishes."""
    n = T.shape[0]
    out = np.eye(n, dtype=complex)
    term = np.eye(n, dtype=complex)
    limit = n + 1 if max_order is None else max_order
    for k in range(1, limit + 1):
        term = sign * (T @ term) / k
        if not term.any():
            return out
        out = out + term
    if max_order is None:
        raise NumericalError("cluster matrix is not nilpotent on this space")
    return out


def apply_cluster(amps: Amplitudes, reference: int, space: CISpace, order_cap: int = 4) -> np.ndarray:
    """Coefficients of ``(1 + T + T^2/2! + ... + T^cap/cap!) |reference>``."""
    if order_cap < 1:
        raise ValueError("order_cap must be >= 1")
    if reference not in space:
        raise StructuralError("reference determinant not in the space")
    T = cluster_matrix(amps, space)
    vec = np.zeros(len(space), dtype=complex)
    vec[space.index[reference]] = 1.0
    out = vec.copy()
    term = vec
    for k in range(1, order_cap + 1):
        term = T @ term / k
        out = out + term
    return out


def similarity_transform(
    amps: Amplitudes, system, channels=("coulomb",), space: CISpace | None = None, cap: int = 4096
):
    """Exact ``exp(-T) H exp(T)`` over ``space`` (the full space by default).

    Returns ``(matrix, space)``.
    """
    ham = _resolve(system, channels)
    if space is None:
        space = enumerate_space(ham.system, "full", cap=cap)
    if len(space) > cap:
        raise CapacityError(f"{len(space)} determinants exceed the dense cap {cap}")
    H = hamiltonian_matrix(space, ham)
    T = cluster_matrix(amps, space)
    return exp_nilpotent(T, -1.0) @ H @ exp_nilpotent(T, 1.0), space

