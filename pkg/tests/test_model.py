import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from helpers import random_antisymmetric, random_hermitian, random_system
from qedcc import fock
from qedcc.errors import StructuralError
from qedcc.model import (
    IntegralSet,
    ModelSystem,
    PhysicalConstants,
    SpinorLevel,
    antisymmetrize_spatial,
    channel_reference_energy,
    reference_energy,
    replicate,
    validate,
)
from qedcc.oracle_h2 import H2UnitParams, build_unit

UNIT = H2UnitParams(eps1=-0.6, eps2=0.2, j11=0.65, j22=0.7, j12=0.64, k12=0.18,
                    jb11=0.002, jb22=0.001, kb12=0.0005)


def _system(h, v, occupied, vb=None, hf=None, spins=None):
    n = h.shape[0]
    levels = [SpinorLevel(p, float(np.real(h[p, p])), "positive", p in occupied,
                          spin=None if spins is None else spins[p]) for p in range(n)]
    ints = IntegralSet(h_ext=h, v_coulomb=v, v_breit=vb, h_hf=hf)
    return ModelSystem(PhysicalConstants(), levels, ints, float(len(occupied)))


def test_constants_consistent():
    k = PhysicalConstants()
    assert abs(k.c * k.alpha - 1.0) < 1e-12
    assert k.rest_energy == pytest.approx(k.c**2)
    k2 = k.with_c(10.0)
    assert k2.alpha == pytest.approx(0.1)


def test_no_occupied_levels_gives_zero():
    rng = np.random.default_rng(0)
    s = _system(random_hermitian(rng, 3, 1.0), random_antisymmetric(rng, 3, 1.0), [])
    assert reference_energy(s) == 0.0


def test_single_occupied_level_is_diagonal():
    rng = np.random.default_rng(1)
    h = random_hermitian(rng, 4, 1.0)
    s = _system(h, np.zeros((4,) * 4), [2])
    assert reference_energy(s) == pytest.approx(h[2, 2].real)


def test_h2_reference_energy_matches_slater_condon():
    s = build_unit(UNIT)
    ref = s.reference_bits
    expect = fock.matrix_element(ref, ref, s).real
    assert reference_energy(s) == pytest.approx(expect, abs=1e-14)


def test_breit_reference_energy_is_jb11():
    s = build_unit(UNIT)
    assert channel_reference_energy(s, "breit") == pytest.approx(UNIT.jb11, abs=1e-15)


def test_zero_breit_channel_is_zero():
    rng = np.random.default_rng(2)
    s = _system(random_hermitian(rng, 4, 1.0), random_antisymmetric(rng, 4, 1.0), [0, 1],
                vb=np.zeros((4,) * 4))
    assert channel_reference_energy(s, "breit") == 0.0


def test_hyperfine_cancels_for_kramers_pair():
    # spin-odd hyperfine matrix: equal and opposite on the two partners
    hf = np.diag([1e-3, -1e-3, 2e-3, -2e-3]).astype(complex)
    s = _system(np.diag([-1.0, -1.0, 1.0, 1.0]).astype(complex), np.zeros((4,) * 4), [0, 1],
                hf=hf, spins=[0.5, -0.5, 0.5, -0.5])
    assert channel_reference_energy(s, "hyperfine") == 0.0


def test_dimension_mismatch_is_structural():
    with pytest.raises(StructuralError):
        _system(np.eye(3, dtype=complex), np.zeros((4,) * 4), [0])


def test_replicate_identity_and_zero_cross_terms():
    s = build_unit(UNIT)
    one = replicate(s, 1)
    assert np.array_equal(one.integrals.v_coulomb, s.integrals.v_coulomb)
    assert np.array_equal(one.integrals.h_ext, s.integrals.h_ext)
    three = replicate(s, 3)
    v = three.integrals.v_coulomb
    assert three.n_electrons == 6.0
    assert v[0, 4, 0, 4] == 0.0
    assert v[2, 7, 1, 9] == 0.0
    assert three.integrals.h_ext[0, 4] == 0.0


def test_replicate_rejects_bad_counts():
    s = build_unit(UNIT)
    with pytest.raises(StructuralError):
        replicate(s, 0)
    with pytest.raises(StructuralError):
        replicate(s, 17)


@given(st.integers(1, 8), st.integers(0, 2**32 - 1))
@settings(max_examples=20, deadline=None)
def test_reference_energy_additive(n, seed):
    unit = random_system(np.random.default_rng(seed), 4, 2)
    big = replicate(unit, n)
    e1 = reference_energy(unit)
    assert reference_energy(big) == pytest.approx(n * e1, rel=1e-12, abs=1e-13)


@given(st.integers(0, 2**32 - 1), st.lists(st.booleans(), min_size=5, max_size=5))
@settings(max_examples=20, deadline=None)
def test_zero_channel_exact_for_any_occupation(seed, occ):
    rng = np.random.default_rng(seed)
    occupied = [p for p, o in enumerate(occ) if o]
    s = _system(random_hermitian(rng, 5, 1.0), random_antisymmetric(rng, 5, 1.0), occupied,
                vb=np.zeros((5,) * 4), hf=np.zeros((5, 5)))
    assert channel_reference_energy(s, "breit") == 0.0
    assert channel_reference_energy(s, "hyperfine") == 0.0


def test_valid_unit_has_empty_report():
    assert validate(build_unit(UNIT)).ok
    assert validate(build_unit(UNIT, include_negative_sector=True)).ok


def test_symmetric_tensor_flagged():
    v = np.zeros((4,) * 4, dtype=complex)
    v[0, 1, 2, 3] = v[1, 0, 2, 3] = 0.3
    v[2, 3, 0, 1] = v[2, 3, 1, 0] = 0.3
    s = _system(np.diag([-1.0, -1.0, 1.0, 1.0]).astype(complex), v, [0, 1])
    names = {x.invariant for x in validate(s).violations}
    assert "antisymmetry" in names


def test_shallow_negative_level_flagged():
    levels = [SpinorLevel(0, -0.5, "positive", True), SpinorLevel(1, -0.5, "negative")]
    s = ModelSystem(PhysicalConstants(), levels,
                    IntegralSet(np.zeros((2, 2)), np.zeros((2,) * 4)), 1.0)
    rep = validate(s)
    assert [x.invariant for x in rep.violations] == ["sector-energy"]
    assert rep.violations[0].magnitude > 0


MUTATIONS = ("h_hermiticity", "v_antisymmetry", "v_hermiticity", "electron_count",
             "negative_energy", "lamb_weight")


def _mutate(s, kind, rng):
    ints = s.integrals
    h, v = np.array(ints.h_ext), np.array(ints.v_coulomb)
    levels, n_el, lamb = list(s.levels), s.n_electrons, ints.lamb_terms
    p, q = rng.choice(s.n_levels, 2, replace=False)
    if kind == "h_hermiticity":
        h[p, q] += 0.1
    elif kind == "v_antisymmetry":
        v[p, q, p, q] += 0.1
        v[p, q, q, p] -= 0.1
        v[q, p, q, p] += 0.1
        v[q, p, p, q] -= 0.1
        # keeps Hermiticity, breaks only the bra/ket sign pattern when combined
        v[p, p, q, q] += 0.1
        v[q, q, p, p] += 0.1
    elif kind == "v_hermiticity":
        v[p, q, p, q] += 0.1j
        v[q, p, q, p] += 0.1j
        v[p, q, q, p] -= 0.1j
        v[q, p, p, q] -= 0.1j
    elif kind == "electron_count":
        n_el += 1.0
    elif kind == "negative_energy":
        lv = levels[-1]
        levels[-1] = SpinorLevel(lv.index, -0.5, "negative", False, spin=lv.spin)
    elif kind == "lamb_weight":
        lamb = ((-1.0, 0.1),)
    ints = IntegralSet(h, v, ints.h_hf, ints.v_breit, lamb)
    return ModelSystem(s.constants, levels, ints, n_el)


@given(st.integers(0, 2**32 - 1), st.sets(st.sampled_from(MUTATIONS)))
@settings(max_examples=40, deadline=None)
def test_validate_flags_exactly_injected(seed, kinds):
    rng = np.random.default_rng(seed)
    s = random_system(rng, 5, 2)
    for kind in sorted(kinds):
        s = _mutate(s, kind, rng)
    rep = validate(s)
    if kinds:
        assert len(rep) >= 1
    else:
        assert rep.ok


def test_antisymmetrize_spatial_properties():
    rng = np.random.default_rng(5)
    eri = rng.normal(size=(2, 2, 2, 2))
    # chemist 8-fold symmetry for real orbitals
    eri = eri + eri.transpose(1, 0, 2, 3)
    eri = eri + eri.transpose(0, 1, 3, 2)
    eri = eri + eri.transpose(2, 3, 0, 1)
    o = [0, 0, 1, 1]
    spatial = eri[np.ix_(o, o, o, o)]
    v = antisymmetrize_spatial(spatial, [0.5, -0.5, 0.5, -0.5])
    assert np.allclose(v, -v.transpose(1, 0, 2, 3))
    assert np.allclose(v, -v.transpose(0, 1, 3, 2))
    assert np.allclose(v, v.transpose(2, 3, 0, 1).conj())
    # <0 1||0 1> for opposite spins is the pure Coulomb (00|11)
    assert v[0, 1, 0, 1] == pytest.approx(eri[0, 0, 0, 0])
