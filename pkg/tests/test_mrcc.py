import cmath
import math
from dataclasses import replace

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from helpers import random_system
from qedcc import fock
from qedcc.amplitudes import Amplitudes
from qedcc.cc import CCOptions, ccsd_solve
from qedcc.errors import (
    ContractError,
    DegenerateDenominatorError,
    DivergenceError,
    DomainError,
    NumericalError,
    StructuralError,
)
from qedcc.jsonio import load_model, load_model_space
from qedcc.mrcc import (
    NITROGEN_SPLITTINGS_CM,
    NITROGEN_TERM_ENERGIES_CM,
    MRCCOptions,
    ModelSpace,
    build_heff,
    diagonalize_heff,
    diradical_coupling,
    mrcc_residual_solve,
    reference_excitations,
    static_correlation_shift,
)
from qedcc.photon import PhotonMode, ThermalState, isotropic_grid


@pytest.fixture
def toy(fixtures_dir):
    return load_model(fixtures_dir / "mrcc_toy_model.json")


@pytest.fixture
def toy_space(fixtures_dir):
    return load_model_space(fixtures_dir / "mrcc_toy_space.json")


def test_model_space_validation():
    assert ModelSpace.from_strings(["110", "011"]).references == (0b011, 0b110)
    with pytest.raises(StructuralError):
        ModelSpace(())
    with pytest.raises(StructuralError):
        ModelSpace((3, 3))
    with pytest.raises(StructuralError):
        ModelSpace((3, 7))
    with pytest.raises(StructuralError):
        ModelSpace((3, 5), target_root=2)
    with pytest.raises(StructuralError):
        ModelSpace.from_strings(["1x0"])


def test_excitations_avoid_model_space(toy, toy_space):
    inside = set(toy_space.references)
    for mu, ref in enumerate(toy_space.references):
        ex = reference_excitations(toy, toy_space, mu)
        assert ex
        for _, _, ann, cre in ex:
            assert fock.excite(ref, ann, cre)[1] not in inside


def test_zero_amplitudes_give_bare_hamiltonian(toy, toy_space):
    heff = build_heff(toy_space, toy, [Amplitudes(), Amplitudes()])
    refs = toy_space.references
    bare = np.array([[fock.matrix_element(a, b, toy) for b in refs] for a in refs])
    assert np.allclose(heff.matrix, bare, atol=1e-15)


def test_uncoupled_references_give_diagonal_matrix():
    s = random_system(np.random.default_rng(0), 4, 1, coupling=0.0)
    h = np.diag(np.diag(s.integrals.h_ext))
    s = replace(s, integrals=replace(s.integrals, h_ext=h))
    heff = build_heff(ModelSpace((0b0001, 0b0010)), s, [Amplitudes(), Amplitudes()])
    assert heff.matrix[0, 1] == 0 and heff.matrix[1, 0] == 0


def test_normalization_violation_is_contract_error(toy, toy_space):
    a, b = toy_space.references
    i = fock.occupied_levels(a & ~b)[0]
    c = fock.occupied_levels(b & ~a)[0]
    bad = Amplitudes(t1={(i, c): 0.1})
    with pytest.raises(ContractError):
        build_heff(toy_space, toy, [bad, Amplitudes()])
    with pytest.raises(StructuralError):
        build_heff(toy_space, toy, [Amplitudes()])


def test_single_reference_heff_is_cc_total():
    s = random_system(np.random.default_rng(3), 6, 2, coupling=0.05)
    amps, rep = ccsd_solve(s, options=CCOptions(tolerance=1e-12, energy_tolerance=1e-14))
    heff = build_heff(ModelSpace((s.reference_bits,)), s, [amps])
    want = complex(rep.e_reference + rep.e_correl, rep.e_correl_imag)
    assert abs(heff.matrix[0, 0] - want) < 1e-9


def test_diagonalize_examples():
    pairs = diagonalize_heff(np.diag([0.3, -0.2, 0.1]))
    assert [p[0] for p in pairs] == [-0.2, 0.1, 0.3]
    e1, e2, v = -0.4, 0.25, 0.12
    pairs = diagonalize_heff(np.array([[e1, v], [v, e2]]))
    mid, rad = 0.5 * (e1 + e2), math.hypot(0.5 * (e2 - e1), v)
    assert pairs[0][0] == pytest.approx(mid - rad, abs=1e-15)
    assert pairs[1][0] == pytest.approx(mid + rad, abs=1e-15)
    for _, c in pairs:
        assert np.linalg.norm(c) == pytest.approx(1.0)
    with pytest.raises(NumericalError):
        diagonalize_heff(np.array([[1.0, 1.0], [0.0, 1.0]]))
    with pytest.raises(StructuralError):
        diagonalize_heff(np.zeros((2, 3)))


@given(st.integers(0, 2**32 - 1))
@settings(max_examples=20, deadline=None)
def test_eigenvalues_invariant_under_reordering(seed):
    rng = np.random.default_rng(seed)
    M = rng.normal(size=(4, 4)) + 1j * rng.normal(size=(4, 4))
    perm = rng.permutation(4)
    a = [e for e, _ in diagonalize_heff(M)]
    b = [e for e, _ in diagonalize_heff(M[np.ix_(perm, perm)])]
    assert np.allclose(a, b, atol=1e-12)


def test_toy_matches_fci(toy, toy_space):
    heff, pairs = mrcc_residual_solve(toy_space, toy)
    w, _ = fock.diagonalize(fock.enumerate_space(toy, reference=toy_space.references[0]), toy)
    assert abs(pairs[toy_space.target_root][0] - w[0]) < 1e-8
    assert heff.converged and heff.residual_history[-1] <= 1e-9
    # intermediate normalization holds at the solution
    rebuilt = build_heff(toy_space, toy, heff.amplitudes)
    assert np.allclose(rebuilt.matrix, heff.matrix, atol=1e-14)


def test_toy_reference_order_does_not_matter(toy, toy_space):
    flipped = ModelSpace(tuple(reversed(toy_space.references)), toy_space.target_root)
    _, a = mrcc_residual_solve(toy_space, toy)
    _, b = mrcc_residual_solve(flipped, toy)
    assert a[0][0] == pytest.approx(b[0][0], abs=1e-9)


def test_intruder_warning(toy, toy_space):
    with pytest.warns(RuntimeWarning, match="intruder"):
        heff, _ = mrcc_residual_solve(toy_space, toy, MRCCOptions(intruder_threshold=1e3))
    assert heff.warnings


def test_divergence(toy, toy_space):
    with pytest.raises(DivergenceError) as info:
        mrcc_residual_solve(toy_space, toy, MRCCOptions(max_iterations=2))
    assert len(info.value.residual_history) == 2


def test_static_shift_examples():
    assert static_correlation_shift(0.0, 1.0, 0.0) == (0.0, 0.0, (1.0, 0.0))
    _, exact, (c1, c2) = static_correlation_shift(0.0, 1.0, 0.5)
    assert exact == pytest.approx((1 - math.sqrt(2)) / 2, abs=1e-15)
    assert c1**2 + c2**2 == pytest.approx(1.0)
    pert, exact, _ = static_correlation_shift(0.2, 0.7, 0.5e-3)
    assert exact / pert == pytest.approx(1.0, rel=1e-5)
    with pytest.raises(DegenerateDenominatorError):
        static_correlation_shift(0.3, 0.3, 0.1)
    with pytest.raises(DomainError):
        static_correlation_shift(0.3, 0.1, 0.1)


@given(st.floats(0.0, 2 * math.pi), st.floats(1e-6, 1.0), st.floats(1e-3, 2.0))
def test_static_shift_depends_on_modulus_only(phi, mag, gap):
    a = static_correlation_shift(0.0, gap, mag)
    b = static_correlation_shift(0.0, gap, mag * cmath.exp(1j * phi))
    assert b[1] == pytest.approx(a[1], rel=1e-14)
    assert b[2] == pytest.approx(a[2], rel=1e-14)


def test_diradical_coupling_cases():
    iso = ThermalState(0.1, isotropic_grid(6, 1e-3), 1000.0)
    assert diradical_coupling([(0.01, 0.0, 0.02j)] * len(iso.modes), iso) == 0
    beam = PhotonMode((0.0, 0.0, 1e-3), (1.0, 0.0, 0.0))
    cold = ThermalState(beam.omega(iso.constants) / 800.0, (beam,), 1000.0)
    assert abs(diradical_coupling([(0.01, 0.0, 0.0)], cold)) < 1e-12
    warm = ThermalState(0.1, (beam,), 1000.0)
    v = diradical_coupling([(0.01, 0.0, 0.0)], warm)
    assert abs(v) > 0
    pert, _, _ = static_correlation_shift(0.0, 0.2, v)
    assert pert == pytest.approx(-abs(v) ** 2 / 0.2)


def test_nitrogen_constants():
    assert NITROGEN_TERM_ENERGIES_CM == {"2D": 19224.5, "2P": 28838.9}
    assert NITROGEN_SPLITTINGS_CM == {"2D": 8.7, "2P": 0.4}
