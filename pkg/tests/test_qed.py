import numpy as np
import pytest

from qedcc.errors import ConfigurationError, DegenerateDenominatorError, DomainError
from qedcc.model import IntegralSet, ModelSystem, PhysicalConstants
from qedcc.oracle_h2 import H2UnitParams, build_unit
from qedcc.qed import (
    HYDROGEN_LAMB_SHIFT_MHZ,
    HYDROGEN_SELF_ENERGY_PART_MHZ,
    HYDROGEN_VACUUM_POLARIZATION_MHZ,
    assemble_channels,
    lamb_shift,
    pair_energy_mbpt2,
    parse_channels,
)

UNIT = H2UnitParams(eps1=-0.6, eps2=0.2, j11=0.65, j22=0.7, j12=0.64, k12=0.18,
                    jb11=0.002, jb22=0.001, kb12=0.0005)


def _with(system, **kw):
    ints = system.integrals
    fields = dict(h_ext=ints.h_ext, v_coulomb=ints.v_coulomb, h_hf=ints.h_hf,
                  v_breit=ints.v_breit, lamb_terms=ints.lamb_terms)
    fields.update(kw)
    return ModelSystem(system.constants, system.levels, IntegralSet(**fields), system.n_electrons)


def test_parse_channels():
    assert parse_channels("breit, lamb") == {"coulomb", "breit", "lamb"}
    assert parse_channels(None) == {"coulomb"}
    with pytest.raises(ConfigurationError):
        parse_channels("coulomb,gravity")


def test_coulomb_only_is_bare():
    s = build_unit(UNIT)
    ham = assemble_channels(s)
    assert np.array_equal(ham.h, s.integrals.h_ext)
    assert np.array_equal(ham.v, s.integrals.v_coulomb)
    assert ham.lamb_scalar == 0.0


def test_breit_adds_and_projects_negative_sector():
    s = build_unit(UNIT, include_negative_sector=True)
    vb = np.array(s.integrals.v_breit)
    vb[4, 0, 4, 0] = vb[0, 4, 0, 4] = 1.0
    vb[4, 0, 0, 4] = vb[0, 4, 4, 0] = -1.0
    s = _with(s, v_breit=vb)
    ham = assemble_channels(s, ("coulomb", "breit"))
    assert ham.v[0, 1, 0, 1] == pytest.approx(s.integrals.v_coulomb[0, 1, 0, 1] + vb[0, 1, 0, 1])
    assert ham.v[4, 0, 4, 0] == s.integrals.v_coulomb[4, 0, 4, 0]


def test_missing_channel_tensor_is_configuration_error():
    s = _with(build_unit(UNIT), v_breit=None, h_hf=None, lamb_terms=None)
    for chan in ("breit", "hyperfine", "lamb"):
        with pytest.raises(ConfigurationError):
            assemble_channels(s, ("coulomb", chan))


def test_lamb_empty_and_degenerate_terms_vanish():
    k = PhysicalConstants()
    assert lamb_shift((), k) == 0.0
    assert lamb_shift(((1.0, 0.0),), k) == 0.0


def test_lamb_formula_single_term():
    k = PhysicalConstants()
    w, de = 0.7, 0.375
    want = 2 * k.alpha / (3 * np.pi * k.c**2) * w * de * np.log(k.rest_energy / de)
    assert lamb_shift(((w, de),), k) == pytest.approx(want, rel=1e-14)


def test_lamb_errors():
    k = PhysicalConstants()
    with pytest.raises(DomainError):
        lamb_shift(((-1.0, 0.1),), k)
    with pytest.raises(DomainError):
        lamb_shift(((1.0, 2 * k.rest_energy),), k)


def test_hydrogen_lamb_reference_values():
    assert HYDROGEN_LAMB_SHIFT_MHZ == 1057.8
    assert HYDROGEN_SELF_ENERGY_PART_MHZ == 1040.0
    assert HYDROGEN_VACUUM_POLARIZATION_MHZ == -27.0


def test_lamb_channel_scalar_and_level_shifts():
    s = _with(build_unit(UNIT), lamb_terms=((0.5, 0.2),))
    ham = assemble_channels(s, "lamb")
    assert ham.lamb_scalar == pytest.approx(lamb_shift(((0.5, 0.2),), s.constants))
    assert np.array_equal(ham.h, s.integrals.h_ext)


def test_no_negative_levels_no_pair_energy():
    rep = pair_energy_mbpt2(build_unit(UNIT))
    assert rep.one_pair == 0.0 and rep.two_pair == 0.0


def test_pair_energy_h2_unit():
    s = build_unit(UNIT, include_negative_sector=True)
    exact = pair_energy_mbpt2(s, "exact_denominator")
    limit = pair_energy_mbpt2(s, "alpha_z_limit")
    mc2 = s.constants.rest_energy
    g = 1e-3
    e = s.energies
    d1 = 2 * e[0] - e[2] - e[4]
    d2 = 2 * e[0] - 2 * e[4]
    assert exact.one_pair == pytest.approx(4 * g * g / d1, rel=1e-12)
    assert exact.two_pair == pytest.approx(4 * g * g / d2, rel=1e-12)
    assert limit.one_pair == pytest.approx(4 * g * g / (2 * mc2), rel=1e-12)
    assert limit.two_pair == pytest.approx(4 * g * g / (4 * mc2), rel=1e-12)
    # pair energies are positive: denominators sit near +2mc^2 and +4mc^2
    assert exact.one_pair > 0 and exact.two_pair > 0
    assert exact.one_pair == pytest.approx(limit.one_pair, rel=1e-2)


def test_pair_denominator_errors():
    s = build_unit(UNIT, include_negative_sector=True)
    with pytest.raises(ConfigurationError):
        pair_energy_mbpt2(s, "mystery")
    levels = list(s.levels)
    from dataclasses import replace
    # put the one-pair target exactly at the occupied pair energy
    e = 2 * levels[0].energy - levels[2].energy
    levels[4:] = [replace(lv, energy=e) for lv in levels[4:]]
    bad = ModelSystem(s.constants, levels, s.integrals, s.n_electrons)
    with pytest.raises(DegenerateDenominatorError):
        pair_energy_mbpt2(bad)


def test_lamb_opposite_terms_cancel():
    k = PhysicalConstants()
    assert lamb_shift(((1.0, 0.3), (1.0, -0.3)), k) == 0.0


def test_limit_pair_energy_scales_with_c_squared():
    k = PhysicalConstants()
    base = pair_energy_mbpt2(build_unit(UNIT, True, constants=k), "alpha_z_limit")
    fast = pair_energy_mbpt2(build_unit(UNIT, True, constants=k.with_c(2 * k.c)), "alpha_z_limit")
    assert fast.one_pair == pytest.approx(base.one_pair / 4, rel=1e-14)
    assert fast.two_pair == pytest.approx(base.two_pair / 4, rel=1e-14)


def test_all_channels_with_zero_tensors_equal_coulomb():
    s = build_unit(UNIT)
    n = s.n_levels
    s = _with(s, v_breit=np.zeros((n,) * 4), h_hf=np.zeros((n, n)), lamb_terms=())
    plain = assemble_channels(s)
    full = assemble_channels(s, ("coulomb", "breit", "hyperfine", "lamb"))
    assert np.array_equal(plain.h, full.h) and np.array_equal(plain.v, full.v)
    assert full.lamb_scalar == 0.0
