import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from oracles import explicit_hamiltonian, hermitian3_eigvals
from vbrelax.errors import InvalidInputError, OutOfRangeError
from vbrelax.spin import (
    BOHR_MHZ_PER_GAUSS,
    SX,
    SY,
    SZ,
    DefectParams,
    FieldConfig,
    axial_levels,
    build_hamiltonian,
    depth_for_energy,
    dq_splitting,
    odmr_frequencies,
    spin_levels,
    splitting,
    zeeman_splitting,
)

GAMMA_E = 2 * BOHR_MHZ_PER_GAUSS


def test_spin_operators_obey_commutation():
    assert np.allclose(SX @ SY - SY @ SX, 1j * SZ)
    assert np.allclose(SX @ SX + SY @ SY + SZ @ SZ, 2 * np.eye(3))


def test_matches_explicit_matrix_off_axis():
    p = DefectParams(3480, 60, 2.0)
    f = FieldConfig(120.0, 0.7, 1.1)
    bx, by, bz = f.components
    assert np.allclose(build_hamiltonian(p, f), explicit_hamiltonian(3480, 60, GAMMA_E, bx, by, bz), atol=1e-10)


def test_pure_zfs_levels_relative_to_ground():
    levels = spin_levels(build_hamiltonian(DefectParams(3480, 0), FieldConfig(0)))
    assert np.allclose(levels.energies - levels.energies[0], [0, 3480, 3480], atol=1e-9)


def test_zfs_part_is_traceless():
    h = build_hamiltonian(DefectParams(3480, 75), FieldConfig(0))
    assert abs(np.trace(h)) < 1e-12


def test_zero_field_transitions():
    assert odmr_frequencies(DefectParams(3480, 48), FieldConfig(0)) == pytest.approx((3432, 3528), abs=1e-12)
    assert odmr_frequencies(DefectParams(3480, 0), FieldConfig(0)) == (3480, 3480)


def test_14_gauss_splitting_against_eigen_oracle():
    ev = hermitian3_eigvals(explicit_hamiltonian(3480, 48, GAMMA_E, 0, 0, 14))
    p, f = DefectParams(3480, 48), FieldConfig(14)
    assert dq_splitting(p, f) == pytest.approx(ev[2] - ev[1], abs=1e-9)
    assert dq_splitting(p, f) == pytest.approx(123.9, abs=0.05)
    lo, hi = odmr_frequencies(p, f, method="eigen")
    assert (lo, hi) == pytest.approx((ev[1] - ev[0], ev[2] - ev[0]), abs=1e-9)
    assert (lo, hi) == pytest.approx((3418.0, 3542.0), abs=0.05)


def test_36_gauss_upper_pair():
    levels = spin_levels(build_hamiltonian(DefectParams(3480, 48), FieldConfig(36)))
    closed = 2 * math.hypot(48, GAMMA_E * 36)
    assert levels.energies[2] - levels.energies[1] == pytest.approx(closed, abs=1e-9)
    assert closed == pytest.approx(223.2, abs=0.05)


def test_200_gauss_splitting():
    assert dq_splitting(DefectParams(3480, 48), FieldConfig(200)) == pytest.approx(1123.8, abs=0.05)


def test_spin_levels_simple_inputs():
    lv = spin_levels(np.eye(3))
    assert np.allclose(lv.energies, 1)
    assert np.allclose(lv.states.conj().T @ lv.states, np.eye(3), atol=1e-12)
    assert np.allclose(spin_levels(np.diag([0, 3432, 3528])).energies, [0, 3432, 3528])


def test_spin_levels_rejects_non_hermitian():
    with pytest.raises(InvalidInputError):
        spin_levels(np.array([[0, 1, 0], [0, 0, 0], [0, 0, 0]]))


@pytest.mark.parametrize("bad", [dict(d_gs=math.nan), dict(e_gs=-1), dict(g_factor=0), dict(depth=-2.0)])
def test_defect_params_validation(bad):
    with pytest.raises(InvalidInputError):
        DefectParams(**bad)


def test_field_validation():
    with pytest.raises(InvalidInputError):
        FieldConfig(math.inf)
    with pytest.raises(InvalidInputError):
        FieldConfig(-1.0)


@settings(max_examples=200, deadline=None)
@given(
    b=st.floats(0, 500),
    th=st.floats(0, math.pi),
    ph=st.floats(0, 2 * math.pi),
    e=st.floats(0, 100),
)
def test_levels_are_eigenpairs(b, th, ph, e):
    h = build_hamiltonian(DefectParams(3480, e), FieldConfig(b, th, ph))
    assert np.max(np.abs(h - h.conj().T)) < 1e-12
    lv = spin_levels(h)
    assert np.all(np.diff(lv.energies) >= 0)
    for k in range(3):
        v = lv.states[:, k]
        assert abs(np.linalg.norm(v) - 1) < 1e-12
        assert np.linalg.norm(h @ v - lv.energies[k] * v) < 1e-9
    assert np.allclose(lv.states.conj().T @ lv.states, np.eye(3), atol=1e-10)
    assert abs(np.trace(h).real - lv.energies.sum()) < 1e-9


@settings(max_examples=200, deadline=None)
@given(b=st.floats(0, 500), e=st.floats(0, 100))
def test_axial_closed_form_agrees_with_eigensolve(b, e):
    p, f = DefectParams(3480, e), FieldConfig(b)
    closed = 2 * math.hypot(e, GAMMA_E * b)
    assert abs(dq_splitting(p, f) - closed) < 1e-9
    assert abs(dq_splitting(p, f, method="eigen") - closed) < 1e-9
    lv = spin_levels(build_hamiltonian(p, f))
    assert np.allclose(axial_levels(p, b), lv.energies, atol=1e-9)


def test_splitting_monotone_and_floor():
    p = DefectParams(3480, 48)
    vals = [dq_splitting(p, FieldConfig(b)) for b in np.linspace(0, 500, 201)]
    assert np.all(np.diff(vals) >= 0)
    assert vals[0] == 96.0


def test_high_field_approaches_zeeman():
    p = DefectParams(3480, 48)
    f = FieldConfig(1000)
    assert dq_splitting(p, f) / zeeman_splitting(p, f) == pytest.approx(1, rel=1e-3)
    assert splitting(p, f, "zeeman") == zeeman_splitting(p, f)
    with pytest.raises(InvalidInputError):
        splitting(p, f, "other")


def test_closed_method_rejects_off_axis():
    with pytest.raises(InvalidInputError):
        odmr_frequencies(DefectParams(), FieldConfig(10, 0.3), method="closed")


def test_off_axis_picks_zero_like_level():
    p = DefectParams(3480, 48)
    lo, hi = odmr_frequencies(p, FieldConfig(50, 0.4, 0.2))
    ev = hermitian3_eigvals(build_hamiltonian(p, FieldConfig(50, 0.4, 0.2)))
    assert (lo, hi) == pytest.approx((ev[1] - ev[0], ev[2] - ev[0]), abs=1e-9)


def test_depth_table():
    assert depth_for_energy(2.5) == 4.8
    assert depth_for_energy(5.0) == 9.2
    assert depth_for_energy(7.5) == 14.5
    assert depth_for_energy(3.75) == pytest.approx(7.0, abs=1e-12)
    grid = np.linspace(2.5, 7.5, 51)
    assert np.all(np.diff([depth_for_energy(x) for x in grid]) > 0)


@pytest.mark.parametrize("e", [2.4, 7.6, math.nan])
def test_depth_out_of_range(e):
    with pytest.raises(OutOfRangeError):
        depth_for_energy(e)
