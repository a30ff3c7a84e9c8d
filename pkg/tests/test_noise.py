import math

import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st

from vbrelax.errors import InvalidInputError
from vbrelax.noise import NoisePoint, NoiseSpectrum, Susceptibility, build_spectrum, electric_noise, suppression


def test_zero_excess():
    assert electric_noise(80.0, 80.0) == 0.0


def test_fifty_khz_excess_is_exact():
    assert electric_noise(70.0, 20.0, Susceptibility(0.4)) == 312500.0
    assert electric_noise(120.0, 20.0) == 625000.0


def test_unit_audit():
    assert electric_noise(1.0, 0.0) == 6250.0


def test_negative_excess_is_kept():
    s = build_spectrum([(200.0, 10.0, 1.0)], gamma_inf=20.0)
    assert s.points[0].s_e_perp < 0
    assert s.unphysical == [0]


@given(g=st.floats(0, 1e4), g_inf=st.floats(0, 1e3), d=st.floats(0.01, 10))
def test_linearity(g, g_inf, d):
    sus = Susceptibility(d)
    # doubling the excess rate is exact in binary, so the output doubles exactly
    assert electric_noise(2 * g, 0.0, sus) == 2 * electric_noise(g, 0.0, sus)
    assert electric_noise(g, g_inf, sus) == electric_noise(g - g_inf, 0.0, sus)


def test_build_spectrum_sorts_and_propagates():
    sp = build_spectrum([(500.0, 70.0, 2.0), (150.0, 120.0, 4.0)], gamma_inf=20.0)
    assert list(sp.frequencies) == [150.0, 500.0]
    assert sp.values[1] == 312500.0
    assert sp.sigmas[0] == pytest.approx(4e3 / 0.16, rel=1e-15)
    with_plateau = build_spectrum([(150.0, 120.0, 4.0)], 20.0, gamma_inf_sigma=3.0)
    assert with_plateau.sigmas[0] == pytest.approx(5e3 / 0.16, rel=1e-15)


def test_build_spectrum_all_at_plateau():
    sp = build_spectrum([(f, 20.0, 1.0) for f in (100, 200, 300)], gamma_inf=20.0)
    assert np.all(sp.values == 0)


def test_depth_ordering():
    shallow = build_spectrum([(150.0, 160.0, 5.0)], 25.0)
    deep = build_spectrum([(150.0, 70.0, 5.0)], 25.0)
    assert shallow.values[0] > deep.values[0]


def test_build_spectrum_errors():
    with pytest.raises(InvalidInputError):
        build_spectrum([], 10.0)
    with pytest.raises(InvalidInputError):
        build_spectrum([(100.0, 20, 1), (100.0, 30, 1)], 10.0)


def spectrum(values, f=(150.0, 300.0, 600.0, 900.0)):
    return NoiseSpectrum([NoisePoint(fi, v, 0.0) for fi, v in zip(f, values)])


def test_suppression_identity():
    raw = spectrum([4e5, 2e5, 1e5, 5e4])
    res = suppression(raw, raw)
    assert np.all(res.percent == 0) and res.average == 0


@pytest.mark.parametrize("ratio,target", [(0.533, 46.7), (0.682, 31.8)])
def test_suppression_targets(ratio, target):
    raw = spectrum([4e5, 2e5, 1e5, 5e4])
    res = suppression(raw, raw.scaled(ratio))
    assert abs(res.average - target) < 0.1


def test_suppression_excludes_zero_raw():
    raw = spectrum([4e5, 0.0, 1e5, 5e4])
    res = suppression(raw, raw.scaled(0.5))
    assert res.excluded == [1]
    assert math.isnan(res.percent[1])
    assert res.average == pytest.approx(50.0)


def test_suppression_scale_invariant():
    raw = spectrum([4e5, 2e5, 1e5, 5e4])
    coated = spectrum([2e5, 1.5e5, 0.4e5, 4e4])
    a = suppression(raw, coated)
    b = suppression(raw.scaled(3.7), coated.scaled(3.7))
    assert np.allclose(a.percent, b.percent)


def test_suppression_grid_mismatch():
    with pytest.raises(InvalidInputError):
        suppression(spectrum([1, 2, 3, 4]), spectrum([1, 2, 3, 4], f=(150.0, 300.0, 600.0, 901.0)))
    with pytest.raises(InvalidInputError):
        suppression(spectrum([1, 2, 3, 4]), spectrum([1, 2, 3], f=(150.0, 300.0, 600.0)))


def test_susceptibility_validation():
    with pytest.raises(InvalidInputError):
        Susceptibility(0.0)
