import csv
import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from ioncrystal.lattice import standard_parameter_set
from ioncrystal.phonons import (
    AXIAL,
    LONGITUDINAL,
    TRANSVERSE,
    Crystal,
    UnstableCrystalError,
    WaveVector,
    band_structure,
    classify_branch,
    diagonalize_modes,
    gap_check,
    occupation,
    pair_tensor,
    read_band_csv,
    write_band_csv,
    x_direction_path,
)


@pytest.fixture(scope="module")
def crystal12():
    return Crystal(12, 50.0)


def test_pair_tensor_examples():
    assert np.allclose(pair_tensor((1, 0, 0)), np.diag([2, -1, -1]))
    assert np.allclose(pair_tensor((0, 2, 0)), np.diag([-1, 2, -1]) / 8)
    with pytest.raises(ValueError):
        pair_tensor((0, 0, 0))


@settings(max_examples=40, deadline=None)
@given(st.lists(st.floats(-5, 5), min_size=3, max_size=3).filter(lambda v: np.linalg.norm(v) > 0.1))
def test_pair_tensor_traceless_symmetric(s):
    V = pair_tensor(s)
    assert abs(np.trace(V)) < 1e-12 * np.abs(V).max()
    assert np.allclose(V, V.T)


def test_zone_centre(crystal12):
    D = crystal12.dynamical_matrix(WaveVector(0, 0, 12))
    assert np.allclose(D, np.diag([1.0, 1.0, 2500.0]), atol=1e-12)
    modes = crystal12.modes(WaveVector(0, 0, 12))
    assert [m.omega for m in modes] == pytest.approx([1.0, 1.0, 50.0])
    assert [m.branch for m in modes] == [LONGITUDINAL, TRANSVERSE, AXIAL]


def test_fft_table_matches_direct_sum():
    c = Crystal(4, 50.0)
    for q in (WaveVector(2, 0, 4), WaveVector(1, 3, 4), WaveVector(3, 2, 4)):
        assert np.allclose(c.dynamical_matrix(q), c.dynamical_matrix_direct(q), atol=1e-12)


@settings(max_examples=30, deadline=None)
@given(st.integers(0, 11), st.integers(0, 11))
def test_mode_properties(n1, n2):
    c = Crystal(12, 50.0)
    q = WaveVector(n1, n2, 12)
    D, Dm = c.dynamical_matrix(q), c.dynamical_matrix(-q)
    assert np.allclose(D, Dm, atol=1e-12)
    assert np.allclose(D, D.T)
    assert np.allclose(D[:2, 2], 0) and np.allclose(D[2, :2], 0)
    modes = c.modes(q)
    E = np.array([m.evec for m in modes])
    assert np.allclose(E @ E.T, np.eye(3), atol=1e-10)
    assert all(m.omega > 0 for m in modes)
    assert [m.omega for m in modes] == sorted(m.omega for m in modes)


def test_classify_branch_examples():
    q = WaveVector(2, 1, 12)  # along x
    assert classify_branch(q, (0, 0, 1)) == AXIAL
    assert classify_branch(q, (1, 0, 0)) == LONGITUDINAL
    assert classify_branch(q, (0, 1, 0)) == TRANSVERSE


def test_unstable_crystal():
    with pytest.raises(UnstableCrystalError):
        diagonalize_modes(np.diag([1.0, -1.0, 4.0]))
    modes = diagonalize_modes(np.diag([1.0, -1e-12, 4.0]))
    assert min(m.omega for m in modes) == 0.0


def test_occupation_examples():
    p1, p2 = standard_parameter_set(1), standard_parameter_set(2)
    assert occupation(p1.wz_ratio, p1) == pytest.approx(20, rel=0.05)
    assert occupation(1.0, p1) == pytest.approx(1e3, rel=0.1)
    assert occupation(1.0, p2) == pytest.approx(1e2, rel=0.1)
    assert occupation(3.0, p1.with_temperature(0.0)) == 0.0
    # against the Bose-Einstein formula evaluated with scipy constants directly
    from scipy import constants
    x = constants.hbar * p1.omega_xy * 2.0 / (constants.k * p1.temperature)
    assert occupation(2.0, p1) == pytest.approx(1.0 / math.expm1(x), rel=1e-14)


def test_band_structure_and_csv(tmp_path, crystal12):
    bands = band_structure([(0, 0)], crystal12)
    assert (bands.longitudinal[0], bands.transverse[0], bands.axial[0]) == pytest.approx((1, 1, 50))
    path = x_direction_path(12)
    bands = band_structure(path, crystal12)
    assert np.all(bands.longitudinal < 25) and np.all(bands.transverse < 25)
    assert np.all(np.abs(bands.axial / 50 - 1) < 0.05)
    with pytest.raises(ValueError):
        band_structure([(0.5, 0)], crystal12)
    f = tmp_path / "bands.csv"
    write_band_csv(bands, f)
    rows = read_band_csv(f)
    assert len(rows) == len(path)
    assert rows[3]["omega_axial"] == pytest.approx(bands.axial[3], rel=1e-11)
    with open(f) as fh:
        assert next(csv.reader(fh))[0] == "n1"


def test_gap_check_small_ratio_fails():
    ok, lo, hi = gap_check(Crystal(12, 50.0).grid)
    assert ok and lo > 2 * hi
    ok, _, _ = gap_check(Crystal(12, 5.0).grid)
    assert not ok
