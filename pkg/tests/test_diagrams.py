import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from ioncrystal.decoherence import (
    ModeTable,
    connected_terms,
    coupling_scales,
    error_breakdown,
    inplane_modes,
    lattice_couplings,
    structure_factor_F,
    structure_factor_G,
    term_E1,
    term_E2,
    term_E3,
    term_E4,
    total_fidelity,
    validate_e3_sample,
)
from ioncrystal.decoherence.lattice_terms import BLOCK_ROWS
from ioncrystal.lattice import standard_parameter_set
from ioncrystal.phonons import Crystal


@pytest.fixture(scope="module")
def modes30():
    p = standard_parameter_set(1)
    return inplane_modes(Crystal(30, 50.0), p)


def test_structure_factor_examples():
    assert structure_factor_F(0.0, (1, 0)) == 0
    assert structure_factor_F(math.pi, (1, 0)) == pytest.approx(2.0)
    assert structure_factor_G(0.0, (1, 0), 1.0, (1, 0)) == 0
    assert structure_factor_G(math.pi, (1, 0), math.pi, (1, 0)) == pytest.approx(-12.0)
    assert structure_factor_G(math.pi, (0, 1), math.pi, (0, 1)) == pytest.approx(8.0)
    rng = np.random.default_rng(1)
    for _ in range(20):
        q, e = rng.uniform(0, 2 * math.pi), rng.normal(size=2)
        assert structure_factor_F(-q, e) == pytest.approx(np.conj(structure_factor_F(q, e)))


def test_coupling_scales_examples():
    s = coupling_scales(3.6e-3, 1.0)
    assert s.F_bar == pytest.approx(-8.48e-3, rel=1e-3)
    assert s.G_bar == pytest.approx(-1.527e-5, rel=1e-3)
    assert s.F_bar / s.G_bar == pytest.approx(2 / 3.6e-3)
    # beta_z form equals the gamma form when beta_z eta^2 omega_z = pi Gamma / 8
    beta_z, eta0, wz = 3.8e-3, 0.234, 50.0
    gamma = 8 * beta_z * eta0 ** 2 * wz / math.pi
    a, b = coupling_scales(3.6e-3, gamma), coupling_scales(3.6e-3, beta_z=beta_z, eta0=eta0, wz_ratio=wz)
    assert a.F_bar == pytest.approx(b.F_bar, rel=1e-12) and a.G_bar == pytest.approx(b.G_bar, rel=1e-12)
    with pytest.raises(ValueError):
        coupling_scales(-1.0, 1.0)


def test_separable_sums_match_dense():
    p = standard_parameter_set(1, temperature=2e-6)
    for L in (2, 3, 4):
        m = inplane_modes(Crystal(L, 50.0), p)
        sc = coupling_scales(0.1, 0.5)
        f, g, partner = lattice_couplings(m, sc)
        mt = ModeTable(m.omega, m.nbar, m.xbar2, partner)
        for method in ("exact", "high_t"):
            lat = (term_E1(m, sc.G_bar, 0.5), term_E2(m, sc.F_bar, 0.5), term_E3(m, sc.G_bar, 0.5, method),
                   term_E4(m, sc.F_bar, sc.G_bar, 0.5, method))
            dense = connected_terms(mt, f, g, 0.5, method)
            assert np.allclose(lat, dense, rtol=1e-10, atol=1e-16)


def test_term_properties(modes30):
    sc = coupling_scales(3.3e-3, 0.05)
    cold = modes30.at_temperature(0.0)
    assert term_E1(cold, sc.G_bar, 0.05).real == 0.0
    assert term_E2(cold, sc.F_bar, 0.05).real < 0
    assert term_E3(cold, sc.G_bar, 0.05) == 0
    assert term_E4(cold, sc.F_bar, sc.G_bar, 0.05) == 0
    # uniform occupation rescaling: high-T E3, E4 scale as n^2, E1 as (2n+1)
    m1, m2 = modes30.with_occupations(10.0), modes30.with_occupations(30.0)
    assert term_E3(m2, sc.G_bar, 0.05) / term_E3(m1, sc.G_bar, 0.05) == pytest.approx(9.0)
    assert term_E4(m2, sc.F_bar, sc.G_bar, 0.05) / term_E4(m1, sc.F_bar, sc.G_bar, 0.05) == pytest.approx(9.0)
    assert term_E1(m2, sc.G_bar, 0.05) / term_E1(m1, sc.G_bar, 0.05) == pytest.approx(61 / 21)
    assert abs(term_E4(modes30, sc.F_bar, sc.G_bar, 0.05)) < 1e-3 * abs(term_E3(modes30, sc.G_bar, 0.05))


def test_E2_vanishes_as_gamma_squared(modes30):
    F = -1e-2
    r = [term_E2(modes30, F, g).real for g in (1e-3, 5e-4)]
    assert r[0] / r[1] == pytest.approx(4.0, rel=0.01)


def test_branch_relabelling_invariance(modes30):
    sc = coupling_scales(3.3e-3, 0.05)
    perm = np.arange(modes30.size).reshape(-1, 2)[:, ::-1].ravel()
    from dataclasses import replace
    swapped = replace(modes30, **{k: getattr(modes30, k)[perm] for k in
                                  ("n1", "n2", "omega", "xbar2", "ex", "ey", "c2", "nbar")})
    a, b = error_breakdown(modes30, sc), error_breakdown(swapped, sc)
    for x, y in ((a.E1, b.E1), (a.E2, b.E2), (a.E3, b.E3), (a.E4, b.E4)):
        assert abs(x - y) <= 1e-10 * abs(x)


def test_thread_determinism(modes30):
    assert modes30.size > BLOCK_ROWS
    sc = coupling_scales(3.3e-3, 0.05)
    ref = error_breakdown(modes30, sc, threads=1)
    for t in (2, 8):
        other = error_breakdown(modes30, sc, threads=t)
        assert other == ref


def test_validated_mode(modes30):
    sc = coupling_scales(3.3e-3, 0.05)
    info = validate_e3_sample(modes30, 0.05, n_pairs=8)
    assert info["max_dev_closed_form"] < 1e-8 and info["high_t_checked"] > 0
    assert term_E3(modes30, sc.G_bar, 0.05, "validated") == term_E3(modes30, sc.G_bar, 0.05, "high_t")


def test_total_fidelity_examples():
    assert total_fidelity(0j) == (1 + 0j, 0.0, 0.0)
    F, E, Ep = total_fidelity(0.3j)
    assert Ep == pytest.approx(0.0, abs=1e-15) and E > 0
    F, E, Ep = total_fidelity(-0.01)
    assert E == pytest.approx((1 - math.exp(-0.01)) / 2) and Ep == pytest.approx(E)
    with pytest.raises(ValueError):
        total_fidelity(complex("nan"))


@settings(max_examples=25, deadline=None)
@given(st.integers(3, 8), st.floats(1e-6, 2e-3), st.floats(0.005, 0.5), st.floats(1e-3, 2e-2))
def test_breakdown_invariants(L, T, gamma, x):
    p = standard_parameter_set(1, temperature=T)
    m = inplane_modes(Crystal(L, 50.0), p)
    b = error_breakdown(m, coupling_scales(x, gamma))
    assert b.E1.real == 0.0
    assert b.E2.real <= 0.0
    assert abs(b.F_bar_xy) <= 1.0
    assert 0.0 <= b.error_Eprime <= b.error_E


def test_negative_gamma_rejected(modes30):
    with pytest.raises(ValueError):
        term_E2(modes30, 1.0, -0.1)
    with pytest.raises(ValueError):
        term_E3(modes30, 1.0, 0.1, "nope")
