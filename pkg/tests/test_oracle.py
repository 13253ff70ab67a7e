import numpy as np
import pytest

from ioncrystal.decoherence import (
    ConvergenceError,
    ModeTable,
    TruncationError,
    connected_terms,
    coupling_scales,
    exact_fidelity_oracle,
    gaussian_fidelity_oracle,
    inplane_modes,
    lattice_couplings,
)
from ioncrystal.lattice import standard_parameter_set
from ioncrystal.phonons import Crystal

TWO = ModeTable.hermitian([1.3, 2.1], [0.0, 0.0])
F2 = np.array([0.3, -0.2])
G2 = np.array([[0.1, 0.07], [0.07, -0.05]])


def test_zero_coupling_gives_unity():
    m = ModeTable.hermitian([1.0], [0.0])
    assert exact_fidelity_oracle(m, None, None, 1.0, cutoff=8) == pytest.approx(1.0, abs=1e-12)
    assert gaussian_fidelity_oracle(m, None, None, 1.0) == pytest.approx(0.0, abs=1e-12)


def test_number_basis_and_gaussian_oracles_agree():
    fock = np.log(exact_fidelity_oracle(TWO, F2, G2, 1.0, cutoff=30))
    gauss = gaussian_fidelity_oracle(TWO, F2, G2, 1.0)
    assert fock == pytest.approx(gauss, abs=1e-7)


def test_single_mode_linear_matches_E2():
    m = ModeTable.hermitian([1.3], [0.0])
    c = 0.1
    f = np.array([c])
    lnF = np.log(exact_fidelity_oracle(m, f, None, 1.0, cutoff=40))
    E = connected_terms(m, f, None, 1.0)
    assert abs(lnF - E[1]) <= 10 * c ** 4
    # a linear coupling is Gaussian: the second-order term is the whole answer
    assert gaussian_fidelity_oracle(m, f, None, 1.0) == pytest.approx(E[1], abs=1e-12)


def test_two_mode_quadratic_n5_matches_E1_E3():
    # the expansion parameter x enters the quadratic vertex as x^2
    x = 0.03
    m = ModeTable.hermitian([1.3, 2.1], [5.0, 5.0])
    g = x ** 2 * np.array([[1.0, 0.7], [0.7, -0.5]])
    lnF = gaussian_fidelity_oracle(m, None, g, 1.0)
    E = connected_terms(m, None, g, 1.0)
    assert abs(lnF - (E[0] + E[2])) <= 10 * x ** 4


def test_lattice_normalisation_against_oracle():
    # the 1/L powers of the lattice sums: residual ratio under x -> x/2 is about 2^6
    p = standard_parameter_set(1, temperature=2e-6)
    m = inplane_modes(Crystal(3, 50.0), p)
    res = []
    for x in (0.2, 0.1):
        f, g, partner = lattice_couplings(m, coupling_scales(x, 0.5))
        mt = ModeTable(m.omega, m.nbar, m.xbar2, partner)
        res.append(abs(gaussian_fidelity_oracle(mt, f, g, 0.5) - sum(connected_terms(mt, f, g, 0.5))))
    assert res[0] / res[1] > 32 * 0.8


def test_truncation_and_convergence_errors():
    hot = ModeTable.hermitian([1.0], [5.0])
    with pytest.raises(TruncationError):
        exact_fidelity_oracle(hot, [0.1], None, 1.0, cutoff=40)
    with pytest.raises(ConvergenceError):
        exact_fidelity_oracle(TWO, F2, G2, 1.0, cutoff=20, dt=0.5, tol=1e-14, max_halvings=1)
    with pytest.raises(ValueError):
        exact_fidelity_oracle(ModeTable.hermitian([1, 2, 3, 4], 0.0), None, None, 1.0)
    with pytest.raises(ValueError):
        gaussian_fidelity_oracle(TWO, F2, G2, 1.0, t_max=5.0)
