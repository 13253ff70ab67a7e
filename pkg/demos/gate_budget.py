"""
Error budget of the pushing gate in the adiabatic limit.

The state-dependent force is switched on with an exponential envelope of
rate Gamma.  The axial mode returns to its initial state up to a residual
displacement eta_ND, which costs 4|eta_ND|^2 (n_z + 1/2) in fidelity.  The
pulse rate that produces a sign gate follows from J(0) pi / 8; we compare it
with the commonly quoted Gamma/omega_xy = 0.05.

Run:  python demos/gate_budget.py
"""

from ioncrystal.gate import gate_diagnostics
from ioncrystal.lattice import derived_betas, lattice_sums, standard_parameter_set
from ioncrystal.phonons import occupation

for which in (1, 2):
    p = standard_parameter_set(which)
    beta_z = derived_betas(p, lattice_sums(100)).beta_z
    nbar_z = float(occupation(p.wz_ratio, p))
    d = gate_diagnostics(0.234, beta_z, p.wz_ratio, nbar_z, 0.05)
    print(f"set {which}: n_z = {nbar_z:.2f}, beta_z = {beta_z:.3e}")
    print(f"  sign-gate Gamma/omega_xy = {d.gamma_over_omega_xy:.5f}")
    print(f"  adiabatic error E_z = {d.E_z:.3e}")
    c = d.consistency
    print(f"  quoted 0.05 is {c['quoted_over_sign_gate']:.2f} x the sign-gate rate; "
          f"consistent: {c['consistent']}")
