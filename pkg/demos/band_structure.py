"""
Phonon bands of a planar Be+ crystal.

A triangular crystal of L x L ions is held in a Penning trap with in-plane
frequency 20 kHz and axial frequency 1 MHz.  We first fix the lattice
spacing from the trap, then diagonalize the dynamical matrix along q || x
and check that the axial band sits well above twice the in-plane band,
which keeps two-phonon processes from draining the gate mode.

Run:  python demos/band_structure.py [L]
"""

import sys

from ioncrystal.lattice import derived_betas, lattice_sums, physical_spacing, standard_parameter_set
from ioncrystal.phonons import Crystal, axial_bandwidth, band_structure, gap_check, x_direction_path

L = int(sys.argv[1]) if len(sys.argv) > 1 else 60
params = standard_parameter_set(1)
sums = lattice_sums(L)
scales = derived_betas(params, sums)
print(f"L = {L}: d0 = {physical_spacing(params, sums) * 1e6:.2f} um, "
      f"beta_xy = {scales.beta_xy:.3f}, beta_z = {scales.beta_z:.3e}")

crystal = Crystal.from_params(params, L)
bands = band_structure(x_direction_path(L), crystal)
axial, longitudinal, transverse = bands.branches
print("\n q_x/pi (reduced)  transverse  longitudinal   axial  (units of omega_xy)")
for i in range(0, len(axial), max(1, len(axial) // 10)):
    qx = bands.path[i].cartesian()[0] / 3.141592653589793
    print(f"{qx:7.3f}  {transverse[i]:10.4f}  {longitudinal[i]:12.4f}  {axial[i]:9.4f}")

ok, lo, hi = gap_check(crystal.grid)
print(f"\nmin axial {lo:.3f} vs twice max in-plane {2 * hi:.3f}: gap {'holds' if ok else 'violated'}")
width = axial_bandwidth(crystal.grid)
print(f"axial fractional bandwidth {width:.4f}, i.e. {width / scales.beta_z:.2f} beta_z")
