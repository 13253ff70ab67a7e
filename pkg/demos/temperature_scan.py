"""
Gate error from in-plane phonons versus temperature.

The axial push also shakes the in-plane modes through the anharmonic
Coulomb terms.  Summing the connected diagrams up to fourth order gives the
worst-case error E, and E' after the gate phase is recalibrated.  At high
temperature the thermal occupations grow linearly with T, so E should grow
as T^2.

Run:  python demos/temperature_scan.py [L]
"""

import sys

from ioncrystal.decoherence import summary_stats, temperature_scan
from ioncrystal.lattice import standard_parameter_set

L = int(sys.argv[1]) if len(sys.argv) > 1 else 20
res = temperature_scan(standard_parameter_set(1), L, 0.05, 1e-5, 1e-3, 9)
print("   T [K]        E            E'         E'/E")
for T, E, Ep in zip(res.temperatures, res.errors, res.errors_prime):
    print(f"{T:9.2e}  {E:11.3e}  {Ep:11.3e}  {Ep / E:7.3f}")
stats = summary_stats(res)
print(f"\nlog-log slope over the top decade: {stats['loglog_slope_upper_decade']:.3f}")
print(f"largest E'/E: {stats['max_Eprime_over_E']:.3f}")
