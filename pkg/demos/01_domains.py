"""
Which epidemic domain are we in?
================================

Theory classification of the scalar model and of a two-group model, and a
check of each verdict against simulation.
"""

import numpy as np

from simplicial_sis import ScalarSis, SimplicialSis, classify_empirical, classify_theory, scalar_classify
from simplicial_sis.analysis import beta2_bistable_threshold, disease_free_boundary_beta2

# One group, recovery rate 1, weak pairwise and strong triadic infection.
# Two interior equilibria exist: the lower one separates the basins.
d = scalar_classify(ScalarSis(gamma=1.0, beta1=0.5, beta2=4.0))
print(f"scalar: {d.domain}, v_c={d.v_c:.4f}, nu-={d.nu_minus:.6f}, nu+={d.nu_plus:.6f}")
print("scalar, simulated:", classify_empirical(ScalarSis(1.0, 0.5, 4.0)))

# Two groups on a ring with all triad coefficients equal to one.
A = np.array([[0.0, 1.0], [1.0, 0.0]])
B = np.ones((2, 2, 2))
for beta1, beta2 in [(0.1, 0.05), (0.5, 0.3), (0.5, 1.0), (1.5, 0.1)]:
    m = SimplicialSis(gamma=np.ones(2), A=A, B=B, beta1=beta1, beta2=beta2)
    c = classify_theory(m)
    print(f"beta1={beta1:<4} beta2={beta2:<4} theory={c.domain.value:<13} "
          f"R={c.reproduction_number:.3f} rho_df={c.disease_free_lhs:.3f} "
          f"margin={c.bistable_margin:+.3f} simulated={classify_empirical(m).value}")

# (0.5, 0.3) is indeterminate: the conditions are sufficient only.  The two
# thresholds that bracket that gap at beta1 = 0.5:
m = SimplicialSis(np.ones(2), A, B, 0.5, 1.0)
print("disease-free certificate lost above beta2 =", disease_free_boundary_beta2(m, 0.5))
print("bistable certificate gained at beta2 =", beta2_bistable_threshold(m))
