"""Restriction counts for the two-monthly, one-quarterly layout.

Prints the recursive scheme's free-parameter counts and rank condition, the
degrees of freedom of each hypothesis bundle, and the reduced-form
equivalence counts with two lags and a block of monthly controls.
"""

import numpy as np

from midas_svar.layout import AggregationScheme, CoefLayout, ExogBlock, FrequencyLayout
from midas_svar.layout import reduced_equivalence_restrictions
from midas_svar.structural import (
    HYPOTHESIS_BUNDLES,
    build_recursive_midas_scheme,
    check_identification,
    named_scheme,
    recursive_midas_grids,
)

layout = FrequencyLayout(1, 2, 3, high_names=("i", "vix"), low_names=("k",))
base = build_recursive_midas_scheme(layout)
A, B = recursive_midas_grids(layout)
print("A pattern:", *(" ".join(r) for r in A), sep="\n  ")
print("B pattern:", *(" ".join(r) for r in B), sep="\n  ")

rng = np.random.default_rng(0)
M = rng.standard_normal((7, 7))
rep = check_identification(base, M @ M.T + np.eye(7))
print(f"q_A={base.q_A} q_B={base.q_B} overid={base.overid_dof} rank={rep.jacobian_rank}/{rep.required_rank}")

for name in HYPOTHESIS_BUNDLES:
    print(f"  {name:<32} dof={base.added_rank(named_scheme(name, layout))}")

coef = CoefLayout(7, 2, True, 6, (ExogBlock(0, 2, 0, True, "controls"),))
for kind in ("first", "sum"):
    r = reduced_equivalence_restrictions(layout, AggregationScheme(kind), coef)
    print(f"reduced-form equivalence ({kind}): {r.rank} restrictions")
