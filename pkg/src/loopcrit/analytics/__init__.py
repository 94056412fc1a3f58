from .events import (EventClass, EventKind, ExplorationSubtree, build_exploration_subtree,
                     classify_root_event, root_subtree_loop_counts)
from .formulas import (LATTICE_REFERENCE_SPIN_HALF, alpha_star, beta_c_asymptotic,
                       beta_c_lattice_spin1, beta_c_lattice_spin_half, beta_plus,
                       expansion_exp1, exp1_exact, expected_subtree_generation_size,
                       poisson_pmf, prob_A1_closed_form, prob_A2_closed_form, q_coeff, r_coeff,
                       two_d_factor_exact, two_d_factor_leading, zm_first_order)
