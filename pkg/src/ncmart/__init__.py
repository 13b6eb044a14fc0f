"""Numerical experiments with maximal functions of matrix martingales.

Finite matrix algebras with trace conventions, Schatten p-(quasi-)norms,
block-filtration conditional expectations, the projection-constrained
minimax rearrangement of operator sequences, a certified square-root
growth chain, and ergodic averaging constructions.
"""

__version__ = "0.1.0"

from .algebra import (CertificationError, DEFAULT_DIM_CAP, Operator,
                      Projection, TracialAlgebra, matrix_unit, projection_meet,
                      spectral_projection, tensor, trace)
from .chain import (ChainConstants, certified_lower_bound, dyadic_norm_recursion,
                    test_matrix, test_matrix_split, triangular_norm_bounds,
                    triangular_ones, verify_chain)
from .condexp import (FactorFiltration, FactorFiltrationLevel, ProductFiltration,
                      TruncatedProductAlgebra, check_condexp_axioms,
                      factor_cond_exp, product_cond_exp)
from .construction import (MartingaleSequence, flip_sign_coordinate, ones_column,
                           ones_martingale, ones_matrix, scaled_ones_matrix,
                           sign_flip_identity_check, signed_ones_series)
from .ergodic import (MarkovOperator, conj_average, convex_markov,
                      diagonal_unitary, ergodic_average, find_subsequence,
                      truncate_and_meet, unitary_approx_check, validate_markov)
from .rearrangement import (MuEstimate, au_obstruction_report, growth_experiment,
                            mu_diag_exhaustive, mu_eval, mu_search,
                            mu_search_profile)
from .schatten import (PExponent, holder_split_bound, lp_norm, operator_norm,
                       singular_values)
