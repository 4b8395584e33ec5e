"""Exact verification of equivariant operators between induced
representations of finite groups."""

from .errors import (ConfigError, ConstraintViolationError,
                     DegenerateNormalizationError, DimensionMismatchError,
                     HomsteerError, InvalidOrderError, InvalidSectionError,
                     InvalidSubgroupError, NotEquivariantError,
                     NotGInvariantError, NotInducedError,
                     UnsupportedGroupError, UnsupportedRepsError)
from .features import (FeatureMap, SectionFeature, g_action, lift,
                       mackey_project, random_feature, random_section_feature,
                       section_action, sink)
from .groups import (DoubleCosetSpace, GroupTable, Quotient, Subgroup,
                     double_cosets, haar_sum, left_cosets, make_cyclic,
                     make_dihedral, make_semidirect, make_symmetric,
                     symmetric_point_action, twist)
from .kernels import (DoubleCosetKernel, OneArgKernel, QuotientKernel,
                      TwoArgKernel, apply_two_arg, averaging_projector_apply,
                      canonical_representative, double_coset_dimension,
                      expand_to_two_arg, from_double_coset_kernel,
                      from_quotient_kernel, gcnn_apply, quotient_apply,
                      reduce_to_one_arg, solve_steerable_basis,
                      steerable_dimension_oracle, to_double_coset_kernel,
                      to_quotient_kernel)
from .instances import (AttentionParams, ImplicitKernelSpec, affine_context,
                        dot_bias_alpha, gcnn_omega, implicit_conv_apply,
                        implicit_omega, lie_omega, lie_transformer_apply,
                        lifted_operator, random_attention_params,
                        rel_bias_omega, relative_bias_attention_apply,
                        rotary_attention_apply, rotary_matrices, rotary_omega,
                        rotary_relative_residual, self_attention_apply,
                        self_attention_omega, stabilizer_subgroup,
                        symmetrize_implicit_kernel)
from .nonlinear import (OmegaHat, OmegaThreeArg, apply_nonlinear,
                        apply_three_arg, check_equivariance,
                        check_omega_constraints, expand_two_to_three,
                        reduce_three_to_two, universal_from_lambda)
from .reps import (HomRep, Representation, hom_rep, regular_rep,
                   rotation_block_rep, sign_rep_z2, trivial_rep)

__version__ = "0.1.0"
