"""Degrees-of-freedom tools for the K-user interference channel with CoMP.

Outer bounds, beam designs that achieve full DoF, zero-forcing derived
channels with asymptotic alignment, the numerical algebraic-independence
tests they rely on, and a Monte-Carlo sum-rate simulator.
"""
__version__ = "0.1.0"

from .exceptions import ArgumentError, CompDofError, NumericalDomainError, NumericalFailure, ResourceError
from .channel_core import (
    ChannelRealization,
    CooperationPattern,
    circulant_test_point,
    down_set,
    sample_channel,
    submatrix,
    up_set,
)
from .dof_bounds import (
    asymmetric_dof_vector,
    check_dof_vector,
    known_dof,
    miso_reference_dof,
    region_constraints,
    sum_dof_outer_bound,
)
from .algebra import (
    RationalMap,
    claim2_determinant,
    is_algebraically_independent,
    monomial_matrix_full_rank,
    numeric_rank,
    structural_rank,
)
from .smd import (
    BeamPair,
    FullDoFBeamformer,
    StructuredMatrixDecomposition,
    comp_smatrices,
    full_dof_beams,
    smd_feasible,
    smd_jacobian_rank_at_identity,
    smd_solve,
)
from .ia_closed_form import ClosedFormAligner, alignment_matrices, closed_form_beams, verify_alignment_conditions
from .derived_channel import (
    DerivedChannel,
    Triviality,
    ZeroForcingTransform,
    verify_triviality,
    zf_beam_from_nulls,
    zf_transform_general,
    zf_transform_km2,
)
from .cj_alignment import (
    achievable_dof,
    build_mk_general,
    build_mk_km2,
    cj_matrix,
    enumerate_exponents,
    required_length,
    verify_decodability,
)
from .simulator import LinkBudget, SweepResult, estimate_dof_slope, sum_rate, sweep
