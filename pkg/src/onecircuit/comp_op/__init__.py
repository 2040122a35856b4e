"""Composition operators on one-circuit graphs."""

from .cc import (
    CCFamily,
    CCVerification,
    ExtensionReport,
    SubnormalBuildReport,
    build_from_target_h0,
    build_subnormal,
    extend_cc,
    extension_conditions,
    verify_cc,
)
from .derivatives import (
    derivative_table,
    dif1_residual,
    h_n,
    h_n_xkappa_direct,
    h_phi,
    h_x0_direct,
    preimage_mass_xkappa,
)
from .diagnostics import (
    DENSE,
    HYPONORMAL,
    NOT_DENSE,
    NOT_HYPONORMAL,
    UNKNOWN,
    conditional_expectation,
    h_sequence,
    hyponormality,
    norm_bound,
    power_density,
    subnormality_evidence,
)
from .model import WeightedGraphModel, branch_sum
from .tails import MeasureDiracTail, PowerLawDiracTail
