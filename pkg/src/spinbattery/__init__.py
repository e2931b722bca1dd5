"""Exact simulator and bound checker for spin reference frames that store
each non-commuting conserved quantity in its own battery."""

from .basis import (
    BasisReport,
    GeneralFrameState,
    OperatorBasis,
    ParticleSeparation,
    ScopeError,
    StructureTable,
    basis_report,
    build_general_T,
    f_sign,
    general_frame_state,
    pauli_string_basis,
    separation_classifier,
)
from .basis import general_step as general_basis_step
from .extraction import (
    CompilationError,
    ExchangeGate,
    ExtractionResult,
    GateSequence,
    SingleRotation,
    compile_decoherence,
    decoherence_unitary,
    exchange_unitary,
    run_extraction,
)
from .linalg import (
    expm_generator,
    herm_eig,
    kron,
    operator_norm,
    partial_trace,
    pure_density,
    random_density_matrix,
    random_pure_state,
    trace_norm,
    validate_density_matrix,
)
from .monolithic import monolithic_rotation
from .protocol import (
    BatteryLedger,
    BoundSet,
    ProtocolConfig,
    ProtocolResult,
    StepResult,
    apply_framed_rotation,
    axis_step,
    bounds,
    general_step,
    generator_from_unitary,
    run_protocol,
    step_error,
    verify,
)
from .spin import (
    SpinOperators,
    StepUnitary,
    build_T,
    build_V,
    conservation_residual,
    spin_operators,
    tau_state,
    total_spin_component,
)

__version__ = "0.1.0"
