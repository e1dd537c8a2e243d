"""Conditional linear-optical devices on few-photon Fock spaces.

Simulates heralded measurement devices, decides whether they act as a
unitary on a chosen computational subspace, and extracts the effective
nonlinear action they simulate.
"""

__version__ = "0.1.0"

from .analysis import (
    AnalysisReport,
    EffectiveAction,
    TestOperator,
    WMatrixFamily,
    analyze_device,
    completeness_check,
    detect_output_basis,
    effective_action,
    proportionality_check,
    randomized_d_probe,
    test_condition,
    test_operator,
    w_matrices,
)
from .catalog import BUILTIN_BUILDERS, build_builtin, build_cnot_pittman, build_klm_ns, special_state_S
from .cpmaps import (
    AncillaDecomposition,
    ConditionalDevice,
    DensityOperator,
    DetectionSignature,
    Outcome,
    conditional_output,
    fock_basis,
    partial_trace_ancilla,
    success_probability,
    v_map,
)
from .devicefile import (
    DeviceFile,
    ReportFile,
    device_to_file,
    export_device,
    file_to_device,
    parse_device,
    report_from_analysis,
)
from .errors import (
    DegenerateDeviceError,
    DeviceParseError,
    DeviceValidationError,
    HeraldsimError,
    ModeMismatchError,
    PhotonCapExceededError,
    UnknownModeError,
    ZeroSuccessError,
)
from .fock import (
    FockSubspaceBasis,
    FockVector,
    ModeRegistry,
    OccupationVector,
    annihilate,
    create,
    embed_product,
    enumerate_sector,
    inner,
    partial_inner,
)
from .nport import ModeUnitary, amplitude_permanent, check_mode_unitarity, lift_apply, permanent
