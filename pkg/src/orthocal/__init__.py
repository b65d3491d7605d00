"""Joint-offset calibration for Orthoglide-type translational parallel manipulators."""
from .calibration import (
    CalibrationResult,
    build_design_matrix,
    identify_offsets,
    predict_improvement,
    rms,
    validate,
)
from .kinematics import (
    Geometry,
    JointOffsets,
    LegId,
    Posture,
    constraint_residuals,
    direct_kinematics,
    inverse_kinematics,
    joint_center,
    leg_segment,
)
from .measurement import (
    DeviationSet,
    Form,
    MeasurementSession,
    NoiseModel,
    parse_session,
    session_to_deviations,
    simulate_session,
    write_session,
)
from .sensitivity import (
    PostureTag,
    deviation_coeffs,
    inverse_jacobian,
    jacobian,
    predicted_leg_deviation,
    tcp_displacement,
)

__version__ = "0.1.0"
