"""Phase-center-constrained beamforming."""

from ._pccb import (
    GPS_L1_HZ,
    SPEED_OF_LIGHT,
    AllRestartsDegenerate,
    DegeneratePattern,
    Problem,
    beampattern,
    build_grid_array,
    default_config,
    direction_from_angles,
    phase_center,
    run_comparison,
    sample_equal_area,
    solve_pco,
    steering_vector,
    wavelength,
)

__all__ = [
    "GPS_L1_HZ",
    "SPEED_OF_LIGHT",
    "AllRestartsDegenerate",
    "DegeneratePattern",
    "Problem",
    "beampattern",
    "build_grid_array",
    "default_config",
    "direction_from_angles",
    "phase_center",
    "run_comparison",
    "sample_equal_area",
    "solve_pco",
    "steering_vector",
    "wavelength",
]
