"""Linear reservoir computing: simulation, readouts and eigenvalue design."""

from ._lrc import (
    LrcError,
    ModalReservoir,
    MultiSine,
    Topology,
    decouple,
    extract_common_frequencies,
    frequency_fit,
    frequency_system,
    harmonic_spread,
    nrmse,
    optimize,
    random_topology,
    recouple,
    reduced_cost,
    ridge_fit,
    run_command,
    run_method,
    simulate,
    steady_state,
    three_tone_task,
    transfer_response,
)

__all__ = [name for name in dir() if not name.startswith("_")]
__version__ = "0.1.0"
