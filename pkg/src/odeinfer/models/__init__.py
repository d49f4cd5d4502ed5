from .hydro import (HydroForcing, HydroParams, hydro_flux, hydro_fluxes, hydro_rhs,
                    hydro_system, streamflow)
from .oscillator import (ForcingSpec, OscillatorParams, oscillator_rhs, oscillator_system,
                         smooth_forcing_value, underdamped_solution)
from .sir import (SirChangepointParams, SirResult, sir_lambda, sir_r0, sir_simulate,
                  sir_simulate_array, weekly_factor)

__all__ = [
    "ForcingSpec", "OscillatorParams", "oscillator_rhs", "oscillator_system",
    "smooth_forcing_value", "underdamped_solution",
    "SirChangepointParams", "SirResult", "sir_lambda", "sir_r0", "sir_simulate",
    "sir_simulate_array", "weekly_factor",
    "HydroForcing", "HydroParams", "hydro_flux", "hydro_fluxes", "hydro_rhs",
    "hydro_system", "streamflow",
]
