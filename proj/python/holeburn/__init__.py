"""TLS spectral hole-burning models, fits and synthetic data.

Fit functions take CSV text in the toolkit's formats and return the same
result documents (as dicts) that ``holeburn fit`` writes.
"""

from ._core import (
    ConvergenceFailure,
    HoleburnError,
    capelle_loss,
    capelle_shift,
    extract_scaling,
    fit_hole_capelle,
    fit_hole_stm,
    fit_resonance,
    fit_saturation,
    model_s11,
    phonon_number,
    powerlaw_fit,
    rabi_capelle,
    rabi_from_phonons,
    run_cli,
    stm_inverse_q,
    stm_two_tone_loss,
    stm_two_tone_shift,
    synth,
    t2_estimate,
    thermal_factor,
)

__version__ = "0.1.0"
