"""Closed-loop scanning quantum dot microscopy simulator."""

from ._core import (  # noqa: F401
    DipSelector,
    EscParams,
    RunConfig,
    SpectrumParams,
    StcParams,
    __version__,
    compensated_gain,
    compute_phi_star,
    esc_defaults,
    eval_derivative,
    eval_spectrum,
    fit_spectrum,
    load_run_config,
    phase_compensation,
    pick_reference,
    run_scan,
    run_scan_pair,
    score,
    stc_defaults,
    systematic_error,
    true_dip_minimum,
    validate_esc,
)
