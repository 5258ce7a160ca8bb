# app/model_config.py
"""
Method-specific default settings.
Fluorescence and transmission need different probe times, thresholds and
rate models; values are in the config file's units (μs, μs⁻¹).
"""

import copy

METHOD_CONFIGS = {
    "fluorescence": {
        "protocol": {
            "tau_us": 25.0,
            "tau_rp_us": 5.0,
            "threshold": 1,         # 1 vs 2 photons
        },
        "rates": {
            "r_bright_per_us": 0.76,
            "r_dark_per_us": 8e-4,           # no-atom infidelity 0.04 % at θ=1
            "gamma_depump_per_us": 1.14e-3,  # ~0.3 % miss before the 2nd photon
            "p_repump": 0.999,
            "p_loss_per_detected_photon": 1.7e-5,
            "loss_model": "heating",
            "eps_prep_f1": 5e-4,
            "eps_prep_f2": 3e-3,
        },
        "n_scatter_at_center": 100.0,
    },
    "transmission": {
        "protocol": {
            "tau_us": 50.0,
            "tau_rp_us": 5.0,
            "threshold": 77,
        },
        "rates": {
            "r_bright_per_us": 2.12,         # R_high, empty or F=1; Poisson tail at θ=77 gives ~0.4 % no-atom error
            "r_dark_per_us": 0.85,           # R_low = 0.4 R_high, F=2
            "gamma_depump_per_us": 1.0e-4,
            "p_repump": 0.999,
            "p_loss_per_detected_photon": 1.65e-4,  # 1.4 % over 2τ of R_low photons
            "loss_model": "per_photon",
            "eps_prep_f1": 3e-3,
            "eps_prep_f2": 3e-3,
        },
        "n_scatter_at_center": 14.0,
    },
}


def get_method_defaults(method: str) -> dict:
    """Get the preset block for a readout method"""
    method = method.lower().strip()
    if method not in METHOD_CONFIGS:
        raise KeyError(f"unknown method: {method}")
    return copy.deepcopy(METHOD_CONFIGS[method])
