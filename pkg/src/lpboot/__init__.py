"""Local-projection impulse responses with moving-average bootstrap inference."""

__version__ = "0.1.0"

from .bootstrap import (
    BootPipelineConfig,
    BootstrapResult,
    generate_ma_path,
    run_ar_benchmark,
    run_lp_bootstrap,
    run_var_ma_bootstrap,
)
from .dgp import (
    Ar1Spec,
    ArpSpec,
    GbfSpec,
    TrueIrf,
    draw_arp_coefficients,
    load_gbf,
    simulate,
    simulate_ar1,
    simulate_arp,
    simulate_ma_gbf,
    true_irf,
)
from .localproj import LpIrfEstimate, MaExtension, fit_lp, fit_ma_extension, lp_point_and_scale
from .regress import build_lag_matrix, durbin_ma_from_ar, fit_var, ols, select_lag_sbic
from .resample import ResampleScheme, default_block_length, draw_innovations
