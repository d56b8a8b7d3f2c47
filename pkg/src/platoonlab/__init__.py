"""Robust string stability analysis and simulation for CTHP vehicle platoons."""
from .bounds import (
    GainRegionSpec,
    HeadwayBound,
    NormTest,
    analytic_norm_test,
    check_accel_gain,
    gain_region,
    h_min,
    recast_self_accel,
    robust_norm_test,
    synthesize_gains,
    synthesize_spec,
    unrecast_self_accel,
)
from .errors import (
    DivergenceError,
    GainOutOfRangeError,
    NonConvergenceError,
    NonHurwitzError,
    NotRealDistinct,
    PlatoonError,
)
from .freqstab import StabilityReport, SweepConfig, hinf_norm, robust_check, spectral_radius_P
from .nnir import ScaledTF, impulse_numeric, nnir_tau_positive, nnir_tau_zero, region_scan, time_scale
from .sim import Disturbance, PlatoonConfig, SimResult, amplification_verdict, simulate
from .tf import (
    ONE_AND_RTH,
    PF,
    RPF,
    ControllerSpec,
    LagSpec,
    RationalTF,
    Tap,
    build_error_tf_accel,
    build_error_tf_basic,
    build_error_tf_taps,
    eval_jw,
    freqresp,
)

__version__ = "0.1.0"
