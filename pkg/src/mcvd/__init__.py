"""Link-level simulator and reusable-duration optimizer for molecular
communication via diffusion, with duration-reuse ISI mitigation."""

from .channel import ABSORBING, PASSIVE, ChannelParams, hit_fraction, hit_rate, passive_prob, peak_time, sample_prob, tap_fraction
from .detection import BerPoint, analytic_ber, mixture_components, optimal_threshold, simulate_ber
from .errors import ApproximationBreakdown, ConfigError, McvdError, NumericalError
from .metric import msid_objective_nu, msid_objective_tu, msinar, msinar_objective_nu, msinar_objective_tu, q_cutoff
from .optimizer import (OptimizationResult, bar_n1, bar_t1, closed_form_nu, closed_form_tu,
                        ideal_nu, ideal_tu, numerical_nu, numerical_tu, optimal_window,
                        optimize, root_nu, root_residual, root_tu)
from .stats import DetectionWindow, LinkConfig, ReusableWindow, TapStats, reuse_adjusted_stats, window_stats

__version__ = "0.1.0"
