"""Numerical laboratory for small-time large-deviation asymptotics of
spectrally truncated stochastic evolution equations with multiplicative noise.
"""

from .models import (AffineDiffusion, AffineDrift, ConstantDiffusion,
                     DiagonalLipschitzDiffusion, Model, ModelSpec, NuWeight,
                     TableDrift, TruncatedDiffusion, ZeroDrift, eval_diffusion,
                     eval_drift, truncate_diffusion, truncation_radius)
from .reports import LDPReport, ReportRow, write_summary
from .sde import (SolverConfig, Trajectory, dyadic_freeze_error,
                  solve_original_rescaled_coupling, solve_rescaled, solve_tilted)
from .skeleton import (ControlPath, RateResult, rate_of_target,
                       skeleton_apriori_bound, skeleton_continuity_bound,
                       solve_skeleton, wiener_rate)
from .spectral import (NoiseSpace, SpectralBasis, TimeGrid, check_a1_tail,
                       check_a2_modulus, semigroup_apply)
from .verify import (TailBoundParams, chow_menaldi_check,
                     estimate_tube_probability, girsanov_log_weight,
                     peszat_bound_eval, peszat_tail_check, tube_rate,
                     verify_lower_bound, verify_upper_bound, wiener_ldp_check)
from .wiener import WienerPath, refine_wiener, sample_wiener, sample_wiener_batch

__all__ = [name for name in dir() if not name.startswith("_")]
__version__ = "0.1.0"
