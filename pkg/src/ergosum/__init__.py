"""ergosum: heavy-tailed ergodic sums of expanding circle maps.

Simulation and statistical analysis of rescaled partial-sum processes of
power-singular observables along expanding circle-map orbits: exact orbit
streams, trimming decompositions, Skorokhod J1 geometry of the step-function
limit set, and shrinking-target hitting statistics.
"""

from .maps import (CircleMap, OrbitStream, circle_dist, detect_period,
                   diophantine_check, doubling, linear, orbit_segment,
                   orbit_stream, perturbed_doubling)
from .observable import (SingularObservable, TruncationSpec, Thresholds,
                         centering_constant, tail_constant, thresholds)
from .density import (BVFunction, DensityEstimate, birkhoff_density, correlation,
                      correlation_report, indicator, multiple_correlation,
                      ulam_density)
from .paths import (CadlagStep, TrimmedSums, alpha_in_window, alpha_window,
                    band_sum, build_WN, project_Hr, split_S, split_bar,
                    sup_remainder, trimmed_sums, validate_D)
from .j1 import (J1Result, OracleBracket, Reparameterization, is_j1_close,
                 j1_distance, j1_oracle, uniform_distance)
from .events import (EventSpec, HitRecord, SeparationParams, classify_Sr,
                     count_exceedances, estimate_M1, estimate_M2,
                     estimate_M4_intervals, estimate_M4_star, event_indicator,
                     hat_sep_index, hits, moment_estimate, sep_index, sigma,
                     target_arcs, two_humps_scan)
from .experiment import (CheckResult, ExperimentConfig, Report, run_check,
                         run_simulate_paths, run_verify_coverage,
                         run_verify_jump_budget)
from .errors import (BudgetError, ConfigError, ErgosumError, FitUnstableError,
                     InsufficientStatisticsError, QuadratureError)

__version__ = "0.1.0"
