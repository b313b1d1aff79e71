"""Population of neurons structured by the time elapsed since their last discharge.

The modules are layered: :mod:`.model` holds thresholds, initial data and
run configurations; :mod:`.solver` integrates the renewal equation on an age
grid; :mod:`.analytic` builds the explicit periodic activities and checks
them along characteristics; :mod:`.analysis` classifies traces and scans
parameters; :mod:`.cli` wires everything to the command line.
"""

from .analysis import (classify_trace, convergence_rate, crossing_check, desync_certificate,
                       estimate_period, flux_residual, scan_connectivity, scan_delay)
from .analytic import (ConstructionError, PeriodicProfile, build_class_flat, build_class_one,
                       build_class_two, cross_check_roots, eval_profile, linear_stationary_profile,
                       n_star, steady_state_nonlinear, verify_boundary, verify_mass)
from .model import (AffineThreshold, ConstantThreshold, Custom, Exponential, LinearStationary,
                    ModelConfig, PaperThreshold, UnitBlock, n_minus_plus)
from .solver import ActivityTrace, GridState, init_grid, run, snapshot_density, step

__version__ = "0.1.0"
