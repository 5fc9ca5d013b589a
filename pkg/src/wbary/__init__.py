"""Wasserstein barycenters of discrete measures by resampling, with exact
LP oracles and explicit error bounds."""

from .errors import (IterationLimitError, InfeasibleError, MeasureError,
                     SizeCapError, SolverError, UnboundedError, WbaryError)
from .measures import (DiscreteMeasure, EmpiricalMeasure, centroid_set, diameter,
                       load_measure_csv, make_measure, merge_duplicates, mixture,
                       sample_empirical, save_measure_csv, uniform_measure)
from .ot import (TransportPlan, cost_matrix, emd, solve_assignment, solve_ot,
                 transport_cost, wasserstein)
from .lp_oracle import (LinearProgram, LpResult, build_barycenter_lp,
                        exact_barycenter, lp_size_estimate, solve_lp)
from .sua import ConstantStep, HarmonicStep, SuaConfig, sua_solve
from .pipeline import (ExperimentRecord, frechet_value, randomized_barycenter,
                       reference_value, summarize, sweep)
from .bounds import (BoundReport, binomial_lower_bound, bound_report,
                     constant_E, covering_number, eq_p2_bound, euclidean_bound,
                     frechet_gap_bound)
from .datasets import DatasetSpec, from_image, generate, to_image

__version__ = "0.1.0"
