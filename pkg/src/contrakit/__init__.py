"""Toolkit for empirically certifying generalized contraction properties
of nonlinear dynamical systems: matrix measures, trajectory simulation,
property checking, and scripted report scenarios."""

from .domains import DomainSpec, box, positive_orthant_box
from .errors import (ContrakitError, DimensionError, InvalidWeightError,
                     NumericError, ParameterError, QueryError, RegionError,
                     SchemaError, StiffnessError)
from .measures import (L1, L2, LINF, MeasureSpec, RegionBound, induced_norm,
                       is_metzler, measure, mu_inf, mu_limit_estimate, mu_one,
                       mu_two, mu_weighted, sup_measure_over_region,
                       vector_norm)
from .models import (BioParams, SystemModel, bio_circuit,
                     bio_contraction_eps, bio_equilibrium, bio_jacobian,
                     bio_measure_spec, bio_mu_closed_form, bio_norm_family,
                     bio_omega_r, bio_weight_matrix, counterexample_system,
                     erf_augmented_system, erf_system, forced_linear_system,
                     linear_decay_system, load_model, logistic_system,
                     model_from_spec, periodic_bio_circuit, shifted_system)
from .simulate import (DivergenceSeries, InvarianceReport, Trajectory,
                       integrate, invariance_check, pair_divergence,
                       trajectory_to_csv)
from .verify import (CERTIFIED, CONTRACTION, FALSIFIED, IMPLICATIONS, NE, SO,
                     SOST, ST, WC, PropertyQuery, SamplePlan, Verdict,
                     Witness, certify_sost_via_nc, check_br, check_entrainment,
                     check_ic, check_property, check_swe, ic_implied_st,
                     implication_audit, nc_implied_so, nc_implied_sost,
                     replay_witness, transform_rates)

__version__ = "0.1.0"
