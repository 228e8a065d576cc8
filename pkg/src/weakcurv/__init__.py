"""Numerical probes of weak Monge-Ampere and intrinsic-curvature distributions on 2D grids."""
from .kernels import BACKEND
from .fields import (Bump, Grid2D, SampledTest, ScalarField2D, SymMatrixField2D, TestFunction,
                     VectorField2D, bump, gradient, holder_seminorm, sample)
from .mollifier import (MollifierKernel, RateFit, commutator_rate, eps_ladder, fit_rate, mollify,
                        triple_commutator_rate)
from .weak_hessian import (DistributionPairing, NonnegReport, besov_decay_probe,
                           det_hessian_pairing, nonnegativity_check)
from .degree import (ALPHA_RANGES, DegreeMap, DegreeUndefined, DomainU, PreconditionError, classify_point,
                     degree_formula_residual, degree_map, degree_mass_identity, measure_of,
                     asserted_identities, positive_degree_check, winding_degree)
from .curvature import (ChristoffelField, Diffeo2D, TransportedTest, christoffel,
                        graph_bridge_residual, graph_metric, invariance_residual,
                        kappa_pairing, kappa_stability_check, lower_order_term,
                        pullback_metric, pullback_mollification_rate)
from .generators import AnalyticField, GeneratorSpec, generate, weierstrass
from .monge_ampere import (ImageAreaResult, PartitionTV, alexandrov_verify, convexity_check,
                           gauss_map, gradient_image_area, injectivity_check,
                           spherical_image_tv)

__version__ = "0.1.0"
