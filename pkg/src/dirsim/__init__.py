"""Acceptance-rejection samplers for directional distributions.

Bingham distributions are simulated with an angular central Gaussian
envelope; Fisher, Fisher-Bingham, balanced matrix Bingham and matrix
Fisher on SO(3) reuse the same envelope.
"""
from .ar import AcceptStats, Envelope, SampleBatch, ar_sample, expected_trials
from .bingham import (AcgParams, BinghamParams, EnvelopeBound, acg_from_bingham,
                      normal_cauchy_bound, predicted_efficiency, sample_acg, sample_bingham,
                      solve_b0, standardize)
from .errors import (BoundViolation, ConvergenceFailure, DegenerateDraw, DirsimError,
                     InsufficientSamples, NoAccepts, NotConverged, NotPositiveDefinite,
                     NotSymmetric, TrialCapExceeded, UnsupportedDistribution)
from .fisher import FisherBinghamParams, fb_envelope, fisher_bingham_params, sample_fisher_bingham, sample_vmf
from .matrix import (MatrixBinghamParams, MatrixFisherParams3, mf_so3_params, quat_to_rotation,
                     sample_macg, sample_matrix_bingham_balanced, sample_matrix_fisher_so3,
                     sample_uniform_sphere, sample_uniform_stiefel)
from .rng import RngStream

__version__ = "0.1.0"
