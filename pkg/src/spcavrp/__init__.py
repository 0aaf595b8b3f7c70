"""Sparse principal component analysis via random projection ensembles."""

__version__ = "0.1.0"

from .covariance import CovarianceSource, center_columns, choose_strategy, projected_covariance, sample_covariance
from .deflation import DeflationConfig, DeflationResult, deflate_fit
from .errors import DegenerateDeflation, InvalidInput, RankDeficient, SpcaError, TooLarge, Unreachable
from .estimator import Estimate, GroupSelection, SpcavrpConfig, accumulate_scores, fit, fit_source, select_in_group, top_l_support
from .evaluation import (
    HypergeomParams,
    brute_force_sparse_pc,
    choose_B,
    hypergeom_cdf,
    incoherence,
    subspace_loss,
    support_metrics,
    var_curve,
)
from .linalg import eig_top, principal_angle_sines, proj_orth_complement
from .models import SpikedModel, make_intro_model, make_multi_spike, make_sigma1, make_sigma2, make_single_spike, sample_gaussian
from .projections import AxisProjection, enumerate_all, sample_grid, sample_projection
