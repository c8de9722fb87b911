"""Information-theoretic disentanglement metrics for Gaussian encoder posteriors."""
from .data import (
    EvalConfig,
    FactorTable,
    PosteriorSet,
    QuantizationGrid,
    empirical_factor_entropy,
    load_factors,
    load_posteriors,
    save_factors,
    save_posteriors,
)
from .metrics import (
    MiMatrix,
    aggregate,
    correlation_matrices,
    indin_at_k,
    jemmig,
    mi_matrix,
    misjed,
    modularity,
    rmig,
    sepin_at_k,
    windin,
    wsepin,
)
from .quantizer import (
    JointPmf,
    Pmf,
    bin_posterior,
    conditional_mean_joint_pmf,
    informativeness_quantized,
    joint_latent_factor_pmf,
    joint_latent_pair_pmf,
    marginal_latent_pmf,
    pmf_entropy,
)
from .report import MetricReport, evaluate
from .sampler import (
    LatentSubset,
    McEstimate,
    conditional_entropy_given_x,
    entropy_sampled,
    indin_component,
    mi_x_subset,
    sample_latents,
    sepin_component,
)
from .special import erf_approx, gaussian_mass

__version__ = "0.1.0"
