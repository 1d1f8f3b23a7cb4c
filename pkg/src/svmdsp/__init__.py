"""Support vector machine estimators for signal processing.

The epsilon-Huber dual solver (:mod:`svmdsp.qp`) is shared by three model
families: primal signal models (:mod:`svmdsp.psm`), kernel signal models
(:mod:`svmdsp.rsm`) and dual signal models (:mod:`svmdsp.dsm`).
"""

from .core import (ComplexSeries, ConvergenceError, EpsHuberParams, IllConditionedError,
                   InvalidInputError, NumericalError, SampledSignal, SvmDspError, SvmSolution,
                   eps_huber_cost, residual_to_multiplier)
from .dsm import DsmInterpolator, SparseDeconvolver, dsm_deconv_fit, dsm_rbf_fit, dsm_sinc_fit
from .kernels import (AutocorrelationKernel, ImpulseResponse, KernelSpec, autocorrelation_kernel,
                      gram, verify_shift_invariant_mercer)
from .psm import (ArxCoeffs, ArxOrders, ArxSVM, DeconvolutionPSM, SincInterpolatorPSM,
                  SpectralGrid, SpectralSVM, SteeringScene, TemporalReferenceBeamformer,
                  arx_fit, deconv_psm_fit, sinc_psm_fit, spectral_fit, temporal_beamformer_fit)
from .qp import DualProblem, GramMatrix, solve, solve_complex, solve_real
from .rsm import (CanonicalSignalSet, KernelArxRegressor, SpatialReferenceBeamformer,
                  combined_svr_arx_fit, spatial_beamformer_fit, stacked_narx_fit,
                  svm_arx_2k_fit, svm_arx_4k_fit)

__version__ = "0.1.0"

__all__ = [
    "ArxCoeffs", "ArxOrders", "ArxSVM", "AutocorrelationKernel", "CanonicalSignalSet",
    "ComplexSeries", "ConvergenceError", "DeconvolutionPSM", "DsmInterpolator", "DualProblem",
    "EpsHuberParams", "GramMatrix", "IllConditionedError", "ImpulseResponse",
    "InvalidInputError", "KernelArxRegressor", "KernelSpec", "NumericalError", "SampledSignal",
    "SincInterpolatorPSM", "SparseDeconvolver", "SpatialReferenceBeamformer", "SpectralGrid",
    "SpectralSVM", "SteeringScene", "SvmDspError", "SvmSolution", "TemporalReferenceBeamformer",
    "arx_fit", "autocorrelation_kernel", "combined_svr_arx_fit", "deconv_psm_fit",
    "dsm_deconv_fit", "dsm_rbf_fit", "dsm_sinc_fit", "eps_huber_cost", "gram",
    "residual_to_multiplier", "sinc_psm_fit", "solve", "solve_complex", "solve_real",
    "spatial_beamformer_fit", "spectral_fit", "stacked_narx_fit", "svm_arx_2k_fit",
    "svm_arx_4k_fit", "temporal_beamformer_fit", "verify_shift_invariant_mercer",
]
