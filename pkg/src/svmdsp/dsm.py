"""Dual signal models: the time instants themselves are the regressors.

The kernel is an autocorrelation (sinc, or ``R^h`` of a known impulse
response), so the estimate is the convolution of the multipliers with it.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np
from sklearn.base import BaseEstimator, RegressorMixin
from sklearn.utils.validation import check_is_fitted

from .core import EpsHuberParams, InvalidInputError, SampledSignal
from .kernels import (AutocorrelationKernel, ImpulseResponse, KernelSpec, gram,
                      rbf_lag_samples, sinc_lag_samples, verify_shift_invariant_mercer)
from .qp import DualProblem, GramMatrix, solve_real
from .psm import _as_signal

_DSM_KINDS = ("sinc", "rbf", "autocorrelation")


@dataclass(frozen=True)
class DsmPredictor:
    """``y_hat(t) = sum_n eta_n K(t_n - t)`` with a shift-invariant kernel."""

    multipliers: np.ndarray
    anchor_times: np.ndarray
    kernel: KernelSpec

    def __post_init__(self):
        eta = np.asarray(self.multipliers, dtype=float)
        t = np.asarray(self.anchor_times, dtype=float)
        if eta.shape != t.shape:
            raise InvalidInputError("multipliers and anchor times differ in length")
        if self.kernel.kind not in _DSM_KINDS:
            raise InvalidInputError(f"dual signal models need one of {_DSM_KINDS}")
        object.__setattr__(self, "multipliers", eta)
        object.__setattr__(self, "anchor_times", t)

    def __call__(self, t):
        t = np.atleast_1d(np.asarray(t, dtype=float))
        return gram(self.kernel, t, self.anchor_times) @ self.multipliers


def _dsm_fit(signal, kernel, loss, provenance, tol):
    signal = _as_signal(signal)
    K = gram(kernel, signal.times)
    sol = solve_real(DualProblem(GramMatrix(K, provenance), signal.values, loss), tol=tol)
    return sol, DsmPredictor(sol.multipliers, np.array(signal.times), kernel)


def dsm_sinc_fit(signal, sigma0, loss, tol=None):
    """Sinc-kernel interpolation ``y_hat(t) = sum_n eta_n sinc(s0 (t_n - t))``.

    Returns ``(solution, predictor)``.
    """
    if not sigma0 > 0:
        raise InvalidInputError("sigma0 must be positive")
    return _dsm_fit(signal, KernelSpec.sinc(sigma0), loss, "dsm", tol)


def dsm_rbf_fit(signal, sigma, loss, tol=None):
    """Gaussian-kernel variant of :func:`dsm_sinc_fit`."""
    return _dsm_fit(signal, KernelSpec.rbf(sigma), loss, "dsm", tol)


def dsm_kernel_mercer(kernel, spacing, **kw):
    """Mercer check of a DSM kernel from its lag samples at ``spacing``."""
    if kernel.kind == "sinc":
        _, samples = sinc_lag_samples(kernel.sigma0, spacing, **kw)
    elif kernel.kind == "rbf":
        _, samples = rbf_lag_samples(kernel.sigma, spacing, **kw)
    elif kernel.kind == "autocorrelation":
        return verify_shift_invariant_mercer(AutocorrelationKernel(kernel.impulse).values)
    else:
        raise InvalidInputError(f"no lag sequence for kernel kind {kernel.kind!r}")
    return verify_shift_invariant_mercer(samples, taper=True)


def _h(h):
    return h if isinstance(h, ImpulseResponse) else ImpulseResponse(h)


def matched_filter(y, h):
    """``y * h[-n]`` on the observation indices (no delay)."""
    yv = y.values if isinstance(y, SampledSignal) else np.asarray(y, dtype=float)
    h = _h(h)
    full = np.convolve(yv, h.samples[::-1])
    return full[h.order:h.order + yv.size]


def dsm_deconv_transform(y, h):
    """``z = y * h[-n] * delta[n-M]`` truncated to the observation indices.

    The ``M``-sample delay makes the matched filter causal: a spike at
    ``n0`` shows up in ``z`` around ``n0 + M``.
    """
    yv = y.values if isinstance(y, SampledSignal) else np.asarray(y, dtype=float)
    h = _h(h)
    if h.samples.size > yv.size:
        raise InvalidInputError("impulse response longer than the observation")
    z = np.convolve(yv, h.samples[::-1])[:yv.size]
    if isinstance(y, SampledSignal):
        return SampledSignal(y.times, z)
    return SampledSignal.uniform(z)


def deconv_gram(h, n):
    """``K[m, n] = R^h(n - m)`` on ``n`` uniform instants."""
    ak = AutocorrelationKernel(_h(h))
    idx = np.arange(n)
    return GramMatrix(ak.at_lag(idx[None, :] - idx[:, None]), "dsm")


def dsm_deconv_fit(y, h, loss, tol=None):
    """Sparse deconvolution with the autocorrelation kernel ``R^h``.

    The matched-filter output is advanced by ``M`` samples, which undoes the
    delay of :func:`dsm_deconv_transform`, so ``eta_n`` lines up with
    ``x_n``. Returns ``(solution, predictor, x_hat)`` with ``x_hat = eta``.
    """
    y = _as_signal(y, "observation")
    h = _h(h)
    if h.samples.size > len(y):
        raise InvalidInputError("impulse response longer than the observation")
    z = matched_filter(y, h)
    sol = solve_real(DualProblem(deconv_gram(h, z.size), z, loss), tol=tol)
    times = np.arange(z.size, dtype=float) * h.sample_period
    pred = DsmPredictor(sol.multipliers, times,
                        KernelSpec.autocorrelation(ImpulseResponse(h.samples, h.sample_period)))
    return sol, pred, np.array(sol.multipliers)


def reconstruct_observation(x_hat, h):
    """``x_hat * h`` truncated to the length of ``x_hat``."""
    x = np.asarray(x_hat, dtype=float)
    return np.convolve(x, _h(h).samples)[:x.size]


def spike_readout(x_hat, cost_cap):
    """Indices and amplitudes with ``|x_hat| > 1e-8 C``."""
    x = np.asarray(x_hat, dtype=float)
    idx = np.flatnonzero(np.abs(x) > 1e-8 * cost_cap)
    return idx, x[idx]


class DsmInterpolator(BaseEstimator, RegressorMixin):
    """Dual-model interpolator with a sinc (``kernel="sinc"``) or Gaussian kernel."""

    def __init__(self, kernel="sinc", sigma0=np.pi, sigma=1.0, eps=0.0, delta=1.0, C=1.0):
        self.kernel = kernel
        self.sigma0 = sigma0
        self.sigma = sigma
        self.eps = eps
        self.delta = delta
        self.C = C

    def fit(self, t, y):
        signal = SampledSignal(np.ravel(t), np.ravel(y))
        loss = EpsHuberParams(self.eps, self.delta, self.C)
        if self.kernel == "sinc":
            self.solution_, self.predictor_ = dsm_sinc_fit(signal, self.sigma0, loss)
        elif self.kernel == "rbf":
            self.solution_, self.predictor_ = dsm_rbf_fit(signal, self.sigma, loss)
        else:
            raise InvalidInputError("kernel must be 'sinc' or 'rbf'")
        self.dual_coef_ = self.solution_.multipliers
        self.support_ = self.solution_.support_indices
        return self

    def predict(self, t):
        check_is_fitted(self, "predictor_")
        return self.predictor_(np.ravel(t))


class SparseDeconvolver(BaseEstimator):
    """Dual-model sparse deconvolution with a known impulse response."""

    def __init__(self, impulse_response=(1.0,), eps=0.0, delta=1e-3, C=10.0):
        self.impulse_response = impulse_response
        self.eps = eps
        self.delta = delta
        self.C = C

    def fit(self, y, _unused=None):
        h = ImpulseResponse(np.asarray(self.impulse_response, dtype=float))
        self.solution_, self.predictor_, self.spikes_ = dsm_deconv_fit(
            np.ravel(y), h, EpsHuberParams(self.eps, self.delta, self.C))
        self.h_ = h
        self.support_ = self.solution_.support_indices
        return self

    def predict(self, _unused=None):
        """Reconstructed observation ``x_hat * h``."""
        check_is_fitted(self, "spikes_")
        return reconstruct_observation(self.spikes_, self.h_)
