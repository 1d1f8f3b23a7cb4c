"""Primal signal models.

Each problem fixes a set of explanatory signals. Stacking their samples at
instant ``n`` gives the time-transversal vector ``s_n``; the dual works on
the correlation matrix ``R[m, n] = <s_m, s_n>`` and the primal coefficients
come back as ``a = sum_n eta_n s_n``.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Tuple

import numpy as np
from sklearn.base import BaseEstimator, RegressorMixin
from sklearn.utils.validation import check_is_fitted

from .core import (ComplexSeries, EpsHuberParams, InvalidInputError,
                   NumericalError, SampledSignal)
from .kernels import ImpulseResponse, sinc
from .qp import DualProblem, GramMatrix, solve_complex, solve_real

QPSK = np.array([1 + 1j, -1 + 1j, -1 - 1j, 1 - 1j]) / np.sqrt(2)


def _as_signal(signal, name="signal"):
    if isinstance(signal, SampledSignal):
        return signal
    values = np.asarray(signal, dtype=float)
    if values.ndim != 1:
        raise InvalidInputError(f"{name} must be a SampledSignal or a 1-D array")
    return SampledSignal.uniform(values)


def psm_fit(vectors, targets, loss, provenance="custom", tol=None):
    """Generic primal signal model on explicit time-transversal vectors.

    Parameters
    ----------
    vectors : ndarray of shape (n_samples, n_signals)
        Row ``n`` is the time-transversal vector ``s_n``.
    targets : ndarray of shape (n_samples,)

    Returns
    -------
    solution : SvmSolution
    coef : ndarray of shape (n_signals,)
        ``sum_n eta_n s_n``.
    """
    S = np.asarray(vectors, dtype=float)
    R = GramMatrix(S @ S.T, provenance)
    sol = solve_real(DualProblem(R, targets, loss), tol=tol)
    return sol, S.T @ sol.multipliers


# ----------------------------------------------------------------------------
# spectral analysis


@dataclass(frozen=True)
class SpectralGrid:
    """Harmonic grid ``k * omega0`` for ``k = 0..harmonics`` (rad/s)."""

    omega0: float
    harmonics: int

    def __post_init__(self):
        if not self.omega0 > 0:
            raise InvalidInputError("omega0 must be positive")
        if int(self.harmonics) != self.harmonics or self.harmonics < 0:
            raise InvalidInputError("harmonics must be a nonnegative integer")
        object.__setattr__(self, "harmonics", int(self.harmonics))

    @classmethod
    def default_for(cls, times):
        """``omega0 = 2 pi / (t_N - t_0)`` and one harmonic per sample interval."""
        times = np.asarray(times, dtype=float)
        span = times[-1] - times[0]
        if span <= 0:
            raise InvalidInputError("need at least two distinct time stamps")
        return cls(2 * np.pi / span, times.size - 1)

    @property
    def omegas(self):
        return self.omega0 * np.arange(self.harmonics + 1)

    @property
    def frequencies(self):
        """Grid frequencies in Hz."""
        return self.omegas / (2 * np.pi)


@dataclass(frozen=True)
class SpectralCoeffs:
    """In-phase ``B_k`` and quadrature ``C_k`` coefficients on a spectral grid.

    The model reads ``sum_k B_k cos(k w0 t) + C_k sin(k w0 t)``, which equals
    ``sum_k A_k cos(k w0 t + phi_k)`` with the amplitude and phase below.
    """

    in_phase: np.ndarray
    quadrature: np.ndarray
    grid: SpectralGrid = field(repr=False, default=None)

    def __post_init__(self):
        b = np.asarray(self.in_phase, dtype=float)
        c = np.asarray(self.quadrature, dtype=float)
        if b.shape != c.shape:
            raise InvalidInputError("in-phase and quadrature lengths differ")
        if self.grid is not None and b.size != self.grid.harmonics + 1:
            raise InvalidInputError("coefficient count does not match the grid")
        object.__setattr__(self, "in_phase", b)
        object.__setattr__(self, "quadrature", c)

    @property
    def amplitude(self):
        return np.hypot(self.in_phase, self.quadrature)

    @property
    def phase(self):
        return np.arctan2(-self.quadrature, self.in_phase)

    @property
    def power(self):
        return self.amplitude ** 2


def spectral_vectors(times, grid):
    """Time-transversal vectors ``[cos(k w0 t_n)]_k ++ [sin(k w0 t_n)]_k``."""
    arg = np.outer(np.asarray(times, dtype=float), grid.omegas)
    return np.hstack([np.cos(arg), np.sin(arg)])


def spectral_gram(times, grid):
    """``R[m, n] = sum_k cos(k w0 (t_m - t_n))``, the sum of the cosine and sine correlations."""
    S = spectral_vectors(times, grid)
    return GramMatrix(S @ S.T, "spectral")


def spectral_fit(signal, grid=None, loss=None, tol=None):
    signal = _as_signal(signal)
    grid = SpectralGrid.default_for(signal.times) if grid is None else grid
    loss = EpsHuberParams() if loss is None else loss
    sol = solve_real(DualProblem(spectral_gram(signal.times, grid), signal.values, loss), tol=tol)
    arg = np.outer(grid.omegas, signal.times)
    coeffs = SpectralCoeffs(np.cos(arg) @ sol.multipliers, np.sin(arg) @ sol.multipliers, grid)
    return sol, coeffs


def evaluate_spectral_model(coeffs, times):
    arg = np.outer(np.asarray(times, dtype=float), coeffs.grid.omegas)
    return np.cos(arg) @ coeffs.in_phase + np.sin(arg) @ coeffs.quadrature


def ls_periodogram(signal, grid):
    """Plain correlogram on the grid: ``|sum_n y_n exp(-j k w0 t_n)|`` per harmonic.

    These are the spectral coefficients obtained when every multiplier equals
    its observation, the least-squares reference for the SVM spectrum.
    """
    signal = _as_signal(signal)
    arg = np.outer(grid.omegas, signal.times)
    return SpectralCoeffs(np.cos(arg) @ signal.values, np.sin(arg) @ signal.values, grid)


class SpectralSVM(BaseEstimator, RegressorMixin):
    """Robust nonparametric spectral estimator on a harmonic grid.

    Parameters
    ----------
    omega0 : float, optional
        Grid spacing in rad/s. Defaults to ``2 pi / (t_N - t_0)``.
    harmonics : int, optional
        Highest harmonic index ``K``. Defaults to the number of samples minus one.
    eps, delta, C : float
        epsilon-Huber loss parameters.
    """

    def __init__(self, omega0=None, harmonics=None, eps=0.0, delta=10.0, C=1.0):
        self.omega0 = omega0
        self.harmonics = harmonics
        self.eps = eps
        self.delta = delta
        self.C = C

    def fit(self, t, y):
        signal = SampledSignal(np.ravel(t), np.ravel(y))
        default = SpectralGrid.default_for(signal.times)
        self.grid_ = SpectralGrid(
            default.omega0 if self.omega0 is None else self.omega0,
            default.harmonics if self.harmonics is None else self.harmonics)
        self.solution_, self.coeffs_ = spectral_fit(
            signal, self.grid_, EpsHuberParams(self.eps, self.delta, self.C))
        self.dual_coef_ = self.solution_.multipliers
        self.support_ = self.solution_.support_indices
        self.amplitude_ = self.coeffs_.amplitude
        self.phase_ = self.coeffs_.phase
        return self

    def predict(self, t):
        check_is_fitted(self, "coeffs_")
        return evaluate_spectral_model(self.coeffs_, np.ravel(t))


# ----------------------------------------------------------------------------
# ARX system identification


@dataclass(frozen=True)
class ArxOrders:
    """``ar_order`` past outputs and ``exo_order + 1`` exogenous taps ``x_n .. x_{n-Q}``."""

    ar_order: int
    exo_order: int = 0

    def __post_init__(self):
        if int(self.ar_order) != self.ar_order or self.ar_order < 1:
            raise InvalidInputError("ar_order must be a positive integer")
        if int(self.exo_order) != self.exo_order or self.exo_order < 0:
            raise InvalidInputError("exo_order must be a nonnegative integer")
        object.__setattr__(self, "ar_order", int(self.ar_order))
        object.__setattr__(self, "exo_order", int(self.exo_order))

    def first_row(self, has_exo=True):
        return max(self.ar_order, self.exo_order if has_exo else 0)


@dataclass(frozen=True)
class ArxCoeffs:
    ar: np.ndarray
    exo: np.ndarray = field(default_factory=lambda: np.zeros(0))

    def __post_init__(self):
        object.__setattr__(self, "ar", np.atleast_1d(np.asarray(self.ar, dtype=float)))
        object.__setattr__(self, "exo", np.atleast_1d(np.asarray(self.exo, dtype=float)))

    @property
    def orders(self):
        return ArxOrders(self.ar.size, max(self.exo.size - 1, 0))


def _values(sig):
    return sig.values if isinstance(sig, SampledSignal) else np.asarray(sig, dtype=float)


def arx_regressors(x, y, orders):
    """Time-transversal vectors of the ARX model for every row with full history.

    Returns ``(rows, Y, X)`` where ``Y[i] = [y_{n-1} .. y_{n-P}]`` and
    ``X[i] = [x_n .. x_{n-Q}]`` for ``n = rows[i]``. ``X`` has zero columns
    when ``x`` is None.
    """
    yv = _values(y)
    xv = None if x is None else _values(x)
    if xv is not None and xv.size != yv.size:
        raise InvalidInputError("x and y must have the same length")
    start = orders.first_row(xv is not None)
    if yv.size <= start:
        raise InvalidInputError(
            f"signals of length {yv.size} are too short for orders {orders}")
    rows = np.arange(start, yv.size)
    Y = np.column_stack([yv[rows - p] for p in range(1, orders.ar_order + 1)])
    if xv is None:
        X = np.zeros((rows.size, 0))
    else:
        X = np.column_stack([xv[rows - q] for q in range(orders.exo_order + 1)])
    return rows, Y, X


def arx_gram(x, y, orders):
    """``R^y + R^x`` on the rows with a complete lag window."""
    _, Y, X = arx_regressors(x, y, orders)
    return GramMatrix(Y @ Y.T + X @ X.T, "arx")


def arx_fit(x, y, orders, loss, tol=None):
    """Fit the ARX model; ``x=None`` gives a pure AR model.

    Returns ``(solution, ArxCoeffs)`` with ``D_p = sum_n eta_n y_{n-p}`` and
    ``E_q = sum_n eta_n x_{n-q}``.
    """
    rows, Y, X = arx_regressors(x, y, orders)
    targets = _values(y)[rows]
    sol = solve_real(DualProblem(GramMatrix(Y @ Y.T + X @ X.T, "arx"), targets, loss), tol=tol)
    return sol, ArxCoeffs(Y.T @ sol.multipliers, X.T @ sol.multipliers)


def arx_predict(coeffs, x, y):
    """One-step-ahead prediction ``sum_p D_p y_{n-p} + sum_q E_q x_{n-q}``.

    Returns ``(rows, y_hat)`` for the rows with complete history.
    """
    has_exo = coeffs.exo.size > 0
    orders = ArxOrders(coeffs.ar.size, max(coeffs.exo.size - 1, 0))
    rows, Y, X = arx_regressors(x if has_exo else None, y, orders)
    out = Y @ coeffs.ar
    if has_exo:
        out = out + X @ coeffs.exo
    return rows, out


def ar_psd(coeffs, sigma2, fs, freqs):
    """AR power spectral density ``sigma2/fs * |1 - sum_p D_p e^{-j 2 pi p f/fs}|^-2``."""
    if not sigma2 > 0:
        raise InvalidInputError("sigma2 must be positive")
    D = coeffs.ar if isinstance(coeffs, ArxCoeffs) else np.atleast_1d(coeffs)
    f = np.asarray(freqs, dtype=float)
    p = np.arange(1, D.size + 1)
    denom = np.abs(1 - np.exp(-2j * np.pi * np.outer(f, p) / fs) @ D) ** 2
    if np.any(denom < 1e-30):
        raise NumericalError("AR spectrum evaluated at a pole")
    return sigma2 / fs / denom


class ArxSVM(BaseEstimator, RegressorMixin):
    """Linear ARX (or AR) identification with the epsilon-Huber SVM.

    ``fit(y, x=None)`` takes the output series first; ``predict`` returns the
    one-step-ahead prediction on the rows with full history.
    """

    def __init__(self, ar_order=1, exo_order=0, eps=0.0, delta=1.0, C=1.0,
                 fit_intercept=False):
        self.ar_order = ar_order
        self.exo_order = exo_order
        self.eps = eps
        self.delta = delta
        self.C = C
        self.fit_intercept = fit_intercept

    def fit(self, y, x=None):
        orders = ArxOrders(self.ar_order, self.exo_order)
        loss = EpsHuberParams(self.eps, self.delta, self.C)
        rows, Y, X = arx_regressors(x, y, orders)
        S = np.hstack([Y, X, np.ones((rows.size, 1))]) if self.fit_intercept else np.hstack([Y, X])
        self.solution_, a = psm_fit(S, _values(y)[rows], loss, "arx")
        P, nx = Y.shape[1], X.shape[1]
        self.coeffs_ = ArxCoeffs(a[:P], a[P:P + nx])
        self.intercept_ = float(a[-1]) if self.fit_intercept else 0.0
        self.rows_ = rows
        self.residuals_ = _values(y)[rows] - S @ a
        self.noise_variance_ = float(np.var(self.residuals_))
        return self

    def predict(self, y, x=None):
        check_is_fitted(self, "coeffs_")
        rows, out = arx_predict(self.coeffs_, x, y)
        return out + self.intercept_

    def psd(self, freqs, fs=1.0, sigma2=None):
        check_is_fitted(self, "coeffs_")
        return ar_psd(self.coeffs_, self.noise_variance_ if sigma2 is None else sigma2, fs, freqs)


# ----------------------------------------------------------------------------
# sinc interpolation


def sinc_vectors(times, sigma0, centers=None):
    t = np.asarray(times, dtype=float)
    c = t if centers is None else np.asarray(centers, dtype=float)
    return sinc(sigma0 * (t[:, None] - c[None, :]))


def sinc_gram(times, sigma0):
    """``R[m, n] = sum_k sinc(s0 (t_m - t_k)) sinc(s0 (t_n - t_k))``."""
    if not sigma0 > 0:
        raise InvalidInputError("sigma0 must be positive")
    S = sinc_vectors(times, sigma0)
    return GramMatrix(S @ S.T, "sinc")


@dataclass(frozen=True)
class SincExpansion:
    """``y(t) = sum_k a_k sinc(s0 (t - t_k))``."""

    coef: np.ndarray
    centers: np.ndarray
    sigma0: float

    def __call__(self, t):
        return sinc_vectors(np.atleast_1d(t), self.sigma0, self.centers) @ self.coef


def sinc_psm_fit(signal, sigma0, loss, tol=None):
    """Returns ``(solution, a, predictor)`` with ``a_k = sum_n eta_n sinc(s0 (t_k - t_n))``."""
    signal = _as_signal(signal)
    S = sinc_vectors(signal.times, sigma0)
    sol = solve_real(DualProblem(GramMatrix(S @ S.T, "sinc"), signal.values, loss), tol=tol)
    a = S.T @ sol.multipliers
    return sol, a, SincExpansion(a, np.array(signal.times), float(sigma0))


class SincInterpolatorPSM(BaseEstimator, RegressorMixin):
    def __init__(self, sigma0=np.pi, eps=0.0, delta=1.0, C=1.0):
        self.sigma0 = sigma0
        self.eps = eps
        self.delta = delta
        self.C = C

    def fit(self, t, y):
        signal = SampledSignal(np.ravel(t), np.ravel(y))
        self.solution_, self.coef_, self.expansion_ = sinc_psm_fit(
            signal, self.sigma0, EpsHuberParams(self.eps, self.delta, self.C))
        self.dual_coef_ = self.solution_.multipliers
        self.support_ = self.solution_.support_indices
        return self

    def predict(self, t):
        check_is_fitted(self, "expansion_")
        return self.expansion_(np.ravel(t))


# ----------------------------------------------------------------------------
# sparse deconvolution


def convolution_matrix(h, n):
    """``S[n, k] = h_{n-k}``: row ``n`` is the time-transversal vector of the convolution model."""
    hv = h.samples if isinstance(h, ImpulseResponse) else np.asarray(h, dtype=float)
    lag = np.arange(n)[:, None] - np.arange(n)[None, :]
    inside = (lag >= 0) & (lag < hv.size)
    return np.where(inside, hv[np.clip(lag, 0, hv.size - 1)], 0.0)


def deconv_readout(eta, h):
    """``x_hat = eta * h[-n] * delta[n+M]``: convolution with the reversed response, advanced by ``M``."""
    hv = h.samples if isinstance(h, ImpulseResponse) else np.asarray(h, dtype=float)
    M = hv.size - 1
    full = np.convolve(np.asarray(eta, dtype=float), hv[::-1])
    return full[M:M + len(eta)]


def deconv_psm_fit(y, h, loss, tol=None):
    """Returns ``(solution, x_hat)`` with ``x_hat_n = sum_i eta_i h_{i-n}``."""
    y = _as_signal(y, "observation")
    if not isinstance(h, ImpulseResponse):
        h = ImpulseResponse(h)
    if h.samples.size > len(y):
        raise InvalidInputError("impulse response longer than the observation")
    S = convolution_matrix(h, len(y))
    sol = solve_real(DualProblem(GramMatrix(S @ S.T, "deconv"), y.values, loss), tol=tol)
    return sol, S.T @ sol.multipliers


class DeconvolutionPSM(BaseEstimator, RegressorMixin):
    """Primal-model deconvolution of a uniformly sampled observation with a known response."""

    def __init__(self, impulse_response=(1.0,), eps=0.0, delta=1.0, C=1.0):
        self.impulse_response = impulse_response
        self.eps = eps
        self.delta = delta
        self.C = C

    def fit(self, y, _unused=None):
        h = ImpulseResponse(np.asarray(self.impulse_response, dtype=float))
        self.solution_, self.x_hat_ = deconv_psm_fit(
            np.ravel(y), h, EpsHuberParams(self.eps, self.delta, self.C))
        self.h_ = h
        return self

    def predict(self, _unused=None):
        """Reconstructed observation ``x_hat * h``."""
        check_is_fitted(self, "x_hat_")
        return convolution_matrix(self.h_, self.x_hat_.size) @ self.x_hat_


# ----------------------------------------------------------------------------
# antenna arrays, temporal reference


@dataclass(frozen=True)
class SteeringScene:
    """Uniform linear array and the plane-wave sources impinging on it.

    ``sources`` is a sequence of ``(doa_radians, complex_amplitude)``.
    """

    element_count: int
    spacing_over_wavelength: float = 0.5
    sources: Tuple[Tuple[float, complex], ...] = ()

    def __post_init__(self):
        if int(self.element_count) != self.element_count or self.element_count < 1:
            raise InvalidInputError("element_count must be a positive integer")
        if not self.spacing_over_wavelength > 0:
            raise InvalidInputError("spacing_over_wavelength must be positive")
        object.__setattr__(self, "sources", tuple((float(t), complex(a)) for t, a in self.sources))

    def mixing_matrix(self):
        """Columns ``amplitude_l * a(theta_l)``."""
        if not self.sources:
            return np.zeros((self.element_count, 0), dtype=complex)
        return np.column_stack([a * steering_vector(self, th) for th, a in self.sources])


def steering_vector(scene, theta):
    """``exp(j 2 pi k (d/lambda) sin(theta))`` for ``k = 0..K``."""
    k = np.arange(scene.element_count)
    return np.exp(2j * np.pi * k * scene.spacing_over_wavelength * np.sin(theta))


def qpsk_slicer(values):
    """Nearest QPSK point from ``{+-1 +- 1j} / sqrt(2)``."""
    v = np.asarray(values)
    return (np.where(v.real >= 0, 1.0, -1.0) + 1j * np.where(v.imag >= 0, 1.0, -1.0)) / np.sqrt(2)


def array_gram(snapshots):
    """Prediction-side Gram ``G[m, n] = x_n^H x_m`` of the snapshot rows."""
    X = np.asarray(snapshots, dtype=complex)
    return GramMatrix(X @ X.conj().T, "array")


@dataclass(frozen=True)
class LinearDetector:
    """``y_hat_n = sum_k a_k x^k_n`` followed by a QPSK slicer."""

    weights: np.ndarray

    def soft(self, snapshots):
        return np.asarray(snapshots, dtype=complex) @ self.weights

    def __call__(self, snapshots):
        return qpsk_slicer(self.soft(snapshots))


def _snapshot_matrix(snapshots):
    if isinstance(snapshots, ComplexSeries):
        return np.asarray(snapshots.values)[:, None]
    X = np.asarray([np.asarray(s.values if isinstance(s, ComplexSeries) else s, dtype=complex)
                    for s in snapshots]) if isinstance(snapshots, (list, tuple)) else \
        np.asarray(snapshots, dtype=complex)
    if X.ndim != 2:
        raise InvalidInputError("snapshots must form an (n_snapshots, n_elements) array")
    if not np.all(np.isfinite(X)):
        raise InvalidInputError("snapshots contain non-finite entries")
    return X


def temporal_beamformer_fit(snapshots, symbols, loss, tol=None):
    """Complex SVM beamformer trained on known symbols.

    Returns ``(solution, weights, detector)``; the weights are
    ``a_k = sum_n psi_n conj(x^k_n)`` so that ``y_hat_n = sum_k a_k x^k_n``.
    """
    X = _snapshot_matrix(snapshots)
    y = symbols.values if isinstance(symbols, ComplexSeries) else np.asarray(symbols, dtype=complex)
    if y.size != X.shape[0]:
        raise InvalidInputError("snapshot count and symbol count differ")
    sol = solve_complex(DualProblem(array_gram(X), y, loss), tol=tol)
    w = X.conj().T @ sol.multipliers
    return sol, w, LinearDetector(w)


class TemporalReferenceBeamformer(BaseEstimator):
    """Linear SVM beamformer; ``fit(snapshots, symbols)``, ``predict`` slices to QPSK."""

    def __init__(self, eps=0.0, delta=1e-6, C=1.0):
        self.eps = eps
        self.delta = delta
        self.C = C

    def fit(self, X, y):
        self.solution_, self.weights_, self.detector_ = temporal_beamformer_fit(
            X, y, EpsHuberParams(self.eps, self.delta, self.C))
        return self

    def decision_function(self, X):
        check_is_fitted(self, "detector_")
        return self.detector_.soft(_snapshot_matrix(X))

    def predict(self, X):
        return qpsk_slicer(self.decision_function(X))
