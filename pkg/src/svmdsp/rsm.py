"""RKHS signal models: kernel NARX/ARX identification and spatial-reference beamforming.

The dual keeps the structure of the primal models, with every dot product
between state vectors replaced by a (possibly composite) Mercer kernel.
"""

from __future__ import annotations

import warnings
from dataclasses import dataclass

import numpy as np
from sklearn.base import BaseEstimator, RegressorMixin
from sklearn.utils.validation import check_is_fitted

from .core import EpsHuberParams, InvalidInputError
from .kernels import KernelSpec, gram
from .psm import QPSK, SteeringScene, _snapshot_matrix, _values, qpsk_slicer, steering_vector
from .qp import DualProblem, GramMatrix, solve_complex, solve_real


@dataclass(frozen=True)
class StateEmbedding:
    """Output and input states for every instant with full history.

    ``y_state[i] = [y_{n-1} .. y_{n-M}]`` and ``x_state[i] = [x_n .. x_{n-Q+1}]``
    for ``n = rows[i]``.
    """

    rows: np.ndarray
    y_state: np.ndarray
    x_state: np.ndarray

    @property
    def stacked(self):
        return np.hstack([self.y_state, self.x_state])

    @property
    def pair(self):
        return self.y_state, self.x_state

    def __len__(self):
        return self.rows.size


def embed(x, y, M, Q):
    """Build the :class:`StateEmbedding` of ``(x, y)`` with ``M`` output and ``Q`` input lags."""
    if int(M) != M or M < 1:
        raise InvalidInputError("M must be a positive integer")
    if int(Q) != Q or Q < 0:
        raise InvalidInputError("Q must be a nonnegative integer")
    M, Q = int(M), int(Q)
    yv = _values(y)
    if Q > 0:
        if x is None:
            raise InvalidInputError("Q > 0 needs an input signal x")
        xv = _values(x)
        if xv.size != yv.size:
            raise InvalidInputError("x and y must have the same length")
    start = max(M, Q - 1)
    if yv.size <= start:
        raise InvalidInputError(f"signals of length {yv.size} are too short for M={M}, Q={Q}")
    rows = np.arange(start, yv.size)
    Ys = np.column_stack([yv[rows - p] for p in range(1, M + 1)])
    if Q > 0:
        Xs = np.column_stack([xv[rows - q] for q in range(Q)])
    else:
        Xs = np.zeros((rows.size, 0))
    return StateEmbedding(rows, Ys, Xs)


def _kernel_input(spec, emb):
    return emb.pair if spec.is_composite else emb.stacked


@dataclass(frozen=True)
class RsmPredictor:
    """``y_hat_m = sum_n eta_n K(state_m, state_n)`` over the training states."""

    kernel: KernelSpec
    multipliers: np.ndarray
    support_states: StateEmbedding
    M: int
    Q: int

    def decision(self, emb):
        K = gram(self.kernel, _kernel_input(self.kernel, emb),
                 _kernel_input(self.kernel, self.support_states))
        return K @ self.multipliers

    def predict(self, x, y):
        """One-step-ahead prediction; returns ``(rows, y_hat)``."""
        emb = embed(x, y, self.M, self.Q)
        return emb.rows, self.decision(emb)


def rsm_fit(x, y, M, Q, kernel, loss, tol=None):
    """Fit ``y_n`` on the state embedding with an arbitrary kernel; returns ``(solution, predictor)``."""
    emb = embed(x, y, M, Q)
    K = gram(kernel, _kernel_input(kernel, emb))
    provenance = "composite" if kernel.is_composite else "stacked"
    sol = solve_real(DualProblem(GramMatrix(K, provenance), _values(y)[emb.rows], loss), tol=tol)
    return sol, RsmPredictor(kernel, sol.multipliers, emb, int(M), int(Q))


def stacked_narx_fit(x, y, M, Q, kernel, loss, tol=None):
    """Kernel on the concatenated states ``[y_state, x_state]``."""
    if kernel.is_composite:
        raise InvalidInputError("stacked NARX takes a plain kernel")
    return rsm_fit(x, y, M, Q, kernel, loss, tol)


def svm_arx_2k_fit(x, y, M, Q, kd, ke, loss, tol=None):
    """Summation kernel ``K_d(y_state) + K_e(x_state)``."""
    return rsm_fit(x, y, M, Q, KernelSpec.composite_sum(kd, ke), loss, tol)


def svm_arx_4k_fit(x, y, M, Q, k1, k2, k3, loss, k4=None, tol=None):
    """Cross kernel ``K1(y, y') + K2(x, x') + K3(y, x') + K3(x, y')`` on zero-completed states.

    With ``k4`` the stacked term ``K4([y, x], [y', x'])`` is added.
    """
    return rsm_fit(x, y, M, Q, KernelSpec.composite_cross(k1, k2, k3, k4), loss, tol)


def combined_svr_arx_fit(x, y, M, Q, k1, k2, k3, k4, loss, tol=None):
    """Single fit on the general composite kernel joining the stacked and cross terms.

    Pass ``KernelSpec.zero()`` for ``k3`` to join the stacked kernel with the
    2K model, or for ``k1``..``k3`` to recover plain stacked NARX.
    """
    return rsm_fit(x, y, M, Q, KernelSpec.composite_cross(k1, k2, k3, k4), loss, tol)


_MODELS = ("stacked", "2k", "4k", "combined")


class KernelArxRegressor(BaseEstimator, RegressorMixin):
    """Kernel NARX identification with the epsilon-Huber SVM.

    Parameters
    ----------
    model : {"stacked", "2k", "4k", "combined"}
        Kernel structure. ``"combined"`` adds an rbf kernel on the stacked
        states to the 4K cross kernel.
    M, Q : int
        Output and input state lengths.
    sigma : float
        Width of every rbf component.
    """

    def __init__(self, model="4k", M=2, Q=2, sigma=1.0, eps=0.0, delta=1e-2, C=10.0):
        self.model = model
        self.M = M
        self.Q = Q
        self.sigma = sigma
        self.eps = eps
        self.delta = delta
        self.C = C

    def _kernel(self):
        rbf = KernelSpec.rbf(self.sigma)
        if self.model == "stacked":
            return rbf
        if self.model == "2k":
            return KernelSpec.composite_sum(rbf, rbf)
        if self.model == "4k":
            return KernelSpec.composite_cross(rbf, rbf, rbf)
        if self.model == "combined":
            return KernelSpec.composite_cross(rbf, rbf, rbf, rbf)
        raise InvalidInputError(f"model must be one of {_MODELS}, got {self.model!r}")

    def fit(self, y, x=None):
        self.solution_, self.predictor_ = rsm_fit(
            x, y, self.M, self.Q, self._kernel(), EpsHuberParams(self.eps, self.delta, self.C))
        self.dual_coef_ = self.solution_.multipliers
        self.support_ = self.solution_.support_indices
        return self

    def predict(self, y, x=None):
        check_is_fitted(self, "predictor_")
        return self.predictor_.predict(x, y)[1]


# ----------------------------------------------------------------------------
# spatial reference beamforming


@dataclass(frozen=True)
class CanonicalSignalSet:
    """Reference signals ``b_i a0`` arriving from the desired direction ``theta0``."""

    symbols: np.ndarray
    steering: np.ndarray
    theta0: float = 0.0

    def __post_init__(self):
        b = np.atleast_1d(np.asarray(self.symbols, dtype=complex))
        a = np.atleast_1d(np.asarray(self.steering, dtype=complex))
        if b.size == 0 or a.size == 0:
            raise InvalidInputError("canonical set needs symbols and a steering vector")
        if not np.allclose(np.abs(a), 1.0, atol=1e-12):
            raise InvalidInputError("steering entries must have unit modulus")
        object.__setattr__(self, "symbols", b)
        object.__setattr__(self, "steering", a)

    @classmethod
    def qpsk(cls, scene, theta0=0.0):
        return cls(QPSK, steering_vector(scene, theta0), theta0)

    @property
    def signals(self):
        """Rows ``b_i a0``."""
        return self.symbols[:, None] * self.steering[None, :]


def ridge_for(K):
    """``1e-6 * trace(K) / N``: ridge used in place of an exact inverse of the snapshot Gram."""
    return 1e-6 * float(np.real(np.trace(K))) / K.shape[0]


@dataclass(frozen=True)
class SpatialReferenceDetector:
    """Kernel minimum-output-energy processor.

    Output for a snapshot ``x`` is ``sum_i psi_i K_sr(b_i a0, x)`` with the
    spatial kernel ``K_sr(u, v) = N k_u^H (K + lam I)^-2 k_v``, where
    ``k_u[n] = K(x_n, u)`` runs over the snapshots used to estimate the
    feature-space correlation. ``whitener`` is ``W`` with
    ``W^H W = (K + lam I)^-2``.
    """

    base_kernel: KernelSpec
    snapshots: np.ndarray
    whitener: np.ndarray
    canonical: CanonicalSignalSet
    multipliers: np.ndarray

    def spatial_kernel(self, U, V):
        ku = gram(self.base_kernel, self.snapshots, U)
        kv = gram(self.base_kernel, self.snapshots, V)
        return self.snapshots.shape[0] * ((self.whitener @ ku).conj().T @ (self.whitener @ kv))

    def soft(self, snapshots):
        X = _snapshot_matrix(snapshots)
        return self.spatial_kernel(self.canonical.signals, X).T @ self.multipliers

    def __call__(self, snapshots):
        return qpsk_slicer(self.soft(snapshots))


def spatial_kernel_matrix(snapshots, canonical, base_kernel):
    """Returns ``(G, W)`` with ``G[m, n] = K_sr(c_n, c_m)`` on the canonical signals.

    The output at ``c_m`` is ``(G @ psi)[m]``; ``G`` is Hermitian. ``W`` is
    the whitener of :class:`SpatialReferenceDetector`.
    """
    X = _snapshot_matrix(snapshots)
    K = gram(base_kernel, X)
    K = 0.5 * (K + K.conj().T)
    lam = ridge_for(K)
    w, U = np.linalg.eigh(K)
    if w[0] < 1e-12 * w[-1]:
        warnings.warn("snapshot Gram is numerically singular; ridge-regularized inverse in use",
                      RuntimeWarning, stacklevel=2)
    # An explicit (K + lam I)^-2 has entries near lam^-2 and loses the
    # range-space part to cancellation; the half-power form does not.
    W = U.conj().T / (np.maximum(w, 0.0) + lam)[:, None]
    F = W @ gram(base_kernel, X, canonical.signals)
    G = X.shape[0] * (F.conj().T @ F).T
    return 0.5 * (G + G.conj().T), W


def spatial_beamformer_fit(snapshots, canonical, base_kernel, loss, tol=None):
    """Fit the spatial-reference processor; returns ``(solution, detector)``."""
    X = _snapshot_matrix(snapshots)
    Ksr, W = spatial_kernel_matrix(X, canonical, base_kernel)
    sol = solve_complex(DualProblem(GramMatrix(Ksr, "spatial"), canonical.symbols, loss), tol=tol)
    return sol, SpatialReferenceDetector(base_kernel, X, W, canonical, sol.multipliers)


class SpatialReferenceBeamformer(BaseEstimator):
    """Kernel spatial-reference beamformer; ``fit`` takes unlabelled snapshots only."""

    def __init__(self, element_count=5, spacing_over_wavelength=0.5, theta0=0.0,
                 sigma=1.0, eps=0.0, delta=1e-3, C=10.0):
        self.element_count = element_count
        self.spacing_over_wavelength = spacing_over_wavelength
        self.theta0 = theta0
        self.sigma = sigma
        self.eps = eps
        self.delta = delta
        self.C = C

    def fit(self, X, y=None):
        scene = SteeringScene(self.element_count, self.spacing_over_wavelength)
        canonical = CanonicalSignalSet.qpsk(scene, self.theta0)
        self.solution_, self.detector_ = spatial_beamformer_fit(
            X, canonical, KernelSpec.rbf(self.sigma), EpsHuberParams(self.eps, self.delta, self.C))
        return self

    def decision_function(self, X):
        check_is_fitted(self, "detector_")
        return self.detector_.soft(X)

    def predict(self, X):
        return qpsk_slicer(self.decision_function(X))
