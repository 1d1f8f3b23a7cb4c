"""Shared domain types, the epsilon-Huber loss and its residual-to-multiplier map."""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Optional

import numpy as np


class SvmDspError(Exception):
    """Base class for errors raised by this package."""


class InvalidInputError(SvmDspError, ValueError):
    """Input data or parameters violate a documented precondition."""


class IllConditionedError(SvmDspError, np.linalg.LinAlgError):
    """The Gram matrix is not positive semidefinite after delta augmentation."""


class NumericalError(SvmDspError, FloatingPointError):
    """A closed-form evaluation hit a singularity (for example a pole)."""


class ConvergenceError(SvmDspError, RuntimeError):
    """The dual solver hit its sweep cap.

    The best iterate found so far is kept on ``best`` so callers may still
    inspect or use it.
    """

    def __init__(self, message, best=None):
        super().__init__(message)
        self.best = best


def _as_finite_vector(values, name, dtype=float):
    arr = np.asarray(values, dtype=dtype)
    if arr.ndim == 0:
        arr = arr.reshape(1)
    if arr.ndim != 1:
        raise InvalidInputError(f"{name} must be one-dimensional, got shape {arr.shape}")
    if not np.all(np.isfinite(arr)):
        raise InvalidInputError(f"{name} contains non-finite entries")
    return arr


@dataclass(frozen=True)
class SampledSignal:
    """Real time series with strictly increasing (possibly uneven) time stamps in seconds."""

    times: np.ndarray
    values: np.ndarray

    def __post_init__(self):
        times = _as_finite_vector(self.times, "times")
        values = _as_finite_vector(self.values, "values")
        if times.shape != values.shape:
            raise InvalidInputError(
                f"times and values differ in length ({times.size} vs {values.size})")
        if times.size > 1 and np.any(np.diff(times) <= 0):
            raise InvalidInputError("times must be strictly increasing")
        times.flags.writeable = False
        values.flags.writeable = False
        object.__setattr__(self, "times", times)
        object.__setattr__(self, "values", values)

    @classmethod
    def uniform(cls, values, period=1.0, start=0.0):
        values = np.asarray(values, dtype=float)
        return cls(start + period * np.arange(values.size), values)

    def __len__(self):
        return self.values.size

    @property
    def sample_period(self):
        """Mean spacing between time stamps."""
        if len(self) < 2:
            return 1.0
        return float((self.times[-1] - self.times[0]) / (len(self) - 1))

    def is_uniform(self, rtol=1e-9):
        if len(self) < 3:
            return True
        d = np.diff(self.times)
        return bool(np.all(np.abs(d - d[0]) <= rtol * abs(d[0])))


@dataclass(frozen=True)
class ComplexSeries:
    values: np.ndarray

    def __post_init__(self):
        arr = np.asarray(self.values, dtype=complex).reshape(-1)
        if not np.all(np.isfinite(arr)):
            raise InvalidInputError("complex series contains non-finite entries")
        arr.flags.writeable = False
        object.__setattr__(self, "values", arr)

    def __len__(self):
        return self.values.size


@dataclass(frozen=True)
class EpsHuberParams:
    """Loss triple of the epsilon-Huber cost.

    Parameters
    ----------
    eps : float
        Width of the insensitive zone, ``eps >= 0``.
    delta : float
        Scale of the quadratic zone, ``delta > 0``. It also acts as the ridge
        added to the Gram matrix in the dual.
    cost_cap : float
        Slope ``C`` of the linear zone and box bound on every multiplier.
    """

    eps: float = 0.0
    delta: float = 1.0
    cost_cap: float = 1.0

    def __post_init__(self):
        for name in ("eps", "delta", "cost_cap"):
            v = getattr(self, name)
            if not isinstance(v, (int, float, np.floating, np.integer)) or not math.isfinite(v):
                raise InvalidInputError(f"{name} must be a finite real, got {v!r}")
            object.__setattr__(self, name, float(v))
        if self.eps < 0:
            raise InvalidInputError(f"eps must be nonnegative, got {self.eps}")
        if self.delta <= 0:
            raise InvalidInputError(f"delta must be positive, got {self.delta}")
        if self.cost_cap <= 0:
            raise InvalidInputError(f"cost_cap must be positive, got {self.cost_cap}")

    @property
    def corner(self):
        """Residual magnitude ``e_C = eps + delta * C`` where the linear zone starts."""
        return self.eps + self.delta * self.cost_cap

    @property
    def support_tolerance(self):
        return 1e-8 * self.cost_cap


@dataclass(frozen=True)
class SvmSolution:
    """Dual coefficients returned by the solvers.

    ``multipliers`` holds ``eta = alpha - alpha*`` (real problems) or
    ``psi = eta + 1j*nu`` (complex problems).
    """

    multipliers: np.ndarray
    dual_objective: float
    cost_cap: float
    bias: Optional[float] = None
    n_sweeps: int = 0
    support_indices: np.ndarray = field(init=False)

    def __post_init__(self):
        m = np.asarray(self.multipliers)
        m = m.astype(complex if np.iscomplexobj(m) else float)
        m.flags.writeable = False
        object.__setattr__(self, "multipliers", m)
        tol = 1e-8 * self.cost_cap
        if np.iscomplexobj(m):
            mask = (np.abs(m.real) > tol) | (np.abs(m.imag) > tol)
        else:
            mask = np.abs(m) > tol
        idx = np.flatnonzero(mask)
        idx.flags.writeable = False
        object.__setattr__(self, "support_indices", idx)

    @property
    def n_support(self):
        return int(self.support_indices.size)

    @property
    def is_complex(self):
        return np.iscomplexobj(self.multipliers)


def _check_residual(e):
    e = np.asarray(e, dtype=float)
    if not np.all(np.isfinite(e)):
        raise InvalidInputError("residual must be finite")
    return e


def eps_huber_cost(e, loss):
    """Evaluate the three-zone epsilon-Huber cost elementwise.

    Zero inside ``|e| <= eps``, ``(|e| - eps)**2 / (2 delta)`` up to the corner
    ``e_C``, and ``C (|e| - eps) - delta C**2 / 2`` beyond it.
    """
    e = _check_residual(e)
    a = np.abs(e) - loss.eps
    quad = 0.5 * a * a / loss.delta
    lin = loss.cost_cap * a - 0.5 * loss.delta * loss.cost_cap ** 2
    out = np.where(a <= 0, 0.0, np.where(np.abs(e) <= loss.corner, quad, lin))
    return out if out.ndim else float(out)


def residual_to_multiplier(e, loss):
    """Map residuals to dual multipliers through the derivative of the loss.

    Returns 0 in the dead zone, ``sign(e)(|e| - eps)/delta`` in the quadratic
    zone and ``C sign(e)`` in the linear zone.
    """
    e = _check_residual(e)
    a = np.abs(e) - loss.eps
    out = np.sign(e) * np.clip(a / loss.delta, 0.0, loss.cost_cap)
    return out if out.ndim else float(out)
