"""Mercer kernels, autocorrelation kernels, composite kernels and a spectral Mercer check."""

from __future__ import annotations

from dataclasses import dataclass
from typing import NamedTuple, Optional, Tuple

import numpy as np

from .core import InvalidInputError, _as_finite_vector

_SINC_SERIES_CUTOFF = 1e-12


def sinc(x):
    """Unnormalized sinc, ``sin(x) / x``, with the removable singularity at 0."""
    x = np.asarray(x, dtype=float)
    small = np.abs(x) < _SINC_SERIES_CUTOFF
    safe = np.where(small, 1.0, x)
    out = np.where(small, 1.0 - x * x / 6.0, np.sin(safe) / safe)
    return out if out.ndim else float(out)


def sinc_kernel(t1, t2, sigma0):
    """``sinc(sigma0 * (t1 - t2))`` for times in seconds and bandwidth in rad/s."""
    if not sigma0 > 0:
        raise InvalidInputError(f"sigma0 must be positive, got {sigma0}")
    t1 = np.asarray(t1, dtype=float)
    t2 = np.asarray(t2, dtype=float)
    if not (np.all(np.isfinite(t1)) and np.all(np.isfinite(t2))):
        raise InvalidInputError("time stamps must be finite")
    return sinc(sigma0 * (t1 - t2))


@dataclass(frozen=True)
class ImpulseResponse:
    """Finite impulse response ``h_0 .. h_M`` (zero outside that range)."""

    samples: np.ndarray
    sample_period: float = 1.0

    def __post_init__(self):
        h = _as_finite_vector(self.samples, "impulse response")
        if h.size < 1:
            raise InvalidInputError("impulse response needs at least one sample")
        if not self.sample_period > 0:
            raise InvalidInputError("sample_period must be positive")
        h.flags.writeable = False
        object.__setattr__(self, "samples", h)
        object.__setattr__(self, "sample_period", float(self.sample_period))

    @property
    def order(self):
        """``M``, the index of the last sample."""
        return self.samples.size - 1

    @property
    def energy(self):
        return float(np.sum(self.samples ** 2))


class AutocorrelationKernel:
    """Shift-invariant kernel ``K(n, m) = R^h(n - m)`` with ``R^h = h * h[-n]``.

    Calling the kernel with a lag in seconds evaluates ``R^h`` at
    ``lag / sample_period``; fractional lags are linearly interpolated
    between neighbouring integer lags.
    """

    def __init__(self, h: ImpulseResponse):
        self.impulse = h
        self.values = np.correlate(h.samples, h.samples, mode="full")
        self.lags = np.arange(-h.order, h.order + 1)
        self.values.flags.writeable = False

    @property
    def max_lag(self):
        return self.impulse.order

    def at_lag(self, k):
        """``R^h`` at integer lag(s) ``k``; zero beyond ``|k| > M``."""
        k = np.asarray(k)
        idx = k + self.max_lag
        inside = (idx >= 0) & (idx < self.values.size)
        out = np.where(inside, self.values[np.clip(idx, 0, self.values.size - 1)], 0.0)
        return out if out.ndim else float(out)

    def __call__(self, lag_seconds):
        x = np.asarray(lag_seconds, dtype=float) / self.impulse.sample_period
        return np.interp(x, self.lags.astype(float), self.values, left=0.0, right=0.0)

    def matrix(self, times_a, times_b=None):
        a = np.asarray(times_a, dtype=float)
        b = a if times_b is None else np.asarray(times_b, dtype=float)
        return self(a[:, None] - b[None, :])


def autocorrelation_kernel(h):
    if not isinstance(h, ImpulseResponse):
        h = ImpulseResponse(h)
    return AutocorrelationKernel(h)


_KINDS = ("linear", "polynomial", "rbf", "sinc", "autocorrelation",
          "composite-sum", "composite-cross", "zero")


@dataclass(frozen=True)
class KernelSpec:
    """Description of a kernel.

    Build instances with the class methods (``KernelSpec.rbf(2.0)``, ...).
    Composite kinds take pairs ``(c, d)`` as arguments; all others take
    plain vectors (scalars for ``sinc`` and ``autocorrelation``, which act
    on time stamps).
    """

    kind: str
    degree: int = 1
    sigma: float = 1.0
    sigma0: float = 1.0
    impulse: Optional[ImpulseResponse] = None
    components: Tuple["KernelSpec", ...] = ()

    def __post_init__(self):
        if self.kind not in _KINDS:
            raise InvalidInputError(f"unknown kernel kind {self.kind!r}")
        if self.kind == "polynomial" and (int(self.degree) != self.degree or self.degree < 1):
            raise InvalidInputError("polynomial degree must be a positive integer")
        if self.kind == "rbf" and not self.sigma > 0:
            raise InvalidInputError("rbf width must be positive")
        if self.kind == "sinc" and not self.sigma0 > 0:
            raise InvalidInputError("sinc bandwidth must be positive")
        if self.kind == "autocorrelation" and self.impulse is None:
            raise InvalidInputError("autocorrelation kernel needs an impulse response")

    @classmethod
    def linear(cls):
        return cls("linear")

    @classmethod
    def zero(cls):
        return cls("zero")

    @classmethod
    def polynomial(cls, degree):
        return cls("polynomial", degree=degree)

    @classmethod
    def rbf(cls, sigma):
        return cls("rbf", sigma=float(sigma))

    @classmethod
    def sinc(cls, sigma0):
        return cls("sinc", sigma0=float(sigma0))

    @classmethod
    def autocorrelation(cls, h):
        if not isinstance(h, ImpulseResponse):
            h = ImpulseResponse(h)
        return cls("autocorrelation", impulse=h)

    @classmethod
    def composite_sum(cls, k1, k2):
        return cls("composite-sum", components=(k1, k2))

    @classmethod
    def composite_cross(cls, k1, k2, k3, k4=None):
        comps = (k1, k2, k3) if k4 is None else (k1, k2, k3, k4)
        return cls("composite-cross", components=comps)

    @property
    def is_composite(self):
        return self.kind.startswith("composite")


def _rows(x):
    x = np.asarray(x)
    if x.ndim == 0:
        return x.reshape(1, 1)
    if x.ndim == 1:
        return x.reshape(-1, 1)
    return x


def _inner(A, B):
    # conjugate-linear in the first argument for complex data
    return np.conj(A) @ B.T if np.iscomplexobj(A) else A @ B.T


def _sq_dist(A, B):
    a = np.sum(np.abs(A) ** 2, axis=1)[:, None]
    b = np.sum(np.abs(B) ** 2, axis=1)[None, :]
    cross = np.real(_inner(A, B))
    return np.maximum(a + b - 2.0 * cross, 0.0)


def zero_complete(c, d):
    """Pad the shorter of two row blocks with zero columns to a common width."""
    c = _rows(c)
    d = _rows(d)
    width = max(c.shape[1], d.shape[1])
    pad = lambda a: np.pad(a, ((0, 0), (0, width - a.shape[1])))
    return pad(c), pad(d)


def gram(spec: KernelSpec, A, B=None):
    """Kernel matrix ``G[i, j] = K(A[i], B[j])``.

    ``A`` and ``B`` are ``(n, dim)`` arrays (1-D arrays are read as scalar
    samples). For composite kernels they are pairs ``(C_rows, D_rows)``.
    """
    if spec.is_composite:
        return _composite_gram(spec, A, B)
    A = _rows(A)
    B = A if B is None else _rows(B)
    if A.shape[1] != B.shape[1]:
        raise InvalidInputError(
            f"dimension mismatch: {A.shape[1]} vs {B.shape[1]}")
    kind = spec.kind
    if kind == "zero":
        return np.zeros((A.shape[0], B.shape[0]))
    if kind == "linear":
        return _inner(A, B)
    if kind == "polynomial":
        return (_inner(A, B) + 1.0) ** int(spec.degree)
    if kind == "rbf":
        return np.exp(-_sq_dist(A, B) / (2.0 * spec.sigma ** 2))
    if A.shape[1] != 1:
        raise InvalidInputError(f"{kind} kernel acts on scalar time stamps")
    lag = A[:, 0][:, None] - B[:, 0][None, :]
    if kind == "sinc":
        return sinc(spec.sigma0 * np.real(lag))
    return AutocorrelationKernel(spec.impulse)(np.real(lag))


def _split_pair(X):
    try:
        c, d = X
    except (TypeError, ValueError):
        raise InvalidInputError("composite kernels take (c, d) pairs") from None
    c, d = _rows(c), _rows(d)
    if c.shape[0] != d.shape[0]:
        raise InvalidInputError("c and d blocks need the same number of rows")
    return c, d


def _composite_gram(spec, A, B):
    c1, d1 = _split_pair(A)
    c2, d2 = (c1, d1) if B is None else _split_pair(B)
    comps = spec.components
    if spec.kind == "composite-sum":
        k1, k2 = comps
        return gram(k1, c1, c2) + gram(k2, d1, d2)
    k1, k2, k3 = comps[:3]
    c1z, d1z = zero_complete(c1, d1)
    c2z, d2z = zero_complete(c2, d2)
    if c1z.shape[1] != c2z.shape[1]:
        raise InvalidInputError("cross kernel blocks have inconsistent widths")
    out = gram(k1, c1, c2) + gram(k2, d1, d2) + gram(k3, c1z, d2z) + gram(k3, d1z, c2z)
    if len(comps) == 4:
        out = out + gram(comps[3], np.hstack([c1, d1]), np.hstack([c2, d2]))
    return out


def eval_kernel(spec: KernelSpec, u, v):
    """Single kernel evaluation ``K(u, v)``.

    Composite kinds take ``u = (c1, d1)`` and ``v = (c2, d2)``.
    """
    if spec.is_composite:
        c1, d1 = u
        c2, d2 = v
        A = (np.atleast_1d(c1)[None, :], np.atleast_1d(d1)[None, :])
        B = (np.atleast_1d(c2)[None, :], np.atleast_1d(d2)[None, :])
        val = gram(spec, A, B)[0, 0]
    else:
        u = np.atleast_1d(np.asarray(u))
        v = np.atleast_1d(np.asarray(v))
        if u.shape != v.shape:
            raise InvalidInputError(f"dimension mismatch: {u.shape} vs {v.shape}")
        val = gram(spec, u[None, :], v[None, :])[0, 0]
    return complex(val) if np.iscomplexobj(val) and val.imag != 0 else float(np.real(val))


def composite_sum(k1, k2):
    """Summation kernel ``K1(c1, c2) + K2(d1, d2)`` as a callable on pairs."""
    spec = KernelSpec.composite_sum(k1, k2)
    return lambda c1, d1, c2, d2: eval_kernel(spec, (c1, d1), (c2, d2))


def composite_cross(k1, k2, k3, k4=None):
    """Cross-information kernel ``K1(c,c') + K2(d,d') + K3(c,d') + K3(d,c')``.

    With ``k4`` the term ``K4`` on the concatenations ``[c, d]`` is added.
    """
    spec = KernelSpec.composite_cross(k1, k2, k3, k4)
    return lambda c1, d1, c2, d2: eval_kernel(spec, (c1, d1), (c2, d2))


class MercerCheck(NamedTuple):
    passed: bool
    min_spectral: float


def verify_shift_invariant_mercer(k_samples, tol=1e-10, taper=False):
    """Check a sampled shift-invariant kernel for a nonnegative real spectrum.

    ``k_samples`` holds ``K(lag)`` on a symmetric grid of odd length, lag 0
    in the middle. The DFT of the lag sequence must have real part at least
    ``-tol * max`` and imaginary part at most ``tol * max`` in magnitude.
    The DFT is exact for finitely supported sequences (autocorrelations).
    For truncated samples of an infinite-support kernel (sinc, rbf) pass
    ``taper=True``: a triangular lag window turns the truncation into a
    convolution of the spectrum with a nonnegative Fejer kernel, so a
    nonnegative spectrum stays nonnegative instead of picking up Gibbs
    ripple. The taper can also mask small negative lobes, so leave it off
    for finitely supported sequences.
    """
    k = _as_finite_vector(k_samples, "kernel samples")
    if k.size % 2 != 1:
        raise InvalidInputError("lag grid must have odd length with lag 0 at the centre")
    scale = float(np.max(np.abs(k)))
    if np.max(np.abs(k - k[::-1])) > tol * max(scale, 1e-300):
        raise InvalidInputError("kernel samples are not even-symmetric about lag 0")
    if taper:
        half = k.size // 2
        k = k * (1.0 - np.abs(np.arange(-half, half + 1)) / (half + 1))
    spec = np.fft.fft(np.fft.ifftshift(k))
    top = float(np.max(spec.real))
    lo = float(np.min(spec.real))
    ok = top > 0 and lo >= -tol * top and float(np.max(np.abs(spec.imag))) <= tol * top
    return MercerCheck(bool(ok), lo)


def sinc_lag_samples(sigma0, spacing, lobes=16):
    """Sampled sinc kernel on a symmetric lag grid covering ``lobes`` main lobes.

    Grids coarser than the Nyquist spacing ``pi / sigma0`` are rejected.
    """
    if sigma0 * spacing > np.pi * (1 + 1e-12):
        raise InvalidInputError(
            f"lag spacing {spacing} exceeds the Nyquist spacing pi/sigma0 = {np.pi / sigma0}")
    half = int(np.ceil(lobes * np.pi / (sigma0 * spacing)))
    lags = spacing * np.arange(-half, half + 1)
    return lags, sinc(sigma0 * lags)


def rbf_lag_samples(sigma, spacing, extent=8.0):
    half = int(np.ceil(extent * sigma / spacing))
    lags = spacing * np.arange(-half, half + 1)
    return lags, np.exp(-lags ** 2 / (2 * sigma ** 2))


def min_eig_ratio(matrix):
    """Smallest eigenvalue divided by the largest magnitude eigenvalue."""
    w = np.linalg.eigvalsh(np.asarray(matrix))
    return float(w[0] / max(np.max(np.abs(w)), 1e-300))
