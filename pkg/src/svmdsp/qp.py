"""Box-constrained dual of the epsilon-Huber SVM.

The dual is solved directly in ``eta = alpha - alpha*``::

    maximize   -1/2 eta' (K + delta I) eta + eta' y - eps ||eta||_1
    subject to -C <= eta_i <= C

Each coordinate subproblem is a one-dimensional piecewise quadratic whose
maximizer is a clipped soft threshold, so cyclic coordinate ascent needs no
line search. A few sweeps give a warm start for a primal active-set
iteration that solves each face exactly; this removes the slow tail of
coordinate ascent on ill-conditioned Grams. Should the active-set phase
stall, coordinate sweeps resume until the sweep cap.
Complementarity ``alpha_i * alpha_i* = 0`` holds by construction.
"""

from __future__ import annotations

import logging
from dataclasses import dataclass

import numpy as np
from numba import njit

from .core import (ConvergenceError, EpsHuberParams, IllConditionedError,
                   InvalidInputError, SvmSolution)

logger = logging.getLogger(__name__)

PROVENANCES = frozenset({
    "spectral", "arx", "sinc", "deconv", "array", "stacked", "composite",
    "dsm", "spatial", "custom",
})

MAX_SWEEPS = 100_000
_SWEEP_BLOCK = 8
_WARM_SWEEPS = 16
_ACTIVE_SET_ITERS = 200
_POLISH_STEPS = 3


@dataclass(frozen=True)
class GramMatrix:
    """Symmetric (or Hermitian) kernel / correlation matrix with a provenance tag.

    For complex problems the matrix maps multipliers to predictions,
    ``y_hat = entries @ psi``.
    """

    entries: np.ndarray
    provenance: str = "custom"

    def __post_init__(self):
        k = np.asarray(self.entries)
        k = k.astype(complex if np.iscomplexobj(k) else float)
        if k.ndim != 2 or k.shape[0] != k.shape[1]:
            raise InvalidInputError(f"Gram matrix must be square, got shape {k.shape}")
        if not np.all(np.isfinite(k)):
            raise InvalidInputError("Gram matrix contains non-finite entries")
        if self.provenance not in PROVENANCES:
            raise InvalidInputError(f"unknown provenance {self.provenance!r}")
        scale = max(float(np.max(np.abs(k))) if k.size else 0.0, 1e-300)
        if np.max(np.abs(k - k.conj().T), initial=0.0) > 1e-10 * scale:
            raise InvalidInputError("Gram matrix is not symmetric/Hermitian")
        k = 0.5 * (k + k.conj().T)
        if not np.iscomplexobj(self.entries) and np.iscomplexobj(k):
            k = k.real
        k.flags.writeable = False
        object.__setattr__(self, "entries", k)

    @property
    def size(self):
        return self.entries.shape[0]

    @property
    def is_complex(self):
        return np.iscomplexobj(self.entries)


@dataclass(frozen=True)
class DualProblem:
    gram: GramMatrix
    targets: np.ndarray
    loss: EpsHuberParams

    def __post_init__(self):
        if not isinstance(self.gram, GramMatrix):
            object.__setattr__(self, "gram", GramMatrix(self.gram))
        y = np.asarray(self.targets)
        y = y.astype(complex if np.iscomplexobj(y) else float).reshape(-1)
        if not np.all(np.isfinite(y)):
            raise InvalidInputError("targets contain non-finite entries")
        if y.size != self.gram.size:
            raise InvalidInputError(
                f"Gram dimension {self.gram.size} does not match {y.size} targets")
        y.flags.writeable = False
        object.__setattr__(self, "targets", y)

    @property
    def is_complex(self):
        return self.gram.is_complex or np.iscomplexobj(self.targets)


def real_representation(matrix):
    """Real ``2n x 2n`` matrix acting on ``[Re psi; Im psi]`` like ``matrix`` acts on ``psi``."""
    a = np.asarray(matrix)
    re, im = a.real, a.imag
    return np.block([[re, -im], [im, re]])


@njit(cache=True)
def _coordinate_sweeps(Q, eta, grad, eps, C, n_sweeps):
    # grad holds y - Q @ eta and is updated in place
    n = eta.size
    max_step = 0.0
    for _ in range(n_sweeps):
        max_step = 0.0
        for i in range(n):
            qii = Q[i, i]
            g = grad[i] + qii * eta[i]
            if qii > 0.0:
                if g > eps:
                    new = (g - eps) / qii
                elif g < -eps:
                    new = (g + eps) / qii
                else:
                    new = 0.0
                if new > C:
                    new = C
                elif new < -C:
                    new = -C
            else:
                if g > eps:
                    new = C
                elif g < -eps:
                    new = -C
                else:
                    new = 0.0
            d = new - eta[i]
            if d != 0.0:
                eta[i] = new
                for j in range(n):
                    grad[j] -= d * Q[j, i]
                ad = abs(d)
                if ad > max_step:
                    max_step = ad
        if max_step == 0.0:
            break
    return max_step


def _kkt_components(eta, grad, eps, C):
    at_upper = eta >= C
    at_lower = eta <= -C
    zero = eta == 0.0
    pos = (eta > 0) & ~at_upper
    neg = (eta < 0) & ~at_lower
    v = np.zeros_like(eta)
    v[zero] = np.maximum(np.abs(grad[zero]) - eps, 0.0)
    v[pos] = np.abs(grad[pos] - eps)
    v[neg] = np.abs(grad[neg] + eps)
    v[at_upper] = np.maximum(eps - grad[at_upper], 0.0)
    v[at_lower] = np.maximum(grad[at_lower] + eps, 0.0)
    return v


def _objective(Q, y, eta, eps):
    return float(-0.5 * eta @ (Q @ eta) + eta @ y - eps * np.sum(np.abs(eta)))


def _check_psd(Q):
    try:
        np.linalg.cholesky(Q)
        return
    except np.linalg.LinAlgError:
        pass
    w = np.linalg.eigvalsh(Q)
    if w[0] < -1e-10 * max(abs(w[-1]), 1e-300):
        raise IllConditionedError(
            f"Gram matrix plus delta*I is not positive semidefinite "
            f"(min eigenvalue {w[0]:.3e}, max {w[-1]:.3e})")


def _refine_active_set(Q, y, eta, eps, C, tol, max_iter):
    """Primal active-set iteration started from a feasible ``eta`` (updated in place).

    Every coordinate is either fixed (at zero or at a bound) or free with a
    fixed sign. Free coordinates move towards the maximizer of the current
    face and stop at the first face boundary they meet, which then becomes
    fixed. At a face optimum, fixed coordinates whose multiplier has the
    wrong sign are released; all of them at once, or only the worst one
    after a zero-length step. The objective never decreases.
    Returns the final KKT violation.
    """
    # without an insensitive zone the objective has no kink at zero
    smooth = eps == 0.0
    sg = np.sign(eta)
    free = np.abs(eta) < C if smooth else (eta != 0.0) & (np.abs(eta) < C)
    stuck = False
    at_face = False
    polish = 0
    for _ in range(max_iter):
        g = y - Q @ eta
        if at_face or not np.any(free):
            viol = float(np.max(_kkt_components(eta, g, eps, C), initial=0.0))
            if viol <= max(tol, _roundoff_floor(Q, y, eta)):
                return viol
            fixed = ~free
            v = np.zeros_like(eta)
            z = fixed & (eta == 0.0)
            v[z] = np.abs(g[z]) - eps
            up = fixed & (eta >= C)
            v[up] = eps - g[up]
            lo = fixed & (eta <= -C)
            v[lo] = g[lo] + eps
            cand = np.flatnonzero(v > 0.0)
            if cand.size == 0:
                # only free coordinates violate: refine the face solve
                polish += 1
                if polish > _POLISH_STEPS:
                    return viol
            else:
                polish = 0
                if stuck:
                    cand = cand[np.argmax(v[cand])][None]
                sg[cand] = np.where(eta[cand] == 0.0, np.sign(g[cand]), sg[cand])
                free[cand] = True
            at_face = False
        # Newton step of the face from the current gradient; recomputing it
        # each pass doubles as iterative refinement of the face solve
        r = g[free] - eps * sg[free]
        try:
            d = np.linalg.solve(Q[np.ix_(free, free)], r)
        except np.linalg.LinAlgError:
            break
        cur = eta[free]
        sf = sg[free]
        if smooth:
            lo, hi = np.full_like(cur, -C), np.full_like(cur, C)
        else:
            lo, hi = np.where(sf > 0, 0.0, -C), np.where(sf > 0, C, 0.0)
        with np.errstate(divide="ignore", invalid="ignore"):
            lim = np.where(d < 0, (cur - lo) / -d, np.where(d > 0, (hi - cur) / d, np.inf))
        t = 1.0
        block = -1
        if lim.size and np.min(lim) < 1.0:
            block = int(np.argmin(lim))
            t = max(float(lim[block]), 0.0)
        new = np.clip(cur + t * d, lo, hi)
        idx = np.flatnonzero(free)
        if block >= 0:
            new[block] = lo[block] if d[block] < 0 else hi[block]
        eta[idx] = new
        # coordinates sitting on a face boundary leave the free set
        on_edge = np.abs(new) >= C
        if not smooth:
            on_edge |= new == 0.0
        free[idx[on_edge]] = False
        stuck = t == 0.0
        at_face = block < 0
    g = y - Q @ eta
    return float(np.max(_kkt_components(eta, g, eps, C), initial=0.0))


def _roundoff_floor(Q, y, eta):
    # smallest KKT violation resolvable when forming y - Q @ eta in doubles
    scale = float(np.max(np.abs(Q).sum(axis=1), initial=0.0)) * float(np.max(np.abs(eta), initial=0.0))
    return 4.0 * np.finfo(float).eps * (scale + float(np.max(np.abs(y), initial=0.0)))


def _solve_box(Q, y, eps, C, tol, max_sweeps):
    n = y.size
    eta = np.zeros(n)
    grad = y.copy()
    warm = min(_WARM_SWEEPS, max_sweeps)
    _coordinate_sweeps(Q, eta, grad, eps, C, warm)
    sweeps = warm
    viol = _refine_active_set(Q, y, eta, eps, C, tol, _ACTIVE_SET_ITERS + 4 * n)
    while viol > max(tol, _roundoff_floor(Q, y, eta)) and sweeps < max_sweeps:
        grad = y - Q @ eta
        block = min(_SWEEP_BLOCK, max_sweeps - sweeps)
        _coordinate_sweeps(Q, eta, grad, eps, C, block)
        sweeps += block
        grad = y - Q @ eta
        viol = float(np.max(_kkt_components(eta, grad, eps, C), initial=0.0))
    return eta, sweeps, viol, max(tol, _roundoff_floor(Q, y, eta))


def default_tol(targets):
    return 1e-8 * (float(np.max(np.abs(targets), initial=0.0)) + 1.0)


def _prepare(dp, tol):
    if not isinstance(dp, DualProblem):
        raise InvalidInputError("expected a DualProblem")
    if tol is None:
        tol = default_tol(dp.targets)
    if not tol > 0:
        raise InvalidInputError(f"tol must be positive, got {tol}")
    return tol


def _run(Q, y, loss, tol, max_sweeps):
    _check_psd(Q)
    eta, sweeps, viol, tol = _solve_box(Q, y, loss.eps, loss.cost_cap, tol, max_sweeps)
    obj = _objective(Q, y, eta, loss.eps)
    return eta, sweeps, viol, obj, tol


def solve_real(dp, tol=None, max_sweeps=MAX_SWEEPS):
    """Solve the real epsilon-Huber dual.

    Parameters
    ----------
    dp : DualProblem
        Real Gram, real targets and loss parameters.
    tol : float, optional
        Bound on the max-norm of the projected gradient at the returned point.
        Defaults to ``1e-8 * (max|y| + 1)``. It is raised to the round-off
        floor ``4 eps_mach (||Q||_inf max|eta| + max|y|)`` when that is larger.

    Raises
    ------
    IllConditionedError
        If ``K + delta I`` is not positive semidefinite.
    ConvergenceError
        If ``max_sweeps`` sweeps do not reach ``tol``; ``err.best`` holds the
        last iterate.
    """
    tol = _prepare(dp, tol)
    if dp.is_complex:
        raise InvalidInputError("complex problem passed to solve_real; use solve_complex")
    Q = np.array(dp.gram.entries, dtype=float)
    Q[np.diag_indices_from(Q)] += dp.loss.delta
    y = np.asarray(dp.targets, dtype=float)
    eta, sweeps, viol, obj, tol = _run(Q, y, dp.loss, tol, max_sweeps)
    sol = SvmSolution(eta, obj, dp.loss.cost_cap, n_sweeps=sweeps)
    if viol > tol:
        raise ConvergenceError(
            f"no convergence after {sweeps} sweeps (KKT violation {viol:.3e} > {tol:.3e})",
            best=sol)
    logger.debug("solve_real: n=%d sweeps=%d kkt=%.2e support=%d",
                 y.size, sweeps, viol, sol.n_support)
    return sol


def solve_complex(dp, tol=None, max_sweeps=MAX_SWEEPS):
    """Solve the complex epsilon-Huber dual.

    Real and imaginary residuals get their own multiplier sets (``eta`` and
    ``nu``), each boxed by ``C``. The Hermitian Gram enters through its real
    ``2n x 2n`` representation, and ``psi = eta + 1j*nu`` is returned.
    """
    tol = _prepare(dp, tol)
    n = dp.gram.size
    Q = real_representation(dp.gram.entries)
    Q[np.diag_indices_from(Q)] += dp.loss.delta
    y = np.concatenate([dp.targets.real, dp.targets.imag]).astype(float)
    eta, sweeps, viol, obj, tol = _run(Q, y, dp.loss, tol, max_sweeps)
    sol = SvmSolution(eta[:n] + 1j * eta[n:], obj, dp.loss.cost_cap, n_sweeps=sweeps)
    if viol > tol:
        raise ConvergenceError(
            f"no convergence after {sweeps} sweeps (KKT violation {viol:.3e} > {tol:.3e})",
            best=sol)
    return sol


def solve(dp, tol=None, max_sweeps=MAX_SWEEPS):
    """Dispatch to :func:`solve_real` or :func:`solve_complex`."""
    if dp.is_complex:
        return solve_complex(dp, tol, max_sweeps)
    return solve_real(dp, tol, max_sweeps)


def _real_view(dp, multipliers):
    m = np.asarray(multipliers)
    if dp.is_complex:
        Q = real_representation(dp.gram.entries)
        y = np.concatenate([dp.targets.real, dp.targets.imag]).astype(float)
        eta = np.concatenate([m.real, m.imag]).astype(float)
    else:
        if np.iscomplexobj(m):
            raise InvalidInputError("complex multipliers for a real problem")
        Q = np.array(dp.gram.entries, dtype=float)
        y = np.asarray(dp.targets, dtype=float)
        eta = m.astype(float)
    Q[np.diag_indices_from(Q)] += dp.loss.delta
    return Q, y, eta


def kkt_violation(dp, sol):
    """Max-norm of the projected gradient of the dual at ``sol``.

    Zero exactly when ``sol`` is a stationary point of the box-constrained
    dual; multipliers outside the box count as violations of their excess.
    """
    m = sol.multipliers if isinstance(sol, SvmSolution) else np.asarray(sol)
    if m.shape != (dp.gram.size,):
        raise InvalidInputError(
            f"solution has shape {m.shape}, problem has dimension {dp.gram.size}")
    Q, y, eta = _real_view(dp, m)
    C = dp.loss.cost_cap
    excess = np.maximum(np.abs(eta) - C, 0.0)
    clipped = np.clip(eta, -C, C)
    grad = y - Q @ eta
    v = _kkt_components(clipped, grad, dp.loss.eps, C)
    return float(np.max(np.maximum(v, excess), initial=0.0))


def dual_objective(dp, multipliers):
    Q, y, eta = _real_view(dp, multipliers)
    return _objective(Q, y, eta, dp.loss.eps)


def solve_gram(gram, targets, loss, provenance="custom", tol=None):
    """Convenience wrapper: build the problem from raw arrays and solve it."""
    g = gram if isinstance(gram, GramMatrix) else GramMatrix(gram, provenance)
    return solve(DualProblem(g, targets, loss), tol=tol)
