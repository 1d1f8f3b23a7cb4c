"""Independent reference computations used only by the tests."""

import itertools

import numpy as np


def enumerate_dual(K, y, eps, delta, C):
    """Maximize the epsilon-Huber dual by enumerating active-set patterns.

    Every coordinate is either at -C, 0, +C, or free with a fixed sign. For
    each pattern the free coordinates solve the stationarity equations of the
    face; feasible candidates are scored and the best one is returned as
    ``(eta, objective)``. Exponential in ``n``; meant for ``n <= 6``.
    """
    K = np.asarray(K, float)
    y = np.asarray(y, float)
    n = y.size
    Q = K + delta * np.eye(n)

    def objective(eta):
        return -0.5 * eta @ Q @ eta + eta @ y - eps * np.abs(eta).sum()

    best_eta = np.zeros(n)
    best_obj = objective(best_eta)
    for k in range(n + 1):
        for free in itertools.combinations(range(n), k):
            free = list(free)
            fixed = [i for i in range(n) if i not in free]
            signs = np.array(list(itertools.product([-1.0, 1.0], repeat=k)), float).reshape(2 ** k, k)
            bounds = np.array(list(itertools.product([-C, 0.0, C], repeat=n - k)), float).reshape(3 ** (n - k), n - k)
            for b in bounds:
                eta = np.zeros(n)
                eta[fixed] = b
                if k == 0:
                    obj = objective(eta)
                    if obj > best_obj:
                        best_obj, best_eta = obj, eta
                    continue
                base = y[free] - Q[np.ix_(free, fixed)] @ b
                rhs = base[:, None] - eps * signs.T
                try:
                    sol = np.linalg.solve(Q[np.ix_(free, free)], rhs)
                except np.linalg.LinAlgError:
                    sol = np.linalg.lstsq(Q[np.ix_(free, free)], rhs, rcond=None)[0]
                ok = np.all(signs.T * sol > 0, axis=0) & np.all(np.abs(sol) <= C, axis=0)
                for j in np.flatnonzero(ok):
                    cand = eta.copy()
                    cand[free] = sol[:, j]
                    obj = objective(cand)
                    if obj > best_obj:
                        best_obj, best_eta = obj, cand
    return best_eta, best_obj


def naive_gram(vectors):
    """Correlation matrix of explicit time-transversal vectors by double loop."""
    n = len(vectors)
    R = np.zeros((n, n))
    for m in range(n):
        for k in range(n):
            R[m, k] = sum(a * b for a, b in zip(vectors[m], vectors[k]))
    return R


def random_psd(rng, n, rank=None):
    rank = n if rank is None else rank
    A = rng.standard_normal((n, rank))
    return A @ A.T
