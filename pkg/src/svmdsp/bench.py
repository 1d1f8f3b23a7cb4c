"""Synthetic data generators, metrics, least-squares baselines and the experiment runner."""

from __future__ import annotations

import math
import warnings
from dataclasses import dataclass, field, fields, replace
from typing import Callable, Dict, List, Optional

import numpy as np
from scipy import signal as sps

from .core import EpsHuberParams, InvalidInputError, NumericalError, SampledSignal
from .dsm import dsm_deconv_fit, dsm_sinc_fit
from .kernels import ImpulseResponse, KernelSpec
from .psm import (ArxCoeffs, ArxOrders, SpectralGrid, SteeringScene, ar_psd,
                  arx_fit, arx_regressors, evaluate_spectral_model, ls_periodogram,
                  qpsk_slicer, sinc_psm_fit, spectral_fit, steering_vector,
                  temporal_beamformer_fit)
from .rsm import (CanonicalSignalSet, combined_svr_arx_fit, spatial_beamformer_fit,
                  stacked_narx_fit, svm_arx_2k_fit, svm_arx_4k_fit)

AR3 = np.array([-0.9816, -0.9400, -0.7799])
ARMA44_AR = np.array([1.0200, -2.0902, 0.9808, -0.9275])
ARMA44_MA = np.array([1.0, 0.4800, 0.6876, 0.4476, 0.3538])


def _rng(seed):
    return np.random.default_rng(seed)


def _impulses(rng, n, rate, amplitude=10.0, jitter=0.5):
    """Sparse sequence: a fraction ``rate`` of the samples get ``+-amplitude + U(-jitter, jitter)``."""
    if not 0.0 <= rate <= 1.0:
        raise InvalidInputError("rate must lie in [0, 1]")
    hit = rng.random(n) < rate
    out = np.zeros(n)
    k = int(hit.sum())
    out[hit] = rng.choice([-1.0, 1.0], size=k) * amplitude + rng.uniform(-jitter, jitter, size=k)
    return out


# ----------------------------------------------------------------------------
# generators


def gen_sinusoid_impulsive(seed, N=128, f=0.3, gauss_var=0.1, outlier_rate=0.30):
    """``sin(2 pi f n)`` plus white Gaussian noise plus +-10 impulses on a random subset."""
    if gauss_var < 0:
        raise InvalidInputError("gauss_var must be nonnegative")
    rng = _rng(seed)
    n = np.arange(N, dtype=float)
    y = np.sin(2 * np.pi * f * n) + rng.normal(0.0, math.sqrt(gauss_var), N)
    y = y + _impulses(rng, N, outlier_rate)
    return SampledSignal(n, y)


def _contaminate(rng, y, obs_var, impulse_rate, impulse_var):
    out = y + rng.normal(0.0, math.sqrt(obs_var), y.size) if obs_var > 0 else y.copy()
    if impulse_rate > 0:
        hit = rng.random(y.size) < impulse_rate
        half = math.sqrt(3.0 * impulse_var)
        out[hit] += rng.uniform(-half, half, size=int(hit.sum()))
    return out


def _arma(rng, L, ar, ma, burn, driving_std):
    e = rng.standard_normal(L + burn) * driving_std
    y = sps.lfilter(ma, np.r_[1.0, -ar], e)[burn:]
    if not np.all(np.isfinite(y)) or np.max(np.abs(y), initial=0.0) > 1e12:
        raise NumericalError("ARMA recursion diverged")
    return y


def gen_ar3(seed, L=128, obs_var=0.0, impulse_rate=0.0, impulse_var=1.0, driving_std=1.0, burn=500):
    """AR(3) process driven by unit white noise, optionally contaminated.

    The contamination adds ``N(0, obs_var)`` and, on a fraction ``impulse_rate``
    of the samples, zero-mean uniform impulses of variance ``impulse_var``.
    """
    if L <= 20:
        raise InvalidInputError("L must exceed 20")
    rng = _rng(seed)
    y = _arma(rng, L, AR3, [1.0], burn, driving_std)
    y = _contaminate(rng, y, obs_var, impulse_rate, impulse_var)
    return SampledSignal.uniform(y), ArxCoeffs(AR3)


def gen_arma44(seed, L=128, obs_var=0.0, impulse_rate=0.0, impulse_var=1.0, driving_std=1.0, burn=500):
    """Narrow-band ARMA(4,4) process; the true MA part is returned in ``exo``."""
    if L <= 20:
        raise InvalidInputError("L must exceed 20")
    rng = _rng(seed)
    y = _arma(rng, L, ARMA44_AR, ARMA44_MA, burn, driving_std)
    y = _contaminate(rng, y, obs_var, impulse_rate, impulse_var)
    return SampledSignal.uniform(y), ArxCoeffs(ARMA44_AR, ARMA44_MA)


def arma_psd(coeffs, sigma2, fs, freqs):
    """PSD of an ARMA model whose MA polynomial sits in ``coeffs.exo`` (empty means pure AR)."""
    base = ar_psd(coeffs.ar, sigma2, fs, freqs)
    if coeffs.exo.size == 0:
        return base
    z = np.exp(-2j * np.pi * np.outer(np.asarray(freqs, dtype=float), np.arange(coeffs.exo.size)) / fs)
    return base * np.abs(z @ coeffs.exo) ** 2


LORENZ = dict(rho=10.0, r=28.0, b=8.0 / 3.0)
FEEDBACK_DEN = np.array([1.0, 2.01, 1.46, 0.39])


def lorenz_x(seed, N, step=0.01, transient=1000):
    """x component of the Lorenz system, fixed-step RK4 from a seeded start."""
    rho, r, b = LORENZ["rho"], LORENZ["r"], LORENZ["b"]

    def f(s):
        x, y, z = s
        return np.array([-rho * x + rho * y, -x * z + r * x - y, x * y - b * z])

    s = _rng(seed).uniform(-10.0, 10.0, 3) + np.array([0.0, 0.0, 25.0])
    out = np.empty(N)
    for i in range(transient + N):
        k1 = f(s)
        k2 = f(s + 0.5 * step * k1)
        k3 = f(s + 0.5 * step * k2)
        k4 = f(s + step * k3)
        s = s + step / 6.0 * (k1 + 2 * k2 + 2 * k3 + k4)
        if i >= transient:
            out[i - transient] = s[0]
    return out


def lowpass(x):
    """8th-order Butterworth lowpass at half the Nyquist band."""
    return sps.sosfilt(sps.butter(8, 0.5, output="sos"), x)


def feedback_channel(g):
    """``o_n = g_n - 2.01 o_{n-1} - 1.46 o_{n-2} - 0.39 o_{n-3}``."""
    return sps.lfilter([1.0], FEEDBACK_DEN, g)


def log_distortion(o):
    """Odd compressive surrogate ``sign(o) log(1 + |o|)`` of a logarithmic distortion."""
    return np.sign(o) * np.log1p(np.abs(o))


def gen_lorenz_chain(seed, N=1000, step=0.01, transient=1000):
    """Lorenz x component and the output of the lowpass, feedback and log chain."""
    if N < 200:
        raise InvalidInputError("N must be at least 200")
    x = lorenz_x(seed, N, step, transient)
    y = log_distortion(feedback_channel(lowpass(x)))
    return SampledSignal.uniform(x), SampledSignal.uniform(y)


def random_qpsk(rng, n):
    return (rng.choice([-1.0, 1.0], n) + 1j * rng.choice([-1.0, 1.0], n)) / math.sqrt(2)


def complex_noise(rng, shape, power):
    return math.sqrt(power / 2.0) * (rng.standard_normal(shape) + 1j * rng.standard_normal(shape))


@dataclass(frozen=True)
class ArrayBurst:
    """Snapshots (one row per symbol instant) and the desired user's symbols."""

    train_snapshots: np.ndarray
    train_symbols: np.ndarray
    test_snapshots: np.ndarray
    test_symbols: np.ndarray


def gen_array_bursts(seed, scene, noise_power, train=50, test=1000, desired=(0,),
                     random_desired_phase=True):
    """``x_n = A b_n + noise`` with QPSK symbols.

    The sources listed in ``desired`` carry the same symbol stream (multipath
    copies of the desired user); their phases are redrawn uniformly for every
    burst when ``random_desired_phase``. Every other source carries its own
    independent QPSK stream. Noise is complex white Gaussian with
    ``noise_power`` per element.
    """
    rng = _rng(seed)
    n = train + test
    K1 = scene.element_count
    desired = set(desired)
    b = random_qpsk(rng, n)
    x = complex_noise(rng, (n, K1), noise_power) if noise_power > 0 else np.zeros((n, K1), complex)
    for idx, (theta, amp) in enumerate(scene.sources):
        a = steering_vector(scene, theta)
        if idx in desired:
            phase = np.exp(2j * np.pi * rng.random()) if random_desired_phase else 1.0
            x += (amp * phase * b)[:, None] * a[None, :]
        else:
            x += (amp * random_qpsk(rng, n))[:, None] * a[None, :]
    return ArrayBurst(x[:train], b[:train], x[train:], b[train:])


def double_sinc(t, T0=2.0, f=0.4):
    """``sinc^2(pi t / T0) (1 + sin(2 pi f t) / 2)``."""
    t = np.asarray(t, dtype=float)
    return np.sinc(t / T0) ** 2 * (1.0 + 0.5 * np.sin(2 * np.pi * f * t))


def gen_double_sinc(seed, L=32, mean_T=0.5, snr_db=10.0, f=0.4, T0=2.0, jitter=0.25):
    """Jittered training samples and a clean test grid at spacing ``mean_T / 16``.

    Training instants are ``(n - L/2) mean_T`` plus uniform jitter of
    ``+-jitter mean_T``; the noise variance sets the SNR against the mean
    power of the clean training samples.
    """
    if L < 4:
        raise InvalidInputError("L must be at least 4")
    rng = _rng(seed)
    base = (np.arange(L) - L // 2) * mean_T
    t = base + rng.uniform(-jitter, jitter, L) * mean_T
    clean = double_sinc(t, T0, f)
    if math.isinf(snr_db):
        noise_var = 0.0
        y = clean
    else:
        noise_var = float(np.mean(clean ** 2)) / 10 ** (snr_db / 10)
        y = clean + rng.normal(0.0, math.sqrt(noise_var), L)
    grid = np.arange(base[0], base[-1] + 1e-12, mean_T / 16)
    return SampledSignal(t, y), SampledSignal(grid, double_sinc(grid, T0, f)), noise_var


def random_min_phase(rng, length=9, max_radius=0.8):
    """Unit-energy real FIR with all zeros strictly inside ``max_radius``."""
    order = length - 1
    roots = []
    while len(roots) < order:
        r = max_radius * math.sqrt(rng.random())
        if order - len(roots) >= 2:
            w = math.pi * rng.random()
            z = r * np.exp(1j * w)
            roots += [z, np.conj(z)]
        else:
            roots.append(r * rng.choice([-1.0, 1.0]))
    h = np.real(np.poly(roots))
    return ImpulseResponse(h / np.linalg.norm(h))


def gen_spike_train(seed, N=128, spike_count=8, h=None, snr_db=20.0, min_gap=None):
    """``y = x * h + noise`` for a sparse ``x`` with amplitudes ``+-[0.5, 1.5]``.

    ``h`` defaults to a random minimum-phase response of length 9 drawn from
    the same seed. Spike positions keep at least ``min_gap`` samples apart
    (default 2). Returns ``(y, x, h, noise_var)``.
    """
    if spike_count * 4 >= N:
        raise InvalidInputError("spike_count must be below N/4")
    rng = _rng(seed)
    if h is None:
        h = random_min_phase(rng)
    elif not isinstance(h, ImpulseResponse):
        h = ImpulseResponse(h)
    gap = 2 if min_gap is None else int(min_gap)
    x = np.zeros(N)
    chosen = []
    candidates = rng.permutation(N - h.order)
    for c in candidates:
        if len(chosen) == spike_count:
            break
        if all(abs(int(c) - p) >= gap for p in chosen):
            chosen.append(int(c))
    pos = np.sort(np.array(chosen, dtype=int))
    x[pos] = rng.choice([-1.0, 1.0], pos.size) * rng.uniform(0.5, 1.5, pos.size)
    clean = np.convolve(x, h.samples)[:N]
    if snr_db is None or math.isinf(snr_db):
        noise_var = 0.0
    else:
        power = float(np.mean(clean ** 2)) if spike_count else 1.0
        noise_var = power / 10 ** (snr_db / 10)
    y = clean + (rng.normal(0.0, math.sqrt(noise_var), N) if noise_var > 0 else 0.0)
    return SampledSignal.uniform(y), x, h, noise_var


# ----------------------------------------------------------------------------
# metrics


@dataclass(frozen=True)
class MetricsReport:
    """Trial metrics; entries that do not apply to the estimate kind are None."""

    me: Optional[float] = None
    mse: Optional[float] = None
    mae: Optional[float] = None
    r: Optional[float] = None
    imse: Optional[float] = None
    ber: Optional[float] = None
    precision: Optional[float] = None
    recall: Optional[float] = None
    f1: Optional[float] = None
    support_count: Optional[int] = None

    def as_dict(self):
        return {f.name: getattr(self, f.name) for f in fields(self)}


def pearson_r(a, b):
    """Correlation coefficient; NaN when either input has zero variance."""
    a = np.asarray(a, dtype=float) - np.mean(a)
    b = np.asarray(b, dtype=float) - np.mean(b)
    den = math.sqrt(float(a @ a) * float(b @ b))
    if den == 0.0:
        return float("nan")
    return float(np.clip((a @ b) / den, -1.0, 1.0))


def spike_scores(true_x, est_x, tol=1, threshold=0.0):
    """Support precision, recall and F1 with a +-``tol`` index tolerance.

    Each true spike can be matched by at most one estimated spike.
    """
    t_idx = np.flatnonzero(np.abs(true_x) > 0)
    e_idx = np.flatnonzero(np.abs(est_x) > threshold)
    used = set()
    matched = 0
    for i in e_idx:
        for j in t_idx:
            if j not in used and abs(int(i) - int(j)) <= tol:
                used.add(j)
                matched += 1
                break
    precision = matched / e_idx.size if e_idx.size else (1.0 if t_idx.size == 0 else 0.0)
    recall = matched / t_idx.size if t_idx.size else 1.0
    f1 = 0.0 if precision + recall == 0 else 2 * precision * recall / (precision + recall)
    return precision, recall, f1


def compute_metrics(truth, estimate, kind="regression", **kw):
    """Metrics of ``estimate`` against ``truth``.

    ``kind`` selects the family: ``"regression"`` (ME, MSE, MAE, r),
    ``"psd"`` (IMSE over the grid), ``"symbols"`` (BER), ``"spikes"``
    (precision, recall, F1 and support count; ``tol`` and ``threshold``
    keywords apply).
    """
    truth = np.asarray(truth)
    estimate = np.asarray(estimate)
    if truth.shape != estimate.shape:
        raise InvalidInputError(f"length mismatch: {truth.shape} vs {estimate.shape}")
    if kind == "regression":
        e = truth - estimate
        return MetricsReport(me=float(np.mean(e)), mse=float(np.mean(e ** 2)),
                             mae=float(np.mean(np.abs(e))), r=pearson_r(truth, estimate))
    if kind == "psd":
        return MetricsReport(imse=float(np.mean(np.abs(truth - estimate) ** 2)))
    if kind == "symbols":
        return MetricsReport(ber=float(np.mean(~np.isclose(truth, estimate))))
    if kind == "spikes":
        p, r, f1 = spike_scores(truth, estimate, kw.get("tol", 1), kw.get("threshold", 0.0))
        n = int(np.count_nonzero(np.abs(estimate) > kw.get("threshold", 0.0)))
        return MetricsReport(precision=p, recall=r, f1=f1, support_count=n)
    raise InvalidInputError(f"unknown metrics kind {kind!r}")


# ----------------------------------------------------------------------------
# least-squares baselines


def ls_dual(gram_matrix, targets, delta, bump=1e-10):
    """Regularized LS multipliers ``(R + delta I)^-1 y``; a ridge bump is added when singular."""
    R = np.asarray(gram_matrix)
    A = R + delta * np.eye(R.shape[0])
    try:
        return np.linalg.solve(A, targets)
    except np.linalg.LinAlgError:
        scale = max(float(np.real(np.trace(R))) / R.shape[0], 1.0)
        return np.linalg.solve(A + bump * scale * np.eye(R.shape[0]), targets)


def ls_ar(y, order):
    """Least-squares AR coefficients on the same regressors as the SVM fit."""
    rows, Y, _ = arx_regressors(None, y, ArxOrders(order))
    coef = np.linalg.lstsq(Y, np.asarray(y.values if isinstance(y, SampledSignal) else y)[rows],
                           rcond=None)[0]
    return ArxCoeffs(coef)


def mvdr_weights(snapshots, steering, ridge=None):
    """``R^-1 a0 / (a0^H R^-1 a0)`` with the sample covariance ``R``."""
    X = np.asarray(snapshots, dtype=complex)
    R = X.T @ X.conj() / X.shape[0]
    lam = 1e-6 * float(np.real(np.trace(R))) / R.shape[0] if ridge is None else ridge
    Ri_a = np.linalg.solve(R + lam * np.eye(R.shape[0]), steering)
    return Ri_a / (steering.conj() @ Ri_a)


def mvdr_output(weights, snapshots):
    """``w^H x_n`` for every snapshot row."""
    return np.asarray(snapshots, dtype=complex) @ weights.conj()


def ls_temporal_beamformer(snapshots, symbols):
    """Least-squares weights with ``y_hat_n = sum_k a_k x^k_n``."""
    return np.linalg.lstsq(np.asarray(snapshots, dtype=complex), symbols, rcond=None)[0]


def ls_baselines(kind, **data):
    """Dispatch to the LS reference of a problem family.

    ``kind`` is one of ``"dual"`` (``gram``, ``targets``, ``delta``),
    ``"periodogram"`` (``signal``, ``grid``), ``"ar"`` (``signal``, ``order``),
    ``"mvdr"`` (``snapshots``, ``steering``) or ``"temporal"``
    (``snapshots``, ``symbols``).
    """
    if kind == "dual":
        return ls_dual(data["gram"], data["targets"], data["delta"])
    if kind == "periodogram":
        return ls_periodogram(data["signal"], data["grid"])
    if kind == "ar":
        return ls_ar(data["signal"], data["order"])
    if kind == "mvdr":
        return mvdr_weights(data["snapshots"], data["steering"])
    if kind == "temporal":
        return ls_temporal_beamformer(data["snapshots"], data["symbols"])
    raise InvalidInputError(f"unknown baseline kind {kind!r}")


def robust_variance(residuals):
    """Squared normalized median absolute deviation."""
    r = np.asarray(residuals, dtype=float)
    return float((1.4826 * np.median(np.abs(r - np.median(r)))) ** 2)


# ----------------------------------------------------------------------------
# experiment runner


@dataclass(frozen=True)
class Experiment:
    """A reproducible trial: ``trial(seed, params, loss)`` returns ordered metrics.

    ``score`` maps the metrics of a held-out draw to a number to minimize
    during loss selection. ``loss_units`` documents how the grid entries are
    scaled before fitting.
    """

    description: str
    defaults: Dict[str, float]
    loss_grid: tuple
    trial: Callable
    score: Callable
    loss_units: str = "absolute"


@dataclass(frozen=True)
class ExperimentConfig:
    """Experiment id, generator parameter overrides, loss candidates, seed and trial count.

    Trial ``i`` uses seed ``seed + i``. With more than one loss candidate,
    each trial first fits every candidate on an independent held-out draw
    (seed ``seed + i + HOLDOUT_OFFSET``) and keeps the one with the lowest
    held-out score.
    """

    experiment: str
    params: Dict[str, float] = field(default_factory=dict)
    loss_grid: tuple = ()
    seed: int = 0
    trials: int = 20

    def __post_init__(self):
        if self.experiment not in EXPERIMENTS:
            raise InvalidInputError(
                f"unknown experiment {self.experiment!r}; choose from {sorted(EXPERIMENTS)}")
        if int(self.trials) != self.trials or self.trials < 1:
            raise InvalidInputError("trials must be a positive integer")
        if int(self.seed) != self.seed or self.seed < 0:
            raise InvalidInputError("seed must be a nonnegative integer")
        unknown = set(self.params) - set(EXPERIMENTS[self.experiment].defaults)
        if unknown:
            raise InvalidInputError(
                f"unknown parameter(s) {sorted(unknown)} for {self.experiment}")
        grid = tuple(self.loss_grid)
        if not all(isinstance(g, EpsHuberParams) for g in grid):
            raise InvalidInputError("loss grid entries must be EpsHuberParams")
        object.__setattr__(self, "loss_grid", grid)
        object.__setattr__(self, "trials", int(self.trials))
        object.__setattr__(self, "seed", int(self.seed))

    @property
    def resolved_params(self):
        p = dict(EXPERIMENTS[self.experiment].defaults)
        p.update(self.params)
        return p

    @property
    def resolved_grid(self):
        return self.loss_grid or EXPERIMENTS[self.experiment].loss_grid


HOLDOUT_OFFSET = 1_000_003


@dataclass(frozen=True)
class ExperimentResult:
    config: ExperimentConfig
    columns: List[str]
    rows: List[list]

    def column(self, name):
        j = self.columns.index(name)
        return np.array([r[j] for r in self.rows], dtype=float)

    def median(self, name):
        return float(np.nanmedian(self.column(name)))

    def aggregate_row(self):
        out = ["median", ""]
        for j, name in enumerate(self.columns[2:], start=2):
            vals = np.array([r[j] for r in self.rows], dtype=float)
            out.append(float(np.nanmedian(vals)) if np.any(np.isfinite(vals)) else float("nan"))
        return out

    def csv_text(self):
        from .io import csv_text
        return csv_text(self.columns, self.rows + [self.aggregate_row()])


def run_trial(config, index):
    """Metrics of trial ``index`` as ``(seed, loss, metrics)``."""
    exp = EXPERIMENTS[config.experiment]
    p = config.resolved_params
    seed = config.seed + index
    grid = config.resolved_grid
    loss = grid[0]
    if len(grid) > 1:
        scores = [exp.score(exp.trial(seed + HOLDOUT_OFFSET, p, g)) for g in grid]
        loss = grid[int(np.nanargmin(scores))]
    return seed, loss, exp.trial(seed, p, loss)


def run_experiment(config):
    """Run every trial of ``config``; rows follow trial order so output is deterministic."""
    rows = []
    columns = None
    for i in range(config.trials):
        seed, loss, metrics = run_trial(config, i)
        if columns is None:
            columns = ["trial", "seed", "eps", "delta", "cost"] + list(metrics)
        rows.append([i, seed, loss.eps, loss.delta, loss.cost_cap] + [
            float("nan") if v is None else v for v in metrics.values()])
    return ExperimentResult(config, columns, rows)


def _grid(eps=(0.0,), delta=(1.0,), cost=(1.0,)):
    return tuple(EpsHuberParams(e, d, c) for e in eps for d in delta for c in cost)


def _db(x):
    return 10 ** (x / 10)


# each trial function takes (seed, params, loss) and returns a dict of metrics


def _trial_sinusoid(seed, p, loss):
    sig = gen_sinusoid_impulsive(seed, int(p["N"]), p["f"], p["gauss_var"], p["outlier_rate"])
    grid = SpectralGrid(2 * np.pi * p["grid_step_hz"], int(p["harmonics"]))
    k0 = int(np.argmin(np.abs(grid.frequencies - p["f"])))
    sol, coeffs = spectral_fit(sig, grid, loss)
    svm = coeffs.amplitude
    ls = ls_periodogram(sig, grid).amplitude

    def pbr(a):
        return float(a[k0] / np.median(np.delete(a, k0)))

    clean = np.sin(2 * np.pi * p["f"] * sig.times)
    peak = int(np.argmax(svm))
    return {"peak_freq": float(grid.frequencies[peak]), "peak_hit": int(peak == k0),
            "svm_pbr": pbr(svm), "ls_pbr": pbr(ls),
            "svm_mse": float(np.mean((evaluate_spectral_model(coeffs, sig.times) - clean) ** 2)),
            "support_count": sol.n_support}


def _trial_ar(seed, p, loss, arma):
    gen = gen_arma44 if arma else gen_ar3
    sig, truth = gen(seed, int(p["L"]), p["obs_var"], p["impulse_rate"], p["impulse_var"])
    order = int(p["order"])
    freqs = np.linspace(0.0, 0.5, int(p["n_freq"]))
    true_psd = arma_psd(truth, 1.0, 1.0, freqs)
    rows, Y, _ = arx_regressors(None, sig, ArxOrders(order))
    t = sig.values[rows]
    sol, c = arx_fit(None, sig, ArxOrders(order), loss)
    a_ls = ls_ar(sig, order)
    svm_psd = ar_psd(c, robust_variance(t - Y @ c.ar), 1.0, freqs)
    ls_psd = ar_psd(a_ls, robust_variance(t - Y @ a_ls.ar), 1.0, freqs)
    i_svm = compute_metrics(true_psd, svm_psd, "psd").imse
    i_ls = compute_metrics(true_psd, ls_psd, "psd").imse
    return {"svm_imse": i_svm, "ls_imse": i_ls, "svm_not_worse": int(i_svm <= i_ls),
            "support_count": sol.n_support}


def _standardize(x, y, n):
    mx, sx = x[:n].mean(), x[:n].std()
    my, sy = y[:n].mean(), y[:n].std()
    return (x - mx) / sx, (y - my) / sy


def _trial_narx(seed, p, loss):
    x, y = gen_lorenz_chain(seed, int(p["N"]))
    ntr, nte = int(p["train"]), int(p["test"])
    if ntr + nte > int(p["N"]):
        raise InvalidInputError("train + test exceeds N")
    xs, ys = _standardize(x.values, y.values, ntr)
    xtr, ytr = xs[:ntr], ys[:ntr]
    xte, yte = xs[ntr:ntr + nte], ys[ntr:ntr + nte]
    M, Q = int(p["M"]), int(p["Q"])
    rbf = KernelSpec.rbf(p["sigma"])
    fits = {"stacked": stacked_narx_fit(xtr, ytr, M, Q, rbf, loss),
            "2k": svm_arx_2k_fit(xtr, ytr, M, Q, rbf, rbf, loss),
            "4k": svm_arx_4k_fit(xtr, ytr, M, Q, rbf, rbf, rbf, loss),
            "combined": combined_svr_arx_fit(xtr, ytr, M, Q, rbf, rbf, rbf, rbf, loss)}
    out = {}
    for name, (_, pred) in fits.items():
        rows, yh = pred.predict(xte, yte)
        m = compute_metrics(yte[rows], yh)
        out[f"r_{name}"] = m.r
        out[f"mse_{name}"] = m.mse
    return out


TEMPORAL_SOURCES = ((-0.1 * np.pi, 1.0), (-0.25 * np.pi, 0.3),
                    (-0.05 * np.pi, 1.0), (0.1 * np.pi, 1.0), (0.3 * np.pi, 1.0))
SPATIAL_SOURCES = ((0.0, 1.0), (np.deg2rad(-10.0), 1.0), (np.deg2rad(10.0), 1.0),
                   (np.deg2rad(20.0), 1.0))


def _trial_beam_temporal(seed, p, loss):
    scene = SteeringScene(int(p["elements"]), p["spacing"], TEMPORAL_SOURCES)
    power = _db(p["noise_db"])
    b = gen_array_bursts(seed, scene, power, int(p["train"]), int(p["test"]), desired=(0, 1))
    scaled = EpsHuberParams(loss.eps * math.sqrt(power), loss.delta,
                            loss.cost_cap * math.sqrt(power) / loss.delta)
    sol, _, det = temporal_beamformer_fit(b.train_snapshots, b.train_symbols, scaled)
    w = ls_temporal_beamformer(b.train_snapshots, b.train_symbols)
    return {"svm_ber": compute_metrics(b.test_symbols, det(b.test_snapshots), "symbols").ber,
            "ls_ber": compute_metrics(b.test_symbols, qpsk_slicer(b.test_snapshots @ w),
                                      "symbols").ber,
            "support_count": sol.n_support}


def _trial_beam_spatial(seed, p, loss):
    scene = SteeringScene(int(p["elements"]), p["spacing"], SPATIAL_SOURCES)
    b = gen_array_bursts(seed, scene, _db(p["noise_db"]), int(p["train"]), int(p["test"]),
                         random_desired_phase=False)
    canonical = CanonicalSignalSet.qpsk(scene, 0.0)
    with warnings.catch_warnings():
        warnings.simplefilter("ignore", RuntimeWarning)
        sol, det = spatial_beamformer_fit(b.train_snapshots, canonical,
                                          KernelSpec.rbf(p["sigma"]), loss)
    w = mvdr_weights(b.train_snapshots, steering_vector(scene, 0.0))
    mvdr = qpsk_slicer(mvdr_output(w, b.test_snapshots))
    return {"svm_ber": compute_metrics(b.test_symbols, det(b.test_snapshots), "symbols").ber,
            "mvdr_ber": compute_metrics(b.test_symbols, mvdr, "symbols").ber,
            "support_count": sol.n_support}


def _trial_interp(seed, p, loss):
    train, test, noise_var = gen_double_sinc(seed, int(p["L"]), p["mean_T"], p["snr_db"])
    scaled = replace(loss, eps=loss.eps * math.sqrt(noise_var))
    sol, pred = dsm_sinc_fit(train, p["sigma0"], scaled)
    mse = float(np.mean((pred(test.times) - test.values) ** 2))
    _, _, psm_pred = sinc_psm_fit(train, p["sigma0"], scaled)
    psm_mse = float(np.mean((psm_pred(test.times) - test.values) ** 2))
    return {"dsm_mse": mse, "psm_mse": psm_mse, "noise_var": noise_var,
            "mse_ratio": mse / noise_var if noise_var > 0 else float("nan"),
            "support_count": sol.n_support}


def _trial_deconv(seed, p, loss):
    y, x, h, noise_var = gen_spike_train(seed, int(p["N"]), int(p["spikes"]), None, p["snr_db"])
    scaled = replace(loss, eps=loss.eps * math.sqrt(noise_var))
    sol, _, x_hat = dsm_deconv_fit(y, h, scaled)
    m = compute_metrics(x, x_hat, "spikes", tol=1, threshold=scaled.support_tolerance)
    return {"precision": m.precision, "recall": m.recall, "f1": m.f1,
            "support_count": m.support_count}


_AR_GRID = _grid(delta=(1.0,), cost=(0.1, 0.3, 1.0, 3.0, 10.0)) + _grid(delta=(0.1, 0.3, 3.0))
_AR_DEFAULTS = dict(L=128, obs_var=0.1, impulse_rate=0.2, impulse_var=1.0, order=3, n_freq=256)

EXPERIMENTS: Dict[str, Experiment] = {
    "sinusoid-spectral": Experiment(
        "sinusoid at 0.3 Hz in Gaussian noise plus +-10 impulses; SVM spectrum vs periodogram",
        dict(N=128, f=0.3, gauss_var=0.1, outlier_rate=0.3, grid_step_hz=0.005, harmonics=100),
        _grid(delta=(1000.0,), cost=(0.001,)), _trial_sinusoid, lambda m: m["svm_mse"]),
    "ar3-imse": Experiment(
        "AR(3) with observation noise and impulses; IMSE of SVM-AR vs LS-AR spectra",
        dict(_AR_DEFAULTS), _AR_GRID,
        lambda s, p, l: _trial_ar(s, p, l, False), lambda m: m["svm_imse"]),
    "arma44-imse": Experiment(
        "narrow-band ARMA(4,4) fitted with a long AR model; IMSE of SVM vs LS",
        dict(_AR_DEFAULTS, order=8), _AR_GRID,
        lambda s, p, l: _trial_ar(s, p, l, True), lambda m: m["svm_imse"]),
    "narx-lorenz": Experiment(
        "Lorenz chain identification; test correlation of stacked, 2K, 4K and combined kernels",
        dict(N=1000, train=300, test=500, M=3, Q=9, sigma=1.0),
        _grid(delta=(0.01,), cost=(10.0,)), _trial_narx,
        lambda m: -np.mean([m["r_stacked"], m["r_2k"], m["r_4k"], m["r_combined"]])),
    "beam-temporal": Experiment(
        "six-element array, multipath desired user, three interferers; SVM vs LS BER",
        dict(elements=6, spacing=0.51, noise_db=0.0, train=50, test=1000),
        _grid(delta=(1e-6,), cost=(1.0,)), _trial_beam_temporal, lambda m: m["svm_ber"],
        "eps in noise standard deviations; C in noise standard deviations per delta"),
    "beam-spatial": Experiment(
        "five-element array, desired user at 0 deg, interferers at -10, 10, 20 deg; "
        "kernel spatial reference vs MVDR BER",
        dict(elements=5, spacing=0.5, noise_db=-6.0, train=100, test=1000, sigma=1000.0),
        _grid(delta=(1e-3,), cost=(10.0,)), _trial_beam_spatial, lambda m: m["svm_ber"]),
    "interp-dsinc": Experiment(
        "double sinc from 32 jittered samples at 10 dB SNR; DSM and PSM sinc interpolation",
        dict(L=32, mean_T=0.5, snr_db=10.0, sigma0=2 * np.pi),
        _grid(eps=(0.5,), delta=(0.05,), cost=(10.0,)), _trial_interp,
        lambda m: m["mse_ratio"], "eps in noise standard deviations"),
    "deconv-spikes": Experiment(
        "8 spikes in 128 samples through a random minimum-phase response, 20 dB SNR; "
        "DSM sparse deconvolution",
        dict(N=128, spikes=8, snr_db=20.0),
        _grid(eps=(5.0,), delta=(1e-3,), cost=(10.0,)), _trial_deconv,
        lambda m: -m["f1"], "eps in noise standard deviations"),
}
