"""Two-dimensional Gaussian mixtures over trajectory points.

Fitting uses expectation-maximization with all probability arithmetic kept
in log space. Model order is chosen by information criteria over a range
of component counts, and drivable-area samples are drawn per component
with a chi-square confidence gate on the Mahalanobis distance.
"""

from __future__ import annotations

import json
import math
from dataclasses import dataclass, field

import numpy as np

from .exceptions import DegenerateDataError, EmptyDataError, SingularCovarianceError
from .trajectory import PointSet

LOG_2PI = math.log(2.0 * math.pi)

# covariance regularization floor added to the diagonal every M-step
COV_EPS = 1e-6

DEFAULT_TOL = 1e-6
DEFAULT_MAX_ITER = 500


@dataclass
class GaussianComponent:
    """One weighted 2-D Gaussian: weight, mean, symmetric PD covariance."""

    weight: float
    mean: np.ndarray
    covariance: np.ndarray = field(repr=False)

    def __post_init__(self):
        self.mean = np.asarray(self.mean, dtype=float).reshape(2)
        self.covariance = np.asarray(self.covariance, dtype=float).reshape(2, 2)
        if self.weight < 0:
            raise ValueError("component weight must be non-negative")
        if not np.allclose(self.covariance, self.covariance.T, atol=1e-12):
            raise ValueError("covariance must be symmetric")
        if not np.isfinite(self.mean).all() or not np.isfinite(self.covariance).all():
            raise ValueError("component parameters must be finite")


@dataclass
class GaussianMixture:
    components: list[GaussianComponent]

    def __post_init__(self):
        if len(self.components) < 1:
            raise ValueError("a mixture needs at least one component")
        total = sum(c.weight for c in self.components)
        if abs(total - 1.0) > 1e-9:
            raise ValueError(f"component weights sum to {total}, expected 1")

    @property
    def k(self) -> int:
        return len(self.components)

    def weights(self) -> np.ndarray:
        return np.array([c.weight for c in self.components])

    def means(self) -> np.ndarray:
        return np.array([c.mean for c in self.components])

    def covariances(self) -> np.ndarray:
        return np.array([c.covariance for c in self.components])


@dataclass
class FitReport:
    log_likelihood_trace: list[float]
    iterations: int
    converged: bool
    aic: float
    bic: float


def _chol2(cov: np.ndarray) -> tuple[float, float, float]:
    """Cholesky factor entries (l11, l21, l22) of a 2x2 SPD matrix."""
    a, b, c = cov[0, 0], cov[0, 1], cov[1, 1]
    if a <= 0:
        raise SingularCovarianceError("covariance not positive definite")
    l11 = math.sqrt(a)
    l21 = b / l11
    rest = c - l21 * l21
    if rest <= 0:
        raise SingularCovarianceError("covariance not positive definite")
    return l11, l21, math.sqrt(rest)


def _log_density(points: np.ndarray, mean: np.ndarray, cov: np.ndarray) -> np.ndarray:
    """log N(x; mean, cov) for an (N, 2) array of points."""
    l11, l21, l22 = _chol2(cov)
    dx = points[:, 0] - mean[0]
    dy = points[:, 1] - mean[1]
    z1 = dx / l11
    z2 = (dy - l21 * z1) / l22
    return -LOG_2PI - math.log(l11 * l22) - 0.5 * (z1 * z1 + z2 * z2)


def _logsumexp(a: np.ndarray, axis: int) -> np.ndarray:
    m = np.max(a, axis=axis, keepdims=True)
    m = np.where(np.isfinite(m), m, 0.0)
    out = np.log(np.sum(np.exp(a - m), axis=axis)) + np.squeeze(m, axis=axis)
    return out


def _component_log_densities(mixture: GaussianMixture, points: np.ndarray) -> np.ndarray:
    """(N, K) matrix of log(pi_k) + log N(x_n; mu_k, Sigma_k)."""
    cols = []
    for comp in mixture.components:
        logw = math.log(comp.weight) if comp.weight > 0 else -np.inf
        cols.append(logw + _log_density(points, comp.mean, comp.covariance))
    return np.column_stack(cols)


def pdf(mixture: GaussianMixture, x) -> float:
    """Mixture density sum_k pi_k N(x; mu_k, Sigma_k) at a single point."""
    pt = np.asarray(x, dtype=float).reshape(1, 2)
    return float(np.exp(_logsumexp(_component_log_densities(mixture, pt), axis=1))[0])


def log_likelihood(mixture: GaussianMixture, data: PointSet) -> float:
    """Sum over observations of the log mixture density."""
    pts = np.asarray(getattr(data, "points", data), dtype=float).reshape(-1, 2)
    if len(pts) == 0:
        raise EmptyDataError("log-likelihood of an empty point set")
    return float(np.sum(_logsumexp(_component_log_densities(mixture, pts), axis=1)))


def e_step(mixture: GaussianMixture, data: PointSet) -> np.ndarray:
    """Row-stochastic (N, K) responsibility matrix, computed in log space."""
    pts = np.asarray(getattr(data, "points", data), dtype=float).reshape(-1, 2)
    logp = _component_log_densities(mixture, pts)
    return np.exp(logp - _logsumexp(logp, axis=1)[:, None])


def mahalanobis_sq(component: GaussianComponent, x) -> float:
    """(x - mu)^T Sigma^{-1} (x - mu), always non-negative."""
    pt = np.asarray(x, dtype=float).reshape(2)
    l11, l21, l22 = _chol2(component.covariance)
    dx = pt - component.mean
    z1 = dx[0] / l11
    z2 = (dx[1] - l21 * z1) / l22
    return z1 * z1 + z2 * z2


def _kmeanspp_means(points: np.ndarray, k: int, rng: np.random.Generator) -> np.ndarray:
    """k-means++-style seeding: means drawn from the data, spread apart."""
    n = len(points)
    means = np.empty((k, 2))
    idx = int(rng.integers(n))
    means[0] = points[idx]
    if k == 1:
        return means
    d2 = np.sum((points - means[0]) ** 2, axis=1)
    for j in range(1, k):
        total = d2.sum()
        if total <= 0:
            probs = np.full(n, 1.0 / n)
        else:
            probs = d2 / total
        idx = int(rng.choice(n, p=probs))
        means[j] = points[idx]
        d2 = np.minimum(d2, np.sum((points - means[j]) ** 2, axis=1))
    return means


def _mixture_from_arrays(weights, means, covs) -> GaussianMixture:
    comps = [GaussianComponent(float(w), m.copy(), c.copy()) for w, m, c in zip(weights, means, covs)]
    return GaussianMixture(comps)


def em_fit(
    data: PointSet,
    k: int,
    seed: int = 0,
    tol: float = DEFAULT_TOL,
    max_iter: int = DEFAULT_MAX_ITER,
) -> tuple[GaussianMixture, FitReport]:
    """Fit a k-component mixture by EM.

    Initialization seeds means from the data k-means++ style, covariances
    from the global sample covariance, weights uniform. Every M-step adds
    COV_EPS to the covariance diagonals, which keeps near-collinear lane
    points from collapsing a component. Iteration stops when the
    log-likelihood improves by less than tol or max_iter is reached; the
    returned mixture is always the iterate whose log-likelihood is the
    last trace entry, so the trace is non-decreasing by construction.
    """
    pts = np.asarray(getattr(data, "points", data), dtype=float).reshape(-1, 2)
    if k < 1:
        raise ValueError("k must be at least 1")
    if len(pts) == 0:
        raise EmptyDataError("cannot fit a mixture to no data")
    if len(np.unique(pts, axis=0)) < k:
        raise DegenerateDataError(f"need at least {k} distinct points for k={k}")

    n = len(pts)
    rng = np.random.default_rng(seed)
    means = _kmeanspp_means(pts, k, rng)
    global_cov = np.cov(pts.T, bias=True) if n > 1 else np.zeros((2, 2))
    global_cov = np.atleast_2d(global_cov) + COV_EPS * np.eye(2)
    covs = np.repeat(global_cov[None, :, :], k, axis=0)
    weights = np.full(k, 1.0 / k)

    trace: list[float] = []
    converged = False
    prev_state = None
    for _ in range(max_iter):
        mixture = _mixture_from_arrays(weights, means, covs)
        logp = _component_log_densities(mixture, pts)
        row_lse = _logsumexp(logp, axis=1)
        ll = float(row_lse.sum())

        if trace and ll - trace[-1] < tol:
            converged = True
            if ll >= trace[-1]:
                trace.append(ll)
            else:
                # regularization can cost a sub-tol amount; keep the best iterate
                mixture = prev_state
            break
        trace.append(ll)
        prev_state = mixture

        # M-step
        resp = np.exp(logp - row_lse[:, None])
        nk = resp.sum(axis=0)
        nk = np.maximum(nk, 1e-300)
        weights = nk / n
        means = (resp.T @ pts) / nk[:, None]
        for j in range(k):
            diff = pts - means[j]
            cov = (resp[:, j][:, None] * diff).T @ diff / nk[j]
            covs[j] = 0.5 * (cov + cov.T) + COV_EPS * np.eye(2)

    ll_hat = trace[-1]
    p = 6 * k - 1
    report = FitReport(
        log_likelihood_trace=trace,
        iterations=len(trace) - 1,
        converged=converged,
        aic=2.0 * p - 2.0 * ll_hat,
        bic=p * math.log(n) - 2.0 * ll_hat,
    )
    return mixture, report


def select_k(
    data: PointSet,
    k_min: int,
    k_max: int,
    seed: int = 0,
    tol: float = DEFAULT_TOL,
    max_iter: int = DEFAULT_MAX_ITER,
) -> tuple[int, GaussianMixture, list[tuple[int, float, float]]]:
    """Fit every k in [k_min, k_max] and pick the lowest-BIC model.

    Returns (k_best, mixture, table) where the table rows are
    (k, aic, bic). AIC = 2p - 2 ln L and BIC = p ln N - 2 ln L with
    p = 6K - 1 free parameters in two dimensions. BIC decides; ties go to
    the smaller K.
    """
    if k_min < 1 or k_max < k_min:
        raise ValueError("need 1 <= k_min <= k_max")
    table = []
    best = None
    for k in range(k_min, k_max + 1):
        mixture, report = em_fit(data, k, seed=seed, tol=tol, max_iter=max_iter)
        table.append((k, report.aic, report.bic))
        if best is None or report.bic < best[2]:
            best = (k, mixture, report.bic)
    return best[0], best[1], table


def chi2_quantile_2dof(confidence: float) -> float:
    """Chi-square(2 dof) quantile; the CDF is 1 - exp(-x/2), inverted in
    closed form."""
    if not 0.0 < confidence < 1.0:
        raise ValueError("confidence must lie strictly between 0 and 1")
    return -2.0 * math.log1p(-confidence)


def sample_components(
    mixture: GaussianMixture, n: int, seed: int = 0
) -> tuple[np.ndarray, np.ndarray]:
    """Draw n points from the mixture; returns (points, component labels)."""
    rng = np.random.default_rng(seed)
    labels = rng.choice(mixture.k, size=n, p=mixture.weights())
    z = rng.standard_normal((n, 2))
    pts = np.empty((n, 2))
    for j, comp in enumerate(mixture.components):
        sel = labels == j
        if not sel.any():
            continue
        l11, l21, l22 = _chol2(comp.covariance)
        zj = z[sel]
        pts[sel, 0] = comp.mean[0] + l11 * zj[:, 0]
        pts[sel, 1] = comp.mean[1] + l21 * zj[:, 0] + l22 * zj[:, 1]
    return pts, labels


def sample_gated(
    mixture: GaussianMixture, n: int, confidence: float = 0.95, seed: int = 0
) -> PointSet:
    """Exactly n mixture draws whose squared Mahalanobis distance to their
    own component stays inside the chi-square confidence gate.

    Draws are made in whitened coordinates, so the gate is the exact
    per-component Mahalanobis test; rejected draws are simply redrawn.
    """
    if n < 0:
        raise ValueError("n must be non-negative")
    gate = chi2_quantile_2dof(confidence)
    rng = np.random.default_rng(seed)
    weights = mixture.weights()
    chols = [_chol2(c.covariance) for c in mixture.components]
    means = mixture.means()

    accepted = np.empty((n, 2))
    got = 0
    while got < n:
        batch = max(256, int((n - got) * 1.2))
        labels = rng.choice(mixture.k, size=batch, p=weights)
        z = rng.standard_normal((batch, 2))
        keep = (z * z).sum(axis=1) <= gate
        labels = labels[keep]
        z = z[keep]
        take = min(len(z), n - got)
        for i in range(take):
            l11, l21, l22 = chols[labels[i]]
            mu = means[labels[i]]
            accepted[got + i, 0] = mu[0] + l11 * z[i, 0]
            accepted[got + i, 1] = mu[1] + l21 * z[i, 0] + l22 * z[i, 1]
        got += take
    return PointSet(accepted)


def mixture_to_json(mixture: GaussianMixture) -> list[dict]:
    return [
        {
            "weight": c.weight,
            "mean": c.mean.tolist(),
            "cov": c.covariance.tolist(),
        }
        for c in mixture.components
    ]


def mixture_from_json(data: list[dict]) -> GaussianMixture:
    return GaussianMixture(
        [GaussianComponent(d["weight"], np.array(d["mean"]), np.array(d["cov"])) for d in data]
    )


def save_mixture(mixture: GaussianMixture, path) -> None:
    with open(path, "w", encoding="utf-8") as fh:
        json.dump(mixture_to_json(mixture), fh, sort_keys=True, indent=1)
        fh.write("\n")


def load_mixture(path) -> GaussianMixture:
    with open(path, "r", encoding="utf-8") as fh:
        return mixture_from_json(json.load(fh))


def report_to_json(report: FitReport) -> dict:
    return {
        "log_likelihood_trace": report.log_likelihood_trace,
        "iterations": report.iterations,
        "converged": report.converged,
        "aic": report.aic,
        "bic": report.bic,
    }
