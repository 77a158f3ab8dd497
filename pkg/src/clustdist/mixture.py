"""EM fitting of a multivariate normal mixture with full covariances.

``GaussianMixtureEM`` follows the scikit-learn estimator conventions
(``fit`` / ``predict`` / ``predict_proba`` / ``get_params``) so it composes
with the wider ecosystem; ``fit_gmm`` wraps it into a plain result record
for the simulation harness and CLI.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import List, Optional, Tuple

import numpy as np
from numpy.typing import NDArray
from scipy.special import logsumexp
from sklearn.base import BaseEstimator, ClusterMixin
from sklearn.utils.validation import check_array

from .distributions import GaussianParams
from .indices import scale_columns

__all__ = [
    "GaussianMixture",
    "FitResult",
    "GaussianMixtureEM",
    "fit_gmm",
    "information_criteria",
    "map_assign",
    "n_free_parameters",
]


@dataclass
class GaussianMixture:
    """A fitted K-component Gaussian mixture."""

    weights: NDArray
    components: List[GaussianParams]

    def __post_init__(self):
        self.weights = np.asarray(self.weights, dtype=float)
        if self.weights.ndim != 1 or len(self.components) != self.weights.size:
            raise ValueError("one weight per component required")
        if np.any(self.weights < 0) or abs(self.weights.sum() - 1.0) > 1e-9:
            raise ValueError("weights must be nonnegative and sum to 1")

    @property
    def n_components(self) -> int:
        return self.weights.size

    @property
    def dim(self) -> int:
        return self.components[0].dim

    def log_density(self, x: NDArray) -> NDArray:
        x = np.atleast_2d(np.asarray(x, dtype=float))
        joint = self._weighted_log_densities(x)
        return logsumexp(joint, axis=1)

    def _weighted_log_densities(self, x: NDArray) -> NDArray:
        return np.column_stack(
            [np.log(w) + c.log_density(x) if w > 0 else np.full(len(x), -np.inf)
             for w, c in zip(self.weights, self.components)]
        )


@dataclass
class FitResult:
    """EM fit output: model, criteria, assignments, and diagnostics."""

    model: GaussianMixture
    log_likelihood: float
    bic: float
    aic: float
    icl: float
    assignments: NDArray
    responsibilities: NDArray
    iterations: int
    converged: bool
    log_likelihood_history: NDArray


def n_free_parameters(k: int, d: int) -> int:
    """Free parameters of a K-component full-covariance Gaussian mixture."""
    return (k - 1) + k * d + k * d * (d + 1) // 2


def information_criteria(log_likelihood: float, responsibilities: NDArray,
                         n: int, k: int, d: int) -> Tuple[float, float, float]:
    """(BIC, AIC, ICL); smaller is better for all three.

    ICL adds twice the negative log of the MAP responsibility per point to
    the BIC, so ICL >= BIC always.
    """
    m = n_free_parameters(k, d)
    bic = -2.0 * log_likelihood + m * np.log(n)
    aic = -2.0 * log_likelihood + 2.0 * m
    labels = np.argmax(responsibilities, axis=1)
    map_resp = responsibilities[np.arange(len(labels)), labels]
    icl = bic - 2.0 * float(np.sum(np.log(np.maximum(map_resp, 1e-300))))
    return float(bic), float(aic), float(icl)


def map_assign(model: GaussianMixture, data: NDArray) -> Tuple[NDArray, NDArray]:
    """MAP labels (1-based) and responsibilities under a fitted mixture.

    Ties go to the lowest component index (argmax behavior).
    """
    data = np.atleast_2d(np.asarray(data, dtype=float))
    joint = model._weighted_log_densities(data)
    log_norm = logsumexp(joint, axis=1)
    resp = np.exp(joint - log_norm[:, None])
    labels = np.argmax(resp, axis=1) + 1
    return labels, resp


class GaussianMixtureEM(ClusterMixin, BaseEstimator):
    """Full-covariance Gaussian mixture fitted by EM.

    Initialization is k-means++ seeding on standardized data followed by one
    hard-assignment M-step; the best of ``n_init`` restarts (by final
    log-likelihood, ties by restart index) is kept.  Responsibilities are
    computed in log space throughout.

    Parameters
    ----------
    n_components : number of mixture components.
    tol : relative log-likelihood change declaring convergence.
    max_iter : EM iteration cap per restart.
    n_init : number of random restarts.
    reg_covar : ridge factor (times tr(S)/d) added when a covariance update
        is not positive definite.
    random_state : seed for all restarts.
    """

    def __init__(self, n_components: int = 2, tol: float = 1e-8,
                 max_iter: int = 500, n_init: int = 10,
                 reg_covar: float = 1e-6, random_state: Optional[int] = None):
        self.n_components = n_components
        self.tol = tol
        self.max_iter = max_iter
        self.n_init = n_init
        self.reg_covar = reg_covar
        self.random_state = random_state

    def fit(self, X, y=None):
        X = check_array(X, dtype=np.float64, ensure_min_samples=2)
        n, d = X.shape
        k = self.n_components
        if k < 1:
            raise ValueError("n_components must be >= 1")
        if n <= k * d:
            raise ValueError(f"need more than n_components * n_features = {k * d} samples, got {n}")
        seq = np.random.SeedSequence(self.random_state)
        best = None
        n_degenerate = 0
        for child in seq.spawn(self.n_init):
            rng = np.random.Generator(np.random.PCG64(child))
            try:
                run = self._fit_once(X, rng)
            except _DegenerateFit:
                n_degenerate += 1
                continue
            if best is None or run["log_likelihood"] > best["log_likelihood"]:
                best = run
        if best is None:
            raise RuntimeError(f"all {self.n_init} restarts degenerated")
        self.n_degenerate_restarts_ = n_degenerate
        self.weights_ = best["weights"]
        self.means_ = best["means"]
        self.covariances_ = best["covariances"]
        self.converged_ = best["converged"]
        self.n_iter_ = best["n_iter"]
        self.log_likelihood_ = best["log_likelihood"]
        self.log_likelihood_history_ = best["history"]
        self.labels_ = self.predict(X)
        return self

    def predict(self, X) -> NDArray:
        """MAP component labels in {1..K}."""
        labels, _ = map_assign(self.mixture_, X)
        return labels

    def predict_proba(self, X) -> NDArray:
        _, resp = map_assign(self.mixture_, X)
        return resp

    def score(self, X, y=None) -> float:
        """Mean per-sample log-likelihood."""
        return float(self.mixture_.log_density(X).mean())

    @property
    def mixture_(self) -> GaussianMixture:
        return GaussianMixture(
            weights=self.weights_,
            components=[GaussianParams(m, c) for m, c in zip(self.means_, self.covariances_)],
        )

    # internal -----------------------------------------------------------

    def _fit_once(self, X: NDArray, rng: np.random.Generator) -> dict:
        weights, params = self._initialize(X, rng)
        history = []
        prev_ll = -np.inf
        converged = False
        n_iter = 0
        for n_iter in range(1, self.max_iter + 1):
            log_resp, ll = self._e_step(X, weights, params)
            history.append(ll)
            if np.isfinite(prev_ll) and abs(ll - prev_ll) <= self.tol * abs(ll):
                converged = True
                break
            prev_ll = ll
            weights, params = self._m_step(X, np.exp(log_resp))
        _, ll = self._e_step(X, weights, params)
        return {
            "weights": weights,
            "means": np.array([p.mean for p in params]),
            "covariances": np.array([p.covariance for p in params]),
            "log_likelihood": ll, "history": np.asarray(history),
            "converged": converged, "n_iter": n_iter,
        }

    def _initialize(self, X, rng):
        k = self.n_components
        scaled = scale_columns(X) if X.shape[1] > 0 else X
        centers = _kmeans_pp_centers(scaled, k, rng)
        dists = ((scaled[:, None, :] - centers[None, :, :]) ** 2).sum(axis=2)
        hard = np.argmin(dists, axis=1)
        # Hard-assignment M-step on the raw data.
        resp = np.zeros((X.shape[0], k))
        for j in range(k):
            mask = hard == j
            if not mask.any():
                mask = np.zeros(X.shape[0], dtype=bool)
                mask[rng.integers(X.shape[0])] = True
            resp[mask, j] = 1.0
        resp /= resp.sum(axis=1, keepdims=True)
        return self._m_step(X, resp)

    def _e_step(self, X, weights, params):
        joint = np.empty((X.shape[0], len(weights)))
        for j, p in enumerate(params):
            joint[:, j] = np.log(weights[j]) + p.log_density(X)
        norm = logsumexp(joint, axis=1)
        return joint - norm[:, None], float(norm.sum())

    def _m_step(self, X, resp):
        n, d = X.shape
        k = resp.shape[1]
        nk = resp.sum(axis=0)
        if np.any(nk < 1e-10):
            raise _DegenerateFit("empty component")
        weights = nk / n
        means = (resp.T @ X) / nk[:, None]
        params = []
        for j in range(k):
            centered = X - means[j]
            cov = (resp[:, j][:, None] * centered).T @ centered / nk[j]
            params.append(self._make_component(means[j], cov))
        return weights, params

    def _make_component(self, mean, cov):
        d = cov.shape[0]
        cov = 0.5 * (cov + cov.T)
        try:
            return GaussianParams(mean, cov)
        except ValueError:
            ridge = self.reg_covar * max(np.trace(cov), 1e-12) / d
            try:
                return GaussianParams(mean, cov + ridge * np.eye(d))
            except ValueError as exc:
                raise _DegenerateFit("covariance collapse") from exc


class _DegenerateFit(RuntimeError):
    """A restart collapsed (empty component or singular covariance)."""


def _kmeans_pp_centers(X: NDArray, k: int, rng: np.random.Generator) -> NDArray:
    """k-means++ seeding: spread initial centers by squared-distance sampling."""
    n = X.shape[0]
    centers = np.empty((k, X.shape[1]))
    centers[0] = X[rng.integers(n)]
    closest = ((X - centers[0]) ** 2).sum(axis=1)
    for j in range(1, k):
        total = closest.sum()
        if total <= 0:
            centers[j] = X[rng.integers(n)]
        else:
            centers[j] = X[rng.choice(n, p=closest / total)]
        closest = np.minimum(closest, ((X - centers[j]) ** 2).sum(axis=1))
    return centers


def fit_gmm(data: NDArray, k: int, tol: float = 1e-8, max_iter: int = 500,
            n_init: int = 10, seed: Optional[int] = None) -> FitResult:
    """Fit a K-component full-covariance Gaussian mixture and package the result."""
    data = np.atleast_2d(np.asarray(data, dtype=float))
    est = GaussianMixtureEM(n_components=k, tol=tol, max_iter=max_iter,
                            n_init=n_init, random_state=seed).fit(data)
    model = est.mixture_
    labels, resp = map_assign(model, data)
    n, d = data.shape
    bic, aic, icl = information_criteria(est.log_likelihood_, resp, n, k, d)
    return FitResult(
        model=model,
        log_likelihood=est.log_likelihood_,
        bic=bic, aic=aic, icl=icl,
        assignments=labels,
        responsibilities=resp,
        iterations=est.n_iter_,
        converged=est.converged_,
        log_likelihood_history=est.log_likelihood_history_,
    )
