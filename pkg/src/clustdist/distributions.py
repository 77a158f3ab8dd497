"""Cluster component distributions: multivariate normal and generalized hyperbolic.

The generalized hyperbolic (GH) law is represented as a normal mean-variance
mixture

    X = mu + W * skew + sqrt(W) * L z,    z ~ N(0, I),  Sigma = L L',

where the mixing weight W follows a Generalized Inverse Gaussian law with
index ``index`` and chi = psi = ``concentration``.  Density and sampler are
built from the same representation, so they are mutually consistent by
construction.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Union

import numpy as np
from numpy.typing import NDArray
from scipy import special, stats
from scipy.linalg import solve_triangular

__all__ = [
    "GaussianParams",
    "GHParams",
    "ClusterModel",
    "bessel_k",
    "log_bessel_k",
    "gig_sample",
    "gig_mean",
    "spd_cholesky",
]

_LOG_2PI = np.log(2.0 * np.pi)


def spd_cholesky(mat: NDArray, name: str = "matrix") -> NDArray:
    """Lower Cholesky factor of a symmetric positive definite matrix.

    Raises ``ValueError`` when the matrix is not symmetric or the
    factorization fails; no silent regularization happens here.
    """
    mat = np.asarray(mat, dtype=float)
    if mat.ndim != 2 or mat.shape[0] != mat.shape[1]:
        raise ValueError(f"{name} must be square, got shape {mat.shape}")
    if not np.allclose(mat, mat.T, rtol=1e-10, atol=1e-12):
        raise ValueError(f"{name} must be symmetric")
    try:
        return np.linalg.cholesky(mat)
    except np.linalg.LinAlgError as exc:
        raise ValueError(f"{name} is not positive definite") from exc


def bessel_k(order, arg):
    """Modified Bessel function of the second kind K_order(arg), arg > 0."""
    arg = np.asarray(arg, dtype=float)
    if np.any(arg <= 0):
        raise ValueError("bessel_k requires a strictly positive argument")
    return special.kv(order, arg)


def log_bessel_k(order, arg):
    """log K_order(arg) computed via the exponentially scaled kve.

    Stays finite for arguments far beyond the overflow point of kv itself
    (the GH density needs arguments up to ~1e6 in the Gaussian limit).  The
    tiny-argument / large-order corner where even kve overflows falls back
    to arbitrary-precision evaluation.
    """
    arg = np.asarray(arg, dtype=float)
    if np.any(arg <= 0):
        raise ValueError("log_bessel_k requires a strictly positive argument")
    with np.errstate(over="ignore"):
        out = np.log(special.kve(order, arg)) - arg
    if np.all(np.isfinite(out)):
        return out
    order_b = np.broadcast_to(np.asarray(order, dtype=float), out.shape if out.ndim else ())
    if out.ndim == 0:
        return np.float64(_log_k_mpmath(float(order_b), float(arg)))
    out = np.array(out)
    for idx in zip(*np.nonzero(~np.isfinite(out))):
        out[idx] = _log_k_mpmath(float(order_b[idx]), float(np.broadcast_to(arg, out.shape)[idx]))
    return out


def _log_k_mpmath(order: float, arg: float) -> float:
    import mpmath

    return float(mpmath.log(mpmath.besselk(order, arg)))


def gig_sample(index: float, chi: float, psi: float,
               rng: np.random.Generator, n: int) -> NDArray:
    """Draw n variates from GIG(index, chi, psi).

    Density proportional to x^(index-1) exp(-(chi/x + psi*x)/2) on x > 0.
    """
    if chi <= 0 or psi <= 0:
        raise ValueError("gig_sample requires chi > 0 and psi > 0")
    scale = np.sqrt(chi / psi)
    b = np.sqrt(chi * psi)
    return stats.geninvgauss.rvs(index, b, scale=scale, size=n, random_state=rng)


def gig_mean(index: float, chi: float, psi: float) -> float:
    """Analytic mean of GIG(index, chi, psi)."""
    w = np.sqrt(chi * psi)
    # kve ratio: the exp(w) scaling cancels.
    return float(np.sqrt(chi / psi) * special.kve(index + 1.0, w) / special.kve(index, w))


@dataclass
class GaussianParams:
    """Mean vector and SPD covariance of one multivariate normal cluster."""

    mean: NDArray
    covariance: NDArray
    _chol: NDArray = field(init=False, repr=False, compare=False)
    _log_det: float = field(init=False, repr=False, compare=False)

    def __post_init__(self):
        self.mean = np.atleast_1d(np.asarray(self.mean, dtype=float))
        self.covariance = np.asarray(self.covariance, dtype=float)
        if self.mean.ndim != 1:
            raise ValueError("mean must be a vector")
        if self.covariance.shape != (self.dim, self.dim):
            raise ValueError("covariance shape does not match mean length")
        self._chol = spd_cholesky(self.covariance, "covariance")
        self._log_det = 2.0 * float(np.sum(np.log(np.diag(self._chol))))

    @property
    def dim(self) -> int:
        return self.mean.shape[0]

    def log_density(self, x: NDArray) -> NDArray:
        """Log N_d(x; mean, covariance), vectorized over rows of x."""
        x = np.asarray(x, dtype=float)
        single = x.ndim == 1
        pts = np.atleast_2d(x)
        if pts.shape[1] != self.dim:
            raise ValueError(f"expected points of dimension {self.dim}, got {pts.shape[1]}")
        y = solve_triangular(self._chol, (pts - self.mean).T, lower=True)
        q = np.sum(y * y, axis=0)
        out = -0.5 * (self.dim * _LOG_2PI + self._log_det + q)
        return out[0] if single else out

    def sample(self, rng: np.random.Generator, n: int) -> NDArray:
        if n < 1:
            raise ValueError("n must be >= 1")
        z = rng.standard_normal((n, self.dim))
        return self.mean + z @ self._chol.T


@dataclass
class GHParams:
    """Parameters of one multivariate generalized hyperbolic cluster.

    ``index`` is the GIG index (lambda) and ``concentration`` (omega > 0) is
    the common chi = psi parameter of the mixing GIG law.
    """

    location: NDArray
    scale: NDArray
    skewness: NDArray
    index: float
    concentration: float
    _chol: NDArray = field(init=False, repr=False, compare=False)
    _log_det: float = field(init=False, repr=False, compare=False)
    _scale_inv_skew: NDArray = field(init=False, repr=False, compare=False)
    _skew_quad: float = field(init=False, repr=False, compare=False)

    def __post_init__(self):
        self.location = np.atleast_1d(np.asarray(self.location, dtype=float))
        self.scale = np.asarray(self.scale, dtype=float)
        self.skewness = np.atleast_1d(np.asarray(self.skewness, dtype=float))
        self.index = float(self.index)
        self.concentration = float(self.concentration)
        if self.concentration <= 0:
            raise ValueError("concentration must be strictly positive")
        d = self.dim
        if self.skewness.shape != (d,):
            raise ValueError("skewness length must match location length")
        if self.scale.shape != (d, d):
            raise ValueError("scale shape does not match location length")
        self._chol = spd_cholesky(self.scale, "scale")
        self._log_det = 2.0 * float(np.sum(np.log(np.diag(self._chol))))
        half = solve_triangular(self._chol, self.skewness, lower=True)
        self._scale_inv_skew = solve_triangular(self._chol.T, half, lower=False)
        self._skew_quad = float(half @ half)

    @property
    def dim(self) -> int:
        return self.location.shape[0]

    def mixing_mean(self) -> float:
        """E[W] of the GIG mixing weight."""
        return gig_mean(self.index, self.concentration, self.concentration)

    def mean(self) -> NDArray:
        """E[X] = location + E[W] * skewness."""
        return self.location + self.mixing_mean() * self.skewness

    def log_density(self, x: NDArray) -> NDArray:
        """Log GH density, evaluated entirely in log scale.

        With omega = concentration, lam = index, q(x) the squared Mahalanobis
        form under ``scale`` and a = skew' Sigma^-1 skew:

            log f = -d/2 log 2pi - 1/2 log|Sigma| + (x-mu)' Sigma^-1 skew
                    + (lam - d/2)/2 * [log(omega + q) - log(omega + a)]
                    + log K_{lam-d/2}(sqrt((omega+q)(omega+a))) - log K_lam(omega)
        """
        x = np.asarray(x, dtype=float)
        single = x.ndim == 1
        pts = np.atleast_2d(x)
        if pts.shape[1] != self.dim:
            raise ValueError(f"expected points of dimension {self.dim}, got {pts.shape[1]}")
        centered = pts - self.location
        y = solve_triangular(self._chol, centered.T, lower=True)
        q = np.sum(y * y, axis=0)
        lin = centered @ self._scale_inv_skew
        omega = self.concentration
        lam = self.index
        p = lam - self.dim / 2.0
        c1 = omega + q
        c2 = omega + self._skew_quad
        arg = np.sqrt(c1 * c2)
        out = (
            -0.5 * (self.dim * _LOG_2PI + self._log_det)
            + lin
            + 0.5 * p * (np.log(c1) - np.log(c2))
            + log_bessel_k(p, arg)
            - log_bessel_k(lam, omega)
        )
        return out[0] if single else out

    def sample(self, rng: np.random.Generator, n: int) -> NDArray:
        if n < 1:
            raise ValueError("n must be >= 1")
        w = gig_sample(self.index, self.concentration, self.concentration, rng, n)
        z = rng.standard_normal((n, self.dim))
        return (
            self.location
            + w[:, None] * self.skewness
            + np.sqrt(w)[:, None] * (z @ self._chol.T)
        )


ClusterModel = Union[GaussianParams, GHParams]
