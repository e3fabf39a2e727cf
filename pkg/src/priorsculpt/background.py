"""Heavy-tailed elliptical background model.

The clutter model is a multivariate Student-t law parameterized directly by
its covariance matrix: for nu > 2 the density at a d-vector x is

    P(x) = c * [nu - 2 + (x - mu)' R^{-1} (x - mu)]^{-(nu + d)/2}

With this scaling R is the exact covariance of the samples (not the scale
matrix of the textbook t parameterization), so detectors calibrated against
R see the data's true second moment.  nu -> inf recovers the Gaussian limit;
small nu gives the fat tails that make quadratic detectors misbehave.
"""
from __future__ import annotations

import numpy as np
from scipy.linalg import solve_triangular
from scipy.special import gammaln

from ._validation import as_float_array, check_index, check_rng, check_scalar

__all__ = ["TBackground"]


class TBackground:
    """Multivariate t background with covariance parameterization.

    Args:
        nu: tail index, must be > 2 so the covariance exists and equals R.
        mu: length-d mean vector.
        cov: d-by-d symmetric positive-definite covariance matrix R.

    Attributes:
        nu, mu, cov: validated copies of the inputs.
        dim: dimension d.
        chol: lower-triangular Cholesky factor of cov.
        log_c: log normalizing constant of the density.

    Raises:
        ValueError: if nu <= 2, shapes disagree, or cov is not symmetric
            positive definite.
    """

    def __init__(self, nu, mu, cov):
        self.nu = check_scalar(nu, "nu", minimum=2.0, min_inclusive=False)
        mu = as_float_array(mu, "mu", ndim=1)
        d = mu.shape[0]
        if d < 1:
            raise ValueError("mu must have at least one component")
        cov = as_float_array(cov, "cov", shape=(d, d))
        if not np.allclose(cov, cov.T, rtol=0.0, atol=1e-12):
            raise ValueError("cov must be symmetric")
        try:
            chol = np.linalg.cholesky(cov)
        except np.linalg.LinAlgError as exc:
            raise ValueError("cov must be positive definite") from exc
        self.mu = mu
        self.cov = cov
        self.dim = d
        self.chol = chol
        # log det R from the Cholesky diagonal.
        logdet = 2.0 * np.sum(np.log(np.diag(chol)))
        nu = self.nu
        self.log_c = (gammaln((nu + d) / 2.0) - gammaln(nu / 2.0)
                      + (nu / 2.0) * np.log(nu - 2.0)
                      - (d / 2.0) * np.log(np.pi) - 0.5 * logdet)

    @classmethod
    def standard(cls, nu, dim):
        """Zero-mean, identity-covariance background in `dim` dimensions."""
        dim = check_index(dim, "dim", minimum=1)
        return cls(nu, np.zeros(dim), np.eye(dim))

    def whiten(self, x):
        """Map pixels to whitened deviations y = chol^{-1} (x - mu).

        Args:
            x: (n, d) array of pixels, or a single length-d vector.

        Returns:
            Array of whitened deviations with x's shape.
        """
        x = np.asarray(x, dtype=np.float64)
        single = x.ndim == 1
        pts = np.atleast_2d(x)
        if pts.shape[1] != self.dim:
            raise ValueError(f"x must have {self.dim} columns, got {pts.shape[1]}")
        y = solve_triangular(self.chol, (pts - self.mu).T, lower=True).T
        return y[0] if single else y

    def mahalanobis(self, x):
        """Quadratic form (x - mu)' R^{-1} (x - mu), per row."""
        y = self.whiten(x)
        if y.ndim == 1:
            return float(y @ y)
        return np.einsum("ij,ij->i", y, y)

    def log_pdf(self, x):
        """Log density at each row of x.

        Args:
            x: (n, d) array, or a single length-d vector.

        Returns:
            (n,) array of log densities, or a scalar for vector input.
        """
        q = self.mahalanobis(x)
        out = self.log_c - 0.5 * (self.nu + self.dim) * np.log(self.nu - 2.0 + q)
        return float(out) if np.isscalar(q) else out

    def pdf(self, x):
        return np.exp(self.log_pdf(x))

    def sample(self, n, rng):
        """Draw n pixels.

        Uses the scale-mixture construction x = mu + chol g sqrt((nu-2)/u)
        with g standard normal and u chi-square(nu); the (nu-2)/u scaling is
        what makes cov the exact covariance.  The draw order (all gaussians,
        then the chi-squares) is fixed: it is part of the reproducibility
        contract for seeded runs.

        Args:
            n: number of rows.
            rng: numpy Generator, or an int seed, or None.

        Returns:
            (n, d) array of samples.
        """
        n = check_index(n, "n", minimum=1)
        rng = check_rng(rng)
        g = rng.standard_normal((n, self.dim))
        u = rng.chisquare(self.nu, n)
        return self.mu + (g @ self.chol.T) * np.sqrt((self.nu - 2.0) / u)[:, None]

    def __repr__(self):
        return f"TBackground(nu={self.nu}, dim={self.dim})"
