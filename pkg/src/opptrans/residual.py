"""Probabilistic residual model of the data-rate predictor.

A Gaussian process over (predicted rate -> measured rate) pairs with a
squared-exponential kernel.  The simulation engine samples a virtual ground
truth achieved rate from the posterior at each executed transmission.
"""

from __future__ import annotations

import math

import numpy as np
from scipy.linalg import cho_factor, cho_solve, LinAlgError


class ResidualModelError(RuntimeError):
    pass


LENGTH_SCALE_GRID = (0.5, 1.0, 2.0, 4.0, 8.0)       # MBit/s scale
SIGNAL_STD_GRID = (0.1, 1.0, 10.0)
NOISE_STD_GRID = (0.01, 0.1, 1.0)


class ResidualRateModel:
    """GP posterior over measured rate given predicted rate (1-D input)."""

    def __init__(self, length_scale=1.0, sigma_f=1.0, sigma_n=0.1):
        if length_scale <= 0 or sigma_f <= 0 or sigma_n < 0:
            raise ValueError("invalid hyperparameters")
        self.length_scale = length_scale
        self.sigma_f = sigma_f
        self.sigma_n = sigma_n
        self.x_ = None
        self.y_ = None
        self.prior_mean_ = 0.0
        self._chol = None
        self._alpha = None

    def get_params(self, deep=True):
        return {"length_scale": self.length_scale, "sigma_f": self.sigma_f,
                "sigma_n": self.sigma_n}

    def _kernel(self, a, b):
        d = np.subtract.outer(a, b) / self.length_scale
        return self.sigma_f ** 2 * np.exp(-0.5 * d ** 2)

    def fit(self, x, y):
        x = np.asarray(x, dtype=float)
        y = np.asarray(y, dtype=float)
        if x.size < 2:
            raise ValueError("need at least 2 training pairs")
        if not (np.all(np.isfinite(x)) and np.all(np.isfinite(y))):
            raise ValueError("non-finite training inputs")
        self.x_ = x
        self.y_ = y
        self.prior_mean_ = float(np.mean(y))
        K = self._kernel(x, x)
        K[np.diag_indices_from(K)] += self.sigma_n ** 2
        try:
            self._chol = cho_factor(K, lower=True)
        except LinAlgError as exc:
            raise ResidualModelError(
                f"kernel factorization failed (condition estimate "
                f"{np.linalg.cond(K):.3e}): {exc}")
        self._alpha = cho_solve(self._chol, y - self.prior_mean_)
        return self

    def posterior(self, s_tilde):
        """(mean, variance) of the posterior at scalar or array inputs."""
        if self._chol is None:
            raise RuntimeError("residual model is not fitted")
        q = np.atleast_1d(np.asarray(s_tilde, dtype=float))
        k_star = self._kernel(q, self.x_)
        mean = self.prior_mean_ + k_star @ self._alpha
        v = cho_solve(self._chol, k_star.T)
        var = np.maximum(self.sigma_f ** 2 - np.sum(k_star * v.T, axis=1),
                         0.0)
        if np.isscalar(s_tilde):
            return float(mean[0]), float(var[0])
        return mean, var

    def log_marginal_likelihood(self):
        if self._chol is None:
            raise RuntimeError("residual model is not fitted")
        resid = self.y_ - self.prior_mean_
        n = self.y_.size
        return float(-0.5 * resid @ self._alpha
                     - np.sum(np.log(np.diag(self._chol[0])))
                     - 0.5 * n * math.log(2.0 * math.pi))


def sample_virtual_ground_truth(model, s_tilde, rng, max_retries=8):
    """Draw an achieved rate from the posterior, truncated below at 0."""
    if not math.isfinite(s_tilde):
        raise ValueError("non-finite predicted rate")
    mean, var = model.posterior(float(s_tilde))
    if var <= 0.0:
        return max(mean, 0.0)
    std = math.sqrt(var)
    for _ in range(max_retries):
        draw = rng.normal(mean, std)
        if draw >= 0.0:
            return draw
    return 0.0


def fit_residual_model(predicted, measured, length_scale=None, sigma_f=None,
                       sigma_n=None, max_pairs=2000, seed=0):
    """Fit the residual GP; missing hyperparameters come from a small grid
    maximizing the log marginal likelihood.  Training pairs are subsampled
    (seeded) to bound the cubic factorization cost.
    """
    predicted = np.asarray(predicted, dtype=float)
    measured = np.asarray(measured, dtype=float)
    if predicted.size > max_pairs:
        rng = np.random.default_rng(seed)
        idx = np.sort(rng.choice(predicted.size, size=max_pairs,
                                 replace=False))
        predicted, measured = predicted[idx], measured[idx]
    ls_grid = LENGTH_SCALE_GRID if length_scale is None else (length_scale,)
    sf_grid = SIGNAL_STD_GRID if sigma_f is None else (sigma_f,)
    sn_grid = NOISE_STD_GRID if sigma_n is None else (sigma_n,)
    best, best_lml = None, -math.inf
    for ls in ls_grid:
        for sf in sf_grid:
            for sn in sn_grid:
                try:
                    model = ResidualRateModel(
                        length_scale=ls, sigma_f=sf, sigma_n=sn
                    ).fit(predicted, measured)
                except ResidualModelError:
                    continue
                lml = model.log_marginal_likelihood()
                if lml > best_lml:
                    best, best_lml = model, lml
    if best is None:
        raise ResidualModelError("no hyperparameter combination factorized")
    return best
