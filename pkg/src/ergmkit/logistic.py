"""Unpenalized logistic regression by iteratively reweighted least squares.

Shared by the pseudo-likelihood fitter (dyads on change statistics) and
the propensity model (missingness on covariates). Convergence is on the
score: max |X'(y - mu)| <= tol. The reported covariance is the inverse
observed information X' W X at the optimum.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .errors import NonConvergence, RankDeficient, Separation

_ETA_CLIP = 35.0  # sigmoid saturates to machine precision well before this


@dataclass(frozen=True)
class LogisticFit:
    beta: np.ndarray
    covariance: np.ndarray
    iterations: int
    score_norm: float


def sigmoid(eta: np.ndarray) -> np.ndarray:
    out = np.empty_like(eta, dtype=np.float64)
    pos = eta >= 0
    out[pos] = 1.0 / (1.0 + np.exp(-eta[pos]))
    ez = np.exp(eta[~pos])
    out[~pos] = ez / (1.0 + ez)
    return out


def _check_rank(X: np.ndarray, names: list[str]) -> None:
    if X.shape[0] < X.shape[1]:
        raise RankDeficient("fewer observations than model terms")
    _, s, vt = np.linalg.svd(X, full_matrices=False)
    tol = s[0] * max(X.shape) * np.finfo(float).eps if len(s) else 0.0
    deficient = s <= tol
    if deficient.any():
        involved = sorted(
            {
                names[k]
                for row in vt[deficient]
                for k in np.flatnonzero(np.abs(row) > 1e-8)
            }
        )
        raise RankDeficient(f"collinear terms: {involved}")


def _check_separation(X: np.ndarray, y: np.ndarray, names: list[str]) -> None:
    ones = y == 1
    if ones.all() or (~ones).all():
        label = "ties" if ones.all() else "non-ties"
        raise Separation(f"every dyad has the same outcome ({label}); no finite estimate")
    for k in range(X.shape[1]):
        col = X[:, k]
        hi0, lo0 = col[~ones].max(), col[~ones].min()
        hi1, lo1 = col[ones].max(), col[ones].min()
        # complete one-column separation; quasi-complete cases are caught
        # by the divergence guard inside the IRLS loop
        if hi0 < lo1 or hi1 < lo0:
            raise Separation(f"term {names[k]!r} perfectly predicts tie status")


def fit_logistic(
    X: np.ndarray,
    y: np.ndarray,
    names: list[str] | None = None,
    tol: float = 1e-8,
    max_iter: int = 50,
) -> LogisticFit:
    X = np.asarray(X, dtype=np.float64)
    y = np.asarray(y, dtype=np.float64)
    names = names or [f"x{k}" for k in range(X.shape[1])]
    _check_rank(X, names)
    _check_separation(X, y, names)
    beta = np.zeros(X.shape[1])
    score_norm = np.inf
    converged = False
    for it in range(1, max_iter + 1):
        eta = np.clip(X @ beta, -_ETA_CLIP, _ETA_CLIP)
        mu = sigmoid(eta)
        score = X.T @ (y - mu)
        score_norm = float(np.max(np.abs(score)))
        w = mu * (1.0 - mu)
        info = X.T @ (X * w[:, None])
        if converged:
            return LogisticFit(beta, np.linalg.inv(info), it, score_norm)
        try:
            step = np.linalg.solve(info, score)
        except np.linalg.LinAlgError:
            raise Separation(
                "information matrix singular during IRLS; estimates diverging"
            ) from None
        beta = beta + step
        if float(np.max(np.abs(beta))) > 30.0:
            # coefficients this large mean fitted probabilities are 0/1 to
            # machine precision: quasi-separation the 1D screen cannot see
            worst = names[int(np.argmax(np.abs(beta)))]
            raise Separation(f"estimates diverging; term {worst!r} separates the data")
        # Newton is quadratic, so one extra step past the criterion leaves
        # the score at machine precision before reporting
        converged = score_norm <= tol
    raise NonConvergence(f"IRLS did not converge in {max_iter} iterations")
