"""Propensity-score utility: can a classifier tell original from synthetic rows?

The two tables are stacked with a membership label, a main-effects logistic
regression is fit by iteratively reweighted least squares, and the utility
score is the mean squared deviation of the fitted probabilities from 1/2.
A score near 0 means the classifier cannot separate the tables (high
utility); the algebraic maximum 1/4 means perfect separation.

The solver maximizes a ridge-stabilized binomial log-likelihood (penalty
1e-8 on all coefficients including the intercept); the tiny ridge keeps the
optimum finite when small synthetic samples are perfectly separable.
Continuous predictors are standardized for conditioning, which affects the
fitted probabilities only through the ridge term.
"""

from __future__ import annotations

import json
import warnings
from dataclasses import dataclass
from pathlib import Path
from typing import Sequence

import numpy as np
from scipy.special import expit

from ._parallel import pmap
from .dataset import Dataset, aligned_codes, check_compatible


@dataclass
class PropensityFit:
    coefficients: np.ndarray
    p_hat: np.ndarray
    converged: bool
    iterations: int


@dataclass
class UtilityResult:
    """One propensity utility value per synthetic dataset."""

    per_dataset: np.ndarray

    @property
    def u_p(self) -> float:
        """Average utility across the released datasets."""
        return float(np.mean(self.per_dataset))

    def to_json_dict(self) -> dict:
        return {"u_p_per_dataset": self.per_dataset.tolist(), "u_p_mean": self.u_p}

    def write_json(self, path: str | Path) -> None:
        Path(path).write_text(json.dumps(self.to_json_dict(), indent=1), encoding="utf-8")

    def write_csv(self, path: str | Path) -> None:
        with open(path, "w", encoding="utf-8") as fh:
            fh.write("dataset,u_p\n")
            for k, v in enumerate(self.per_dataset):
                fh.write(f"syn_{k + 1:03d},{float(v)!r}\n")


def design_matrix(orig: Dataset, syn: Dataset) -> tuple[np.ndarray, np.ndarray]:
    """Stacked main-effects design: original rows first, then synthetic.

    Labels are 0 for original rows and 1 for synthetic rows.  Continuous
    columns are standardized by the pooled mean/sd; categorical columns are
    dummy-coded dropping the first level; an intercept column is prepended.
    Columns that are constant after pooling are dropped with a warning.
    """
    check_compatible(orig, syn)
    n = orig.n_rows
    cols: list[np.ndarray] = [np.ones(2 * n)]
    for spec in orig.schema.variables:
        if spec.is_continuous:
            pooled = np.concatenate([orig.column(spec.name), syn.column(spec.name)])
            sd = pooled.std(ddof=1) if pooled.size > 1 else 0.0
            if sd == 0.0:
                warnings.warn(f"dropping constant column {spec.name!r} from propensity design")
                continue
            cols.append((pooled - pooled.mean()) / sd)
        else:
            codes = np.concatenate([orig.column(spec.name), aligned_codes(orig, syn, spec.name)])
            for level_idx in range(1, len(spec.levels)):
                dummy = (codes == level_idx).astype(np.float64)
                if dummy.min() == dummy.max():
                    warnings.warn(
                        f"dropping constant dummy {spec.name!r}={spec.levels[level_idx]!r} from propensity design"
                    )
                    continue
                cols.append(dummy)
    X = np.column_stack(cols)
    y = np.concatenate([np.zeros(n), np.ones(n)])
    return X, y


def _penalized_loglik(X: np.ndarray, y: np.ndarray, beta: np.ndarray, ridge: float) -> float:
    eta = X @ beta
    return float(np.sum(y * eta - np.logaddexp(0.0, eta)) - 0.5 * ridge * beta @ beta)


def fit_logistic(
    X: np.ndarray,
    y: np.ndarray,
    tol: float = 1e-8,
    max_iter: int = 100,
    ridge: float = 1e-8,
) -> PropensityFit:
    """Ridge-stabilized logistic regression by IRLS with step halving.

    Stops when the largest coefficient change drops below ``tol`` or after
    ``max_iter`` iterations (converged flag set accordingly).
    """
    X = np.asarray(X, dtype=np.float64)
    y = np.asarray(y, dtype=np.float64)
    if X.ndim != 2 or y.shape != (X.shape[0],):
        raise ValueError("X must be 2-D with one label per row")
    if not np.all(np.isfinite(X)):
        raise ValueError("design matrix contains non-finite entries")
    if not np.all((y == 0.0) | (y == 1.0)):
        raise ValueError("labels must be binary 0/1")

    n, p = X.shape
    beta = np.zeros(p)
    loglik = _penalized_loglik(X, y, beta, ridge)
    converged = False
    iterations = 0
    for iterations in range(1, max_iter + 1):
        prob = expit(X @ beta)
        weights = prob * (1.0 - prob)
        hessian = X.T @ (X * weights[:, None]) + ridge * np.eye(p)
        gradient = X.T @ (y - prob) - ridge * beta
        step = np.linalg.solve(hessian, gradient)
        # step halving keeps the penalized log-likelihood nondecreasing,
        # which matters under (near-)separation where full Newton overshoots
        candidate = beta + step
        cand_ll = _penalized_loglik(X, y, candidate, ridge)
        halvings = 0
        while cand_ll < loglik - 1e-10 * (1.0 + abs(loglik)) and halvings < 30:
            step *= 0.5
            candidate = beta + step
            cand_ll = _penalized_loglik(X, y, candidate, ridge)
            halvings += 1
        beta = candidate
        loglik = cand_ll
        if np.max(np.abs(step)) < tol:
            converged = True
            break
    p_hat = np.clip(expit(X @ beta), 1e-12, 1.0 - 1e-12)
    return PropensityFit(beta, p_hat, converged, iterations)


def utility_from_probs(p_hat: np.ndarray) -> float:
    """Mean squared deviation of membership probabilities from 1/2."""
    return float(np.mean((p_hat - 0.5) ** 2))


def propensity_utility(orig: Dataset, syn_list: Sequence[Dataset], threads: int = 1) -> UtilityResult:
    """Propensity utility for each synthetic dataset against the original."""
    if not syn_list:
        raise ValueError("syn_list must contain at least one synthetic dataset")

    def one(syn: Dataset) -> float:
        X, y = design_matrix(orig, syn)
        fit = fit_logistic(X, y)
        return utility_from_probs(fit.p_hat)

    return UtilityResult(np.array(pmap(one, syn_list, threads)))
