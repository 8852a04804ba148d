"""Robust quadratic and linear discriminant analysis.

Each group gets its own reweighted robust location/scatter; membership
probabilities count only the observations those fits kept, so gross outliers
inside a group neither tilt its ellipsoid nor inflate its prior.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .dataset import Dataset, validate
from .exceptions import (
    GroupTooSmallError,
    LengthMismatchError,
    SingularGroupScatterError,
)
from .mcd import COND_MAX, McdConfig, fast_mcd

__all__ = ["GroupModel", "fit_rqda", "fit_rlda", "discriminant_scores", "classify"]


@dataclass(frozen=True)
class GroupModel:
    """Per-group robust estimates plus priors; quadratic or linear mode.

    ``labels`` fixes the group order used by score vectors and the tie rule
    (ascending label order).  ``pooled_sigma`` is filled in linear mode only.
    """

    labels: tuple
    mu: np.ndarray            # (l, p) group centers
    sigma: np.ndarray         # (l, p, p) group scatters
    counts: tuple[int, ...]   # full group sizes n_j
    priors: np.ndarray        # (l,) membership probabilities, sum 1
    mode: str                 # "quadratic" | "linear"
    pooled_sigma: np.ndarray | None = None
    group_weights: tuple = ()  # per-group 0/1 weight vectors from the robust fits

    @property
    def n_groups(self) -> int:
        return len(self.labels)


def _split_groups(data: Dataset, labels):
    labels = np.asarray(labels).ravel()
    if labels.size != data.n:
        raise LengthMismatchError(f"{labels.size} labels for {data.n} rows")
    uniq = sorted(set(labels.tolist()))
    return labels, uniq


def _fit_groups(data: Dataset, labels, cfg: McdConfig, priors: str):
    labels, uniq = _split_groups(data, labels)
    p = data.p
    mus, sigmas, counts, kept, weight_vectors = [], [], [], [], []
    for g in uniq:
        rows = np.flatnonzero(labels == g)
        if rows.size <= p + 1:
            raise GroupTooSmallError(f"group {g!r} has {rows.size} rows, need > {p + 1}")
        sub = validate(data.values[rows])
        res = fast_mcd(sub, cfg)
        eig = np.linalg.eigvalsh(res.reweighted.sigma)
        if eig[-1] <= 0 or eig[0] <= eig[-1] / COND_MAX:
            raise SingularGroupScatterError(g)
        mus.append(res.reweighted.mu)
        sigmas.append(res.reweighted.sigma)
        counts.append(rows.size)
        kept.append(int(res.weights.sum()))
        weight_vectors.append(np.array(res.weights))
    if priors == "regular":
        pri = np.array(kept, dtype=float) / sum(kept)
    elif priors == "counts":
        pri = np.array(counts, dtype=float) / sum(counts)
    elif priors == "equal":
        pri = np.full(len(uniq), 1.0 / len(uniq))
    else:
        raise ValueError(f"unknown priors rule {priors!r}")
    return uniq, np.array(mus), np.array(sigmas), tuple(counts), pri, tuple(weight_vectors)


def fit_rqda(
    data: Dataset, labels, cfg: McdConfig = McdConfig(), priors: str = "regular"
) -> GroupModel:
    """Quadratic rule: per-group robust center and scatter.

    ``priors`` is "regular" (share of reweighting survivors per group, the
    robust default), "counts" (plain n_j / n) or "equal".
    """
    uniq, mu, sigma, counts, pri, wv = _fit_groups(data, labels, cfg, priors)
    return GroupModel(tuple(uniq), mu, sigma, counts, pri, "quadratic", None, wv)


def fit_rlda(
    data: Dataset, labels, cfg: McdConfig = McdConfig(), priors: str = "regular"
) -> GroupModel:
    """Linear rule: group centers as in the quadratic fit, scatters pooled
    by full group size, (sum_j n_j sigma_j) / n."""
    uniq, mu, sigma, counts, pri, wv = _fit_groups(data, labels, cfg, priors)
    n = sum(counts)
    pooled = sum(c * s for c, s in zip(counts, sigma)) / n
    eig = np.linalg.eigvalsh(pooled)
    if eig[-1] <= 0 or eig[0] <= eig[-1] / COND_MAX:
        raise SingularGroupScatterError("pooled")
    return GroupModel(tuple(uniq), mu, sigma, counts, pri, "linear", pooled, wv)


def discriminant_scores(model: GroupModel, x) -> np.ndarray:
    """Gaussian log-likelihood scores per group, up to terms common to all.

    Quadratic mode: -0.5 log|sigma_j| - 0.5 (x - mu_j)' sigma_j^-1 (x - mu_j)
    + log prior_j.  Linear mode drops the j-independent terms and is linear
    in x: mu_j' S^-1 x - 0.5 mu_j' S^-1 mu_j + log prior_j with S pooled.
    Accepts a single p-vector or an (m, p) matrix.
    """
    X = np.atleast_2d(np.asarray(x, dtype=float))
    scores = np.empty((X.shape[0], model.n_groups))
    if model.mode == "linear":
        S = model.pooled_sigma
        for j in range(model.n_groups):
            a = np.linalg.solve(S, model.mu[j])
            scores[:, j] = X @ a - 0.5 * model.mu[j] @ a + np.log(model.priors[j])
    else:
        for j in range(model.n_groups):
            sigma = model.sigma[j]
            sign, logdet = np.linalg.slogdet(sigma)
            if sign <= 0:
                raise SingularGroupScatterError(model.labels[j])
            diff = X - model.mu[j]
            quad = np.einsum("ij,ij->i", diff, np.linalg.solve(sigma, diff.T).T)
            scores[:, j] = -0.5 * logdet - 0.5 * quad + np.log(model.priors[j])
    return scores[0] if np.asarray(x).ndim == 1 else scores


def classify(model: GroupModel, x):
    """Label of the highest-scoring group; exact ties go to the smallest label."""
    scores = np.atleast_2d(discriminant_scores(model, x))
    idx = np.argmax(scores, axis=1)  # argmax returns the first (smallest) index on ties
    labels = [model.labels[i] for i in idx]
    return labels[0] if np.asarray(x).ndim == 1 else labels
