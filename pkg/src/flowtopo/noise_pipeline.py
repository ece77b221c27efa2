"""Measurement-noise lane: whitening, model-order testing, and the
end-to-end reconstruction pipelines.

The noisy lane runs: Cholesky factor of the error covariance, whitening,
SVD of the scaled samples, a sequential eigenvalue-equality test to pick
the conservation-law count, back-transformation of the null basis, row
reduction, snapping to signed units, canonicalization, and realization.
The exact lane (``reconstruct_exact``) composes the noise-free modules the
same way so callers get one entry point per measurement regime.
"""

from __future__ import annotations

import math
import warnings
from dataclasses import dataclass
from typing import Any

import numpy as np
from scipy import linalg as sla
from scipy.stats import chi2

from .canonical_cutset import canonicalize
from .errors import NoStableOrder, NotPositiveDefinite, SnapFailure
from .graph_model import CutsetMatrix
from .nullspace import (
    DEFAULT_ROUND_TOL,
    DEFAULT_ZERO_TOL,
    FlowDataMatrix,
    estimate_null_basis,
    find_valid_partition,
    rref,
    snap_signed_units,
    to_fcutset_form,
)
from .realize import ReconstructionResult, realize_topology

DEFAULT_ALPHA = 0.05
DEFAULT_SNAP_BAND = 0.35
# Eigenvalues at or below this fraction of the largest are treated as
# numerically zero by the order test, mirroring the rank tolerance the
# exact lane applies to singular values (1e-4 on values = 1e-8 on squares).
ZERO_EIGENVALUE_RATIO = 1e-8
UNDERSAMPLE_WARN_FACTOR = 5


@dataclass(frozen=True)
class NoiseModel:
    """Additive error description: kind, covariance, optional mean.

    The covariance must be symmetric; positive definiteness is enforced
    where the Cholesky factor is actually taken.
    """

    kind: str
    covariance: np.ndarray
    mean: np.ndarray | None = None

    def __post_init__(self):
        if self.kind not in ("homoscedastic", "heteroscedastic"):
            raise ValueError(f"unknown noise kind {self.kind!r}")
        cov = np.asarray(self.covariance, dtype=np.float64)
        cov.setflags(write=False)
        object.__setattr__(self, "covariance", cov)
        if cov.ndim != 2 or cov.shape[0] != cov.shape[1]:
            raise ValueError("covariance must be a square matrix")
        if not np.isfinite(cov).all():
            raise ValueError("covariance contains non-finite entries")
        if not np.allclose(cov, cov.T, rtol=1e-8, atol=1e-12):
            raise ValueError("covariance must be symmetric")
        if self.mean is not None:
            mu = np.asarray(self.mean, dtype=np.float64)
            mu.setflags(write=False)
            object.__setattr__(self, "mean", mu)
            if mu.shape != (cov.shape[0],):
                raise ValueError("mean length must match covariance dimension")
            if not np.isfinite(mu).all():
                raise ValueError("mean contains non-finite entries")

    @property
    def edge_count(self) -> int:
        return self.covariance.shape[0]

    @classmethod
    def isotropic(cls, sigma2: float, edge_count: int) -> "NoiseModel":
        if sigma2 <= 0:
            raise ValueError("sigma2 must be positive")
        return cls(kind="homoscedastic", covariance=sigma2 * np.eye(edge_count))

    @classmethod
    def per_edge(cls, variances: np.ndarray) -> "NoiseModel":
        var = np.asarray(variances, dtype=np.float64)
        if var.ndim != 1 or np.any(var <= 0):
            raise ValueError("need a vector of positive per-edge variances")
        return cls(kind="heteroscedastic", covariance=np.diag(var))


@dataclass(frozen=True)
class RankTestReport:
    """Sequential equality-test trace over candidate conservation counts.

    Candidates are visited from the largest possible count downward; the
    chosen value is the first (hence largest) candidate not rejected at
    level alpha.
    """

    candidates: tuple[int, ...]
    statistics: tuple[float, ...]
    p_values: tuple[float, ...]
    chosen_m: int
    alpha: float
    eigenvalues: tuple[float, ...] = ()

    def __post_init__(self):
        object.__setattr__(self, "candidates", tuple(int(k) for k in self.candidates))
        object.__setattr__(self, "statistics", tuple(float(v) for v in self.statistics))
        object.__setattr__(self, "p_values", tuple(float(v) for v in self.p_values))
        object.__setattr__(self, "eigenvalues", tuple(float(v) for v in self.eigenvalues))
        if len(self.candidates) != len(self.p_values) or len(self.candidates) != len(self.statistics):
            raise ValueError("per-candidate lists must have equal length")
        if self.chosen_m not in self.candidates:
            raise ValueError("chosen_m must be one of the tested candidates")


def _cholesky_lower(noise: NoiseModel) -> np.ndarray:
    try:
        return sla.cholesky(noise.covariance, lower=True)
    except sla.LinAlgError as exc:
        raise NotPositiveDefinite(f"covariance is not positive definite: {exc}") from exc


def whiten(data: FlowDataMatrix, noise: NoiseModel) -> FlowDataMatrix:
    """Premultiply the data by the inverse Cholesky factor of the error
    covariance so whitened errors share unit variance.

    A declared nonzero error mean is subtracted first, with a warning,
    since the conservation model itself is offset-free.

    Raises:
        NotPositiveDefinite: the covariance admits no Cholesky factor.
    """
    if noise.edge_count != data.edge_count:
        raise ValueError(
            f"covariance is {noise.edge_count}x{noise.edge_count} "
            f"but data has {data.edge_count} edges"
        )
    y = data.entries
    if noise.mean is not None and np.any(noise.mean != 0):
        warnings.warn("subtracting declared nonzero error mean", stacklevel=2)
        y = y - noise.mean[:, None]
    lower = _cholesky_lower(noise)
    y_s = sla.solve_triangular(lower, y, lower=True)
    return FlowDataMatrix(y_s, data.edge_labels, allow_undersampled=data.allow_undersampled)


def _equality_p_value(lams: np.ndarray, n_s: int, lam_max: float) -> tuple[float, float]:
    """Statistic and p-value for 'these k eigenvalues are equal'.

    Exact numerical zeros short-circuit the likelihood-ratio form: a block
    of all-zero eigenvalues is perfectly equal, a mixed block cannot be.
    """
    k = lams.size
    floor = ZERO_EIGENVALUE_RATIO * lam_max
    near_zero = lams <= floor
    if near_zero.all():
        return 0.0, 1.0
    if near_zero.any():
        return math.inf, 0.0
    stat = n_s * (k * math.log(lams.mean()) - float(np.log(lams).sum()))
    stat = max(stat, 0.0)
    dof = (k - 1) * (k + 2) // 2
    return stat, float(chi2.sf(stat, dof))


def estimate_model_order(whitened: FlowDataMatrix, alpha: float = DEFAULT_ALPHA) -> RankTestReport:
    """Estimate how many conservation laws the whitened data supports.

    Tests equality of the k smallest eigenvalues of the sample covariance
    for k descending from e, via a Bartlett-type likelihood-ratio statistic
    against chi-square with (k-1)(k+2)/2 degrees of freedom; the chosen
    count is the largest k not rejected.

    Raises:
        NoStableOrder: every candidate down to k = 2 is rejected.
    """
    if not 0 < alpha < 1:
        raise ValueError("alpha must lie in (0, 1)")
    e, n_s = whitened.edge_count, whitened.sample_count
    if n_s < UNDERSAMPLE_WARN_FACTOR * e:
        warnings.warn(
            f"{n_s} samples for {e} edges is below the {UNDERSAMPLE_WARN_FACTOR}x "
            "guideline; the order test loses power",
            stacklevel=2,
        )
    s_y = (whitened.entries @ whitened.entries.T) / n_s
    lams = np.clip(np.linalg.eigvalsh(s_y), 0.0, None)  # ascending
    lam_max = float(lams[-1])

    candidates, stats, pvals = [], [], []
    chosen = 0
    for k in range(e, 1, -1):
        stat, p = _equality_p_value(lams[:k], n_s, lam_max)
        candidates.append(k)
        stats.append(stat)
        pvals.append(p)
        if p >= alpha:
            chosen = k
            break
    if chosen == 0:
        raise NoStableOrder(
            "no candidate eigenvalue block accepted as equal down to k = 2 "
            f"(alpha = {alpha}); the noise level is too high for a stable answer"
        )
    return RankTestReport(
        candidates=tuple(candidates),
        statistics=tuple(stats),
        p_values=tuple(pvals),
        chosen_m=chosen,
        alpha=alpha,
        eigenvalues=tuple(float(v) for v in lams[::-1]),
    )


def reconstruct_noisy(
    data: FlowDataMatrix,
    noise: NoiseModel,
    alpha: float = DEFAULT_ALPHA,
    snap_band: float = DEFAULT_SNAP_BAND,
    chain_policy: str = "row_order",
) -> ReconstructionResult:
    """Full noisy-measurement reconstruction.

    Whitens the samples, estimates the conservation-law count, maps the
    noisy null basis back through the inverse Cholesky factor, row-reduces,
    snaps coefficients to {-1, 0, +1}, canonicalizes, and realizes the
    arborescence.

    Raises:
        NotPositiveDefinite: bad covariance.
        NoStableOrder: the order test rejects every candidate.
        SnapFailure: a reduced coefficient falls outside the snap band.
        NotUnique, NotCanonicalizable, NotArborescence: canonical or
            realization structure is inconsistent with an arborescence.
    """
    whitened = whiten(data, noise)
    e, n_s = whitened.edge_count, whitened.sample_count
    u, s, _ = np.linalg.svd(whitened.entries / math.sqrt(n_s), full_matrices=True)
    report = estimate_model_order(whitened, alpha)
    m = report.chosen_m

    lower = _cholesky_lower(noise)
    u2s = u[:, e - m:]
    # a_hat rows span the estimated conservation laws of the raw data
    a_hat = sla.solve_triangular(lower, u2s, lower=True, trans="T").T
    reduced, pivots = rref(a_hat)
    snapped = snap_signed_units(reduced, snap_band, SnapFailure)

    pivot_list = list(pivots)
    pivot_set = set(pivot_list)
    chord_cols = [j for j in range(e) if j not in pivot_set]
    labels = whitened.edge_labels
    cutset = CutsetMatrix(
        entries=np.hstack([snapped[:, pivot_list], snapped[:, chord_cols]]),
        branch_edges=tuple(labels[j] for j in pivot_list),
        chord_edges=tuple(labels[j] for j in chord_cols),
    )
    canon = canonicalize(cutset)
    result = realize_topology(canon, chain_policy=chain_policy)
    extra: dict[str, Any] = dict(result.diagnostics)
    extra["rank_test"] = report
    extra["singular_values"] = tuple(float(v) for v in s)
    return ReconstructionResult(
        edges=result.edges, node_labels=result.node_labels, diagnostics=extra
    )


def reconstruct_exact(
    data: FlowDataMatrix,
    zero_tol: float = DEFAULT_ZERO_TOL,
    round_tol: float = DEFAULT_ROUND_TOL,
    chain_policy: str = "row_order",
) -> ReconstructionResult:
    """Noise-free reconstruction: null basis, valid partition, cutset form,
    canonicalization, realization."""
    basis = estimate_null_basis(data, zero_tol=zero_tol)
    partition = find_valid_partition(basis)
    cutset = to_fcutset_form(basis, partition, round_tol=round_tol)
    canon = canonicalize(cutset)
    result = realize_topology(canon, chain_policy=chain_policy)
    extra: dict[str, Any] = dict(result.diagnostics)
    extra["singular_values"] = basis.singular_values
    return ReconstructionResult(
        edges=result.edges, node_labels=result.node_labels, diagnostics=extra
    )
