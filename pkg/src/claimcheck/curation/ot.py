"""Entropic optimal-transport selection of matched real posts.

For each topic bucket, a cosine-distance cost matrix couples fake-post
embeddings (rows) to the candidate real pool (columns). Sinkhorn scaling
with uniform marginals yields a transport plan whose mass expresses match
preference; a greedy pass over the plan then picks one distinct candidate
per fake. Regularization defaults to eps=0.05 on costs in [0, 2]; when
plain scaling under/overflows (small eps), the solver retries once with
log-domain potentials before giving up.
"""
from __future__ import annotations

import logging
from collections.abc import Mapping, Sequence
from dataclasses import dataclass

import numpy as np

from ..models import Post, Topic
from .annotate import MissingTopic
from .kernels import greedy_assign, log_scale_pair, scale_pair

log = logging.getLogger(__name__)

DEFAULT_EPS = 0.05
DEFAULT_MAX_ITER = 1000
DEFAULT_TOL = 1e-6
UNIT_NORM_TOL = 1e-5


class CurationError(Exception):
    pass


class MarginMismatch(CurationError):
    """Marginals are not two probability vectors of the right shapes."""


class NonFiniteScaling(CurationError):
    """Scaling overflowed even after the log-domain retry."""


class InsufficientCandidates(CurationError):
    """A topic bucket has fewer candidates than fakes to match."""


def _as_matrix(emb: Sequence[np.ndarray] | np.ndarray, what: str) -> np.ndarray:
    matrix = np.ascontiguousarray(np.asarray(emb, dtype=np.float64))
    if matrix.ndim != 2 or matrix.shape[0] == 0:
        raise ValueError(f"{what}: expected a nonempty 2-D embedding array, "
                         f"got shape {matrix.shape}")
    norms = np.linalg.norm(matrix, axis=1)
    if np.any(np.abs(norms - 1.0) > UNIT_NORM_TOL):
        worst = float(np.max(np.abs(norms - 1.0)))
        raise ValueError(f"{what}: embeddings must be unit-norm "
                         f"(worst deviation {worst:.2e})")
    return matrix


def cost_matrix(fake_emb, candidate_emb) -> np.ndarray:
    """Pairwise cosine distance, entries in [0, 2]."""
    fakes = _as_matrix(fake_emb, "fake embeddings")
    candidates = _as_matrix(candidate_emb, "candidate embeddings")
    if fakes.shape[1] != candidates.shape[1]:
        raise ValueError(f"embedding dims differ: {fakes.shape[1]} "
                         f"vs {candidates.shape[1]}")
    cost = 1.0 - fakes @ candidates.T
    return np.clip(cost, 0.0, 2.0)


@dataclass(frozen=True)
class TransportPlan:
    plan: np.ndarray
    mu: np.ndarray
    nu: np.ndarray
    eps: float
    iterations: int
    converged: bool
    used_log_domain: bool

    def cost(self, C: np.ndarray) -> float:
        return float(np.sum(self.plan * C))

    def marginal_violation(self) -> float:
        rows = np.abs(self.plan.sum(axis=1) - self.mu).sum()
        cols = np.abs(self.plan.sum(axis=0) - self.nu).sum()
        return float(rows + cols)


def _check_marginal(vec: np.ndarray, length: int, name: str) -> np.ndarray:
    vec = np.ascontiguousarray(np.asarray(vec, dtype=np.float64))
    if vec.shape != (length,):
        raise MarginMismatch(f"{name} has shape {vec.shape}, expected ({length},)")
    if np.any(vec < 0):
        raise MarginMismatch(f"{name} has negative mass")
    if abs(float(vec.sum()) - 1.0) > 1e-9:
        raise MarginMismatch(f"{name} sums to {float(vec.sum())!r}, expected 1")
    return vec


def sinkhorn(C: np.ndarray, mu, nu, eps: float = DEFAULT_EPS,
             max_iter: int = DEFAULT_MAX_ITER,
             tol: float = DEFAULT_TOL) -> TransportPlan:
    """Entropy-regularized transport between two discrete distributions.

    Runs plain diagonal scaling first; if that leaves non-finite values
    (exp(-C/eps) underflows once eps is far below the cost scale), the same
    problem is re-run on log-domain potentials. Convergence means total L1
    marginal violation within ``tol``; hitting ``max_iter`` first returns
    the plan with ``converged=False``.
    """
    if eps <= 0:
        raise ValueError(f"eps must be positive, got {eps}")
    C = np.ascontiguousarray(np.asarray(C, dtype=np.float64))
    if C.ndim != 2:
        raise ValueError(f"cost matrix must be 2-D, got shape {C.shape}")
    if not np.all(np.isfinite(C)):
        raise ValueError("cost matrix has non-finite entries")
    n, m = C.shape
    mu = _check_marginal(mu, n, "mu")
    nu = _check_marginal(nu, m, "nu")

    K = np.exp(-C / eps)
    u, v, iterations, violation = scale_pair(K, mu, nu, max_iter, tol)
    if np.isfinite(violation):
        plan = u[:, None] * K * v[None, :]
        if np.all(np.isfinite(plan)):
            return TransportPlan(plan=plan, mu=mu, nu=nu, eps=eps,
                                 iterations=iterations,
                                 converged=violation <= tol,
                                 used_log_domain=False)

    log.debug("plain scaling non-finite at eps=%g, retrying in log domain", eps)
    if np.any(mu == 0) or np.any(nu == 0):
        raise NonFiniteScaling(
            "log-domain retry needs strictly positive marginals")
    f, g, iterations, violation = log_scale_pair(
        C, np.log(mu), np.log(nu), eps, max_iter, tol)
    plan = np.exp((f[:, None] + g[None, :] - C) / eps)
    if not (np.isfinite(violation) and np.all(np.isfinite(plan))):
        raise NonFiniteScaling(f"scaling non-finite even in log domain "
                               f"at eps={eps}")
    return TransportPlan(plan=plan, mu=mu, nu=nu, eps=eps,
                         iterations=iterations, converged=violation <= tol,
                         used_log_domain=True)


def greedy_assignment(plan: np.ndarray) -> np.ndarray:
    """Column index per row: largest free plan entry first, (row, col) ties."""
    plan = np.ascontiguousarray(np.asarray(plan, dtype=np.float64))
    n, m = plan.shape
    if n > m:
        raise ValueError(f"cannot assign {n} rows into {m} columns")
    return np.asarray(greedy_assign(plan))


@dataclass(frozen=True)
class SelectionResult:
    """Matched candidates per topic, plus the induced matching cost."""

    chosen: Mapping[Topic, tuple[str, ...]]
    counts: Mapping[Topic, int]
    total_cost: float

    def chosen_ids(self) -> tuple[str, ...]:
        out: list[str] = []
        for topic in sorted(self.chosen, key=lambda t: t.value):
            out.extend(self.chosen[topic])
        return tuple(out)


Entry = tuple[str, np.ndarray]


def ot_select(fakes: Mapping[Topic, Sequence[Entry]],
              candidates: Mapping[Topic, Sequence[Entry]],
              quota: Mapping[Topic, int] | None = None, *,
              eps: float = DEFAULT_EPS, max_iter: int = DEFAULT_MAX_ITER,
              tol: float = DEFAULT_TOL) -> SelectionResult:
    """Pick one real candidate per fake, per topic, by plan mass.

    ``fakes`` and ``candidates`` map each topic to (id, unit-norm embedding)
    pairs. ``quota``, when given, must restate the per-topic fake counts;
    it exists so callers can cross-check against topic_quota output.
    """
    all_ids: set[str] = set()
    for topic, pool in candidates.items():
        for cid, _ in pool:
            if cid in all_ids:
                raise ValueError(f"candidate {cid!r} appears in more than "
                                 "one pool")
            all_ids.add(cid)

    chosen: dict[Topic, tuple[str, ...]] = {}
    counts: dict[Topic, int] = {}
    total_cost = 0.0
    for topic in sorted(fakes, key=lambda t: t.value):
        fake_pool = list(fakes[topic])
        cand_pool = list(candidates.get(topic, ()))
        n, m = len(fake_pool), len(cand_pool)
        if quota is not None and quota.get(topic, n) != n:
            raise ValueError(f"quota for {topic.value} is "
                             f"{quota.get(topic)}, but {n} fakes given")
        if m < n:
            raise InsufficientCandidates(
                f"topic {topic.value}: {n} fakes but only {m} candidates")
        C = cost_matrix([e for _, e in fake_pool], [e for _, e in cand_pool])
        plan = sinkhorn(C, np.full(n, 1.0 / n), np.full(m, 1.0 / m),
                        eps=eps, max_iter=max_iter, tol=tol)
        cols = greedy_assignment(plan.plan)
        chosen[topic] = tuple(cand_pool[j][0] for j in cols)
        counts[topic] = n
        total_cost += float(C[np.arange(n), cols].sum())
    return SelectionResult(chosen=chosen, counts=counts, total_cost=total_cost)


def embeddings_by_topic(posts: Sequence[Post],
                        vectors: Mapping[str, np.ndarray],
                        ) -> dict[Topic, list[Entry]]:
    """Bucket posts by topic, pairing each id with its sidecar vector."""
    out: dict[Topic, list[Entry]] = {}
    for post in posts:
        if post.topic is None:
            raise MissingTopic(f"post {post.id!r} has no topic")
        if post.id not in vectors:
            raise ValueError(f"no embedding for post {post.id!r}")
        out.setdefault(post.topic, []).append((post.id, vectors[post.id]))
    return out
