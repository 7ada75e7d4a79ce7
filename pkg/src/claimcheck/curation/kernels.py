"""Numeric kernels for transport-based selection.

The iterative scaling loops and the greedy plan-mass assignment are the
hot loops of the package, so each exists twice: a vectorized numpy version
(always available) and an explicit-loop version compiled with numba when
it is importable. Set ``CLAIMCHECK_DISABLE_NUMBA=1`` to force the numpy
path; ``active_implementation()`` reports which one is live, and
``IMPLEMENTATIONS`` exposes both for benchmarks and equivalence tests.

Contract shared by both implementations:

* ``scale`` / ``log_scale`` return (u, v | f, g, iterations, violation)
  where ``violation`` is the total L1 marginal error at the last check.
  A NaN violation means scaling degenerated (under/overflow); the vectors
  returned alongside it are unspecified.
* ``greedy`` returns one column index per row, chosen by repeatedly taking
  the largest still-free plan entry, ties toward the smallest (row, col).

Kernels never raise on numerical failure; error policy stays in the
wrapper.
"""
from __future__ import annotations

import math
import os

import numpy as np

try:
    from numba import njit
    HAS_NUMBA = True
except ImportError:  # pragma: no cover - depends on environment
    HAS_NUMBA = False

ENV_DISABLE_NUMBA = "CLAIMCHECK_DISABLE_NUMBA"

CHECK_EVERY = 10


# ---------------------------------------------------------------------------
# numpy implementations

def _scale_pair_np(K, mu, nu, max_iter, tol):
    u = np.ones(K.shape[0])
    v = np.ones(K.shape[1])
    violation = math.inf
    iterations = 0
    for iteration in range(1, max_iter + 1):
        iterations = iteration
        denom = K.T @ u
        if not np.all(denom > 0.0) or not np.all(np.isfinite(denom)):
            return u, v, iterations, math.nan
        v = nu / denom
        denom = K @ v
        if not np.all(denom > 0.0) or not np.all(np.isfinite(denom)):
            return u, v, iterations, math.nan
        u = mu / denom
        if iteration % CHECK_EVERY == 0 or iteration == max_iter:
            row = u * (K @ v)
            col = v * (K.T @ u)
            if not (np.all(np.isfinite(row)) and np.all(np.isfinite(col))):
                return u, v, iterations, math.nan
            violation = float(np.abs(col - nu).sum() + np.abs(row - mu).sum())
            if violation <= tol:
                break
    return u, v, iterations, violation


def _log_scale_pair_np(C, log_mu, log_nu, eps, max_iter, tol):
    n, m = C.shape
    f = np.zeros(n)
    g = np.zeros(m)
    violation = math.inf
    iterations = 0
    for iteration in range(1, max_iter + 1):
        iterations = iteration
        z = (f[:, None] - C) / eps
        mx = z.max(axis=0)
        g = eps * log_nu - eps * (mx + np.log(np.exp(z - mx).sum(axis=0)))
        z = (g[None, :] - C) / eps
        mx = z.max(axis=1)
        f = eps * log_mu - eps * (mx + np.log(np.exp(z - mx[:, None]).sum(axis=1)))
        if iteration % CHECK_EVERY == 0 or iteration == max_iter:
            plan = np.exp((f[:, None] + g[None, :] - C) / eps)
            violation = float(np.abs(plan.sum(axis=0) - np.exp(log_nu)).sum()
                              + np.abs(plan.sum(axis=1) - np.exp(log_mu)).sum())
            if violation <= tol:
                break
    return f, g, iterations, violation


def _greedy_assign_np(P):
    n, m = P.shape
    cols = np.full(n, -1, dtype=np.int64)
    work = P.copy()
    for _ in range(n):
        # argmax on the flattened copy scans row-major, so equal values
        # resolve to the smallest (row, col) automatically.
        flat = int(np.argmax(work))
        i, j = divmod(flat, m)
        cols[i] = j
        work[i, :] = -np.inf
        work[:, j] = -np.inf
    return cols


# ---------------------------------------------------------------------------
# loop implementations, JIT-compiled when numba is present

def _scale_pair_loops(K, mu, nu, max_iter, tol):
    n, m = K.shape
    u = np.ones(n)
    v = np.ones(m)
    # Column passes accumulate with i outermost so K is read row-major;
    # per-column sums still add in index order, matching a j-major scan
    # bit for bit.
    col_acc = np.zeros(m)
    violation = math.inf
    iterations = 0
    for iteration in range(1, max_iter + 1):
        iterations = iteration
        for j in range(m):
            col_acc[j] = 0.0
        for i in range(n):
            ui = u[i]
            for j in range(m):
                col_acc[j] += K[i, j] * ui
        for j in range(m):
            s = col_acc[j]
            if s <= 0.0 or not math.isfinite(s):
                return u, v, iterations, math.nan
            v[j] = nu[j] / s
        for i in range(n):
            s = 0.0
            for j in range(m):
                s += K[i, j] * v[j]
            if s <= 0.0 or not math.isfinite(s):
                return u, v, iterations, math.nan
            u[i] = mu[i] / s
        if iteration % CHECK_EVERY == 0 or iteration == max_iter:
            violation = 0.0
            finite = True
            for j in range(m):
                col_acc[j] = 0.0
            for i in range(n):
                ui = u[i]
                for j in range(m):
                    col_acc[j] += ui * K[i, j] * v[j]
            for j in range(m):
                if not math.isfinite(col_acc[j]):
                    finite = False
                violation += abs(col_acc[j] - nu[j])
            for i in range(n):
                row = 0.0
                for j in range(m):
                    row += u[i] * K[i, j] * v[j]
                if not math.isfinite(row):
                    finite = False
                violation += abs(row - mu[i])
            if not finite:
                return u, v, iterations, math.nan
            if violation <= tol:
                break
    return u, v, iterations, violation


def _log_scale_pair_loops(C, log_mu, log_nu, eps, max_iter, tol):
    n, m = C.shape
    f = np.zeros(n)
    g = np.zeros(m)
    # Same row-major trick as the plain scaling: the per-column max and
    # sum sweep rows outermost, visiting each column's terms in the same
    # order a column-major scan would.
    col_mx = np.empty(m)
    col_acc = np.zeros(m)
    violation = math.inf
    iterations = 0
    for iteration in range(1, max_iter + 1):
        iterations = iteration
        for j in range(m):
            col_mx[j] = -math.inf
        for i in range(n):
            fi = f[i]
            for j in range(m):
                z = (fi - C[i, j]) / eps
                if z > col_mx[j]:
                    col_mx[j] = z
        for j in range(m):
            col_acc[j] = 0.0
        for i in range(n):
            fi = f[i]
            for j in range(m):
                col_acc[j] += math.exp((fi - C[i, j]) / eps - col_mx[j])
        for j in range(m):
            g[j] = eps * log_nu[j] - eps * (col_mx[j] + math.log(col_acc[j]))
        for i in range(n):
            mx = -math.inf
            for j in range(m):
                z = (g[j] - C[i, j]) / eps
                if z > mx:
                    mx = z
            s = 0.0
            for j in range(m):
                s += math.exp((g[j] - C[i, j]) / eps - mx)
            f[i] = eps * log_mu[i] - eps * (mx + math.log(s))
        if iteration % CHECK_EVERY == 0 or iteration == max_iter:
            violation = 0.0
            for j in range(m):
                col_acc[j] = 0.0
            for i in range(n):
                fi = f[i]
                for j in range(m):
                    col_acc[j] += math.exp((fi + g[j] - C[i, j]) / eps)
            for j in range(m):
                violation += abs(col_acc[j] - math.exp(log_nu[j]))
            for i in range(n):
                row = 0.0
                for j in range(m):
                    row += math.exp((f[i] + g[j] - C[i, j]) / eps)
                violation += abs(row - math.exp(log_mu[i]))
            if violation <= tol:
                break
    return f, g, iterations, violation


def _greedy_assign_loops(P):
    n, m = P.shape
    cols = np.full(n, -1, dtype=np.int64)
    row_used = np.zeros(n, dtype=np.bool_)
    col_used = np.zeros(m, dtype=np.bool_)
    for _ in range(n):
        best = -math.inf
        bi = -1
        bj = -1
        for i in range(n):
            if row_used[i]:
                continue
            for j in range(m):
                if col_used[j]:
                    continue
                if P[i, j] > best:
                    best = P[i, j]
                    bi = i
                    bj = j
        row_used[bi] = True
        col_used[bj] = True
        cols[bi] = bj
    return cols


IMPLEMENTATIONS: dict[str, dict] = {
    "numpy": {
        "scale": _scale_pair_np,
        "log_scale": _log_scale_pair_np,
        "greedy": _greedy_assign_np,
    },
}

if HAS_NUMBA:
    IMPLEMENTATIONS["numba"] = {
        "scale": njit(cache=True)(_scale_pair_loops),
        "log_scale": njit(cache=True)(_log_scale_pair_loops),
        "greedy": njit(cache=True)(_greedy_assign_loops),
    }


def _pick_implementation() -> str:
    disabled = os.environ.get(ENV_DISABLE_NUMBA, "").strip().lower()
    if disabled in ("1", "true", "yes"):
        return "numpy"
    return "numba" if HAS_NUMBA else "numpy"


_ACTIVE = _pick_implementation()

scale_pair = IMPLEMENTATIONS[_ACTIVE]["scale"]
log_scale_pair = IMPLEMENTATIONS[_ACTIVE]["log_scale"]
greedy_assign = IMPLEMENTATIONS[_ACTIVE]["greedy"]


def active_implementation() -> str:
    return _ACTIVE
