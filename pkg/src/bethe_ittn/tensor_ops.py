"""Dense tensor algebra for small symmetric tensors.

Mode products, outer products, permutation-symmetry utilities and a best
rank-one approximation via the higher-order power method.  Everything
operates on plain float64 numpy arrays in C (row-major) order; an order-n
tensor is just an ndarray with n axes.  Modes are counted from 0, numpy
style.  All tensors handled here are small (dimension <= ~64 per mode,
order <= ~8), so permutation checks simply enumerate all permutations.
"""

from __future__ import annotations

import itertools
import math

import numpy as np

__all__ = [
    "mode_mul_vector",
    "mode_mul_matrix",
    "outer",
    "symmetrize",
    "symmetry_defect",
    "best_rank_one",
    "RankOneNonConvergence",
]


def _as_tensor(t) -> np.ndarray:
    t = np.asarray(t, dtype=np.float64)
    if t.ndim == 0:
        raise ValueError("expected a tensor of order >= 1, got a scalar")
    return t


def mode_mul_vector(t, mode: int, v) -> np.ndarray:
    """Contract mode `mode` of `t` with the vector `v`.

    Returns a tensor of one order less; the remaining modes keep their
    relative order.  out[..i..] = sum_a t[.., a, ..] v[a] with `a` running
    over axis `mode`.
    """
    t = _as_tensor(t)
    v = np.asarray(v, dtype=np.float64)
    if not 0 <= mode < t.ndim:
        raise ValueError(f"mode {mode} out of range for order-{t.ndim} tensor")
    if v.ndim != 1 or v.shape[0] != t.shape[mode]:
        raise ValueError(
            f"mode {mode} has dimension {t.shape[mode]}, vector has shape {v.shape}"
        )
    return np.tensordot(t, v, axes=(mode, 0))


def mode_mul_matrix(t, mode: int, m) -> np.ndarray:
    """Multiply matrix `m` into mode `mode` of `t`.

    The mode's dimension changes from m.shape[1] to m.shape[0]:
    out[.., i, ..] = sum_a m[i, a] t[.., a, ..].
    """
    t = _as_tensor(t)
    m = np.asarray(m, dtype=np.float64)
    if not 0 <= mode < t.ndim:
        raise ValueError(f"mode {mode} out of range for order-{t.ndim} tensor")
    if m.ndim != 2 or m.shape[1] != t.shape[mode]:
        raise ValueError(
            f"mode {mode} has dimension {t.shape[mode]}, matrix has shape {m.shape}"
        )
    out = np.tensordot(m, t, axes=(1, mode))
    # tensordot puts the new index first; restore it to position `mode`
    return np.moveaxis(out, 0, mode)


def outer(vectors) -> np.ndarray:
    """Outer product v1 o v2 o ... o vn as an order-n tensor."""
    vectors = [np.asarray(v, dtype=np.float64) for v in vectors]
    if not vectors:
        raise ValueError("outer() needs at least one vector")
    for k, v in enumerate(vectors):
        if v.ndim != 1 or v.size == 0:
            raise ValueError(f"argument {k} is not a nonempty vector")
    out = vectors[0]
    for v in vectors[1:]:
        out = np.multiply.outer(out, v)
    return out


def _equal_dims(t: np.ndarray) -> None:
    if len(set(t.shape)) > 1:
        raise ValueError(f"all mode dimensions must be equal, got {t.shape}")


def symmetrize(t) -> np.ndarray:
    """Average of `t` over all permutations of its modes."""
    t = _as_tensor(t)
    _equal_dims(t)
    acc = np.zeros_like(t)
    for perm in itertools.permutations(range(t.ndim)):
        acc += t.transpose(perm)
    return acc / math.factorial(t.ndim)


def symmetry_defect(t) -> float:
    """Max-norm distance of `t` from full permutation symmetry.

    Returns max over permutations pi of max|t - pi(t)|; exactly zero iff
    `t` is fully symmetric.
    """
    t = _as_tensor(t)
    _equal_dims(t)
    defect = 0.0
    for perm in itertools.permutations(range(t.ndim)):
        defect = max(defect, float(np.max(np.abs(t - t.transpose(perm)))))
    return defect


class RankOneNonConvergence(RuntimeError):
    """Raised when the rank-one power iteration stalls; carries the last iterate."""

    def __init__(self, msg, lam, factors, residual):
        super().__init__(msg)
        self.lam = lam
        self.factors = factors
        self.residual = residual


def best_rank_one(t, tol: float = 1e-12, max_iter: int = 1000):
    """Best rank-one approximation lam * (u1 o u2 o ... o un) of `t`.

    Alternating (higher-order) power iteration: each factor is updated in
    turn by contracting all other modes, then normalized.  The scale
    lam = t x_1 u1 ... x_n un is stationary at convergence and maximal in
    magnitude over the iteration's basin.  Factors are initialized from the
    leading left singular vector of each mode unfolding, which makes the
    routine deterministic.

    Returns (lam, factors) with unit-norm factors.  Raises ValueError on a
    zero tensor and RankOneNonConvergence (carrying the last iterate) if
    lam has not become stationary to `tol` within `max_iter` sweeps.
    """
    t = _as_tensor(t)
    nrm = float(np.linalg.norm(t))
    if nrm == 0.0:
        raise ValueError("best_rank_one of the zero tensor is undefined")
    order = t.ndim
    if order == 1:
        return nrm, [t / nrm]

    factors = []
    for j in range(order):
        unfold = np.moveaxis(t, j, 0).reshape(t.shape[j], -1)
        factors.append(np.linalg.svd(unfold, full_matrices=False)[0][:, 0])

    lam = float(t.reshape(-1) @ outer(factors).reshape(-1))
    for _ in range(max_iter):
        # stationarity is judged on the factors, not on lam: lam is quadratic
        # in the factor error and stalls orders of magnitude before them
        move = 0.0
        for j in range(order):
            g = t
            removed = 0
            for k in range(order):
                if k == j:
                    continue
                # axes renumber as earlier modes get contracted away
                g = mode_mul_vector(g, k - removed, factors[k])
                removed += 1
            gn = float(np.linalg.norm(g))
            if gn == 0.0:
                raise RankOneNonConvergence(
                    "power iteration hit an exactly orthogonal factor", 0.0, factors, nrm
                )
            g = g / gn
            if g @ factors[j] < 0.0:
                g = -g  # factor signs are a gauge; keep them stable
            move = max(move, float(np.max(np.abs(g - factors[j]))))
            factors[j] = g
        lam = float(t.reshape(-1) @ outer(factors).reshape(-1))
        if move <= max(tol, 1e-15):
            return lam, factors
    residual = float(np.linalg.norm(t - lam * outer(factors)))
    raise RankOneNonConvergence(
        f"no stationary rank-one factor after {max_iter} sweeps", lam, factors, residual
    )
