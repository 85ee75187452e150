"""Brute-force reference implementations used as test oracles.

Everything here trades efficiency for obviousness: the doubled-layer
transfer tensor E is materialized explicitly (D^2 per mode), mode products
run as plain Python loops, and observables are full contractions of E-like
tensors.  The production code in `environment` must agree with these
routines to near machine precision on small instances; `selftest` runs the
same comparisons from the command line.
"""

from __future__ import annotations

import itertools

import numpy as np

from .state import ITTNState
from .tensor_ops import symmetrize

__all__ = [
    "naive_mode_mul_vector",
    "naive_mode_mul_matrix",
    "random_symmetric_state",
    "dense_transfer_tensor",
    "dense_doubled_operator",
    "dense_leading_environment",
    "dense_expect_site",
    "dense_expect_bond",
    "dense_correlation_matrix",
    "grid_search_rank_one",
    "product_state_magnetization",
    "product_state_energy",
]


def naive_mode_mul_vector(t: np.ndarray, mode: int, v: np.ndarray) -> np.ndarray:
    """Triple-checked mode product: explicit loop over every output entry."""
    out_shape = t.shape[:mode] + t.shape[mode + 1 :]
    out = np.zeros(out_shape)
    for idx in np.ndindex(*out_shape):
        acc = 0.0
        for a in range(t.shape[mode]):
            full = idx[:mode] + (a,) + idx[mode:]
            acc += t[full] * v[a]
        out[idx] = acc
    return out


def naive_mode_mul_matrix(t: np.ndarray, mode: int, m: np.ndarray) -> np.ndarray:
    out_shape = t.shape[:mode] + (m.shape[0],) + t.shape[mode + 1 :]
    out = np.zeros(out_shape)
    for idx in np.ndindex(*out_shape):
        acc = 0.0
        for a in range(t.shape[mode]):
            full = idx[:mode] + (a,) + idx[mode + 1 :]
            acc += m[idx[mode], a] * t[full]
        out[idx] = acc
    return out


def random_symmetric_state(q: int, D: int, seed: int) -> ITTNState:
    """Seeded random fully symmetric state, entries O(1)."""
    rng = np.random.default_rng(seed)
    tensors = tuple(symmetrize(rng.standard_normal((D,) * q)) for _ in range(2))
    return ITTNState(q=q, D=D, tensors=tensors)


def dense_doubled_operator(state: ITTNState, op: np.ndarray) -> np.ndarray:
    """E_O = sum_{s,s'} O[s,s'] A^s (x) A^s' as an order-q tensor of D^2 modes.

    Mode k of the result is the fused pair (top index, bottom index) of
    mode k, row-major.  op = identity gives the plain transfer tensor E.
    """
    q, D = state.q, state.D
    e = np.zeros((D * D,) * q)
    for s in range(2):
        for sp in range(2):
            w = op[s, sp]
            if w == 0.0:
                continue
            prod = np.multiply.outer(state.tensors[s], state.tensors[sp])
            # axes (i1..iq, j1..jq) -> (i1,j1, i2,j2, ...) -> fuse pairs
            perm = []
            for k in range(q):
                perm.extend([k, q + k])
            e += w * prod.transpose(perm).reshape((D * D,) * q)
    return e


def dense_transfer_tensor(state: ITTNState) -> np.ndarray:
    return dense_doubled_operator(state, np.eye(2))


def dense_leading_environment(
    state: ITTNState,
    tol: float = 1e-13,
    max_iter: int = 100000,
    seed: np.ndarray | None = None,
):
    """Power iteration on the materialized E; returns (R, lambda1, iterations).

    Mirrors the production conventions exactly: unit Frobenius normalization,
    sign fixed so the largest-magnitude entry of R is positive, convergence
    on the Frobenius distance of successive iterates, and the same damped,
    cone-projected retry after a plain pass that fails to settle.
    """
    q, D = state.q, state.D
    e = dense_transfer_tensor(state)
    if seed is None:
        r = np.eye(D).reshape(-1) / np.sqrt(D)
    else:
        r = np.asarray(seed, dtype=np.float64).reshape(-1).copy()
        r /= np.linalg.norm(r)

    def image(vec):
        new = e
        for _ in range(q - 1):
            new = np.tensordot(new, vec, axes=(0, 0))
        lam = float(np.linalg.norm(new))
        if lam == 0.0:
            raise ZeroDivisionError("transfer map annihilated the iterate")
        new = new / lam
        if new[np.argmax(np.abs(new))] < 0:
            new = -new
        return new, lam

    def clip_psd(vec):
        from .environment import project_psd

        try:
            return project_psd(vec.reshape(D, D)).reshape(-1)
        except ValueError:
            return np.eye(D).reshape(-1) / np.sqrt(D)

    for it in range(1, max_iter + 1):
        new, lam1 = image(r)
        if float(np.linalg.norm(new - r)) < tol:
            return new.reshape(D, D), lam1, it
        r = new
    r = clip_psd(r)
    for it in range(max_iter + 1, 2 * max_iter + 1):
        new, lam1 = image(r)
        if float(np.linalg.norm(new - r)) < tol:
            return new.reshape(D, D), lam1, it
        r = clip_psd(0.5 * (r + new))
    raise RuntimeError(f"dense power iteration did not converge in {2 * max_iter} steps")


def dense_expect_site(state: ITTNState, r: np.ndarray, op: np.ndarray) -> float:
    """<O> = (E_O fully closed with r) / (E fully closed with r)."""
    rv = np.asarray(r).reshape(-1)

    def closed(e):
        out = e
        for _ in range(e.ndim):
            out = np.tensordot(out, rv, axes=(0, 0))
        return float(out)

    num = closed(dense_doubled_operator(state, op))
    den = closed(dense_transfer_tensor(state))
    return num / den


def dense_expect_bond(state: ITTNState, r: np.ndarray, op1: np.ndarray, op2: np.ndarray) -> float:
    """Nearest-neighbor <O1 O2>: two E_O tensors joined on their first mode."""
    rv = np.asarray(r).reshape(-1)

    def half(e):
        # close all modes except the first with r
        out = e
        for _ in range(e.ndim - 1):
            out = np.tensordot(out, rv, axes=(1, 0))
        return out  # vector over the remaining fused mode

    num = float(half(dense_doubled_operator(state, op1)) @ half(dense_doubled_operator(state, op2)))
    den = float(half(dense_transfer_tensor(state)) @ half(dense_transfer_tensor(state)))
    return num / den


def dense_correlation_matrix(state: ITTNState, r: np.ndarray) -> np.ndarray:
    """M: the transfer tensor with q-2 modes closed by r, as a D^2 x D^2 matrix."""
    rv = np.asarray(r).reshape(-1)
    out = dense_transfer_tensor(state)
    for _ in range(state.q - 2):
        out = np.tensordot(out, rv, axes=(0, 0))
    return out


def grid_search_rank_one(t: np.ndarray, n_angles: int = 181) -> float:
    """Best rank-one residual of a 2x2x2 tensor by brute-force angle grid.

    Unit factors in R^2 are (cos a, sin a); the optimal scale for fixed
    factors is lam = <t, u o v o w>, giving residual^2 = |t|^2 - lam^2.
    Returns the minimal residual over the grid.
    """
    if t.shape != (2, 2, 2):
        raise ValueError("grid search oracle only supports 2x2x2 tensors")
    angles = np.linspace(0.0, np.pi, n_angles)
    vecs = np.stack([np.cos(angles), np.sin(angles)], axis=1)
    lam_best = 0.0
    for u, v in itertools.product(vecs, repeat=2):
        # vectorize the innermost factor
        m = np.einsum("abc,a,b->c", t, u, v)
        lam = np.abs(m @ vecs.T).max()
        lam_best = max(lam_best, float(lam))
    return float(np.sqrt(max(np.linalg.norm(t) ** 2 - lam_best**2, 0.0)))


def product_state_magnetization(q: int, J: float, h: float) -> tuple[float, float]:
    """(m_x, m_z) minimizing the product-state energy -(q J / 2) mx^2 - h mz.

    With mx = sin(theta), mz = cos(theta) the minimum sits at
    cos(theta) = h / (qJ) for h < qJ and at theta = 0 above.
    """
    hc = q * J
    if h >= hc:
        return 0.0, 1.0
    c = h / hc
    return float(np.sqrt(1.0 - c * c)), float(c)


def product_state_energy(q: int, J: float, h: float) -> float:
    mx, mz = product_state_magnetization(q, J, h)
    return float(-(q * J / 2.0) * mx * mx - h * mz)
