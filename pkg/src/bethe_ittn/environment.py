"""Leading environment of the doubled-layer transfer map and observables.

The infinite tree surrounding any bond is summarized by a D x D matrix R,
the leading fixed point of the recursion that closes q-1 modes of the
doubled-layer transfer tensor with copies of R itself.  R is computed by
generalized power iteration without ever materializing the D^2 x ... x D^2
transfer tensor; per-iteration cost is O(d * D^(q+1)).

All expectation values are ratios of closed-network contractions and are
therefore invariant under the overall scale of the site tensors.
"""

from __future__ import annotations

import dataclasses
import time

import numpy as np

from . import _kernels
from .state import ITTNState
from .tensor_ops import mode_mul_matrix

__all__ = [
    "Environment",
    "ConvergenceError",
    "leading_environment",
    "expect_site",
    "expect_bond",
    "correlation_spectrum",
    "benchmark_iteration_time",
]

# dense eigensolve of the D^2 x D^2 correlation matrix stays cheap up to here
MAX_SPECTRUM_D = 64


@dataclasses.dataclass
class Environment:
    """Converged leading vector of the doubled-layer map, viewed as a matrix.

    R is symmetric positive semidefinite with unit Frobenius norm; lambda1
    is the pre-normalization scale of the last iteration, i.e. the dominant
    scale of the map at its fixed point.
    """

    R: np.ndarray
    lambda1: float
    iterations: int
    converged: bool
    residual: float


class ConvergenceError(RuntimeError):
    """Power iteration ran out of iterations; carries the last iterate."""

    def __init__(self, msg: str, environment: Environment):
        super().__init__(msg)
        self.environment = environment


def _stacked(state: ITTNState):
    a_stack = _kernels.stack_state(state.tensors)
    return a_stack, _kernels.closure_matrix(a_stack)


def project_psd(m: np.ndarray) -> np.ndarray:
    """Nearest unit-norm positive-semidefinite matrix (eigenvalue clipping)."""
    m = (m + m.T) / 2.0
    w, v = np.linalg.eigh(m)
    w = np.clip(w, 0.0, None)
    out = (v * w) @ v.T
    nrm = np.linalg.norm(out)
    if nrm == 0.0:
        raise ValueError("matrix has no positive part")
    return out / nrm


def _damped_iterate(a_stack, a_cl, r0, tol, max_iter):
    """Cone-constrained fixed-point iteration with iterate averaging.

    The environment map is nonlinear (homogeneous of degree q-1), so plain
    power iteration can orbit a cycle, or wander chaotically, instead of
    settling on unstructured states; a chaotic orbit also drifts off the
    positive-semidefinite cone by amplifying roundoff, toward sign-indefinite
    fixed points that no half-tree Gram matrix can equal.  Averaging each
    iterate with its image leaves the fixed-point set unchanged and collapses
    oscillations, and projecting the average back onto the cone (identity on
    any physical environment) excludes the non-physical fixed points.  The
    residual reported is the undamped fixed-point defect
    ||F(r)/||F(r)|| - r||, matching the plain loop's convergence measure.
    Runs in plain numpy: this path is a recovery mode, never the steady-state
    cost.
    """
    try:
        r = project_psd(r0)
    except ValueError:
        # a chaotic plain orbit can amplify roundoff asymmetry until the
        # symmetric part of the iterate loses its positive part entirely;
        # the search is restarted from the center of the cone instead
        r = np.eye(r0.shape[0]) / np.sqrt(r0.shape[0])
    lam1 = 0.0
    resid = -1.0
    for it in range(1, max_iter + 1):
        f = _kernels.transfer_map_numpy(a_stack, a_cl, r)
        lam1 = float(np.linalg.norm(f))
        if lam1 == 0.0:
            return r, 0.0, it, resid, -1
        f /= lam1
        flat = f.ravel()
        if flat[np.argmax(np.abs(flat))] < 0.0:
            f = -f
        resid = float(np.linalg.norm(f - r))
        if resid < tol:
            return f, lam1, it, resid, 1
        r = project_psd(0.5 * (r + f))
    return r, lam1, max_iter, resid, 0


def leading_environment(
    state: ITTNState,
    tol: float = 1e-12,
    max_iter: int = 10000,
    seed: np.ndarray | None = None,
) -> Environment:
    """Power-iterate the staged transfer map to its leading fixed point.

    Each iterate is normalized to unit Frobenius norm with its sign fixed so
    the largest-magnitude entry is positive; convergence is declared when
    successive iterates differ by less than `tol` in Frobenius norm.  `seed`
    defaults to the (normalized) identity, which generically overlaps the
    leading eigenvector; a warm-start matrix from a previous nearby solve
    cuts the iteration count substantially.

    If the plain loop exhausts `max_iter` without converging (the nonlinear
    map can oscillate or wander chaotically on unstructured states), one
    damped retry constrained to the positive-semidefinite cone runs from the
    last iterate; see `_damped_iterate`.  States produced by imaginary-time
    evolution converge in the plain loop and never take the retry.

    Raises ConvergenceError (carrying the last iterate and residual) when
    both passes are exhausted, and ValueError if the map annihilates the
    seed.
    """
    if tol <= 0.0:
        raise ValueError("tol must be positive")
    if seed is None:
        r0 = np.eye(state.D) / np.sqrt(state.D)
    else:
        r0 = np.array(seed, dtype=np.float64)
        if r0.shape != (state.D, state.D):
            raise ValueError(f"seed must be {state.D}x{state.D}, got {r0.shape}")
        nrm = np.linalg.norm(r0)
        if nrm == 0.0:
            raise ValueError("seed matrix is zero")
        r0 /= nrm

    a_stack, a_cl = _stacked(state)
    r, lam1, iters, resid, status = _kernels.power_iterate(a_stack, a_cl, r0, tol, max_iter)
    if status == 0:
        r, lam1, extra, resid, status = _damped_iterate(a_stack, a_cl, r, tol, max_iter)
        iters += extra
    if status == -1:
        raise ValueError("transfer map annihilated the iterate (effectively zero state)")

    # the fixed point is symmetric; scrub accumulated roundoff
    r = (r + r.T) / 2.0
    r /= np.linalg.norm(r)
    env = Environment(R=r, lambda1=lam1, iterations=iters, converged=status == 1, residual=resid)
    if status != 1:
        raise ConvergenceError(
            f"environment not converged after {iters} iterations (residual {resid:.3e})", env
        )
    return env


def _require_converged(env: Environment) -> None:
    if not env.converged:
        raise ValueError("observable requested from a non-converged environment")


def _site_overlaps(state: ITTNState, r: np.ndarray) -> np.ndarray:
    """G[s, s'] = <A^s, A^s' with every virtual mode pair closed by R>."""
    g = np.zeros((state.d, state.d))
    closed = []
    for s in range(state.d):
        t = state.tensors[s]
        for j in range(state.q):
            t = mode_mul_matrix(t, j, r)
        closed.append(t)
    for s in range(state.d):
        for sp in range(state.d):
            g[s, sp] = float(np.vdot(closed[s], state.tensors[sp]))
    return g


def expect_site(state: ITTNState, env: Environment, op: np.ndarray) -> float:
    """Single-site expectation <O> = sum_{ss'} O[s,s'] G[s,s'] / tr G."""
    _require_converged(env)
    op = np.asarray(op, dtype=np.float64)
    if op.shape != (state.d, state.d):
        raise ValueError(f"operator must be {state.d}x{state.d}")
    g = _site_overlaps(state, env.R)
    return float(np.sum(op * g) / np.trace(g))


def _bond_overlaps(state: ITTNState, r: np.ndarray) -> np.ndarray:
    """H[s, s'] = D x D matrix with q-1 mode pairs of A^s, A^s' closed by R.

    H[s, s'][m, m'] carries the open (top, bottom) pair of the shared bond.
    """
    q = state.q
    h = np.zeros((state.d, state.d, state.D, state.D))
    half = []
    for s in range(state.d):
        t = state.tensors[s]
        for j in range(1, q):
            t = mode_mul_matrix(t, j, r)
        half.append(t)
    rest = list(range(1, q))
    for s in range(state.d):
        for sp in range(state.d):
            h[s, sp] = np.tensordot(half[s], state.tensors[sp], axes=(rest, rest))
    return h


def expect_bond(state: ITTNState, env: Environment, op1: np.ndarray, op2: np.ndarray) -> float:
    """Nearest-neighbor expectation <O1_i O2_j> on one bond of the tree."""
    _require_converged(env)
    op1 = np.asarray(op1, dtype=np.float64)
    op2 = np.asarray(op2, dtype=np.float64)
    h = _bond_overlaps(state, env.R)
    w1 = np.tensordot(op1, h, axes=([0, 1], [0, 1]))
    w2 = np.tensordot(op2, h, axes=([0, 1], [0, 1]))
    ident = np.tensordot(np.eye(state.d), h, axes=([0, 1], [0, 1]))
    return float(np.vdot(w1, w2) / np.vdot(ident, ident))


def correlation_spectrum(state: ITTNState, env: Environment):
    """Top of the spectrum of the half-closed transfer matrix M.

    M is the doubled-layer transfer tensor with q-2 mode pairs closed by R,
    a real symmetric D^2 x D^2 matrix; its eigenvalue ratio lambda2/lambda1
    sets the correlation decay per edge along a tree path.  Returns
    (1.0, lambda2/lambda1, xi) with xi = -1/ln|lambda2/lambda1| (0 when
    lambda2 = 0).  Dense eigensolve, limited to D <= 64.
    """
    _require_converged(env)
    if state.D > MAX_SPECTRUM_D:
        raise ValueError(f"correlation_spectrum supports D <= {MAX_SPECTRUM_D}")
    q, dim = state.q, state.D
    m = np.zeros((dim * dim, dim * dim))
    for s in range(state.d):
        b = state.tensors[s]
        closed = list(range(q - 2))
        for j in closed:
            b = mode_mul_matrix(b, j, env.R)
        pair = np.tensordot(b, state.tensors[s], axes=(closed, closed))
        # axes (top1, top2, bot1, bot2) -> fuse (top1, bot1), (top2, bot2)
        m += pair.transpose(0, 2, 1, 3).reshape(dim * dim, dim * dim)
    m = (m + m.T) / 2.0
    evals = np.linalg.eigvalsh(m)
    order = np.argsort(np.abs(evals))[::-1]
    mu1 = float(evals[order[0]])
    if mu1 <= 0.0:
        raise ValueError(f"leading eigenvalue of M is not positive ({mu1:.3e})")
    if len(evals) < 2:
        return 1.0, 0.0, 0.0
    mu2 = float(evals[order[1]])
    ratio = mu2 / mu1
    if ratio == 0.0:
        xi = 0.0
    elif abs(ratio) >= 1.0:
        xi = float("inf")
    else:
        xi = -1.0 / np.log(abs(ratio))
    return 1.0, ratio, xi


def benchmark_iteration_time(
    q: int, D: int, n_iter: int = 100, seed: int = 0, repeats: int = 5
) -> float:
    """Median per-iteration wall time of the staged power loop, in seconds.

    Runs the production kernel for exactly `n_iter` iterations (no
    convergence exit) on a seeded random symmetric state.  One warmup call
    absorbs JIT compilation.
    """
    from .reference import random_symmetric_state

    state = random_symmetric_state(q, D, seed)
    a_stack, a_cl = _stacked(state)
    r0 = np.eye(D) / np.sqrt(D)
    _kernels.power_iterate(a_stack, a_cl, r0, -1.0, 3)  # warmup: compile + touch caches
    times = []
    for _ in range(repeats):
        t0 = time.perf_counter()
        _kernels.power_iterate(a_stack, a_cl, r0, -1.0, n_iter)
        times.append((time.perf_counter() - t0) / n_iter)
    return float(np.median(times))
