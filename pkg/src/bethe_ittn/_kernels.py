"""Jitted inner loops for the environment power iteration.

The recursion closes q-1 modes of the doubled-layer transfer map with the
current environment matrix R and renormalizes.  Staging the contraction
(one R at a time, rotating the freshly contracted mode to the back) keeps
the per-iteration cost at O(d * D^(q+1)).  The whole loop runs inside one
jitted function with every work buffer allocated up front: each iteration
is q BLAS calls writing into preallocated outputs, q-1 explicit
permutation nests, and one fused normalize/sign/residual pass — no
allocations and no generic strided-copy dispatches.  Stripping that
size-independent overhead is what makes the measured per-iteration cost
actually scale like the contraction flop count down to D = 8.

Layout conventions shared with `environment`:

  A_stack : (D, ..., D, d) C-contiguous, site tensors stacked on the last
            axis, fully symmetric in the q virtual modes.
  A_cl    : closure matrix, A_stack.transpose(0, .., q-2, q, q-1) reshaped
            to (D^(q-1) * d, D).  Rows enumerate (first q-1 virtual modes,
            spin), the column is the remaining open mode.

The loop returns (R, lambda1, iterations, residual, status) with status
1 = converged, 0 = max_iter exhausted (also the benchmarking mode, tol < 0),
-1 = the map annihilated the iterate.

A pure-numpy implementation of the same staging (`transfer_map_numpy`)
covers installs without numba and doubles as a readable statement of the
algorithm.
"""

from __future__ import annotations

import numpy as np

try:
    from numba import njit

    HAVE_NUMBA = True
except ImportError:  # pragma: no cover - exercised only on bare installs
    HAVE_NUMBA = False

    def njit(*args, **kwargs):
        def wrap(fn):
            return fn

        return wrap


__all__ = ["HAVE_NUMBA", "stack_state", "closure_matrix", "transfer_map_numpy", "power_iterate"]


def stack_state(tensors) -> np.ndarray:
    """Stack the d site tensors on a trailing axis, C-contiguous."""
    return np.ascontiguousarray(np.stack(tensors, axis=-1))


def closure_matrix(a_stack: np.ndarray) -> np.ndarray:
    q = a_stack.ndim - 1
    d = a_stack.shape[-1]
    dim = a_stack.shape[0]
    perm = tuple(range(q - 1)) + (q, q - 1)
    return np.ascontiguousarray(a_stack.transpose(perm)).reshape(dim ** (q - 1) * d, dim)


def transfer_map_numpy(a_stack: np.ndarray, a_cl: np.ndarray, r: np.ndarray) -> np.ndarray:
    """One application of the doubled-layer map, staged, any q."""
    q = a_stack.ndim - 1
    dim = a_stack.shape[0]
    rot = tuple(range(1, q)) + (0, q)
    t = a_stack
    for _ in range(q - 1):
        t = np.dot(r, t.reshape(dim, -1)).reshape(a_stack.shape)
        t = np.ascontiguousarray(t.transpose(rot))
    return np.dot(t.reshape(dim, -1), a_cl)


def _finish(r, r_new):
    """Normalize, fix sign, measure the step (numpy fallback path)."""
    nrm = float(np.sqrt(np.sum(r_new * r_new)))
    if nrm == 0.0:
        return r, 0.0, -1.0, True
    r_new = r_new / nrm
    flat = r_new.ravel()
    if flat[np.argmax(np.abs(flat))] < 0.0:
        r_new = -r_new
    resid = float(np.sqrt(np.sum((r_new - r) ** 2)))
    return r_new, nrm, resid, False


def _power_python(a_stack, a_cl, r0, tol, max_iter):
    """Fallback loop for q without a jitted kernel (or without numba)."""
    r = r0.copy()
    lam1 = 0.0
    resid = -1.0
    for it in range(1, max_iter + 1):
        r, lam1, resid, dead = _finish(r, transfer_map_numpy(a_stack, a_cl, r))
        if dead:
            return r, 0.0, it, resid, -1
        if resid < tol:
            return r, lam1, it, resid, 1
    return r, lam1, max_iter, resid, 0


@njit(cache=True)
def _rotate_mode(src, dst, dim, rest, d):
    """dst <- src with the leading virtual mode rotated to the back.

    Flat views of (dim, rest*d) buffers holding a rank-(q+1) tensor; the
    move is (i, M, s) -> (M, i, s) with M the flattened remaining q-1
    virtual modes and s the spin.  Loads stream in the order the GEMM just
    wrote them; the strided stores measure faster here than the blocked or
    store-streaming orders at every size used.
    """
    for i in range(dim):
        bi = i * rest * d
        for m in range(rest):
            bs = bi + m * d
            bo = (m * dim + i) * d
            for s in range(d):
                dst[bo + s] = src[bs + s]


@njit(cache=True)
def _renormalize(rn, r, n2):
    """Normalize rn, fix its sign, write it into r; return (lam, resid, dead).

    One pass accumulates the Frobenius norm and locates the first
    largest-magnitude entry (whose sign is made positive); the second pass
    scales, measures the step against the previous iterate, and overwrites
    it.  On a zero image r is left untouched.
    """
    nrm2 = 0.0
    amax = -1.0
    aval = 0.0
    for idx in range(n2):
        v = rn[idx]
        nrm2 += v * v
        av = abs(v)
        if av > amax:
            amax = av
            aval = v
    nrm = np.sqrt(nrm2)
    if nrm == 0.0:
        return 0.0, -1.0, True
    neg = aval < 0.0
    resid2 = 0.0
    for idx in range(n2):
        v = rn[idx] / nrm
        if neg:
            v = -v
        dv = v - r[idx]
        resid2 += dv * dv
        r[idx] = v
    return nrm, np.sqrt(resid2), False


@njit(cache=True)
def _power_staged(a2, a_cl, r0, tol, max_iter, n_rot, rest, d):
    """Generic staged power loop: n_rot = q-1 contract+rotate stages, then closure."""
    dim = r0.shape[0]
    n2 = dim * dim
    r = r0.copy()
    rf = r.reshape(n2)
    g = np.empty((dim, rest * d))
    gf = g.reshape(dim * rest * d)
    w = np.empty((dim, rest * d))
    wf = w.reshape(dim * rest * d)
    rn = np.empty((dim, dim))
    rnf = rn.reshape(n2)
    lam1 = 0.0
    resid = -1.0
    for it in range(1, max_iter + 1):
        np.dot(r, a2, g)
        _rotate_mode(gf, wf, dim, rest, d)
        for _ in range(n_rot - 1):
            np.dot(r, w, g)
            _rotate_mode(gf, wf, dim, rest, d)
        np.dot(w, a_cl, rn)
        lam, step, dead = _renormalize(rnf, rf, n2)
        if dead:
            return r, 0.0, it, resid, -1
        resid = step
        lam1 = lam
        if resid < tol:
            return r, lam1, it, resid, 1
    return r, lam1, max_iter, resid, 0


def power_iterate(a_stack, a_cl, r0, tol, max_iter):
    """Run the full power loop; jitted whenever numba is available."""
    if not HAVE_NUMBA:
        return _power_python(a_stack, a_cl, r0, tol, max_iter)
    q = a_stack.ndim - 1
    dim = a_stack.shape[0]
    d = a_stack.shape[-1]
    rest = dim ** (q - 1)
    a2 = np.ascontiguousarray(a_stack).reshape(dim, rest * d)
    r, lam1, it, resid, status = _power_staged(
        a2,
        np.ascontiguousarray(a_cl),
        np.ascontiguousarray(r0, dtype=np.float64),
        float(tol),
        int(max_iter),
        q - 1,
        rest,
        d,
    )
    return r, float(lam1), int(it), float(resid), int(status)
