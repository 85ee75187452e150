"""Built-in cross-checks of the fast contraction paths against naive ones.

Every check compares an optimized routine with an independent, slower
implementation (explicit loops, dense matrices, closed forms) on small
instances.  `run_selftest` returns a list of (name, passed, detail) rows;
the CLI prints them and signals failure through its exit code.
"""

from __future__ import annotations

import numpy as np

from . import reference as ref
from .analysis import fit_beta
from .environment import correlation_spectrum, expect_bond, expect_site, leading_environment
from .evolution import Schedule, apply_gate, energy_per_site, evolve, truncate
from .gates import build_gate_set, mpo_oracle_check, rank_two_form
from .state import init_product
from .tensor_ops import best_rank_one, mode_mul_matrix, mode_mul_vector

__all__ = ["run_selftest"]

SX = np.array([[0.0, 1.0], [1.0, 0.0]])
SZ = np.array([[1.0, 0.0], [0.0, -1.0]])


def _check_mode_products(rng):
    t = rng.standard_normal((3, 4, 2, 5))
    v = rng.standard_normal(4)
    m = rng.standard_normal((6, 2))
    dv = np.max(np.abs(mode_mul_vector(t, 1, v) - ref.naive_mode_mul_vector(t, 1, v)))
    dm = np.max(np.abs(mode_mul_matrix(t, 2, m) - ref.naive_mode_mul_matrix(t, 2, m)))
    err = max(dv, dm)
    return err < 1e-13, f"max deviation {err:.2e}"


def _check_rank_one(rng):
    t = rng.standard_normal((2, 2, 2))
    lam, _ = best_rank_one(t, tol=1e-12, max_iter=500)
    resid = np.sqrt(max(np.linalg.norm(t) ** 2 - lam * lam, 0.0))
    resid_grid = ref.grid_search_rank_one(t, n_angles=181)
    ok = resid <= resid_grid + 1e-3
    return ok, f"als residual {resid:.6f} vs grid {resid_grid:.6f}"


def _check_environment(rng):
    worst = 0.0
    for q in (2, 3):
        state = ref.random_symmetric_state(q, 3, seed=rng.integers(1 << 30))
        env = leading_environment(state)
        r_d, lam_d, _ = ref.dense_leading_environment(state)
        worst = max(worst, np.max(np.abs(env.R - r_d)), abs(env.lambda1 - lam_d))
    return worst < 1e-9, f"max deviation from dense transfer matrix {worst:.2e}"


def _check_observables(rng):
    state = ref.random_symmetric_state(3, 3, seed=rng.integers(1 << 30))
    env = leading_environment(state)
    ds = abs(expect_site(state, env, SZ) - ref.dense_expect_site(state, env.R, SZ))
    db = abs(expect_bond(state, env, SX, SX) - ref.dense_expect_bond(state, env.R, SX, SX))
    err = max(ds, db)
    return err < 1e-10, f"max deviation from dense contraction {err:.2e}"


def _check_correlation(rng):
    state = ref.random_symmetric_state(3, 3, seed=rng.integers(1 << 30))
    env = leading_environment(state)
    lam1, ratio, _ = correlation_spectrum(state, env)
    m = ref.dense_correlation_matrix(state, env.R)
    w = np.linalg.eigvalsh(m)
    w = w[np.argsort(-np.abs(w))]
    err = abs(ratio - w[1] / w[0])
    return err < 1e-9, f"second eigenvalue ratio deviation {err:.2e}"


def _check_gates(_rng):
    g = build_gate_set(J=1.0, h=0.7, dt=0.05, q=3)
    d_alg = np.max(np.abs(g.Q - rank_two_form(g)))
    d_mpo = max(mpo_oracle_check(J=1.0, h=0.7, dt=0.05, N=n) for n in (2, 3, 4))
    ok = d_alg < 1e-13 and d_mpo < 1e-10
    return ok, f"rank-2 identity {d_alg:.2e}, ring-MPO deviation {d_mpo:.2e}"


def _check_product_limit(_rng):
    # D=1 evolution must land on the self-consistent product-state minimum
    q, J, h = 3, 1.0, 1.5
    state = init_product(q, theta=np.pi / 2)
    state, traj = evolve(state, J=J, h=h, T=14.0, D=1, schedule=Schedule(coefficient=2.0))
    mx, mz = ref.product_state_magnetization(q, J, h)
    err = max(abs(abs(traj[-1].m_x) - abs(mx)), abs(traj[-1].m_z - mz))
    return err < 1e-2, f"mean-field deviation {err:.2e}"


def _check_truncation(rng):
    # padding with noise then truncating back must reproduce the state's physics
    state = ref.random_symmetric_state(3, 2, seed=rng.integers(1 << 30))
    g = build_gate_set(J=1.0, h=0.5, dt=0.01, q=3)
    big = apply_gate(state, g)
    small, report, env_big = truncate(big, 2)
    e_big = energy_per_site(big, env_big, J=1.0, h=0.5)
    e_small = energy_per_site(small, leading_environment(small), J=1.0, h=0.5)
    err = abs(e_big - e_small)
    ok = err < 50 * max(report.discarded_weight, 1e-12)
    return ok, f"energy shift {err:.2e} vs discarded weight {report.discarded_weight:.2e}"


def _check_fit(_rng):
    hs = np.linspace(1.0, 1.9, 10)
    mxs = np.sqrt(2.0 - hs)
    fit = fit_beta(hs, mxs, h_c=2.0, window=(1.0, 1.95))
    return abs(fit.beta - 0.5) < 1e-10, f"synthetic exponent {fit.beta:.12f}"


def run_selftest(seed: int = 0):
    rng = np.random.default_rng(seed)
    checks = [
        ("mode products vs loops", _check_mode_products),
        ("rank-one ALS vs grid search", _check_rank_one),
        ("environment vs dense transfer", _check_environment),
        ("observables vs dense", _check_observables),
        ("correlation spectrum vs dense", _check_correlation),
        ("gate identities and ring MPO", _check_gates),
        ("product-state limit D=1", _check_product_limit),
        ("pad-truncate energy stability", _check_truncation),
        ("exponent fit on synthetic data", _check_fit),
    ]
    results = []
    for name, fn in checks:
        try:
            ok, detail = fn(rng)
        except Exception as exc:  # a crash is a failure, not an abort
            ok, detail = False, f"raised {type(exc).__name__}: {exc}"
        results.append((name, bool(ok), detail))
    return results
