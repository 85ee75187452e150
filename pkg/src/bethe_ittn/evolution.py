"""One imaginary-time step and the full evolution loop.

A step is gate application (every bond dimension doubles) followed by
optimal symmetric truncation back to the target bond dimension: the
environment of the enlarged state is eigendecomposed and the site tensors
are projected onto the top eigenvectors on all q modes at once, which is
the translation-invariant analogue of a two-site SVD cut.
"""

from __future__ import annotations

import dataclasses
import math

import numpy as np

from .environment import ConvergenceError, Environment, correlation_spectrum, expect_bond, expect_site, leading_environment
from .gates import SX, SZ, GateSet, build_gate_set
from .records import ResultRecord
from .state import ITTNState
from .tensor_ops import mode_mul_matrix, symmetrize

__all__ = [
    "TruncationReport",
    "Schedule",
    "EvolutionError",
    "apply_gate",
    "truncate",
    "evolve",
    "energy_per_site",
]

# relative eigenvalue gap below which the truncation cut is flagged degenerate
DEGENERACY_RTOL = 1e-10


@dataclasses.dataclass
class TruncationReport:
    """Spectral bookkeeping of one truncation."""

    kept_weight: float
    discarded_weight: float
    spectrum: np.ndarray  # descending, clamped to >= 0
    degenerate_cut: bool
    lambda1: float  # dominant scale of the pre-truncation environment


@dataclasses.dataclass(frozen=True)
class Schedule:
    """Step-count rule for a run of total imaginary time T.

    Either an explicit step count, or the quadratic rule N = ceil(c T^2)
    that keeps the accumulated second-order Trotter error T^3/N^2 ~ 1/c^2 T
    under control as T grows.
    """

    n_steps: int | None = None
    coefficient: float | None = None

    def __post_init__(self):
        if (self.n_steps is None) == (self.coefficient is None):
            raise ValueError("give exactly one of n_steps or coefficient")
        if self.n_steps is not None and self.n_steps < 1:
            raise ValueError("n_steps must be >= 1")
        if self.coefficient is not None and self.coefficient <= 0:
            raise ValueError("coefficient must be positive")

    def steps(self, T: float) -> int:
        if self.n_steps is not None:
            return self.n_steps
        return max(1, math.ceil(self.coefficient * T * T))


class EvolutionError(RuntimeError):
    """A step failed; carries the step index and the partial trajectory."""

    def __init__(self, msg: str, step: int, trajectory: list):
        super().__init__(msg)
        self.step = step
        self.trajectory = trajectory


def apply_gate(state: ITTNState, gates: GateSet) -> ITTNState:
    """One Trotter gate: contract Q into the site tensors.

    A_new^s = sum_s' A^s' (x) Q[s', s] with every bond index fused as
    (old index major, gate parity index minor); the bond dimension exactly
    doubles and full symmetry is preserved because the same fusion happens
    on all q modes.
    """
    if state.q != gates.q:
        raise ValueError(f"state has q={state.q}, gates have q={gates.q}")
    q, D = state.q, state.D
    # interleave (a_1..a_q, g_1..g_q) -> (a_1, g_1, a_2, g_2, ...)
    perm = []
    for k in range(q):
        perm.extend([k, q + k])
    new = []
    for s in range(state.d):
        acc = np.zeros((2 * D,) * q)
        for sp in range(state.d):
            block = np.multiply.outer(state.tensors[sp], gates.Q[sp, s])
            acc += block.transpose(perm).reshape((2 * D,) * q)
        new.append(acc)
    return ITTNState(q=q, D=2 * D, tensors=tuple(new))


def truncate(
    state: ITTNState,
    D_target: int,
    tol: float = 1e-12,
    max_iter: int = 10000,
    env_seed: np.ndarray | None = None,
) -> tuple[ITTNState, TruncationReport, Environment]:
    """Project the state onto the top D_target eigenvectors of its environment.

    The converged environment R' of the input state is symmetrized and
    eigendecomposed; tiny negative eigenvalues (roundoff on an exactly PSD
    matrix) are clamped to zero for the weight accounting.  The projector
    rows are applied to every mode of every site tensor, the result is
    re-symmetrized to scrub roundoff, and the tensors are rescaled by
    1/sqrt(lambda1) so the dominant environment scale stays at unity
    (the map is quadratic in the site tensors, hence the square root).

    Returns (truncated state, report, environment of the *input* state).
    """
    if D_target > state.D:
        raise ValueError(f"cannot truncate D={state.D} up to {D_target}")
    env = leading_environment(state, tol=tol, max_iter=max_iter, seed=env_seed)
    evals, evecs = np.linalg.eigh(env.R)
    evals = evals[::-1]
    evecs = evecs[:, ::-1]
    clamped = np.maximum(evals, 0.0)
    total = float(clamped.sum())
    kept = float(clamped[:D_target].sum())
    degenerate = False
    if D_target < state.D:
        gap = evals[D_target - 1] - evals[D_target]
        degenerate = gap <= DEGENERACY_RTOL * max(abs(evals[0]), 1e-300)
    report = TruncationReport(
        kept_weight=kept / total,
        discarded_weight=(total - kept) / total,
        spectrum=clamped,
        degenerate_cut=degenerate,
        lambda1=env.lambda1,
    )

    proj = np.ascontiguousarray(evecs[:, :D_target].T)  # rows are the kept eigenvectors
    scale = 1.0 / np.sqrt(env.lambda1)
    new = []
    for a in state.tensors:
        t = a
        for j in range(state.q):
            t = mode_mul_matrix(t, j, proj)
        new.append(symmetrize(t) * scale)
    return ITTNState(q=state.q, D=D_target, tensors=tuple(new)), report, env


def energy_per_site(state: ITTNState, env: Environment, J: float, h: float) -> float:
    """E/site = -(q/2) J <sx sx> - h <sz>; each site owns q/2 bonds."""
    exx = expect_bond(state, env, SX, SX)
    mz = expect_site(state, env, SZ)
    return float(-(state.q / 2.0) * J * exx - h * mz)


def _pad_env_seed(r: np.ndarray | None, D_big: int) -> np.ndarray | None:
    """Warm-start guess for the doubled state: previous R on the old index,
    identity on the fresh gate parity index."""
    if r is None:
        return None
    d_old = r.shape[0]
    if 2 * d_old != D_big:
        return None
    return np.kron(r, np.eye(2))


def evolve(
    state: ITTNState,
    J: float,
    h: float,
    T: float,
    D: int,
    schedule: Schedule,
    tol_obs: float = 1e-8,
    stop_window: int = 20,
    record_stride: int = 1,
    env_tol: float = 1e-12,
    env_max_iter: int = 10000,
    record_spectrum: bool = True,
    callback=None,
) -> tuple[ITTNState, list[ResultRecord]]:
    """Run N = schedule.steps(T) imaginary-time steps of size dt = T/N.

    Observables (m_x, m_z, energy per site, optionally the correlation
    spectrum) are recorded every `record_stride` steps; the run stops early
    once m_x, m_z and the energy have all stayed within `tol_obs` (absolute)
    over the last `stop_window` records.  Energy alone is deliberately not
    a sufficient stopping signal: it settles long before the magnetizations
    do near the transition.  tol_obs = 0 disables early stopping.

    The bond dimension ratchets up naturally: each step doubles it and the
    truncation target is min(2 D_current, D), so a D=1 product seed reaches
    any requested D within log2(D) steps.

    `callback(step, state, env2, report)` (if given) sees every step's
    truncation input environment; used by invariant audits.

    Returns (final state, trajectory).  A failed environment solve raises
    EvolutionError carrying the step index and the partial trajectory.
    """
    if T <= 0:
        raise ValueError("T must be positive")
    if D < 1:
        raise ValueError("D must be >= 1")
    n_steps = schedule.steps(T)
    dt = T / n_steps
    gates = build_gate_set(J, h, dt, state.q)

    trajectory: list[ResultRecord] = []
    dw_max = 0.0
    r_small: np.ndarray | None = None
    history: list[tuple[float, float, float]] = []

    for step in range(1, n_steps + 1):
        try:
            big = apply_gate(state, gates)
            target = min(D, big.D)
            seed = _pad_env_seed(r_small, big.D)
            state, report, env2 = truncate(
                big, target, tol=env_tol, max_iter=env_max_iter, env_seed=seed
            )
        except ConvergenceError as exc:
            raise EvolutionError(
                f"environment stalled at step {step}: {exc}", step, trajectory
            ) from exc
        dw_max = max(dw_max, report.discarded_weight)
        if callback is not None:
            callback(step, state, env2, report)

        # best current guess for the truncated state's environment: the kept
        # spectrum is diagonal in the projected basis
        lam_kept = report.spectrum[:target]
        r_small = np.diag(lam_kept / np.linalg.norm(lam_kept)) if lam_kept.sum() > 0 else None

        if step % record_stride == 0 or step == n_steps:
            try:
                env = leading_environment(state, tol=env_tol, max_iter=env_max_iter, seed=r_small)
            except ConvergenceError as exc:
                raise EvolutionError(
                    f"observable environment stalled at step {step}: {exc}", step, trajectory
                ) from exc
            r_small = env.R
            mx = expect_site(state, env, SX)
            mz = expect_site(state, env, SZ)
            e_site = energy_per_site(state, env, J, h)
            if record_spectrum:
                _, lam2, xi = correlation_spectrum(state, env)
            else:
                lam2, xi = 0.0, 0.0
            trajectory.append(
                ResultRecord(
                    h=h, D=state.D, q=state.q, m_x=mx, m_z=mz, energy_per_site=e_site,
                    lambda2_over_lambda1=lam2, xi=xi, discarded_weight_max=dw_max,
                    steps_used=step,
                )
            )
            history.append((mx, mz, e_site))
            if tol_obs > 0 and len(history) >= stop_window:
                recent = np.array(history[-stop_window:])
                if np.all(recent.max(axis=0) - recent.min(axis=0) < tol_obs):
                    break

    return state, trajectory
