"""Verification of the canonical tree-network normalization conditions.

In the canonical gauge the state is written with tensors Gamma on sites and
explicit Schmidt coefficients lambda on bonds.  Two conditions make the
gauge canonical: the Schmidt vector is normalized (sum lambda^2 = 1), and
closing any q-1 legs of Gamma with lambda^2 weights yields the identity on
the remaining bond.  For fully symmetric Gamma all leg choices coincide,
so a single contraction pattern is checked.

This module only verifies the conditions; it does not canonicalize.  The
orthogonalization sweep that would produce (Gamma, lambda) from a plain
state is deliberately out of scope, but externally produced canonical data
can be loaded (same text format as states plus a lambda block) and audited.
"""

from __future__ import annotations

import dataclasses

import numpy as np

from .state import _FORMAT_HEADER, _FORMAT_VERSION, _read_header
from .tensor_ops import mode_mul_matrix, symmetry_defect

__all__ = ["CanonicalState", "CanonicalReport", "verify_canonical", "save_canonical", "load_canonical"]

SYMMETRY_TOL = 1e-6


@dataclasses.dataclass(frozen=True)
class CanonicalState:
    """Site tensors Gamma^s plus the bond Schmidt vector lambda."""

    q: int
    D: int
    gammas: tuple[np.ndarray, ...]
    lam: np.ndarray
    d: int = 2

    def __post_init__(self):
        if self.q < 2:
            raise ValueError(f"coordination number must be >= 2, got {self.q}")
        lam = np.asarray(self.lam, dtype=np.float64)
        if lam.shape != (self.D,):
            raise ValueError(f"lambda must have shape ({self.D},), got {lam.shape}")
        if np.any(lam < 0):
            raise ValueError("Schmidt coefficients must be nonnegative")
        if np.any(np.diff(lam) > 0):
            raise ValueError("Schmidt coefficients must be sorted descending")
        if len(self.gammas) != self.d:
            raise ValueError(f"expected {self.d} site tensors, got {len(self.gammas)}")
        frozen = []
        for s, g in enumerate(self.gammas):
            g = np.ascontiguousarray(g, dtype=np.float64)
            if g.shape != (self.D,) * self.q:
                raise ValueError(f"gamma {s} has shape {g.shape}, expected {(self.D,) * self.q}")
            scale = max(float(np.max(np.abs(g))), 1e-300)
            if symmetry_defect(g) > SYMMETRY_TOL * scale:
                raise ValueError(f"gamma {s} is not fully symmetric")
            g.flags.writeable = False
            frozen.append(g)
        object.__setattr__(self, "gammas", tuple(frozen))
        lam.flags.writeable = False
        object.__setattr__(self, "lam", lam)


@dataclasses.dataclass
class CanonicalReport:
    norm_defect: float
    ortho_defect: float
    passed: bool


def verify_canonical(cs: CanonicalState, tol: float = 1e-10) -> CanonicalReport:
    """Check both canonical conditions.

    norm_defect = |sum lambda^2 - 1|.  ortho_defect is the max-norm
    deviation from the identity of

        sum_s Gamma^s (lambda^2 on q-1 modes) Gamma^s

    i.e. the bond density seen through q-1 Schmidt-weighted legs must be
    the identity on the remaining leg.
    """
    lam2 = cs.lam**2
    norm_defect = float(abs(lam2.sum() - 1.0))
    w = np.diag(lam2)
    m = np.zeros((cs.D, cs.D))
    closed = list(range(cs.q - 1))
    for g in cs.gammas:
        t = g
        for j in closed:
            t = mode_mul_matrix(t, j, w)
        m += np.tensordot(t, g, axes=(closed, closed))
    ortho_defect = float(np.max(np.abs(m - np.eye(cs.D))))
    return CanonicalReport(
        norm_defect=norm_defect,
        ortho_defect=ortho_defect,
        passed=norm_defect < tol and ortho_defect < tol,
    )


def save_canonical(cs: CanonicalState, path) -> None:
    """Same text layout as states, with a lambda block before the tensors."""
    with open(path, "w", encoding="utf-8") as fh:
        fh.write(f"{_FORMAT_HEADER} canonical {_FORMAT_VERSION}\n")
        fh.write(f"q {cs.q}\nD {cs.D}\nd {cs.d}\n")
        fh.write("lambda\n")
        for x in cs.lam:
            fh.write(repr(float(x)) + "\n")
        for s, g in enumerate(cs.gammas):
            fh.write(f"tensor {s}\n")
            for x in g.reshape(-1):
                fh.write(repr(float(x)) + "\n")


def load_canonical(path) -> CanonicalState:
    with open(path, encoding="utf-8") as fh:
        lines = fh.read().splitlines()
    fields = _read_header(lines, "canonical")
    q, D, d = fields["q"], fields["D"], fields["d"]
    pos = 4
    if pos >= len(lines) or lines[pos] != "lambda":
        raise ValueError(f"expected 'lambda' at line {pos + 1}")
    pos += 1
    lam = np.array([float(x) for x in lines[pos : pos + D]])
    if lam.size != D:
        raise ValueError("lambda block: file ended early")
    pos += D
    n = D**q
    gammas = []
    for s in range(d):
        if pos >= len(lines):
            raise ValueError(f"tensor {s}: file ended early")
        if lines[pos] != f"tensor {s}":
            raise ValueError(f"expected 'tensor {s}' at line {pos + 1}")
        pos += 1
        vals = np.array([float(x) for x in lines[pos : pos + n]])
        if vals.size != n:
            raise ValueError(f"tensor {s}: expected {n} entries, file ended early")
        gammas.append(vals.reshape((D,) * q))
        pos += n
    return CanonicalState(q=q, D=D, gammas=tuple(gammas), lam=lam, d=d)
