"""Translation-invariant tree tensor network states.

On a Bethe lattice with coordination number q every site looks the same,
so the whole infinite state is described by d = 2 order-q tensors A^s
(one per spin value s) that are fully symmetric in their q virtual modes.
"""

from __future__ import annotations

import dataclasses

import numpy as np

from .tensor_ops import symmetrize, symmetry_defect

__all__ = ["ITTNState", "init_product", "embed_pad", "save_state", "load_state"]

# loose constructor sanity net; evolution code asserts much tighter bounds
SYMMETRY_TOL = 1e-6

_FORMAT_HEADER = "bethe-ittn"
_FORMAT_VERSION = 1


@dataclasses.dataclass(frozen=True)
class ITTNState:
    """One shared site tensor per spin value; immutable value semantics.

    tensors[s] has order q with every mode of dimension D.  The physical
    index s lives in the sigma-z eigenbasis: s = 0 is spin up.
    """

    q: int
    D: int
    tensors: tuple[np.ndarray, ...]
    d: int = 2

    def __post_init__(self):
        if self.q < 2:
            raise ValueError(f"coordination number must be >= 2, got {self.q}")
        if self.D < 1:
            raise ValueError(f"bond dimension must be >= 1, got {self.D}")
        if len(self.tensors) != self.d:
            raise ValueError(f"expected {self.d} site tensors, got {len(self.tensors)}")
        frozen = []
        scale = 0.0
        for s, a in enumerate(self.tensors):
            a = np.ascontiguousarray(a, dtype=np.float64)
            if a.shape != (self.D,) * self.q:
                raise ValueError(
                    f"tensor {s} has shape {a.shape}, expected {(self.D,) * self.q}"
                )
            if not np.all(np.isfinite(a)):
                raise ValueError(f"tensor {s} contains non-finite entries")
            a.flags.writeable = False
            frozen.append(a)
            scale = max(scale, float(np.max(np.abs(a))))
        if scale == 0.0:
            raise ValueError("all site tensors are zero")
        for s, a in enumerate(frozen):
            defect = symmetry_defect(a)
            if defect > SYMMETRY_TOL * scale:
                raise ValueError(
                    f"tensor {s} is not fully symmetric (defect {defect:.3e}, scale {scale:.3e})"
                )
        object.__setattr__(self, "tensors", tuple(frozen))

    def norm_scale(self) -> float:
        """Largest entry magnitude over both tensors (gauge bookkeeping)."""
        return max(float(np.max(np.abs(a))) for a in self.tensors)


def init_product(q: int, theta: float) -> ITTNState:
    """D=1 product state cos(theta/2)|up> + sin(theta/2)|down> on every site.

    Gives <sigma_z> = cos(theta) and <sigma_x> = sin(theta).  theta = pi/2
    is the x-polarized state used to seed symmetry-broken evolution runs.
    """
    shape = (1,) * q
    a0 = np.full(shape, np.cos(theta / 2.0))
    a1 = np.full(shape, np.sin(theta / 2.0))
    return ITTNState(q=q, D=1, tensors=(a0, a1))


def embed_pad(state: ITTNState, D_new: int, noise: float = 0.0, seed: int = 0) -> ITTNState:
    """Embed `state` into bond dimension D_new by zero padding.

    The original tensor occupies the leading D x ... x D block, so every
    observable is unchanged.  Optional uniform noise of the given amplitude
    (seeded, symmetrized) is added to let evolution leave the padded
    submanifold; noise = 0 keeps the embedding exact.
    """
    if D_new < state.D:
        raise ValueError(f"cannot pad D={state.D} down to D_new={D_new}")
    if D_new == state.D and noise == 0.0:
        return state
    rng = np.random.default_rng(seed)
    padded = []
    block = tuple(slice(0, state.D) for _ in range(state.q))
    for a in state.tensors:
        big = np.zeros((D_new,) * state.q)
        big[block] = a
        if noise != 0.0:
            bump = rng.uniform(-noise, noise, size=big.shape)
            big = big + symmetrize(bump)
        padded.append(big)
    return ITTNState(q=state.q, D=D_new, tensors=tuple(padded))


def save_state(state: ITTNState, path) -> None:
    """Write `state` as portable text: header then entries in row-major order.

    Floats are written with repr(), whose shortest round-trip guarantee
    makes load_state(save_state(x)) bit-exact.
    """
    with open(path, "w", encoding="utf-8") as fh:
        fh.write(f"{_FORMAT_HEADER} state {_FORMAT_VERSION}\n")
        fh.write(f"q {state.q}\nD {state.D}\nd {state.d}\n")
        for s, a in enumerate(state.tensors):
            fh.write(f"tensor {s}\n")
            for x in a.reshape(-1):
                fh.write(repr(float(x)) + "\n")


def _read_header(lines, kind: str):
    if len(lines) < 4:
        raise ValueError(f"not a {_FORMAT_HEADER} {kind} file: too short")
    tag = lines[0].split()
    if len(tag) != 3 or tag[0] != _FORMAT_HEADER or tag[1] != kind:
        raise ValueError(f"not a {_FORMAT_HEADER} {kind} file: header {lines[0]!r}")
    if int(tag[2]) != _FORMAT_VERSION:
        raise ValueError(f"unsupported format version {tag[2]}")
    fields = {}
    for line in lines[1:4]:
        key, val = line.split()
        fields[key] = int(val)
    return fields


def load_state(path) -> ITTNState:
    """Inverse of save_state."""
    with open(path, encoding="utf-8") as fh:
        lines = fh.read().splitlines()
    fields = _read_header(lines, "state")
    q, D, d = fields["q"], fields["D"], fields["d"]
    n = D**q
    tensors = []
    pos = 4
    for s in range(d):
        if pos >= len(lines):
            raise ValueError(f"tensor {s}: file ended early")
        if lines[pos] != f"tensor {s}":
            raise ValueError(f"expected 'tensor {s}' at line {pos + 1}, got {lines[pos]!r}")
        pos += 1
        vals = np.array([float(x) for x in lines[pos : pos + n]])
        if vals.size != n:
            raise ValueError(f"tensor {s}: expected {n} entries, file ended early")
        tensors.append(vals.reshape((D,) * q))
        pos += n
    return ITTNState(q=q, D=D, tensors=tuple(tensors), d=d)
