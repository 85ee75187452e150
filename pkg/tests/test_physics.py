"""Physics cross-checks against closed-form limits.

Two independent exact baselines exist: the D=1 restriction (product states,
classical mean-field minimization) and q=2 (the one-dimensional chain with
its known magnetization curve).  Both pin the full pipeline end to end.
"""

import numpy as np
import pytest

from bethe_ittn.evolution import Schedule, evolve
from bethe_ittn.reference import product_state_energy, product_state_magnetization
from bethe_ittn.state import init_product


def _converged(q, h, D, T=16.0, c=2.0, tol=1e-9):
    state = init_product(q, theta=np.pi / 2)
    _, traj = evolve(
        state, J=1.0, h=h, T=T, D=D, schedule=Schedule(coefficient=c), tol_obs=tol
    )
    return traj[-1]


class TestProductStateLimit:
    @pytest.mark.parametrize("h", [0.5, 1.5, 2.5])
    def test_matches_mean_field_ferro(self, h):
        # h = 2.5 sits near the product-state transition at h = qJ, where
        # relaxation slows and finite-step bias peaks; run long and fine
        rec = _converged(3, h, D=1, T=40.0, c=16.0)
        mx, mz = product_state_magnetization(3, 1.0, h)
        assert abs(rec.m_x) == pytest.approx(mx, abs=5e-3)
        assert rec.m_z == pytest.approx(mz, abs=5e-3)
        assert rec.energy_per_site == pytest.approx(product_state_energy(3, 1.0, h), abs=1e-4)

    def test_paramagnetic_side(self):
        rec = _converged(3, 3.5, D=1)
        assert abs(rec.m_x) < 1e-6
        assert rec.m_z == pytest.approx(1.0, abs=1e-6)

    def test_q4_mean_field(self):
        rec = _converged(4, 2.0, D=1, T=40.0, c=16.0)
        mx, mz = product_state_magnetization(4, 1.0, 2.0)
        assert abs(rec.m_x) == pytest.approx(mx, abs=5e-3)
        assert rec.m_z == pytest.approx(mz, abs=5e-3)


class TestChainLimit:
    # q=2 drops the tree structure entirely and is the 1d chain, whose
    # magnetization below the critical field is ((1 - h^2))^(1/8) at J=1
    def test_ordered_phase_magnetization(self):
        rec = _converged(2, 0.5, D=8, T=16.0)
        exact = (1.0 - 0.5 ** 2) ** 0.125
        assert abs(rec.m_x) == pytest.approx(exact, abs=2e-4)

    def test_disordered_phase(self):
        rec = _converged(2, 4.0, D=8, T=12.0)
        assert abs(rec.m_x) < 1e-5

    def test_energy_decreases_with_bond_dimension(self):
        # variational: larger D cannot raise the converged energy
        e4 = _converged(2, 0.9, D=4, T=12.0).energy_per_site
        e8 = _converged(2, 0.9, D=8, T=12.0).energy_per_site
        assert e8 <= e4 + 1e-9
