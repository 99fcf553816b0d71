import numpy as np
import pytest

from cylwave.grids import CrossSectionField, GridConfig, build_grid
from cylwave.reactions import CubicBistable, LinearModel
from cylwave.sections import (check_speed_admissible, find_critical_point,
                              principal_eigenpair, section_energy, section_flow)


def grid_1d():
    return build_grid(GridConfig(n_y=1, n_z=401, z_min=-20.0, z_max=20.0))


def interval(n_y, bc="dirichlet"):
    return build_grid(GridConfig(n_y=n_y, n_z=17, y_min=0.0, y_max=1.0,
                                 z_min=0.0, z_max=1.0, bc_left=bc, bc_right=bc,
                                 bc_axial_right="neumann"))


def neumann_interval(n_y=33):
    return interval(n_y, bc="neumann")


class TestSectionEnergy:
    def test_zero_state(self):
        g = neumann_interval()
        assert section_energy(CrossSectionField(g, np.zeros(g.n_y)), CubicBistable(0.25)) == 0.0

    def test_unit_state_closed_form(self):
        # E[1] = V(1) |Omega| = -1/24 on a unit interval
        g = neumann_interval()
        e = section_energy(CrossSectionField(g, np.ones(g.n_y)), CubicBistable(0.25))
        assert e == pytest.approx(-1.0 / 24.0, abs=1e-12)

    def test_negative_infimum_witnessed(self):
        # with a nonnegative zero-state eigenvalue the admissibility reduces to
        # a negative-energy section state, witnessed by the unit state
        g = neumann_interval()
        m = CubicBistable(0.25)
        nu = principal_eigenpair(m, g).value
        assert nu >= 0.0
        e1 = section_energy(CrossSectionField(g, np.ones(g.n_y)), m)
        assert e1 < 0.0

    def test_pure_1d_mode(self):
        g = grid_1d()
        e = section_energy(CrossSectionField(g, np.array([1.0])), CubicBistable(0.25))
        assert e == pytest.approx(-1.0 / 24.0, abs=1e-15)


class TestPrincipalEigenpair:
    def test_neumann_constant_exact(self):
        # f_u(0) = -a, constant eigenfunction, eigenvalue exactly a
        g = neumann_interval()
        m = CubicBistable(0.25)
        res = principal_eigenpair(m, g)
        assert res.value == pytest.approx(0.25, abs=1e-10)
        spread = np.max(res.eigenfunction.values) - np.min(res.eigenfunction.values)
        assert spread < 1e-9

    @pytest.mark.parametrize("mu", [0.0, 1.0])
    def test_dirichlet_interval_closed_form(self, mu):
        errs = []
        for n_y in (41, 81):
            res = principal_eigenpair(LinearModel(mu=mu), interval(n_y))
            errs.append(abs(res.value - (np.pi ** 2 - mu)))
        assert errs[0] < 0.02
        assert errs[0] / errs[1] == pytest.approx(4.0, rel=0.2)

    def test_rayleigh_quotient_consistency(self):
        g = interval(41)
        res = principal_eigenpair(LinearModel(mu=0.0), g)
        psi = res.eigenfunction.values
        w = g.section_weights()
        num = np.sum((np.diff(psi) / g.dy) ** 2) * g.dy
        den = np.sum(w * psi ** 2)
        assert num / den == pytest.approx(res.value, abs=max(1e-9, res.residual * 10))

    def test_eigenfunction_positive_interior(self):
        res = principal_eigenpair(LinearModel(mu=0.0), interval(41))
        assert np.all(res.eigenfunction.values[1:-1] > 0)

    def test_pure_1d(self):
        res = principal_eigenpair(CubicBistable(0.1), grid_1d())
        assert res.value == pytest.approx(0.1, abs=1e-12)


class TestCriticalPoints:
    def test_neumann_cubic_upper_state(self):
        g = neumann_interval()
        cp = find_critical_point(CubicBistable(0.25), g,
                                 CrossSectionField(g, np.full(g.n_y, 0.9)))
        np.testing.assert_allclose(cp.v.values, 1.0, atol=1e-11)
        assert cp.energy == pytest.approx(-1.0 / 24.0, abs=1e-10)
        assert cp.hessian_floor == pytest.approx(0.75, abs=1e-9)  # -f_u(1) = 1 - a
        assert cp.gradient_norm <= 1e-10

    def test_trivial_seed_stays_trivial(self):
        g = neumann_interval()
        cp = find_critical_point(CubicBistable(0.25), g,
                                 CrossSectionField(g, np.zeros(g.n_y)))
        np.testing.assert_allclose(cp.v.values, 0.0, atol=1e-14)
        assert cp.gradient_norm == 0.0

    def test_thin_dirichlet_section_has_no_nontrivial_state(self):
        # on a unit interval the gradient flow from a high seed collapses; the
        # solver reports the collapse instead of failing
        g = interval(41)
        cp = find_critical_point(CubicBistable(0.25), g,
                                 CrossSectionField(g, 0.9 * np.sin(np.pi * g.y)))
        assert cp.collapsed_to_trivial
        assert np.max(np.abs(cp.v.values)) < 1e-8

    def test_wide_dirichlet_section_has_nontrivial_state(self):
        g = build_grid(GridConfig(n_y=81, n_z=17, y_min=0.0, y_max=20.0,
                                  z_min=0.0, z_max=1.0, bc_left="dirichlet",
                                  bc_right="dirichlet", bc_axial_right="neumann"))
        m = CubicBistable(0.1)
        dist = np.minimum(g.y, 20.0 - g.y)
        cp = find_critical_point(m, g, CrossSectionField(g, 0.9 * np.minimum(1.0, dist / 2)))
        assert not cp.collapsed_to_trivial
        assert 0.5 < np.max(cp.v.values) < 1.0
        assert cp.energy < 0.0
        assert cp.hessian_floor > 0.0  # non-degenerate local minimizer

    def test_second_order_condition_at_minimizer(self):
        g = neumann_interval()
        cp = find_critical_point(CubicBistable(0.3), g,
                                 CrossSectionField(g, np.full(g.n_y, 0.8)))
        assert cp.hessian_floor >= 0.0

    def test_flow_decreases_energy(self):
        g = neumann_interval()
        m = CubicBistable(0.25)
        tau = 0.2 * g.dy ** 2
        states = section_flow(m, g, CrossSectionField(g, np.full(g.n_y, 0.6)), tau, 50)
        energies = [section_energy(s, m) for s in states]
        assert np.all(np.diff(energies) <= 1e-14)


class TestAdmissibility:
    def test_slow_trial_speed_admits_negative_energy(self):
        g = grid_1d()
        rep = check_speed_admissible(CubicBistable(0.25), g, 0.1)
        assert rep.discriminant_ok
        assert rep.best_energy < 0.0
        assert rep.admissible

    def test_fast_trial_speed_stays_nonnegative(self):
        g = grid_1d()
        rep = check_speed_admissible(CubicBistable(0.25), g, 1.2, budget_steps=400)
        assert rep.best_energy >= -1e-8

    def test_discriminant_always_ok_for_positive_eigenvalue(self):
        g = grid_1d()
        rep = check_speed_admissible(CubicBistable(0.25), g, 1e-3, budget_steps=10)
        assert rep.eigenvalue_at_zero == pytest.approx(0.25, abs=1e-10)
        assert rep.discriminant_ok
