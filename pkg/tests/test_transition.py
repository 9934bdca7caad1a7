import numpy as np
import pytest

import sampledlq as sq
from sampledlq.problem import make_problem
from sampledlq.transition import propagate_interval, transition_matrix


@pytest.fixture(scope="module")
def timevarying():
    return sq.get_problem("timevarying-demo").problem


class TestPropagateInterval:
    def test_zero_dynamics_identity(self):
        p = sq.validate_problem(make_problem(0, 1, A=[[0.0]], B=[[1.0]], W=[[1.0]],
                                             R=[[1.0]], S=[[0.0]], q_a=[1.0]))
        prop = propagate_interval(p, sq.uniform_grid(1, 0, 1), 0, M=8)
        for Z in prop.Zs:
            assert np.allclose(Z, np.eye(1), atol=1e-14)
        # Gamma(tau) = tau for B = 1, and xi stays zero.
        assert np.allclose(prop.Gammas[:, 0, 0], prop.nodes, atol=1e-14)
        assert np.allclose(prop.Xis, 0.0, atol=0.0)

    def test_scalar_exponential(self, dontchev, analytic):
        prop = propagate_interval(dontchev, sq.uniform_grid(1, 0, 1), 0, M=64)
        assert prop.Zs[-1][0, 0] == pytest.approx(analytic["Z10"], abs=1e-10)
        assert prop.Gammas[-1][0, 0] == pytest.approx(analytic["ZB0"], abs=1e-10)
        assert prop.substeps == 64

    def test_node_endpoints_bitwise(self, dontchev):
        grid = sq.grid_from_durations([0.3, 0.7], 0.0, 1.0)
        for i in range(grid.N):
            prop = propagate_interval(dontchev, grid, i, M=4)
            assert prop.nodes[0] == grid.s[i]
            assert prop.nodes[-1] == grid.s[i + 1]
            assert len(prop.nodes) == 2 * 4 + 1

    def test_forcing_accumulates(self, timevarying):
        prop = propagate_interval(timevarying, sq.uniform_grid(2, 0, 1), 1, M=16)
        # omega(t) = [0, 0.2 t] is nonzero on [0.5, 1], so xi must move.
        assert np.linalg.norm(prop.Xis[-1]) > 1e-4
        assert np.all(np.isfinite(prop.Zs))

    def test_gamma_matches_simpson_reconstruction(self, timevarying):
        grid = sq.uniform_grid(1, 0, 1)
        M = 32
        prop = propagate_interval(timevarying, grid, 0, M)
        w = sq.simpson_weights(2 * M + 1, float(grid.h[0]) / (2 * M))
        Zend = prop.Zs[-1]
        gamma = np.zeros_like(prop.Gammas[-1])
        xi = np.zeros_like(prop.Xis[-1])
        for k, s in enumerate(prop.nodes):
            Zfrom = Zend @ np.linalg.inv(prop.Zs[k])
            gamma += w[k] * (Zfrom @ timevarying.B(s))
            xi += w[k] * (Zfrom @ timevarying.omega(s))
        assert np.linalg.norm(prop.Gammas[-1] - gamma) <= 1e-7
        assert np.linalg.norm(prop.Xis[-1] - xi) <= 1e-7

    def test_fourth_order_convergence(self, timevarying):
        grid = sq.uniform_grid(1, 0, 1)
        ref = propagate_interval(timevarying, grid, 0, M=1024).Zs[-1]
        errs = []
        for M in (4, 8, 16):
            Z = propagate_interval(timevarying, grid, 0, M).Zs[-1]
            errs.append(np.linalg.norm(Z - ref))
        for e0, e1 in zip(errs, errs[1:]):
            assert 8.0 <= e0 / e1 <= 32.0


class TestTransitionMatrix:
    def test_same_endpoint_exact_identity(self, dontchev):
        Z = transition_matrix(dontchev, 0.37, 0.37)
        assert np.array_equal(Z, np.eye(1))

    def test_scalar_forward_and_backward(self, dontchev, analytic):
        assert transition_matrix(dontchev, 1.0, 0.0)[0, 0] == pytest.approx(
            analytic["Z10"], abs=1e-10)
        assert transition_matrix(dontchev, 0.0, 1.0)[0, 0] == pytest.approx(
            1.0 / analytic["Z10"], abs=1e-10)

    def test_inverse_pair(self, timevarying):
        Zf = transition_matrix(timevarying, 0.8, 0.2, M=128)
        Zb = transition_matrix(timevarying, 0.2, 0.8, M=128)
        assert np.allclose(Zf @ Zb, np.eye(2), atol=1e-9)

    def test_semigroup_property(self):
        for seed in (2, 3, 7, 10):
            p, _ = sq.random_problem(seed)
            mid = 0.5 * (p.a + p.b)
            whole = transition_matrix(p, p.b, p.a, M=128)
            split = transition_matrix(p, p.b, mid, M=128) @ transition_matrix(
                p, mid, p.a, M=128)
            scale = 1.0 + np.linalg.norm(whole)
            assert np.linalg.norm(whole - split) <= 1e-8 * scale
