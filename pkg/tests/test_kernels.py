"""Backend equivalence: the jit kernels and their numpy fallbacks must
produce matching results on the same inputs (bit-identical for the
simplex, tight float agreement for the geometric accumulators)."""

import math

import numpy as np
import pytest

from transportlab import kernels, simplex


def random_segments(rng, n, lo=-1.0, hi=1.0):
    a = rng.uniform(lo, hi, (n, 2))
    b = rng.uniform(lo, hi, (n, 2))
    keep = np.hypot(*(b - a).T) > 1e-6
    return a[keep], b[keep]


class TestDeposit:
    def test_hand_computed_cells(self):
        values = np.zeros((4, 4))
        a = np.array([[0.25, 0.5]])
        e = np.array([[2.75, 0.5]])
        lam = np.array([2.0])
        kernels.deposit_segments(values, (0.0, 0.0), 1.0, a, e, lam)
        assert values[0, 0] == pytest.approx(1.5)
        assert values[0, 1] == pytest.approx(2.0)
        assert values[0, 2] == pytest.approx(1.5)
        assert values.sum() == pytest.approx(5.0)

    def test_backends_agree(self):
        rng = np.random.default_rng(0)
        a, b = random_segments(rng, 60)
        lam = rng.uniform(0.1, 3.0, len(a))
        args = (-1.0, -1.0, 2.0 / 64)
        v_nb = np.zeros((64, 64))
        v_np = np.zeros((64, 64))
        kernels._deposit_nb(v_nb, *args, a[:, 0], a[:, 1], b[:, 0], b[:, 1], lam)
        kernels._deposit_np(v_np, *args, a[:, 0], a[:, 1], b[:, 0], b[:, 1], lam)
        scale = v_nb.max()
        assert np.allclose(v_nb, v_np, atol=1e-12 * scale, rtol=1e-12)

    def test_mass_conserved(self):
        rng = np.random.default_rng(1)
        a, b = random_segments(rng, 40, -0.9, 0.9)
        lam = rng.uniform(0.1, 3.0, len(a))
        values = np.zeros((97, 97))
        cell = 2.0 / 97
        kernels.deposit_segments(values, (-1.0, -1.0), cell, a, b, lam)
        expect = np.sum(lam * np.hypot(*(b - a).T))
        assert values.sum() * cell * cell == pytest.approx(expect, rel=1e-12)

    def test_degenerate_segment_ignored(self):
        values = np.zeros((8, 8))
        a = np.array([[0.5, 0.5]])
        kernels.deposit_segments(values, (0.0, 0.0), 1.0, a, a.copy(), np.array([5.0]))
        assert values.sum() == 0.0


class TestCrossingField:
    def _both(self, centers, anchor, a, b, mass, eps_hit=2e-12, detour=2e-9):
        out = []
        for impl in (kernels._crossing_field_nb, kernels._crossing_field_np):
            out.append(
                impl(
                    np.ascontiguousarray(centers[:, 0]),
                    np.ascontiguousarray(centers[:, 1]),
                    float(anchor[0]),
                    float(anchor[1]),
                    np.ascontiguousarray(a[:, 0]),
                    np.ascontiguousarray(a[:, 1]),
                    np.ascontiguousarray(b[:, 0]),
                    np.ascontiguousarray(b[:, 1]),
                    mass,
                    eps_hit,
                    detour,
                )
            )
        return out

    def test_single_crossing_sign(self):
        # segment pointing up, scan path crossing left to right adds +mass
        a = np.array([[0.0, -1.0]])
        b = np.array([[0.0, 1.0]])
        mass = np.array([2.5])
        centers = np.array([[1.0, 0.0]])
        anchor = np.array([-1.0, 0.0])
        nb, npy = self._both(centers, anchor, a, b, mass)
        assert nb[0] == npy[0]
        assert abs(nb[0]) == pytest.approx(2.5)

    def test_backends_agree_random(self):
        rng = np.random.default_rng(2)
        a, b = random_segments(rng, 50)
        mass = rng.uniform(0.1, 2.0, len(a))
        centers = rng.uniform(-1, 1, (300, 2))
        anchor = np.array([1.4, 0.0])
        nb, npy = self._both(centers, anchor, a, b, mass)
        assert np.allclose(nb, npy, atol=1e-12, rtol=1e-12)

    def test_endpoint_hit_takes_identical_detour(self):
        # scan path passes exactly through a segment endpoint
        a = np.array([[0.0, 0.0], [0.3, -0.7]])
        b = np.array([[0.0, 1.0], [0.3, 0.9]])
        mass = np.array([1.0, 2.0])
        centers = np.array([[1.0, 0.0], [0.5, 0.0]])
        anchor = np.array([-1.0, 0.0])
        nb, npy = self._both(centers, anchor, a, b, mass)
        assert np.array_equal(nb, npy)
        # the second segment is crossed regardless of the detour
        assert abs(nb[0]) >= 2.0 - 1e-12

    def test_detour_deterministic(self):
        a = np.array([[0.0, 0.0]])
        b = np.array([[0.0, 1.0]])
        mass = np.array([1.0])
        centers = np.array([[1.0, 0.0]])
        anchor = np.array([-1.0, 0.0])
        first = self._both(centers, anchor, a, b, mass)[0]
        second = self._both(centers, anchor, a, b, mass)[0]
        assert np.array_equal(first, second)


class TestCrossingPairs:
    def _both(self, a, b, tol=1e-10):
        res = []
        for impl in (kernels._crossing_pairs_nb, kernels._crossing_pairs_np):
            i, j = impl(
                np.ascontiguousarray(a[:, 0]),
                np.ascontiguousarray(a[:, 1]),
                np.ascontiguousarray(b[:, 0]),
                np.ascontiguousarray(b[:, 1]),
                tol,
            )
            res.append(set(zip(np.asarray(i).tolist(), np.asarray(j).tolist())))
        return res

    def test_x_crossing(self):
        a = np.array([[-1.0, -1.0], [-1.0, 1.0]])
        b = np.array([[1.0, 1.0], [1.0, -1.0]])
        nb, npy = self._both(a, b)
        assert nb == npy == {(0, 1)}

    def test_shared_endpoint_excluded(self):
        a = np.array([[0.0, 0.0], [0.0, 0.0]])
        b = np.array([[1.0, 0.0], [0.0, 1.0]])
        nb, npy = self._both(a, b)
        assert nb == npy == set()

    def test_t_junction_excluded(self):
        a = np.array([[-1.0, 0.0], [0.0, 0.0]])
        b = np.array([[1.0, 0.0], [0.0, 1.0]])
        nb, npy = self._both(a, b)
        assert nb == npy == set()

    def test_collinear_overlap_counted(self):
        a = np.array([[0.0, 0.0], [1.0, 0.0]])
        b = np.array([[2.0, 0.0], [3.0, 0.0]])
        nb, npy = self._both(a, b)
        assert nb == npy == {(0, 1)}

    def test_backends_agree_random(self):
        rng = np.random.default_rng(3)
        a, b = random_segments(rng, 80)
        nb, npy = self._both(a, b)
        assert nb == npy
        assert len(nb) > 0  # dense random segments do cross


class TestSimplexCores:
    def _instance(self, rng, n, m):
        C = rng.uniform(0.0, 3.0, (n, m))
        a = rng.uniform(0.1, 2.0, n)
        b = rng.uniform(0.1, 2.0, m)
        b *= a.sum() / b.sum()
        return np.ascontiguousarray(C), a, b

    def test_cores_bit_identical(self):
        rng = np.random.default_rng(4)
        for trial in range(25):
            n = int(rng.integers(2, 30))
            m = int(rng.integers(2, 30))
            C, a, b = self._instance(rng, n, m)
            bi0, bj0, f0 = simplex.northwest_basis(a, b)
            tol = 1e-12 * (1.0 + float(np.abs(C).max()))
            theta_tol = 1e-14 * (1.0 + float(max(a.max(), b.max())))
            cap = 400 * (n + m) + 200000
            state = []
            for core in (simplex._solve_core_nb, simplex._solve_core_np):
                bi, bj, f = bi0.copy(), bj0.copy(), f0.copy()
                u, v = np.zeros(n), np.zeros(m)
                status, iters = core(C, bi, bj, f, u, v, tol, theta_tol, cap)
                assert status == 0
                state.append((iters, bi, bj, f, u, v))
            it_nb, *nb = state[0]
            it_np, *npy = state[1]
            assert it_nb == it_np, f"trial {trial}"
            for x, y in zip(nb, npy):
                assert np.array_equal(x, y), f"trial {trial}"

    def test_wrapper_matches_cores(self):
        rng = np.random.default_rng(5)
        C, a, b = self._instance(rng, 12, 17)
        bi, bj, f, u, v, iters = simplex.solve_transport(C, a, b, init="northwest")
        flows = np.zeros_like(C)
        flows[bi, bj] = f
        assert np.allclose(flows.sum(axis=1), a, rtol=1e-12)
        assert np.allclose(flows.sum(axis=0), b, rtol=1e-12)
        red = C - u[:, None] - v[None, :]
        assert red.min() >= -1e-9
        assert math.isfinite(iters)
