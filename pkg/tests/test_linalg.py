"""Linear-algebra primitives against independent oracles."""

import numpy as np
import pytest
import scipy.linalg as sla

from pgakit import linalg
from pgakit.errors import (
    CutLocusError,
    NotPositiveDefiniteError,
    ValidationError,
)

rng = np.random.default_rng(101)


def rand_sym(n, scale=1.0):
    a = rng.standard_normal((n, n))
    return scale * (a + a.T) / 2


def rand_skew(n, scale=1.0):
    a = rng.standard_normal((n, n))
    return scale * (a - a.T) / 2


class TestSymEig:
    def test_diagonal(self):
        e = linalg.sym_eig(np.diag([1.0, 4.0]))
        assert np.allclose(e.values, [4.0, 1.0])
        assert np.allclose(np.abs(e.vectors), np.eye(2)[:, ::-1])

    def test_identity_degenerate(self):
        e = linalg.sym_eig(np.eye(3))
        assert np.allclose(e.values, 1.0)
        assert np.allclose(e.vectors @ e.vectors.T, np.eye(3), atol=1e-12)

    def test_two_by_two(self):
        e = linalg.sym_eig(np.array([[2.0, 1.0], [1.0, 2.0]]))
        assert np.allclose(e.values, [3.0, 1.0])
        assert np.allclose(np.abs(e.vectors[:, 0]), [1, 1] / np.sqrt(2))
        assert np.allclose(np.abs(e.vectors[:, 1]), [1, 1] / np.sqrt(2))

    @pytest.mark.parametrize("n", [2, 3, 5, 8, 16])
    def test_reconstruction(self, n):
        a = rand_sym(n, 3.0)
        e = linalg.sym_eig(a)
        recon = (e.vectors * e.values) @ e.vectors.T
        assert np.linalg.norm(a - recon) <= 1e-9 * np.linalg.norm(a)
        assert np.linalg.norm(e.vectors.T @ e.vectors - np.eye(n)) < 1e-10
        # residual per pair
        for k in range(n):
            r = a @ e.vectors[:, k] - e.values[k] * e.vectors[:, k]
            assert np.linalg.norm(r) <= 1e-9 * np.linalg.norm(a)

    def test_sign_convention(self):
        for _ in range(20):
            a = rand_sym(4)
            v = linalg.sym_eig(a).vectors
            for k in range(4):
                i = np.argmax(np.abs(v[:, k]))
                assert v[i, k] > 0

    def test_descending_by_magnitude(self):
        a = rand_sym(6, 2.0)
        vals = linalg.sym_eig(a).values
        assert np.all(np.diff(np.abs(vals)) <= 1e-12)

    def test_rejects_nonsymmetric(self):
        with pytest.raises(ValidationError):
            linalg.sym_eig(np.array([[1.0, 2.0], [0.0, 1.0]]))


class TestMatExp:
    def test_zero(self):
        assert np.allclose(linalg.mat_exp(np.zeros((3, 3))), np.eye(3))

    def test_diagonal(self):
        out = linalg.mat_exp(np.diag([1.0, 2.0]))
        assert np.allclose(np.diag(out), np.exp([1.0, 2.0]))

    def test_rodrigues_quarter_turn(self):
        x = (np.pi / 2) * np.array([[0.0, -1, 0], [1, 0, 0], [0, 0, 0]])
        want = np.array([[0.0, -1, 0], [1, 0, 0], [0, 0, 1]])
        assert np.allclose(linalg.mat_exp(x), want, atol=1e-14)

    @pytest.mark.parametrize("n", [2, 3, 5, 8])
    def test_general_vs_scipy(self, n):
        for _ in range(25):
            a = rng.standard_normal((n, n)) * rng.uniform(0.1, 3.0)
            ours = linalg.mat_exp(a + 1e-30 * np.eye(n) @ a)  # break symmetry? no-op
            ref = sla.expm(a)
            assert np.linalg.norm(ours - ref) <= 1e-12 * max(np.linalg.norm(ref), 1)

    def test_symmetric_gives_spd(self):
        a = rand_sym(4, 2.0)
        out = linalg.mat_exp(a)
        assert np.allclose(out, out.T)
        assert np.all(np.linalg.eigvalsh(out) > 0)

    def test_skew_gives_rotation(self):
        x = rand_skew(3, 1.5)
        r = linalg.mat_exp(x)
        assert np.allclose(r @ r.T, np.eye(3), atol=1e-12)
        assert np.isclose(np.linalg.det(r), 1.0)

    def test_batched(self):
        batch = rng.standard_normal((7, 4, 4))
        out = linalg.mat_exp(batch)
        for i in range(7):
            assert np.allclose(out[i], sla.expm(batch[i]), atol=1e-11)


class TestMatLogSpd:
    def test_identity(self):
        assert np.allclose(linalg.mat_log_spd(np.eye(3)), 0.0)

    def test_diagonal(self):
        p = np.diag([np.e**2, np.e**-1])
        assert np.allclose(linalg.mat_log_spd(p), np.diag([2.0, -1.0]))

    def test_roundtrip(self):
        for _ in range(25):
            x = rand_sym(4, rng.uniform(0.2, 5.0) / 2)
            p = linalg.mat_exp(x)
            back = linalg.mat_log_spd(p)
            assert np.linalg.norm(back - x) <= 1e-9 * max(np.linalg.norm(x), 1)

    def test_not_pd(self):
        with pytest.raises(NotPositiveDefiniteError):
            linalg.mat_log_spd(np.diag([1.0, -0.5]))


class TestMatLogRot:
    def test_identity(self):
        assert np.allclose(linalg.mat_log_rot(np.eye(3)), 0.0)

    def test_z_rotation_angle_one(self):
        g = np.array([[0.0, -1, 0], [1, 0, 0], [0, 0, 0]])
        r = linalg.mat_exp(g * 1.0)
        out = linalg.mat_log_rot(r)
        assert np.isclose(out[0, 1], -1.0)

    def test_near_cut_locus_succeeds(self):
        g = np.array([[0.0, -1, 0], [1, 0, 0], [0, 0, 0]])
        theta = np.pi - 1e-4
        out = linalg.mat_log_rot(linalg.mat_exp(theta * g))
        assert np.isclose(out[1, 0], theta, atol=1e-9)

    def test_cut_locus_raises(self):
        g = np.array([[0.0, -1, 0], [1, 0, 0], [0, 0, 0]])
        with pytest.raises(CutLocusError):
            linalg.mat_log_rot(linalg.mat_exp(np.pi * g))

    @pytest.mark.parametrize("scale", [0.1, 1.0, np.pi - 0.01])
    def test_roundtrip_3x3(self, scale):
        for _ in range(15):
            x = rand_skew(3)
            x *= scale / (np.linalg.norm(x) / np.sqrt(2))
            r = linalg.mat_exp(x)
            assert np.linalg.norm(linalg.mat_log_rot(r) - x) <= 1e-9 * max(scale, 1)

    def test_roundtrip_general_n(self):
        for _ in range(10):
            x = rand_skew(5, 0.8)
            r = linalg.mat_exp(x)
            back = linalg.mat_log_rot(r)
            assert np.linalg.norm(back - x) <= 1e-9

    def test_rejects_non_rotation(self):
        with pytest.raises(ValidationError):
            linalg.mat_log_rot(np.diag([1.0, 1.0, -1.0]))


class TestDexp:
    def test_at_zero(self):
        v = rng.standard_normal((3, 3))
        assert np.allclose(linalg.dexp(np.zeros((3, 3)), v), v)

    def test_commuting(self):
        x = np.diag([0.3, -0.7, 1.1])
        v = np.diag([1.0, 2.0, -0.5])
        assert np.allclose(linalg.dexp(x, v), linalg.mat_exp(x) @ v)

    @pytest.mark.parametrize("n", [3, 5])
    def test_central_difference_oracle(self, n):
        h = 1e-5
        worst = 0.0
        for _ in range(100):
            x = rng.standard_normal((n, n))
            v = rng.standard_normal((n, n))
            fd = (linalg.mat_exp(x + h * v) - linalg.mat_exp(x - h * v)) / (2 * h)
            an = linalg.dexp(x, v)
            worst = max(worst, np.linalg.norm(fd - an) / max(np.linalg.norm(an), 1))
        assert worst < 1e-6


class TestMinimizeOnSphere:
    def test_rayleigh_direction(self):
        a = np.array([3.0, -1.0, 2.0, 0.5])
        a /= np.linalg.norm(a)
        f = lambda v: -(a @ v) ** 2
        g = lambda v: -2 * (a @ v) * a
        res = linalg.minimize_on_sphere(f, g, np.array([1.0, 0, 0, 0]))
        assert res.converged
        assert min(np.linalg.norm(res.x - a), np.linalg.norm(res.x + a)) < 1e-7

    def test_constraint_preserved(self):
        u1 = np.array([1.0, 0, 0, 0])
        a = np.array([0.0, 2.0, 1.0, -1.0])
        a /= np.linalg.norm(a)
        f = lambda v: -(a @ v) ** 2
        g = lambda v: -2 * (a @ v) * a
        res = linalg.minimize_on_sphere(f, g, np.array([0.0, 1, 0, 0]), [u1])
        assert abs(res.x @ u1) < 1e-10
        assert abs(abs(res.x @ a) - 1) < 1e-8

    def test_quadratic_form_vs_eig(self):
        a = rand_sym(5, 2.0)
        f = lambda v: v @ a @ v
        g = lambda v: 2 * a @ v
        x0 = rng.standard_normal(5)
        res = linalg.minimize_on_sphere(f, g, x0 / np.linalg.norm(x0), gtol=1e-12)
        eig = linalg.sym_eig(a)
        smallest = eig.vectors[:, np.argmin(eig.values)]
        assert min(
            np.linalg.norm(res.x - smallest), np.linalg.norm(res.x + smallest)
        ) < 1e-6
        assert res.fun <= f(x0 / np.linalg.norm(x0)) + 1e-12

    def test_max_iterations_returns_best(self):
        a = rand_sym(6)
        f = lambda v: v @ a @ v
        g = lambda v: 2 * a @ v
        x0 = rng.standard_normal(6)
        res = linalg.minimize_on_sphere(
            f, g, x0 / np.linalg.norm(x0), gtol=1e-15, max_iter=3
        )
        assert not res.converged
        assert np.isclose(np.linalg.norm(res.x), 1.0)
