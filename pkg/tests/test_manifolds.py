"""Manifold contract: maps, statistics, projection, curvature."""

import numpy as np
import pytest

from pgakit import (
    SPD,
    GeodesicSubspace,
    Point,
    SpecialOrthogonal,
    Sphere,
    Tangent,
    curvature_op,
    distance,
    exp,
    intrinsic_mean,
    intrinsic_variance,
    log,
    metric,
    project,
    project_info,
    sectional_curvature,
)
from pgakit.errors import (
    BaseMismatchError,
    CutLocusError,
    DegeneratePlaneError,
    UnsupportedManifoldError,
    ValidationError,
)
from pgakit.manifolds.base import intrinsic_mean_raw

rng = np.random.default_rng(77)

MANIFOLDS = [Sphere(4, 1.0), Sphere(3, 2.0), SPD(3), SpecialOrthogonal(3)]


def rand_point(man):
    return man.random_point(rng, 0.7)


class TestMetric:
    def test_spd_diag_example(self):
        man = SPD(2)
        x = np.diag([1.0, -1.0])
        assert np.isclose(man.inner(np.eye(2), x, x), 1.0)

    def test_so_generator_example(self):
        man = SpecialOrthogonal(3)
        x = np.array([[0.0, -1, 0], [1, 0, 0], [0, 0, 0]])
        assert np.isclose(man.inner(np.eye(3), x, x), 1.0)

    def test_sphere_dot(self):
        man = Sphere(3)
        p = rand_point(man)
        u = man.random_tangent(rng, p, 1.3)
        v = man.random_tangent(rng, p, 0.8)
        assert np.isclose(man.inner(p, u, v), float(u @ v))

    @pytest.mark.parametrize("man", MANIFOLDS)
    def test_positive_definite(self, man):
        p = rand_point(man)
        for _ in range(10):
            v = man.random_tangent(rng, p, rng.uniform(0.1, 2.0))
            assert man.inner(p, v, v) > 0

    def test_base_mismatch(self):
        man = Sphere(3)
        p = Point(man, rand_point(man))
        q = Point(man, rand_point(man))
        x = Tangent(p, man.random_tangent(rng, p.value, 1.0))
        y = Tangent(q, man.random_tangent(rng, q.value, 1.0))
        with pytest.raises(BaseMismatchError):
            metric(p, x, y)


class TestExpLog:
    @pytest.mark.parametrize("man", MANIFOLDS)
    def test_exp_zero(self, man):
        p = rand_point(man)
        assert np.allclose(man.exp(p, np.zeros(man.point_shape)), p)

    def test_sphere_quarter(self):
        man = Sphere(2)
        p = np.array([1.0, 0, 0])
        v = (np.pi / 2) * np.array([0.0, 1, 0])
        assert np.allclose(man.exp(p, v), [0, 1, 0], atol=1e-15)

    def test_spd_diag(self):
        man = SPD(2)
        out = man.exp(np.eye(2), np.diag([1.0, 2.0]))
        assert np.allclose(out, np.diag([np.e, np.e**2]))

    def test_log_self_zero(self):
        for man in MANIFOLDS:
            p = rand_point(man)
            assert np.allclose(man.log(p, p), 0.0, atol=1e-9)

    def test_sphere_orthogonal_log(self):
        man = Sphere(2)
        p = np.array([1.0, 0, 0])
        q = np.array([0.0, 1, 0])
        assert np.allclose(man.log(p, q), (np.pi / 2) * q, atol=1e-14)

    def test_spd_log_diag(self):
        man = SPD(2)
        out = man.log(np.eye(2), np.diag([np.e, 1 / np.e]))
        assert np.allclose(out, np.diag([1.0, -1.0]))

    @pytest.mark.parametrize("man", MANIFOLDS)
    def test_roundtrip(self, man):
        for _ in range(20):
            p = rand_point(man)
            v = man.random_tangent(rng, p, rng.uniform(0.05, 1.8))
            q = man.exp(p, v)
            assert np.linalg.norm(man.log(p, q) - v) < 1e-9
            assert np.isclose(man.dist(p, q), man.norm(p, v), atol=1e-9)

    def test_sphere_cut_locus(self):
        man = Sphere(3)
        p = rand_point(man)
        with pytest.raises(CutLocusError):
            man.log(p, -p)

    def test_wrapper_types(self):
        man = SPD(3)
        p = Point(man, rand_point(man))
        v = Tangent(p, man.random_tangent(rng, p.value, 0.5))
        q = exp(p, v)
        back = log(p, q)
        assert np.allclose(back.vec, v.vec, atol=1e-9)
        assert np.isclose(distance(p, q), v.norm(), atol=1e-9)


class TestDistance:
    def test_quarter_arc_radius_two(self):
        man = Sphere(3, 2.0)
        p = np.zeros(4)
        p[0] = 2.0
        q = np.zeros(4)
        q[1] = 2.0
        assert np.isclose(man.dist(p, q), np.pi)

    def test_spd_example(self):
        man = SPD(2)
        assert np.isclose(man.dist(np.eye(2), np.diag([np.e**2, 1.0])), np.sqrt(2.0))

    @pytest.mark.parametrize("man", MANIFOLDS)
    def test_symmetry(self, man):
        p, q = rand_point(man), rand_point(man)
        assert np.isclose(man.dist(p, q), man.dist(q, p), atol=1e-9)


class TestGroupActionIsometry:
    def test_spd_congruence(self):
        from pgakit.manifolds.spd import act

        man = SPD(3)
        for _ in range(10):
            p, q = rand_point(man), rand_point(man)
            g = rng.standard_normal((3, 3)) + 0.5 * np.eye(3)
            if abs(np.linalg.det(g)) < 1e-6:
                continue
            assert np.isclose(
                man.dist(act(g, p), act(g, q)), man.dist(p, q), atol=1e-9
            )

    def test_so_left_translation(self):
        man = SpecialOrthogonal(3)
        for _ in range(10):
            p, q, g = rand_point(man), rand_point(man), rand_point(man)
            assert np.isclose(man.dist(g @ p, g @ q), man.dist(p, q), atol=1e-9)


class TestIntrinsicMean:
    def test_equal_points(self):
        man = SPD(3)
        p = rand_point(man)
        mu = intrinsic_mean_raw(man, [p] * 5)
        assert np.allclose(mu, p, atol=1e-9)

    def test_symmetric_pair(self):
        man = Sphere(4)
        mu0 = rand_point(man)
        t = man.random_tangent(rng, mu0, 0.8)
        mu = intrinsic_mean_raw(
            man, [man.exp(mu0, t), man.exp(mu0, -t)], x0=man.exp(mu0, 0.2 * t)
        )
        assert np.linalg.norm(mu - mu0) < 1e-9

    def test_spd_geodesic_midpoint(self):
        man = SPD(2)
        pts = [np.diag([np.e, 1.0]), np.diag([1 / np.e, 1.0])]
        mu = intrinsic_mean_raw(man, pts)
        assert np.allclose(mu, np.eye(2), atol=1e-9)

    @pytest.mark.parametrize("man", MANIFOLDS)
    def test_stationarity(self, man):
        pts = [man.exp(rand_point(man), np.zeros(man.point_shape))]
        base = rand_point(man)
        pts = [man.exp(base, man.random_tangent(rng, base, rng.uniform(0.1, 0.8)))
               for _ in range(12)]
        mu = intrinsic_mean_raw(man, pts, tol=1e-10)
        g = np.mean([man.log(mu, p) for p in pts], axis=0)
        assert man.norm(mu, g) < 1e-9

    def test_wrapper(self):
        man = Sphere(3)
        base = rand_point(man)
        pts = [Point(man, man.exp(base, man.random_tangent(rng, base, 0.4)))
               for _ in range(8)]
        mu = intrinsic_mean(pts)
        var = intrinsic_variance(pts, mu)
        direct = np.mean([distance(mu, p) ** 2 for p in pts])
        assert np.isclose(var, direct)


class TestIntrinsicVariance:
    def test_single_point(self):
        man = SPD(3)
        p = Point(man, rand_point(man))
        assert intrinsic_variance([p], p) == 0.0

    def test_two_points_quarter(self):
        man = Sphere(3)
        mu_val = np.array([1.0, 0, 0, 0])
        mu = Point(man, mu_val)
        v = np.array([0.0, 1, 0, 0]) * (np.pi / 2)
        pts = [Point(man, man.exp(mu_val, v)), Point(man, man.exp(mu_val, -v))]
        assert np.isclose(intrinsic_variance(pts, mu), (np.pi / 2) ** 2)


class TestProjection:
    def test_point_on_subspace(self):
        man = SPD(3)
        mu = Point(man, np.eye(3))
        v = man.random_tangent(rng, mu.value, 1.0)
        h = GeodesicSubspace(mu, (Tangent(mu, v),))
        p = Point(man, man.exp(mu.value, 0.7 * v))
        out = project(p, h)
        assert np.allclose(out.value, p.value, atol=1e-7)

    def test_sphere_closed_form_matches_numeric(self):
        man = Sphere(5)
        mu = man.random_point(rng)
        basis = np.stack([man.random_tangent(rng, mu, 1.0)])
        # orthonormalize second direction against first
        b2 = man.random_tangent(rng, mu, 1.0)
        b2 -= (b2 @ basis[0]) * basis[0]
        b2 /= np.linalg.norm(b2)
        basis = np.stack([basis[0], b2])
        for _ in range(10):
            p = man.exp(mu, man.random_tangent(rng, mu, rng.uniform(0.2, 1.2)))
            closed = man.project_span(mu, basis, p)
            numeric = man.project_span_numeric(mu, basis, p, starts=3)
            assert np.linalg.norm(closed.point - numeric.point) < 1e-8
            assert np.allclose(closed.coeffs, numeric.coeffs, atol=1e-8)

    def test_spd_geodesic_vs_grid_golden(self):
        man = SPD(3)
        mu = np.eye(3)
        v = man.random_tangent(rng, mu, 1.0)
        p = man.exp(mu, man.random_tangent(rng, mu, 0.9))
        res = man.project_span(mu, v[None], p)

        def obj(s):
            return man.dist(man.exp(mu, s * v), p) ** 2

        # coarse grid then golden-section refinement
        grid = np.linspace(-2.0, 2.0, 401)
        vals = [obj(s) for s in grid]
        i = int(np.argmin(vals))
        lo, hi = grid[max(i - 1, 0)], grid[min(i + 1, len(grid) - 1)]
        phi = (np.sqrt(5) - 1) / 2
        a, b = lo, hi
        c, d = b - phi * (b - a), a + phi * (b - a)
        for _ in range(80):
            if obj(c) < obj(d):
                b, d = d, c
                c = b - phi * (b - a)
            else:
                a, c = c, d
                d = a + phi * (b - a)
        s_star = (a + b) / 2
        assert abs(res.coeffs[0] - s_star) < 1e-8

    def test_two_dim_coeffs_vs_grid(self):
        man = SPD(3)
        mu = np.eye(3)
        b1 = man.random_tangent(rng, mu, 1.0)
        b2 = man.random_tangent(rng, mu, 1.0)
        b2 = b2 - man.inner(mu, b2, b1) * b1
        b2 /= man.norm(mu, b2)
        basis = np.stack([b1, b2])
        p = man.exp(mu, man.random_tangent(rng, mu, 0.6))
        res = man.project_span(mu, basis, p)

        def obj(s):
            return man.dist(man.exp(mu, s[0] * b1 + s[1] * b2), p) ** 2

        # local refinement oracle around the reported optimum
        s = res.coeffs.copy()
        step = 0.01
        for _ in range(60):
            improved = False
            for d in [(step, 0), (-step, 0), (0, step), (0, -step)]:
                cand = s + d
                if obj(cand) < obj(s):
                    s, improved = cand, True
            if not improved:
                step /= 2
            if step < 1e-9:
                break
        assert np.linalg.norm(res.coeffs - s) < 1e-6

    def test_nonunique_flagged(self):
        # equidistant double minimum: point orthogonal to a geodesic on the sphere
        man = Sphere(3)
        mu = np.array([1.0, 0, 0, 0])
        v = np.array([0.0, 1.0, 0, 0])
        p = np.array([0.0, 0, 1.0, 0])
        # exp(mu, t v) is the equator through e0-e1; p sits at the pole of it
        res = man.project_span_numeric(mu, v[None], p, starts=5)
        assert res.nonunique

    def test_project_info_wrapper(self):
        man = Sphere(4)
        mu = Point(man, man.random_point(rng))
        v = man.random_tangent(rng, mu.value, 1.0)
        h = GeodesicSubspace(mu, (Tangent(mu, v),))
        p = Point(man, man.exp(mu.value, man.random_tangent(rng, mu.value, 0.5)))
        info = project_info(p, h)
        assert info.value >= 0


class TestCurvature:
    def test_zero_slots(self):
        man = SPD(2)
        mu = Point(man, np.eye(2))
        x = Tangent(mu, np.diag([1.0, -1.0]))
        z = Tangent(mu, np.zeros((2, 2)))
        out = curvature_op(x, z, x)
        assert np.allclose(out.vec, 0.0)

    def test_commuting_zero(self):
        man = SPD(3)
        mu = Point(man, np.eye(3))
        x = Tangent(mu, np.diag([1.0, 2.0, -1.0]))
        y = Tangent(mu, np.diag([0.5, -1.0, 2.0]))
        assert np.allclose(curvature_op(x, y, y).vec, 0.0)

    def test_spd_worked_example(self):
        # x = diag(1,-1), y = offdiag ones: [x,y] = [[0,2],[-2,0]],
        # [y,[x,y]] = diag(-4, 4)
        man = SPD(2)
        mu = Point(man, np.eye(2))
        x = Tangent(mu, np.diag([1.0, -1.0]))
        y = Tangent(mu, np.array([[0.0, 1.0], [1.0, 0.0]]))
        out = curvature_op(x, y, y)
        assert np.allclose(out.vec, np.diag([-4.0, 4.0]))

    def test_multilinear(self):
        man = SpecialOrthogonal(3)
        mu = Point(man, np.eye(3))
        a = man.random_tangent(rng, mu.value, 1.0)
        b = man.random_tangent(rng, mu.value, 1.0)
        c = man.random_tangent(rng, mu.value, 1.0)
        t = lambda m: Tangent(mu, m)
        lhs = curvature_op(t(2.0 * a), t(b), t(c)).vec
        rhs = 2.0 * curvature_op(t(a), t(b), t(c)).vec
        assert np.allclose(lhs, rhs)

    def test_sphere_unsupported(self):
        man = Sphere(3)
        mu = Point(man, man.random_point(rng))
        v = Tangent(mu, man.random_tangent(rng, mu.value, 1.0))
        with pytest.raises(UnsupportedManifoldError):
            curvature_op(v, v, v)


class TestSectional:
    def test_sphere_constant(self):
        man = Sphere(4, 2.0)
        mu = Point(man, man.random_point(rng))
        for _ in range(10):
            v = Tangent(mu, man.random_tangent(rng, mu.value, rng.uniform(0.5, 2)))
            q = Tangent(mu, man.random_tangent(rng, mu.value, rng.uniform(0.5, 2)))
            if abs(metric(mu, v, q)) > 0.95 * v.norm() * q.norm():
                continue
            assert np.isclose(sectional_curvature(mu, v, q), 0.25)

    def test_spd_commuting_flat(self):
        man = SPD(3)
        mu = Point(man, np.eye(3))
        v = Tangent(mu, np.diag([1.0, -1.0, 0.5]))
        q = Tangent(mu, np.diag([0.3, 1.0, -0.2]))
        assert abs(sectional_curvature(mu, v, q)) < 1e-14

    def test_spd_nonpositive(self):
        man = SPD(3)
        mu = Point(man, np.eye(3))
        for _ in range(200):
            v = Tangent(mu, man.random_tangent(rng, mu.value, 1.0))
            q = Tangent(mu, man.random_tangent(rng, mu.value, 1.0))
            assert sectional_curvature(mu, v, q) <= 1e-14

    def test_basis_change_invariance(self):
        man = SPD(3)
        mu = Point(man, np.eye(3))
        v = man.random_tangent(rng, mu.value, 1.0)
        q = man.random_tangent(rng, mu.value, 1.0)
        k0 = sectional_curvature(mu, Tangent(mu, v), Tangent(mu, q))
        for _ in range(10):
            m = rng.standard_normal((2, 2))
            if abs(np.linalg.det(m)) < 0.1:
                continue
            v2 = m[0, 0] * v + m[0, 1] * q
            q2 = m[1, 0] * v + m[1, 1] * q
            k1 = sectional_curvature(mu, Tangent(mu, v2), Tangent(mu, q2))
            assert np.isclose(k0, k1, atol=1e-8 * max(1, abs(k0)))

    def test_degenerate_plane(self):
        man = SPD(3)
        mu = Point(man, np.eye(3))
        v = man.random_tangent(rng, mu.value, 1.0)
        with pytest.raises(DegeneratePlaneError):
            sectional_curvature(mu, Tangent(mu, v), Tangent(mu, 2.0 * v))

    def test_at_translated_base(self):
        # sectional curvature carries through the group action
        man = SPD(3)
        p = man.random_point(rng, 0.6)
        pp = Point(man, p)
        v = Tangent(pp, man.random_tangent(rng, p, 1.0))
        q = Tangent(pp, man.random_tangent(rng, p, 1.0))
        k = sectional_curvature(pp, v, q)
        assert k <= 1e-14


class TestValidation:
    def test_point_invariants(self):
        with pytest.raises(ValidationError):
            Point(Sphere(3), np.array([1.0, 1.0, 0.0, 0.0]))
        with pytest.raises(ValidationError):
            Point(SPD(2), np.array([[1.0, 2.0], [2.0, 1.0]]))  # not PD
        with pytest.raises(ValidationError):
            Point(SpecialOrthogonal(3), np.diag([1.0, 1.0, -1.0]))

    def test_tangent_invariants(self):
        man = Sphere(3)
        p = Point(man, man.random_point(rng))
        with pytest.raises(ValidationError):
            Tangent(p, p.value)  # not orthogonal to base

    def test_exp_injectivity_guard(self):
        man = Sphere(3)
        p = man.random_point(rng)
        v = man.random_tangent(rng, p, np.pi * 1.01)
        with pytest.raises(ValidationError):
            man.exp(p, v)
