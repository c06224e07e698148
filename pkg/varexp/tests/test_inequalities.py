import numpy as np
from django.test import SimpleTestCase

from varexp.exponent import make_exponent
from varexp.grid import Domain, GridFunction, build_grid
from varexp.inequalities import (
    clarkson_high,
    clarkson_low,
    clarkson_sweep,
    delta_formula,
    gamma,
    gradient_clarkson_check,
    lemma_stupid_check,
    monotonicity_gap,
    monotonicity_sweep,
    strict_convexity_witness,
    uc_star_probe,
)
from varexp.modular import ModularKind


class ClarksonTests(SimpleTestCase):
    def test_single_pairs(self):
        self.assertTrue(clarkson_low([1.0, 0.0], [0.0, 1.0], 1.5).holds)
        self.assertTrue(clarkson_low(3.0, -1.0, 1.0).holds)
        self.assertTrue(clarkson_high([1.0, 2.0, 3.0], [-1.0, 0.5, 0.0], 3.0).holds)

    def test_p_equal_two_is_parallelogram_law(self):
        sides = clarkson_low([1.0, 2.0], [3.0, -1.0], 2.0)
        self.assertAlmostEqual(sides.lhs, sides.rhs, places=12)

    def test_range_checks(self):
        with self.assertRaises(ValueError):
            clarkson_low([1.0], [2.0], 3.0)
        with self.assertRaises(ValueError):
            clarkson_high([1.0], [2.0], 1.5)
        with self.assertRaises(ValueError):
            clarkson_low([0.0], [0.0], 1.5)

    def test_sweeps(self):
        for regime in ("low", "high"):
            with self.subTest(regime=regime):
                result = clarkson_sweep(20_000, seed=0, regime=regime)
                self.assertTrue(result.passed, result)
                self.assertEqual(result.n, 80_000)

    def test_sweep_rejects_unknown_regime(self):
        with self.assertRaises(ValueError):
            clarkson_sweep(10, seed=0, regime="middle")

    def test_gradient_fields(self):
        grid = build_grid(Domain.rectangle(0.0, 1.0, 0.0, 1.0), 9)
        rng = np.random.default_rng(3)
        u = GridFunction(grid, rng.normal(size=grid.shape))
        v = GridFunction(grid, rng.normal(size=grid.shape))
        p = make_exponent(grid, "1.2 + 2*x*y")
        self.assertTrue(gradient_clarkson_check(u, v, p).passed)


class LemmaTests(SimpleTestCase):
    def test_passes_on_wide_range(self):
        report = lemma_stupid_check(np.geomspace(1.0 + 1e-6, 1e6, 2000))
        self.assertTrue(report.passed)
        self.assertAlmostEqual(report.limit_at_one, 1.0, places=6)

    def test_rejects_bad_samples(self):
        with self.assertRaises(ValueError):
            lemma_stupid_check([0.5, 2.0])
        with self.assertRaises(ValueError):
            lemma_stupid_check([3.0, 2.0])
        with self.assertRaises(ValueError):
            lemma_stupid_check([])


class UcStarTests(SimpleTestCase):
    def setUp(self):
        self.grid = build_grid(Domain.interval(0.0, 1.0), 9)

    def test_delta_formula(self):
        self.assertEqual(delta_formula(0.5, 2.0), 0.0078125)
        self.assertEqual(delta_formula(0.1, 1001.0), 0.05)

    def test_quadratic_exponent(self):
        est = uc_star_probe(ModularKind.RHO_P, make_exponent(self.grid, 2), 0.5, 2000, seed=0)
        self.assertGreater(est.n_admissible, 0)
        self.assertTrue(est.holds)
        self.assertGreaterEqual(est.delta_empirical, 0.0078125)

    def test_variable_exponent_and_sobolev_modular(self):
        p = make_exponent(self.grid, "blowup")
        for kind in (ModularKind.RHO_P, ModularKind.RHO_1P):
            with self.subTest(kind=kind):
                est = uc_star_probe(kind, p, 0.3, 2000, seed=1)
                self.assertTrue(est.holds, est)

    def test_deterministic_for_seed(self):
        p = make_exponent(self.grid, "linear")
        a = uc_star_probe(ModularKind.RHO_P, p, 0.4, 1000, seed=5)
        b = uc_star_probe(ModularKind.RHO_P, p, 0.4, 1000, seed=5)
        self.assertEqual(a, b)

    def test_rejects_bad_epsilon(self):
        with self.assertRaises(ValueError):
            uc_star_probe(ModularKind.RHO_P, make_exponent(self.grid, 2), 1.5, 10, seed=0)

    def test_full_matrix_with_enough_admissible_pairs(self):
        cases = [
            ("const2", Domain.interval(0.0, 1.0), 2),
            ("const4", Domain.interval(0.0, 1.0), 4),
            ("linear", Domain.interval(0.0, 1.0), "linear"),
            ("inv_x", Domain.interval(0.0, 0.5), "inv_x"),
        ]
        for name, domain, expo in cases:
            p = make_exponent(build_grid(domain, 9), expo)
            for kind in (ModularKind.RHO_P, ModularKind.RHO_GRAD, ModularKind.RHO_1P):
                for eps in (0.1, 0.3, 0.5):
                    with self.subTest(p=name, kind=kind, eps=eps):
                        est = uc_star_probe(kind, p, eps, 2000, seed=0, min_admissible=10_000)
                        self.assertGreaterEqual(est.n_admissible, 10_000)
                        self.assertTrue(est.covered)
                        self.assertTrue(est.holds, est)

    def test_sampling_stops_at_budget(self):
        p = make_exponent(self.grid, 2)
        est = uc_star_probe(ModularKind.RHO_P, p, 0.5, 100, seed=0, min_admissible=10**9, max_samples=5000)
        self.assertEqual(est.n_samples, 5000)
        self.assertFalse(est.covered)

    def test_strict_convexity(self):
        result = strict_convexity_witness(make_exponent(self.grid, "linear"), 500, seed=2)
        self.assertTrue(result.passed)
        self.assertGreater(result.worst, 0.0)


class MonotonicityTests(SimpleTestCase):
    def test_gap_at_p_two(self):
        gap = monotonicity_gap([1.0, 0.0], [0.0, 1.0], 2.0)
        self.assertAlmostEqual(gap.lhs, 1.0, places=14)
        self.assertEqual(gap.gamma_bound, gamma(2.0))
        self.assertTrue(gap.holds)

    def test_opposite_vectors_attain_gamma(self):
        # antipodal unit vectors attain the bound
        gap = monotonicity_gap([1.0, 0.0], [-1.0, 0.0], 4.0)
        self.assertAlmostEqual(gap.lhs, gamma(4.0), places=14)

    def test_sweeps(self):
        for p in (2.0, 2.5, 3.0, 4.0, 8.0):
            with self.subTest(p=p):
                self.assertTrue(monotonicity_sweep(p, 20_000, seed=0).passed)

    def test_range_checks(self):
        with self.assertRaises(ValueError):
            monotonicity_gap([1.0], [2.0], 1.5)
        with self.assertRaises(ValueError):
            monotonicity_gap([1.0, 1.0], [1.0, 1.0], 3.0)
