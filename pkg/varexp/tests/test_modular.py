import math

import numpy as np
from django.test import SimpleTestCase
from hypothesis import given, settings
from hypothesis import strategies as st

from varexp.exceptions import SaturatedEnergyError, ZeroModularError
from varexp.exponent import make_exponent
from varexp.grid import Domain, GridFunction, build_grid
from varexp.modular import (
    INF,
    ExtendedReal,
    ModularKind,
    cell_modular,
    delta2_ratio,
    distance_sequence,
    luxemburg_norm,
    modular_distance,
    modular_eval,
    modular_eval_batch,
)

GRID = build_grid(Domain.interval(0.0, 1.0), 9)
P_LINEAR = make_exponent(GRID, "linear")
node_values = st.lists(
    st.floats(min_value=-5.0, max_value=5.0, allow_nan=False).map(lambda v: round(v, 3)), min_size=9, max_size=9
)


class ExtendedRealTests(SimpleTestCase):
    def test_rejects_negative_and_nan(self):
        with self.assertRaises(ValueError):
            ExtendedReal(-1.0)
        with self.assertRaises(ValueError):
            ExtendedReal(math.nan)

    def test_inf(self):
        self.assertFalse(INF.is_finite)
        self.assertEqual(INF.to_json(), "INF")
        self.assertEqual(ExtendedReal(2.5).to_json(), 2.5)


class ModularEvalTests(SimpleTestCase):
    def setUp(self):
        self.grid = build_grid(Domain.interval(0.0, 1.0), 5)
        self.p2 = make_exponent(self.grid, 2)

    def test_closed_forms(self):
        one = GridFunction.constant(self.grid, 1.0)
        x = GridFunction.from_callable(self.grid, lambda x: x)
        self.assertAlmostEqual(modular_eval(ModularKind.RHO_P, one, self.p2), 0.5, places=14)
        self.assertAlmostEqual(modular_eval(ModularKind.ETA_P, one, self.p2), 1.0, places=14)
        self.assertEqual(modular_eval(ModularKind.RHO_GRAD, one, self.p2), 0.0)
        self.assertAlmostEqual(modular_eval(ModularKind.RHO_GRAD, x, self.p2), 0.5, places=14)
        self.assertAlmostEqual(modular_eval(ModularKind.ETA_GRAD, x, self.p2), 1.0, places=14)
        # midpoint rule on x^2/2 plus the gradient part
        self.assertAlmostEqual(modular_eval(ModularKind.RHO_1P, x, self.p2), 0.1640625 + 0.5, places=14)

    def test_saturates_to_inf(self):
        u = GridFunction.constant(self.grid, 1e3)
        value = modular_eval(ModularKind.RHO_P, u, make_exponent(self.grid, 200))
        self.assertIs(type(value), ExtendedReal)
        self.assertFalse(value.is_finite)

    def test_batch_matches_single(self):
        rng = np.random.default_rng(1)
        stack = rng.normal(size=(6, 9))
        for kind in ModularKind:
            batch = modular_eval_batch(kind, stack, P_LINEAR)
            single = [modular_eval(kind, GridFunction(GRID, row), P_LINEAR) for row in stack]
            np.testing.assert_allclose(batch, single, rtol=1e-13)

    def test_cell_modular(self):
        self.assertAlmostEqual(cell_modular(self.grid, np.full(4, 2.0), 2.0), 2.0, places=14)
        self.assertAlmostEqual(cell_modular(self.grid, np.full(4, 2.0), 2.0, weighted=False), 4.0, places=14)

    @settings(deadline=None, max_examples=60)
    @given(node_values, node_values, st.floats(min_value=0.0, max_value=1.0))
    def test_convexity(self, u, v, alpha):
        u, v = np.array(u), np.array(v)
        for kind in ModularKind:
            ru = modular_eval(kind, GridFunction(GRID, u), P_LINEAR)
            rv = modular_eval(kind, GridFunction(GRID, v), P_LINEAR)
            rm = modular_eval(kind, GridFunction(GRID, alpha * u + (1 - alpha) * v), P_LINEAR)
            rhs = alpha * ru + (1 - alpha) * rv
            self.assertLessEqual(rm, rhs + 1e-12 * (1.0 + rhs))

    @settings(deadline=None, max_examples=60)
    @given(node_values)
    def test_symmetry_and_zero(self, u):
        u = np.array(u)
        for kind in ModularKind:
            a = modular_eval(kind, GridFunction(GRID, u), P_LINEAR)
            b = modular_eval(kind, GridFunction(GRID, -u), P_LINEAR)
            self.assertEqual(a, b)
            self.assertEqual(modular_eval(kind, GridFunction.zeros(GRID), P_LINEAR), 0.0)


class LuxemburgTests(SimpleTestCase):
    def setUp(self):
        self.grid = build_grid(Domain.interval(0.0, 1.0), 5)
        self.p2 = make_exponent(self.grid, 2)

    def test_closed_form(self):
        one = GridFunction.constant(self.grid, 1.0)
        self.assertAlmostEqual(luxemburg_norm(ModularKind.RHO_P, one, self.p2, tol=1e-13), 1.0 / math.sqrt(2.0), places=12)
        self.assertEqual(f"{luxemburg_norm(ModularKind.RHO_P, one, self.p2, tol=1e-13):.12g}", "0.707106781187")

    def test_zero(self):
        self.assertEqual(luxemburg_norm(ModularKind.RHO_1P, GridFunction.zeros(self.grid), self.p2), 0.0)

    @settings(deadline=None, max_examples=40)
    @given(node_values, st.sampled_from([0.25, 0.5, 2.0, 8.0]))
    def test_homogeneity_and_unit_ball(self, u, scale):
        u = GridFunction(GRID, np.array(u))
        for kind in (ModularKind.RHO_P, ModularKind.RHO_1P):
            norm = luxemburg_norm(kind, u, P_LINEAR)
            if norm == 0.0:
                continue
            self.assertLessEqual(modular_eval(kind, u / norm, P_LINEAR), 1.0 + 1e-12)
            self.assertAlmostEqual(luxemburg_norm(kind, u * scale, P_LINEAR) / norm, scale, places=9)

    def test_rejects_bad_tol(self):
        with self.assertRaises(ValueError):
            luxemburg_norm(ModularKind.RHO_P, GridFunction.constant(self.grid, 1.0), self.p2, tol=0.0)


class Delta2AndDistanceTests(SimpleTestCase):
    def setUp(self):
        self.grid = build_grid(Domain.interval(0.0, 1.0), 5)

    def test_delta2_for_constant_exponent(self):
        u = GridFunction.constant(self.grid, 1.0)
        self.assertAlmostEqual(delta2_ratio(u, make_exponent(self.grid, 3)), 8.0, places=12)

    def test_delta2_unbounded_for_inverse_exponent(self):
        # p = 1/x: a fixed bump sliding toward 0 sees ever larger exponents
        grid = build_grid(Domain.interval(0.0, 1.0), 257)
        p = make_exponent(grid, "inv_x")
        h = 1.0 / 256
        ratios = []
        for c in (0.5, 0.2, 0.1, 0.05, 0.02):
            u = GridFunction.from_callable(grid, lambda x, c=c: np.where(np.abs(x - c) <= 2.0 * h, 1.5, 0.0))
            ratios.append(float(delta2_ratio(u, p)))
        self.assertAlmostEqual(ratios[0], 4.0, delta=0.5)
        self.assertTrue(all(b > a for a, b in zip(ratios, ratios[1:])), ratios)
        self.assertGreater(ratios[-1], 1e15)

    def test_delta2_errors(self):
        p = make_exponent(self.grid, 2)
        with self.assertRaises(ZeroModularError):
            delta2_ratio(GridFunction.zeros(self.grid), p)
        with self.assertRaises(SaturatedEnergyError):
            delta2_ratio(GridFunction.constant(self.grid, 1e3), make_exponent(self.grid, 200))

    def test_distance_sequence(self):
        p = make_exponent(self.grid, 2)
        limit = GridFunction.constant(self.grid, 1.0)
        iterates = [GridFunction.constant(self.grid, 1.0 + 2.0**-j) for j in range(5)]
        to_limit = distance_sequence(ModularKind.RHO_P, iterates, limit, p)
        successive = distance_sequence(ModularKind.RHO_P, iterates, None, p)
        self.assertEqual(len(to_limit), 5)
        self.assertEqual(len(successive), 4)
        self.assertTrue(all(b < a for a, b in zip(to_limit, to_limit[1:])))
        self.assertAlmostEqual(to_limit[0], 0.5, places=14)

    def test_modular_distance(self):
        p = make_exponent(self.grid, 2)
        u = GridFunction.constant(self.grid, 3.0)
        v = GridFunction.constant(self.grid, 1.0)
        self.assertAlmostEqual(modular_distance(ModularKind.RHO_P, u, v, p), 2.0, places=14)
        self.assertEqual(modular_distance(ModularKind.RHO_P, u, v, p), modular_distance(ModularKind.RHO_P, v, u, p))
        self.assertEqual(modular_distance(ModularKind.RHO_1P, u, u, p), 0.0)
