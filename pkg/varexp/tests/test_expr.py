import math

import numpy as np
from django.test import SimpleTestCase
from hypothesis import given, settings
from hypothesis import strategies as st

from varexp.exceptions import ExprDomainError, ExprSyntaxError
from varexp.expr import Binary, Const, Unary, Var, compile_expr, evaluate, parse, to_source, variables

consts = st.floats(min_value=0.0, max_value=1e6, allow_nan=False, allow_infinity=False).map(Const)
leaves = st.one_of(consts, st.sampled_from([Var("x"), Var("y")]))


def _extend(children):
    return st.one_of(
        st.builds(Unary, st.sampled_from(["neg", "exp", "log", "abs", "sqrt"]), children),
        st.builds(Binary, st.sampled_from(["+", "-", "*", "/", "^", "min", "max"]), children, children),
    )


trees = st.recursive(leaves, _extend, max_leaves=12)

# integer-valued trees for exact comparisons
int_leaves = st.integers(min_value=0, max_value=50).map(lambda n: Const(float(n)))
int_trees = st.recursive(
    int_leaves,
    lambda c: st.one_of(
        st.builds(Unary, st.sampled_from(["neg", "abs"]), c),
        st.builds(Binary, st.sampled_from(["+", "-", "*", "min", "max"]), c, c),
    ),
    max_leaves=8,
)


def _exact(node):
    if isinstance(node, Const):
        return int(node.value)
    if isinstance(node, Unary):
        a = _exact(node.arg)
        return -a if node.op == "neg" else abs(a)
    a, b = _exact(node.left), _exact(node.right)
    return {"+": a + b, "-": a - b, "*": a * b, "min": min(a, b), "max": max(a, b)}[node.op]


class ParseTests(SimpleTestCase):
    def test_precedence(self):
        self.assertEqual(evaluate(parse("2 + 3 * x"), 2.0), 8.0)
        self.assertEqual(evaluate(parse("2 ^ 3 ^ 2"), 0.0), 512.0)
        self.assertEqual(evaluate(parse("-2 ^ 2"), 0.0), 4.0)
        self.assertEqual(evaluate(parse("(1 + x) / 2"), 3.0), 2.0)
        self.assertEqual(evaluate(parse("10 - 4 - 3"), 0.0), 3.0)

    def test_functions(self):
        self.assertAlmostEqual(evaluate(parse("exp(log(x))"), 2.5), 2.5, places=14)
        self.assertEqual(evaluate(parse("sqrt(abs(-16))"), 0.0), 4.0)
        self.assertEqual(evaluate(parse("min(x, y) + max(x, y)"), (1.0, 5.0)), 6.0)
        self.assertEqual(evaluate(parse("1.5e1"), 0.0), 15.0)

    def test_variables(self):
        self.assertEqual(variables(parse("x + 1")), frozenset({"x"}))
        self.assertEqual(variables(parse("min(x, y)")), frozenset({"x", "y"}))
        self.assertEqual(variables(parse("3")), frozenset())

    def test_syntax_errors_carry_offsets(self):
        with self.assertRaises(ExprSyntaxError) as ctx:
            parse("x + $")
        self.assertEqual(ctx.exception.offset, 4)
        with self.assertRaises(ExprSyntaxError) as ctx:
            parse("(x + 1")
        self.assertEqual(ctx.exception.offset, 6)
        self.assertIn("')'", ctx.exception.expected)

    def test_rejects(self):
        for src in ["", "   ", "z", "foo(x)", "exp", "min(x)", "exp(x, y)", "2 x", "x +"]:
            with self.subTest(src=src):
                with self.assertRaises(ExprSyntaxError):
                    parse(src)


class EvaluateTests(SimpleTestCase):
    def test_domain_errors(self):
        cases = {
            "log(x)": ("log", 0.0),
            "sqrt(x - 1)": ("sqrt", 0.0),
            "1 / x": ("division", 0.0),
            "(x - 1) ^ 0.5": ("fractional", 0.0),
            "x ^ -1": ("negative power", 0.0),
            "exp(x)": ("non-finite", 1000.0),
        }
        for src, (kind, x) in cases.items():
            with self.subTest(src=src):
                with self.assertRaises(ExprDomainError) as ctx:
                    evaluate(parse(src), x)
                self.assertIn(kind, ctx.exception.kind)

    def test_undefined_variable(self):
        with self.assertRaises(ExprDomainError):
            evaluate(parse("x + y"), 0.5)

    def test_compile_vectorized(self):
        fn = compile_expr("x^2 + y")
        x, y = np.meshgrid([0.0, 1.0, 2.0], [0.0, 10.0], indexing="ij")
        np.testing.assert_array_equal(fn(x, y), x**2 + y)
        self.assertEqual(fn.source, "x^2 + y")

    def test_constant_broadcasts(self):
        fn = compile_expr("2")
        self.assertEqual(fn(np.zeros(4)).shape, (4,))


class RoundTripTests(SimpleTestCase):
    @settings(deadline=None, max_examples=200)
    @given(trees)
    def test_to_source_round_trip(self, node):
        self.assertEqual(parse(to_source(node)), node)

    @settings(deadline=None, max_examples=200)
    @given(int_trees)
    def test_matches_exact_arithmetic(self, node):
        exact = _exact(node)
        if abs(exact) < 2**52:
            self.assertEqual(evaluate(parse(to_source(node)), 0.0), float(exact))

    def test_repr_constants_survive(self):
        for v in (0.1, 1e-300, 123456.789, 2.0 / 3.0, math.pi):
            self.assertEqual(evaluate(parse(to_source(Const(v))), 0.0), v)
