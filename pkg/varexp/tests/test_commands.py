import csv
import json
import tempfile
from io import StringIO
from pathlib import Path
from unittest import mock

from django.core.management import call_command
from django.core.management.base import CommandError
from django.test import SimpleTestCase

from varexp.management.commands import verify


def write_config(tmp, doc, name="config.json"):
    path = Path(tmp) / name
    path.write_text(json.dumps(doc), encoding="utf-8")
    return str(path)


def solve_config(**overrides):
    doc = {
        "domain": {"dim": 1, "bounds": [[0, 1]]},
        "grid": {"nodes": [17]},
        "exponent": {"preset": "const2"},
        "phi": {"expr": "x^2"},
        "energy_kind": "F_GRAD",
        "solver": {"mode": "lbfgs", "grad_tol": 1e-10},
        "certificates": {"variational_dirs": 20, "uniqueness": True, "seed": 7},
    }
    doc.update(overrides)
    return doc


class SolveCommandTests(SimpleTestCase):
    def _run(self, tmp, doc, output="out"):
        out = StringIO()
        err = StringIO()
        call_command("solve", write_config(tmp, doc), output=str(Path(tmp) / output), stdout=out, stderr=err)
        return out.getvalue(), err.getvalue()

    def test_quadratic_problem_solves_to_line(self):
        with tempfile.TemporaryDirectory() as tmp:
            stdout, _ = self._run(tmp, solve_config())
            self.assertIn("converged", stdout)
            out = Path(tmp) / "out"
            rows = list(csv.DictReader((out / "solution.csv").read_text().splitlines()))
            self.assertEqual(len(rows), 17)
            for row in rows:
                self.assertAlmostEqual(float(row["value"]), float(row["x"]), delta=1e-8)
            doc = json.loads((out / "run.json").read_text())
            self.assertEqual(doc["payload"]["solver"]["termination"], "converged")
            self.assertLess(doc["payload"]["certificates"]["uniqueness"]["sup_diff"], 1e-6)
            self.assertGreaterEqual(doc["payload"]["certificates"]["variational"]["min_value"], -1e-8)
            self.assertTrue((out / "trace.csv").exists())

    def test_payload_is_reproducible(self):
        with tempfile.TemporaryDirectory() as tmp:
            doc = solve_config(exponent={"expr": "2 + x"}, phi={"expr": "cos(2*x)"})
            self._run(tmp, doc, output="a")
            self._run(tmp, doc, output="b")
            a = json.loads((Path(tmp) / "a" / "run.json").read_text())
            b = json.loads((Path(tmp) / "b" / "run.json").read_text())
            self.assertEqual(a["payload"], b["payload"])
            self.assertEqual((Path(tmp) / "a" / "solution.csv").read_bytes(), (Path(tmp) / "b" / "solution.csv").read_bytes())

    def test_invalid_config_exits_1(self):
        with tempfile.TemporaryDirectory() as tmp:
            with self.assertRaises(CommandError) as ctx:
                self._run(tmp, solve_config(energy_kind="J_WEIGHTED"))
            self.assertEqual(ctx.exception.returncode, 1)
            self.assertIn("q", str(ctx.exception))

    def test_missing_config_file_exits_1(self):
        with tempfile.TemporaryDirectory() as tmp:
            with self.assertRaises(CommandError) as ctx:
                call_command("solve", str(Path(tmp) / "nope.json"), output=tmp, stdout=StringIO())
            self.assertEqual(ctx.exception.returncode, 1)

    def test_saturated_boundary_datum_exits_3(self):
        with tempfile.TemporaryDirectory() as tmp:
            with self.assertRaises(CommandError) as ctx:
                self._run(tmp, solve_config(exponent={"expr": "200"}, phi={"expr": "1000"}))
            self.assertEqual(ctx.exception.returncode, 3)

    def test_iteration_cap_exits_2_with_artifacts(self):
        with tempfile.TemporaryDirectory() as tmp:
            doc = solve_config(solver={"mode": "descent", "grad_tol": 1e-12, "max_iters": 1})
            with self.assertRaises(CommandError) as ctx:
                self._run(tmp, doc)
            self.assertEqual(ctx.exception.returncode, 2)
            run = json.loads((Path(tmp) / "out" / "run.json").read_text())
            self.assertEqual(run["payload"]["solver"]["termination"], "max_iters")
            self.assertEqual(run["payload"]["certificates"], {})

    def test_inadmissible_exponent_warns(self):
        with tempfile.TemporaryDirectory() as tmp:
            doc = solve_config(
                domain={"dim": 2, "bounds": [[0, 1], [0, 1]]},
                grid={"nodes": [7, 7]},
                exponent={"expr": "1.5 + 0*x"},
                phi={"expr": "x + y"},
                certificates={"variational_dirs": 0, "uniqueness": False, "seed": 7},
            )
            _, stderr = self._run(tmp, doc)
            self.assertIn("p_minus", stderr)


class VerifyCommandTests(SimpleTestCase):
    def _run(self, tmp, suite, **options):
        call_command("verify", suite, output=tmp, stdout=StringIO(), stderr=StringIO(), **options)
        return json.loads((Path(tmp) / "report.json").read_text())

    def test_unknown_suite_exits_1(self):
        with tempfile.TemporaryDirectory() as tmp:
            with self.assertRaises(CommandError) as ctx:
                self._run(tmp, "triangle")
            self.assertEqual(ctx.exception.returncode, 1)

    def test_bad_epsilon_exits_1(self):
        with tempfile.TemporaryDirectory() as tmp:
            with self.assertRaises(CommandError) as ctx:
                self._run(tmp, "ucstar", epsilon=1.5)
            self.assertEqual(ctx.exception.returncode, 1)

    def test_lemmas(self):
        with tempfile.TemporaryDirectory() as tmp:
            doc = self._run(tmp, "lemmas", n=2000)
        self.assertTrue(doc["payload"]["pass"])
        self.assertEqual(doc["payload"]["suite"], "lemmas")
        self.assertEqual(doc["payload"]["n"], 2000)

    def test_ucstar_quadratic(self):
        with tempfile.TemporaryDirectory() as tmp:
            doc = self._run(tmp, "ucstar", n=2000, exponent="const2", epsilon=0.5, workers=2)
        checks = {c["name"]: c for c in doc["payload"]["checks"]}
        self.assertEqual(doc["payload"]["epsilon"], [0.5])
        rho = checks["ucstar_const2_RHO_P_eps0.5"]
        self.assertTrue(rho["pass"])
        self.assertEqual(rho["delta_formula"], 0.0078125)
        self.assertGreaterEqual(rho["delta_empirical"], 0.0078125)
        self.assertGreaterEqual(rho["n_admissible"], 2000)
        self.assertTrue(checks["ucstar_const2_RHO_GRAD_eps0.5"]["pass"])
        self.assertEqual([c["name"] for c in doc["payload"]["checks"]], sorted(checks))

    def test_ucstar_default_matrix(self):
        with tempfile.TemporaryDirectory() as tmp:
            doc = self._run(tmp, "ucstar", n=500, workers=4)
        names = {c["name"] for c in doc["payload"]["checks"]}
        self.assertTrue(doc["payload"]["pass"])
        self.assertEqual(doc["payload"]["epsilon"], [0.1, 0.3, 0.5])
        self.assertEqual(len(names), 4 * 3 * 3 + 4)
        for label in ("ucstar_const4_RHO_GRAD_eps0.1", "ucstar_inv_x_RHO_1P_eps0.3", "strict_convexity_inv_x"):
            self.assertIn(label, names)

    def test_job_raising_value_error_is_reported(self):
        def broken():
            raise ValueError("bad sample")

        with tempfile.TemporaryDirectory() as tmp:
            with mock.patch.dict(verify.JOBS, {"lemmas": lambda o: [("broken", broken)]}):
                with self.assertRaises(CommandError) as ctx:
                    self._run(tmp, "lemmas")
            self.assertEqual(ctx.exception.returncode, 2)
            doc = json.loads((Path(tmp) / "report.json").read_text())
        (check,) = doc["payload"]["checks"]
        self.assertFalse(check["pass"])
        self.assertEqual(check["error"], "bad sample")

    def test_monotonicity(self):
        with tempfile.TemporaryDirectory() as tmp:
            doc = self._run(tmp, "monotonicity", n=5000, seed=3)
        self.assertTrue(doc["payload"]["pass"])
        checks = {c["name"]: c for c in doc["payload"]["checks"]}
        self.assertEqual(len(checks), 7)
        self.assertIn("monotonicity_p8", checks)

    def test_gradientcheck(self):
        with tempfile.TemporaryDirectory() as tmp:
            doc = self._run(tmp, "gradientcheck", n=3)
        self.assertTrue(doc["payload"]["pass"])
        self.assertEqual(len(doc["payload"]["checks"]), 12)
        for check in doc["payload"]["checks"]:
            self.assertEqual(check["points"], 3)
            self.assertEqual(check["tol"], 1e-6)

    def test_report_is_independent_of_worker_count(self):
        with tempfile.TemporaryDirectory() as tmp:
            one = self._run(tmp, "clarkson", n=2000, workers=1)["payload"]
            many = self._run(tmp, "clarkson", n=2000, workers=8)["payload"]
        self.assertEqual(one, many)


class ReproduceCommandTests(SimpleTestCase):
    def _run(self, tmp, example, **options):
        call_command("reproduce", example, output=tmp, stdout=StringIO(), stderr=StringIO(), **options)
        return json.loads((Path(tmp) / f"{example}.json").read_text())

    def test_remark(self):
        with tempfile.TemporaryDirectory() as tmp:
            doc = self._run(tmp, "remark", jmax=100)
        self.assertTrue(doc["payload"]["pass"])
        self.assertEqual(len(doc["payload"]["reports"][0]["rows"]), 99)

    def test_v0_example(self):
        with tempfile.TemporaryDirectory() as tmp:
            doc = self._run(tmp, "v0-example")
        self.assertTrue(doc["payload"]["pass"])
        self.assertEqual(len(doc["payload"]["reports"]), 2)

    def test_threshold_violation_exits_2(self):
        with tempfile.TemporaryDirectory() as tmp:
            with self.assertRaises(CommandError) as ctx:
                self._run(tmp, "remark", jmax=20, tail_start=10)
            self.assertEqual(ctx.exception.returncode, 2)
            doc = json.loads((Path(tmp) / "remark.json").read_text())
            self.assertFalse(doc["payload"]["pass"])

    def test_unresolved_grid_exits_1(self):
        with tempfile.TemporaryDirectory() as tmp:
            with self.assertRaises(CommandError) as ctx:
                self._run(tmp, "remark", resolution=4)
            self.assertEqual(ctx.exception.returncode, 1)
            self.assertIn("--resolution", str(ctx.exception))

    def test_unknown_example_exits_1(self):
        with tempfile.TemporaryDirectory() as tmp:
            with self.assertRaises(CommandError) as ctx:
                self._run(tmp, "lemma-9")
            self.assertEqual(ctx.exception.returncode, 1)


class NormCommandTests(SimpleTestCase):
    def _norm(self, u, kind="RHO_P"):
        doc = {
            "domain": {"dim": 1, "bounds": [[0, 1]]},
            "grid": {"nodes": [9]},
            "exponent": {"preset": "const2"},
            "u": {"expr": u},
            "kind": kind,
        }
        out = StringIO()
        with tempfile.TemporaryDirectory() as tmp:
            call_command("norm", write_config(tmp, doc), stdout=out)
        return out.getvalue().strip()

    def test_constant_functions(self):
        self.assertEqual(self._norm("1"), "0.707106781187")
        self.assertEqual(self._norm("2"), "1.41421356237")
        self.assertEqual(self._norm("0"), "0")

    def test_bad_config_exits_1(self):
        with self.assertRaises(CommandError) as ctx:
            self._norm("1", kind="RHO_Q")
        self.assertEqual(ctx.exception.returncode, 1)
