# varexp/management/commands/verify.py
from concurrent.futures import ThreadPoolExecutor, as_completed
from pathlib import Path

import numpy as np
from django.conf import settings
from django.core.management.base import BaseCommand, CommandError

from varexp.energy import EnergyKind, ProblemData, finite_difference_check
from varexp.exceptions import VarExpError
from varexp.exponent import PRESETS, make_exponent, make_weight
from varexp.grid import Domain, GridFunction, build_grid
from varexp.inequalities import (
    clarkson_sweep,
    gradient_clarkson_check,
    lemma_stupid_check,
    monotonicity_sweep,
    strict_convexity_witness,
    uc_star_probe,
)
from varexp.modular import ModularKind
from varexp.records import now_iso, write_report_json

SUITES = ("clarkson", "ucstar", "lemmas", "gradientcheck", "monotonicity")

DEFAULT_N = {
    "clarkson": 100_000,
    "ucstar": 10_000,
    "lemmas": 10_000,
    "gradientcheck": 20,
    "monotonicity": 100_000,
}

MONOTONICITY_P = (2.0, 2.5, 3.0, 4.0, 6.0, 8.0, 10.0)


def _check(name, passed, **values) -> dict:
    return {"name": name, "pass": bool(passed), **values}


# =========================
# Suites: each returns a list of jobs (name, fn) whose fn returns one check dict
# =========================
def _clarkson_jobs(o):
    def sweep(regime, seed):
        r = clarkson_sweep(o["n"], seed, regime)
        return _check(r.name, r.passed, n=r.n, worst_excess=r.worst, bound=r.bound)

    def gradient_fields():
        grid = build_grid(Domain.rectangle(0.0, 1.0, 0.0, 1.0), (o["nodes"], o["nodes"]))
        rng = np.random.default_rng(o["seed"])
        u = GridFunction(grid, rng.normal(size=grid.shape))
        v = GridFunction(grid, rng.normal(size=grid.shape))
        out = []
        for p in (1.5, 2.0, 3.5):
            r = gradient_clarkson_check(u, v, p)
            out.append(_check(f"gradient_clarkson_p{p:g}", r.passed, n=r.n, worst_excess=r.worst))
        return _check("gradient_clarkson", all(c["pass"] for c in out), cases=out)

    return [
        ("clarkson_low", lambda: sweep("low", o["seed"])),
        ("clarkson_high", lambda: sweep("high", o["seed"] + 1)),
        ("gradient_clarkson", gradient_fields),
    ]


UCSTAR_EXPONENTS = ("const2", "const4", "linear", "inv_x")
UCSTAR_KINDS = (ModularKind.RHO_P, ModularKind.RHO_GRAD, ModularKind.RHO_1P)
UCSTAR_EPSILONS = (0.1, 0.3, 0.5)

# exponents sampled on a sub-interval of (0, 1)
EXPONENT_BOUNDS = {"inv_x": (0.0, 0.5)}


def _exponent_cases(o, names):
    cases = []
    for name in names:
        a, b = EXPONENT_BOUNDS.get(name, (0.0, 1.0))
        grid = build_grid(Domain.interval(a, b), o["nodes"])
        cases.append((name, make_exponent(grid, PRESETS[name])))
    return cases


def _ucstar_jobs(o):
    names = [o["exponent"]] if o["exponent"] else list(UCSTAR_EXPONENTS)
    epsilons = [o["epsilon"]] if o["epsilon"] is not None else list(UCSTAR_EPSILONS)
    jobs = []
    for name, p in _exponent_cases(o, names):
        for kind in UCSTAR_KINDS:
            for eps in epsilons:
                label = f"ucstar_{name}_{kind.value}_eps{eps:g}"

                # --n is the admissible-pair count each cell must reach
                def estimate(label=label, p=p, kind=kind, eps=eps):
                    est = uc_star_probe(kind, p, eps, o["n"], o["seed"], min_admissible=o["n"])
                    return _check(
                        label,
                        est.holds and est.covered,
                        epsilon=est.epsilon,
                        delta_formula=est.delta_formula,
                        delta_empirical=est.delta_empirical,
                        n_admissible=est.n_admissible,
                        n_samples=est.n_samples,
                        p_minus=est.p_minus,
                    )

                jobs.append((label, estimate))

        def strict(name=name, p=p):
            r = strict_convexity_witness(p, min(o["n"], 2000), o["seed"])
            return _check(f"strict_convexity_{name}", r.passed, n=r.n, min_gap=r.worst)

        jobs.append((f"strict_convexity_{name}", strict))
    return jobs


def _lemma_jobs(o):
    def lemma():
        t = np.unique(np.concatenate([1.0 + np.geomspace(1e-6, 1.0, o["n"] // 2), np.geomspace(2.0, 1e8, o["n"] // 2)]))
        r = lemma_stupid_check(t)
        return _check(
            "lemma_log_ratio",
            r.passed,
            n=r.n_samples,
            decreasing=r.decreasing,
            below_one=r.below_one,
            root_below_e=r.root_below_e,
            limit_at_one=r.limit_at_one,
        )

    return [("lemma_log_ratio", lemma)]


def _gradientcheck_jobs(o):
    grid = build_grid(Domain.interval(0.0, 1.0), o["nodes"])
    phi = GridFunction.from_callable(grid, lambda x: 1.0 + x * x)
    q = make_weight(grid, 1.0)
    jobs = []
    for name in ("const2", "linear", "blowup"):
        data = ProblemData(grid, make_exponent(grid, PRESETS[name]), phi, q)
        for kind in EnergyKind:

            # --n random interior points, a few directions each
            def fd(kind=kind, data=data, name=name):
                worst, passed = 0.0, True
                for i in range(o["n"]):
                    rng = np.random.default_rng([o["seed"], i])
                    w = np.zeros(grid.shape)
                    w[grid.interior_mask] = 0.5 * rng.uniform(-1.0, 1.0, size=grid.n_interior)
                    r = finite_difference_check(kind, data, w, n_dirs=5, seed=o["seed"] + i)
                    worst = max(worst, r.max_rel_error)
                    passed = passed and r.passed
                return _check(f"gradient_{name}_{kind.value}", passed, points=o["n"], max_rel_error=worst, tol=r.tol)

            jobs.append((f"gradient_{name}_{kind.value}", fd))
    return jobs


def _monotonicity_jobs(o):
    def sweep(p):
        r = monotonicity_sweep(p, o["n"], o["seed"])
        return _check(r.name, r.passed, n=r.n, min_quotient=r.worst, gamma=r.bound)

    return [(f"monotonicity_p{p:g}", lambda p=p: sweep(p)) for p in MONOTONICITY_P]


JOBS = {
    "clarkson": _clarkson_jobs,
    "ucstar": _ucstar_jobs,
    "lemmas": _lemma_jobs,
    "gradientcheck": _gradientcheck_jobs,
    "monotonicity": _monotonicity_jobs,
}


class Command(BaseCommand):
    help = "Run a randomized verification suite (clarkson | ucstar | lemmas | gradientcheck | monotonicity); writes report.json."

    def add_arguments(self, p):
        p.add_argument("suite", type=str, help=" | ".join(SUITES))
        p.add_argument("--seed", type=int, default=0)
        p.add_argument("--n", type=int, default=0, help="sample count, admissible pairs per cell for ucstar, points per case for gradientcheck (0 = suite default)")
        p.add_argument(
            "--workers",
            type=int,
            default=settings.VAREXP_WORKERS,
            help="parallel jobs (1-16)",
        )
        p.add_argument("--epsilon", type=float, default=None, help="UC* epsilon in (0,1) (default: 0.1, 0.3 and 0.5)")
        p.add_argument("--exponent", type=str, default="", help="exponent preset for ucstar (default: const2, const4, linear, inv_x)")
        p.add_argument("--nodes", type=int, default=17, help="grid nodes for grid-based checks")
        p.add_argument("--output", type=str, default="", help="output directory")

    def handle(self, *args, **o):
        started_at = now_iso()
        suite = o["suite"]
        if suite not in SUITES:
            raise CommandError(f"[verify] unknown suite {suite!r}; choose one of {', '.join(SUITES)}", returncode=1)
        if o["n"] < 0 or o["nodes"] < 3:
            raise CommandError("[verify] --n must be >= 0 and --nodes >= 3", returncode=1)
        if o["epsilon"] is not None and not 0.0 < o["epsilon"] < 1.0:
            raise CommandError("[verify] --epsilon must lie in (0, 1)", returncode=1)
        if o["exponent"] and o["exponent"] not in PRESETS:
            raise CommandError(f"[verify] unknown exponent preset {o['exponent']!r}", returncode=1)
        o["n"] = o["n"] or DEFAULT_N[suite]
        workers = max(1, min(16, int(o["workers"] or 1)))

        jobs = JOBS[suite](o)
        self.stdout.write(f"[verify] suite={suite} jobs={len(jobs)} n={o['n']} seed={o['seed']} workers={workers}")

        # --- Run in parallel; results re-sorted by name so report.json is stable ---
        checks = []
        with ThreadPoolExecutor(max_workers=workers) as ex:
            futs = {ex.submit(fn): name for name, fn in jobs}
            for fut in as_completed(futs):
                name = futs[fut]
                try:
                    res = fut.result()
                except (VarExpError, ValueError) as e:
                    self.stderr.write(f"[verify] {name} error: {e}")
                    res = _check(name, False, error=str(e))
                checks.append(res)
                self.stdout.write(f"[verify] {name}: {'ok' if res['pass'] else 'FAIL'}")
        checks.sort(key=lambda c: c["name"])

        passed = all(c["pass"] for c in checks)
        payload = {
            "suite": suite,
            "seed": o["seed"],
            "n": o["n"],
            "epsilon": ([o["epsilon"]] if o["epsilon"] is not None else list(UCSTAR_EPSILONS)) if suite == "ucstar" else None,
            "checks": checks,
            "pass": passed,
        }
        out_dir = Path(o["output"] or settings.VAREXP_OUTPUT_DIR)
        out_dir.mkdir(parents=True, exist_ok=True)
        path = write_report_json(out_dir / "report.json", payload, started_at)
        self.stdout.write(f"[verify] wrote {path}")

        if not passed:
            failed = [c["name"] for c in checks if not c["pass"]]
            raise CommandError(f"[verify] {len(failed)} check(s) failed: {', '.join(failed)}", returncode=2)
        self.stdout.write(self.style.SUCCESS(f"[verify] suite={suite}: all {len(checks)} checks passed"))
