# varexp/management/commands/solve.py
import dataclasses
from pathlib import Path

from django.conf import settings
from django.core.management.base import BaseCommand, CommandError

from varexp.energy import EnergyKind
from varexp.exceptions import (
    ConfigError,
    ExponentError,
    ExprDomainError,
    GridError,
    NotConvergedError,
    ProblemDataError,
    SaturatedEnergyError,
)
from varexp.exponent import admissible_for_dirichlet
from varexp.records import RunRecord, now_iso, write_solution_csv, write_trace_csv
from varexp.serializers import build_problem, parse_run_config, read_json, solver_config
from varexp.solver import Termination, solve_dirichlet, uniqueness_probe, variational_certificate

EXIT_CONFIG = 1
EXIT_NOT_CONVERGED = 2
EXIT_SATURATED = 3


class Command(BaseCommand):
    help = "Minimize the Dirichlet energy of a run config; writes solution.csv, trace.csv and run.json."

    def add_arguments(self, p):
        p.add_argument("config", type=str, help="run config (JSON)")
        p.add_argument("--output", type=str, default="", help="output directory (overrides output.dir)")

    def handle(self, *args, **o):
        started_at = now_iso()
        defaults = {
            "grad_tol": settings.VAREXP_GRAD_TOL,
            "max_iters": settings.VAREXP_MAX_ITERS,
            "mode": settings.VAREXP_SOLVER_MODE,
        }

        # --- 1) Config + problem ---
        try:
            cfg = parse_run_config(read_json(o["config"]), defaults)
            data = build_problem(cfg)
            scfg = solver_config(cfg)
        except (ConfigError, ExprDomainError, ExponentError, GridError) as e:
            raise CommandError(f"[solve] config error: {e}", returncode=EXIT_CONFIG)
        except ProblemDataError as e:
            raise CommandError(f"[solve] mis-posed problem: {e}", returncode=EXIT_SATURATED)
        except ValueError as e:
            # SolverConfig invariants the serializer does not see (e.g. mode from the environment)
            raise CommandError(f"[solve] config error: {e}", returncode=EXIT_CONFIG)

        out_dir = Path(o["output"] or cfg["output"].get("dir") or settings.VAREXP_OUTPUT_DIR)
        out_dir.mkdir(parents=True, exist_ok=True)
        kind = EnergyKind(cfg["energy_kind"])
        if not admissible_for_dirichlet(data.p):
            self.stderr.write(f"[solve] p_minus={data.p.p_minus:g} <= dim; results are discrete only")

        # --- 2) Solve ---
        self.stdout.write(f"[solve] kind={kind.value} mode={scfg.mode} nodes={data.grid.shape}")
        report = solve_dirichlet(kind, data, scfg)

        # --- 3) Certificates (converged runs only) ---
        certificates = {}
        cert_cfg = cfg["certificates"]
        if report.converged and cert_cfg.get("variational_dirs"):
            cert = variational_certificate(kind, data, report.solution, cert_cfg["variational_dirs"], cert_cfg["seed"])
            certificates["variational"] = {"min_value": cert.min_value, "n_dirs": cert.n_dirs}
            self.stdout.write(f"[solve] variational min={cert.min_value:.3e} over {cert.n_dirs} directions")
        if report.converged and cert_cfg.get("uniqueness"):
            certificates["uniqueness"] = self._uniqueness(kind, data, scfg, cert_cfg["seed"])

        # --- 4) Artifacts ---
        write_solution_csv(out_dir / "solution.csv", report.solution)
        write_trace_csv(out_dir / "trace.csv", report)
        record = RunRecord(
            config=cfg,
            solver=report.summary(),
            certificates=certificates,
            started_at=started_at,
            finished_at=now_iso(),
        )
        (out_dir / "run.json").write_text(record.to_json(), encoding="utf-8")
        self.stdout.write(f"[solve] wrote {out_dir / 'solution.csv'}, trace.csv, run.json")

        # --- 5) Exit code ---
        if report.termination == Termination.SATURATED_ENERGY:
            raise CommandError("[solve] energy is +INF at the initial iterate", returncode=EXIT_SATURATED)
        if not report.converged:
            raise CommandError(
                f"[solve] stopped with {report.termination.value} after {report.iterations} iterations "
                f"(grad={report.grad_norm:.3e})",
                returncode=EXIT_NOT_CONVERGED,
            )
        self.stdout.write(self.style.SUCCESS(
            f"[solve] converged in {report.iterations} iterations, energy={report.final_energy:.12g}"
        ))

    def _uniqueness(self, kind, data, scfg, seed) -> dict:
        """Same problem from a random start; sup distance between the two solutions."""
        try:
            res = uniqueness_probe(kind, data, scfg, dataclasses.replace(scfg, init="random", seed=seed))
        except (SaturatedEnergyError, NotConvergedError) as e:
            self.stderr.write(f"[solve] uniqueness probe skipped: {e}")
            return {"sup_diff": None, "seed": seed, "skipped": str(e)}
        self.stdout.write(f"[solve] uniqueness sup_diff={res.sup_diff:.3e}")
        return {"sup_diff": res.sup_diff, "seed": seed}
