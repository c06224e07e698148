# varexp/management/commands/reproduce.py
from pathlib import Path

from django.conf import settings
from django.core.management.base import BaseCommand, CommandError

from varexp.constructions import (
    MIN_SUPPORT_CELLS,
    divergence_growth,
    example_construction,
    pimpliesq_demo,
    remark_sweep,
)
from varexp.exceptions import GridError
from varexp.records import now_iso, write_report_json

EXAMPLES = ("remark", "v0-example", "pimpliesq")


class Command(BaseCommand):
    help = "Reproduce a worked construction (remark | v0-example | pimpliesq) and write its report."

    def add_arguments(self, p):
        p.add_argument("example", type=str, help=" | ".join(EXAMPLES))
        p.add_argument("--k", type=int, default=3, help="v0-example: tail index k")
        p.add_argument("--smax", type=int, default=12, help="v0-example: last resolved piece")
        p.add_argument("--jmax", type=int, default=200, help="remark / pimpliesq: last sequence index")
        p.add_argument("--resolution", type=int, default=0, help="cells per piece (0 = example default)")
        p.add_argument("--tail-start", type=int, default=110, help="remark: first index of the rho_p < threshold tail")
        p.add_argument("--threshold", type=float, default=1e-2, help="remark / pimpliesq: modular threshold")
        p.add_argument("--output", type=str, default="", help="output directory")

    def handle(self, *args, **o):
        started_at = now_iso()
        example = o["example"]
        if example not in EXAMPLES:
            raise CommandError(f"[reproduce] unknown example {example!r}; choose one of {', '.join(EXAMPLES)}", returncode=1)

        try:
            reports = self._run(example, o)
        except GridError as e:
            hint = f"--resolution >= {MIN_SUPPORT_CELLS}" if example != "v0-example" else "a smaller --smax or larger --resolution"
            raise CommandError(f"[reproduce] grid does not resolve the construction: {e} (try {hint})", returncode=1)
        except ValueError as e:
            raise CommandError(f"[reproduce] invalid parameters: {e}", returncode=1)

        for rep in reports:
            self.stdout.write(f"[reproduce] {rep.name}: {'pass' if rep.passed else 'FAIL'}")
            for name, ok in sorted(rep.checks.items()):
                if not ok:
                    self.stderr.write(f"[reproduce]   check {name} failed")

        passed = all(r.passed for r in reports)
        payload = {"example": example, "reports": [r.to_dict() for r in reports], "pass": passed}
        out_dir = Path(o["output"] or settings.VAREXP_OUTPUT_DIR)
        out_dir.mkdir(parents=True, exist_ok=True)
        path = write_report_json(out_dir / f"{example}.json", payload, started_at)
        self.stdout.write(f"[reproduce] wrote {path}")

        if not passed:
            raise CommandError(f"[reproduce] {example} failed", returncode=2)
        self.stdout.write(self.style.SUCCESS(f"[reproduce] {example} passed"))

    def _run(self, example, o):
        res = o["resolution"]
        if example == "remark":
            return [
                remark_sweep(
                    j_max=o["jmax"],
                    resolution=res or 16,
                    tail_start=o["tail_start"],
                    threshold=o["threshold"],
                )
            ]
        if example == "v0-example":
            return [
                example_construction(k=o["k"], s_max=o["smax"], resolution=res or 8),
                divergence_growth(k=o["k"], resolution=res or 8),
            ]
        return [
            pimpliesq_demo(
                resolution=res or 16,
                j_max=o["jmax"],
                p_threshold=o["threshold"],
                q_threshold=o["threshold"],
            )
        ]
