# varexp/management/commands/norm.py
from django.conf import settings
from django.core.management.base import BaseCommand, CommandError

from varexp.exceptions import ConfigError, ExponentError, ExprDomainError, GridError
from varexp.exponent import make_exponent
from varexp.modular import ModularKind, luxemburg_norm
from varexp.serializers import build_grid_from, exponent_source, node_function, parse_norm_config, read_json


class Command(BaseCommand):
    help = "Print the Luxemburg norm of a field expression (12 significant digits)."

    def add_arguments(self, p):
        p.add_argument("config", type=str, help="norm config (JSON)")

    def handle(self, *args, **o):
        try:
            cfg = parse_norm_config(read_json(o["config"]))
            grid = build_grid_from(cfg)
            p = make_exponent(grid, exponent_source(cfg["exponent"]))
            u = node_function(grid, cfg["u"]["expr"])
        except (ConfigError, ExprDomainError, ExponentError, GridError) as e:
            raise CommandError(f"[norm] config error: {e}", returncode=1)

        kind = ModularKind(cfg["kind"])
        tol = cfg.get("tol") or settings.VAREXP_LUXEMBURG_TOL
        value = luxemburg_norm(kind, u, p, tol=tol)
        self.stdout.write(f"{value:.12g}")
