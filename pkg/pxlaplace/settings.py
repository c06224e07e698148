import os
from pathlib import Path

import environ

# === Paths ===
BASE_DIR = Path(__file__).resolve().parent.parent  # -> project root (holds manage.py)

# === Env ===
env = environ.Env()
# .env lives at the project root, next to manage.py
env.read_env(os.path.join(BASE_DIR, ".env"))

# === Core ===
SECRET_KEY = env("DJANGO_SECRET_KEY", default="dev-secret")
DEBUG = env.bool("DEBUG", default=True)
ALLOWED_HOSTS = env.list("ALLOWED_HOSTS", default=["*"])

# === Installed apps ===
INSTALLED_APPS = [
    "django.contrib.auth",
    "django.contrib.contenttypes",
    # third-party
    "rest_framework",
    # local
    "varexp",
]

# No ORM models; sqlite keeps `manage.py check` and the test runner quiet.
DATABASES = {
    "default": {
        "ENGINE": "django.db.backends.sqlite3",
        "NAME": BASE_DIR / "db.sqlite3",
    }
}

USE_TZ = True
TIME_ZONE = "UTC"

DEFAULT_AUTO_FIELD = "django.db.models.BigAutoField"

# === varexp ===
# Artifacts of solve / verify / reproduce land here unless --output is given
VAREXP_OUTPUT_DIR = Path(env("VAREXP_OUTPUT_DIR", default=str(BASE_DIR / "runs")))

# thread fan-out for randomized verification suites (1-16)
VAREXP_WORKERS = env.int("VAREXP_WORKERS", default=4)

# Solver defaults when a run config leaves them out
VAREXP_GRAD_TOL = env.float("VAREXP_GRAD_TOL", default=1e-8)
VAREXP_MAX_ITERS = env.int("VAREXP_MAX_ITERS", default=20000)
VAREXP_SOLVER_MODE = env("VAREXP_SOLVER_MODE", default="descent")

# bisection width of the Luxemburg norm printed by `norm`
VAREXP_LUXEMBURG_TOL = env.float("VAREXP_LUXEMBURG_TOL", default=1e-13)

# === Logging ===
LOGGING = {
    "version": 1,
    "disable_existing_loggers": False,
    "formatters": {
        "plain": {"format": "%(levelname)s %(name)s %(message)s"},
    },
    "handlers": {
        "console": {"class": "logging.StreamHandler", "formatter": "plain"},
    },
    "loggers": {
        "varexp": {
            "handlers": ["console"],
            "level": env("VAREXP_LOG_LEVEL", default="INFO"),
            "propagate": False,
        },
    },
}
