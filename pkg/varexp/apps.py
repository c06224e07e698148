from django.apps import AppConfig


class VarexpConfig(AppConfig):
    default_auto_field = "django.db.models.BigAutoField"
    name = "varexp"
    verbose_name = "Variable-exponent modulars and p(x)-Laplacian"
