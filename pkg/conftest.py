import os

import django

os.environ.setdefault("DJANGO_SETTINGS_MODULE", "pxlaplace.settings")
django.setup()
