import os
from typing import Any

from django.conf import settings


def loopcalc_setting(key: str) -> Any:
    """Return ``settings.LOOPCALC[key]``.

    Library callers that never configured Django get the project settings
    module, the same way the management scripts bootstrap themselves.
    """
    if not settings.configured:
        os.environ.setdefault('DJANGO_SETTINGS_MODULE', 'loopcalc.settings')
    return settings.LOOPCALC[key]
