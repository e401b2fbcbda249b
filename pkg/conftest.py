import os

import django

os.environ.setdefault('DJANGO_SETTINGS_MODULE', 'loopcalc.settings')
django.setup()
