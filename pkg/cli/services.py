import logging
from contextlib import contextmanager

import yaml
from django.core.management.base import CommandError
from pydantic import ValidationError

from calculus.models import FDScheme
from loopcalc.sysutils.constants import Stencil
from loopcalc.sysutils.exceptions import LoopCalcError, ParseError
from verify.models import Tolerances

logger = logging.getLogger(__name__)

INPUT_ERROR = 2
VERIFICATION_FAILED = 1

APP_LOGGERS = ('loopcalc', 'paths', 'gauge', 'calculus', 'verify', 'cli')


def _one_line(exc: Exception) -> str:
    if isinstance(exc, ValidationError):
        return "; ".join(
            f"{'.'.join(str(part) for part in error['loc']) or 'value'}: {error['msg']}"
            for error in exc.errors()
        )
    return " ".join(str(exc).split())


@contextmanager
def input_errors():
    """Turn bad input of any kind into ``CommandError`` with exit status 2."""
    try:
        yield
    except (LoopCalcError, ValidationError, yaml.YAMLError, UnicodeDecodeError, OSError) as exc:
        logger.debug("Input rejected", exc_info=True)
        raise CommandError(_one_line(exc), returncode=INPUT_ERROR) from exc


def set_verbosity(verbosity: int) -> None:
    if verbosity >= 2:
        for name in APP_LOGGERS:
            logging.getLogger(name).setLevel(logging.DEBUG)


def parse_vector(text: str, what: str) -> tuple[float, ...]:
    try:
        return tuple(float(part) for part in text.split(','))
    except ValueError:
        raise ParseError(f"--{what} expects comma-separated numbers, got '{text}'")


def parse_int(text: str | None, what: str) -> int | None:
    if text is None:
        return None
    try:
        return int(text)
    except ValueError:
        raise ParseError(f"--{what} expects an integer, got '{text}'")


def scheme_from_options(eps_list: str | None, stencil: str | None) -> FDScheme:
    """FDScheme from ``--eps-list`` and ``--stencil``; omitted flags keep the defaults."""
    fields = {}
    if eps_list is not None:
        fields['eps_list'] = parse_vector(eps_list, "eps-list")
    if stencil is not None:
        try:
            fields['stencil'] = Stencil(stencil)
        except ValueError:
            raise ParseError(f"--stencil must be one of {', '.join(s.value for s in Stencil)}, got '{stencil}'")
    return FDScheme(**fields)


def load_tolerances(location) -> Tolerances:
    """Tolerances from a YAML mapping; an empty file keeps every default."""
    with open(location, encoding='utf-8') as handle:
        data = yaml.safe_load(handle)
    if data is None:
        return Tolerances()
    if not isinstance(data, dict):
        raise ParseError(f"{location}: expected a mapping of identity name to tolerance")
    return Tolerances.model_validate(data)
