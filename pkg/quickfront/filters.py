import math

from . import util


def sci(value, digits: int=6):
    """Number in compact general format, with nan/inf spelled out."""
    try:
        x = float(value)
    except (TypeError, ValueError):
        return "ERROR[NOT_A_NUMBER({!r})]".format(value)
    if math.isnan(x):
        return "nan"
    if math.isinf(x):
        return "inf" if x > 0 else "-inf"
    return "{:.{:d}g}".format(x, digits)


def exact(value):
    """Round-trippable form of a float."""
    try:
        return util.format_float(value)
    except (TypeError, ValueError):
        return "ERROR[NOT_A_NUMBER({!r})]".format(value)


def passfail(value):
    return "pass" if value else "FAIL"
