import datetime
import re
import time
from typing import Callable, Optional, Sized, TypeVar, Union

T = TypeVar('T')

_unsafe_id_chars = re.compile(r'[^a-z0-9_\-.]')


class _Throttled:
    """
    Wraps a callable so that calling the wrapper runs it at most once per
    period. The first call is held back for a full period.
    """

    def __init__(self, period: datetime.timedelta, fn: Callable[[], T]):
        self.fn = fn
        self.interval = period.total_seconds()
        self.due = time.monotonic() + self.interval

    def __call__(self) -> Optional[T]:
        now = time.monotonic()
        if now < self.due:
            return None
        self.due = now + self.interval
        return self.fn()


def _amount(x: Union[float, Sized]) -> float:
    if isinstance(x, Sized):
        return float(len(x))
    return float(x)


def progress(current: Union[float, Sized], target: Union[float, Sized]) -> str:
    """
    Percentage line for the progress log. Either argument may be a number
    (simulated time, trial count) or a collection whose length is used.
    """
    done = _amount(current)
    total = _amount(target)
    pct = 100.0 if total <= 0 else min(100.0, 100.0 * done / total)
    return '  {:.0f}% done...'.format(pct)


def once_every(period: datetime.timedelta, fn: Callable[[], T]) -> Callable[[], Optional[T]]:
    """
    Return a function that calls fn only if period has elapsed since fn last
    ran (or since the wrapper was created), and otherwise does nothing.

    show_progress = once_every(timedelta(seconds=5), lambda: _log.info(progress(state.t, g.t_end)))
    for k in range(g.steps):
        show_progress()
        state = step(state, p, g)
    """
    return _Throttled(period, fn)


def normalize_id(raw: str) -> str:
    """
    Scenario name as used in manifests and default output paths: trimmed,
    lower case, and anything other than letters, digits, '_', '-' and '.'
    replaced by '_'.
    """
    return _unsafe_id_chars.sub('_', str(raw).strip().lower())


def format_float(value: float) -> str:
    """
    Shortest text form of a float that parses back to the identical value.
    Used wherever output must be reproducible bit-for-bit.
    """
    return repr(float(value))
