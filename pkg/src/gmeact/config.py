"""Global numerical tolerances.

Values can be overridden for a block of code::

    with tolerances(psd=1e-8):
        ...
"""
from __future__ import annotations

import contextlib
from dataclasses import dataclass, fields, replace


@dataclass(frozen=True)
class Tolerances:
    hermitian: float = 1e-10
    psd: float = 1e-10
    norm: float = 1e-12
    trace: float = 1e-12


_current = Tolerances()


def get_tolerances() -> Tolerances:
    return _current


def set_tolerances(**kwargs) -> Tolerances:
    """Replace the global tolerances and return the previous set."""
    global _current
    names = {f.name for f in fields(Tolerances)}
    unknown = set(kwargs) - names
    if unknown:
        raise TypeError(f"unknown tolerance(s): {sorted(unknown)}")
    previous = _current
    _current = replace(_current, **kwargs)
    return previous


@contextlib.contextmanager
def tolerances(**kwargs):
    previous = set_tolerances(**kwargs)
    try:
        yield _current
    finally:
        set_tolerances(**vars(previous))
