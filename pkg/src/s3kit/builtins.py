"""Named scalar functions so CLI runs need no expression parser."""

from __future__ import annotations

import numpy as np


def cubic_fig3(x):
    """``x^3 - 0.25 x + 0.2``, the cubic fitted on [1, 2] in the one-neuron example."""
    x = np.asarray(x, dtype=float)
    return x**3 - 0.25 * x + 0.2


def identity(x):
    return np.asarray(x, dtype=float)


def tent(x):
    """``|x - 0.5|`` on [0, 1]: slopes -1 then +1."""
    return np.abs(np.asarray(x, dtype=float) - 0.5)


def abs_(x):
    return np.abs(np.asarray(x, dtype=float))


def sin1(x):
    return np.sin(2 * np.pi * np.asarray(x, dtype=float))


FUNCTIONS = {
    "cubic_fig3": cubic_fig3,
    "identity": identity,
    "tent": tent,
    "abs": abs_,
    "sin1": sin1,
}

DEFAULT_INTERVALS = {
    "cubic_fig3": (1.0, 2.0),
    "identity": (0.0, 1.0),
    "tent": (0.0, 1.0),
    "abs": (-1.0, 1.0),
    "sin1": (0.0, 1.0),
}


def get_function(name: str):
    try:
        return FUNCTIONS[name]
    except KeyError:
        raise KeyError(f"unknown function {name!r}; choose from {', '.join(sorted(FUNCTIONS))}") from None
