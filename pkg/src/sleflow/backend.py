"""Kernel backend selection.

The heavy loops (inverse-map chains, forward-flow sweeps, Euler-Maruyama
batches, the variation DP, lattice sums) exist twice: a numba build and a
pure-numpy build with identical call signatures.  `SLEFLOW_BACKEND`
chooses which one the package uses:

* ``auto`` (default): numba if it imports, else numpy
* ``numba``: require numba, fail loudly if unavailable
* ``numpy``: force the pure-numpy fallback
"""

from __future__ import annotations

import os

VALID_BACKENDS = ("auto", "numba", "numpy")


def requested_backend() -> str:
    name = os.environ.get("SLEFLOW_BACKEND", "auto").strip().lower()
    if name not in VALID_BACKENDS:
        raise ValueError(
            f"SLEFLOW_BACKEND must be one of {VALID_BACKENDS}, got {name!r}"
        )
    return name
