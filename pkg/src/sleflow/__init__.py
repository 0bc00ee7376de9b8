"""Chordal Loewner flow numerics: traces, radial reparametrisation,
Bessel-type comparison processes, half-plane lattice estimates, and the
variation/modulus experiments built on them."""

from ._kernels import ACTIVE_BACKEND

__version__ = "0.1.0"

__all__ = ["ACTIVE_BACKEND", "__version__"]
