"""Renormalization-operator numerics for self-similar blow-up profiles.

The package implements a renormalization operator acting on Fourier-space
velocity profiles of a generalized Navier-Stokes flow, together with the
fixed-point machinery (iteration, invariant envelopes, hypothesis
certification) and the synthesis of the physical self-similar solution a
fixed point induces.
"""

from .exceptions import ConvergenceError, ParameterError

__version__ = "0.1.0"

__all__ = ["ConvergenceError", "ParameterError", "__version__"]
