"""Spectral solvers for periodic nonlocal problems built on the Fourier
multipliers of the peridynamic-type nonlocal Laplacian."""

__version__ = "0.1.0"

from ._backend import BACKEND
from .kernel import KernelParams, KernelParamsError, digamma_fn, gamma_fn, scaling_constant, validate
