"""Shallow-network PDE solvers in 1D: Gram systems, spectra and solvers."""

__version__ = "0.1.0"
