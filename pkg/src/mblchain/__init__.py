"""Numerical laboratory for localization in disordered spin chains.

Engines:
    disorder     -- distributions, seed plans, field realizations
    xy           -- free-fermion treatment of the (an)isotropic XY chain
    xxz          -- hard-core particle sectors of the XXZ chain, Ising phase
    oracle       -- brute-force dense many-body engine (validation reference)
    experiments  -- disorder ensembles, statistics, decay fits
    cli          -- command-line front end and file outputs
"""

from .errors import ConfigurationError, DegeneracyError, NumericalError

__version__ = "0.1.0"

__all__ = ["ConfigurationError", "DegeneracyError", "NumericalError",
           "__version__"]
