"""Aerocapture trajectory simulation and guidance toolkit.

Subpackages cover environment models, atmospheric flight dynamics, orbital
mechanics and maneuver budgets, stagnation-point heating, bang-bang bank
profile studies, closed-loop bank-angle guidance, and a Monte Carlo
dispersion harness with a command-line front end.
"""

__version__ = "0.1.0"
