"""hitchinlab: residual tests for a projectively flat family of connections.

The package quantizes a fixed symplectic surface against a family of
compatible complex structures, builds the corrected family connection on
the resulting bundles of holomorphic sections, and verifies the calculus
behind it as machine-checkable residual identities on two backends:

* ``torus`` — the unit torus with translation-invariant structures and
  lattice-sum section bases (termwise-exact derivatives, absolute budgets);
* ``chart`` — a planar chart with generated families of non-constant
  structures (finite differences, budgets of the form ``C*(eps^2 + h^4)``).

Entry points: :func:`hitchinlab.catalog.run_catalog` for the full identity
catalog, :func:`hitchinlab.catalog.sweep_orders` for convergence orders,
and the ``hitchinlab`` console script (see ``hitchinlab.cli``).
"""

from .catalog import (
    IDENTITY_NAMES,
    MUTATIONS,
    SWEEPABLE,
    RunConfig,
    run_catalog,
    sweep_orders,
)
from .config import load_config

__version__ = "0.1.0"

__all__ = [
    "IDENTITY_NAMES",
    "MUTATIONS",
    "RunConfig",
    "SWEEPABLE",
    "__version__",
    "load_config",
    "run_catalog",
    "sweep_orders",
]
