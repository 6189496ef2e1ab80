"""Exact asymptotic dynamics of polymatrix replicator systems.

Subpackages are plain modules: :mod:`polyrep.game` for game data and the
cell structure of the polytope, :mod:`polyrep.conservative` for Hamiltonian
structure, :mod:`polyrep.skeleton` for the piecewise-linear return map,
:mod:`polyrep.poisson` for brackets on sections, :mod:`polyrep.ode` for the
numerical flow and :mod:`polyrep.cli` for the command line.
"""

__version__ = "0.1.0"
