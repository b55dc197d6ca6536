"""Exact computations with two-sector OPE-algebras.

Modules:

* :mod:`opealg.scalars` -- exact scalars, exponent pairs, cosets, signs
* :mod:`opealg.distributions` -- windowed formal distributions in several variables
* :mod:`opealg.backends` -- free boson, free fermion and tensor-product state spaces
* :mod:`opealg.ope` -- OPE extraction, products of fields, locality, Dong closure
* :mod:`opealg.axioms` -- checks of creativity, skew-symmetry, duality and friends
* :mod:`opealg.cli` -- the ``opealg`` command
"""

__version__ = "0.1.0"
