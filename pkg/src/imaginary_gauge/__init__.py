"""Tight-binding lattices driven by a time-periodic imaginary gauge field.

Submodules: ``numerics`` (eigensolver, quadrature), ``gauge`` (field shapes),
``ring`` and ``chain`` (propagators and quasi energies for the two
topologies), ``scan`` (stability maps), ``perturbation`` (secular theory of
the weakly driven chain) and ``cli``.
"""
__version__ = "0.1.0"
