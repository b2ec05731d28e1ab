"""wsqkd: planning and simulation toolkit for wavelength-saving QKD networks.

Subpackages and modules:

- ``netgraph``: 2N+1-node routing plans from Hamiltonian cycle decompositions
- ``optics``: M&D components, link budgets, crosstalk leakage paths
- ``qkdrate``: decoy-state BB84 gains, bounds, and secure-rate analytics
- ``xtalk``: crosstalk-to-QBER conversion and gate-timing aggregation
- ``pulsesim``: seeded Monte Carlo oracle (compiled kernels when available)
- ``scenario`` / ``reproduce`` / ``cli``: datasets, field-test reproduction,
  and the command-line tool
"""

__version__ = "0.1.0"

__all__ = ["__version__"]
