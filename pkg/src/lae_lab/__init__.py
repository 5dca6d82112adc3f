"""lae-lab: a numerical laboratory for anisotropic Lagrangian-averaged Euler
dynamics with stochastic fluctuation closures.

Subpackages are organised by concern:

- ``lie_oracle``          finite-dimensional Magnus-expansion verification
- ``field_calculus``      spectral differential geometry on the flat 2-torus
- ``wick_calculus``       finite Wiener-chaos algebra and Wick products
- ``correlation_dynamics``           evolution of the fluctuation correlation tensor
- ``lae_solver``          the closed mean-flow system and its diagnostics
- ``mc_harness``          Monte Carlo closure verification
- ``cli_io``              CLI, configs, manifests and binary snapshots
"""

__version__ = "0.1.0"
