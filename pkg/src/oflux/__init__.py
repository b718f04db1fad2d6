"""Energy-flux diagnostics for incompressible flow on the half-slab T^2 x R+."""

__version__ = "0.1.0"
