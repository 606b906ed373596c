"""Random iteration of rational maps on the Riemann sphere, at desk scale."""

__version__ = "0.1.0"
