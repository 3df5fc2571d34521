"""Mean-field-game jump-diffusion toolkit: Riccati, expectation, density and Monte Carlo engines."""

__version__ = "0.1.0"
