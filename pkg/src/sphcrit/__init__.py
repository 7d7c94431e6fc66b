"""Critical points of Gaussian random spherical harmonics: Kac-Rice densities,
covariance structures, and Monte Carlo verification."""

__version__ = "0.1.0"
