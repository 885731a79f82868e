"""Finite-volume stochastic quantization and Dirichlet-form diagnostics.

Modules
-------
spectral
    Eigenbases of -Delta + m on intervals and rectangles, quadrature, transforms.
measures
    Gaussian and Wick-ordered Gibbs measures, sampling, importance sampling,
    integration by parts.
wick
    Hermite polynomials and Wick powers paired with windows.
cylinder
    Cylinder functions, OU and gradient-form generators, invariance residuals.
dynamics
    Exponential-Euler stochastic quantization, stationarity and ergodicity
    diagnostics.
counterexamples
    Infinitesimally invariant Gaussians that are not invariant.
cli
    Config-driven scenarios (``sqlab run <config>``).
"""

__version__ = "0.1.0"
